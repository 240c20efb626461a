//! Message catalog and locale negotiation.

use std::collections::BTreeMap;

use serde::Serialize;

pub const FALLBACK_LOCALE: &str = "en";

/// Environment variables consulted for the default locale, in order.
pub const LOCALE_ENV_VARS: [&str; 4] = ["FRAMELABEL_LOCALE", "LC_ALL", "LC_MESSAGES", "LANG"];

const BUILTIN: [(&str, &str); 4] = [
    ("en", include_str!("../locales/en.json")),
    ("ja", include_str!("../locales/ja.json")),
    ("zh", include_str!("../locales/zh.json")),
    ("de", include_str!("../locales/de.json")),
];

/// Localized strings keyed by locale tag, then message key.
#[derive(Debug, Clone, Serialize)]
pub struct MessageCatalog {
    locales: BTreeMap<String, BTreeMap<String, String>>,
}

impl MessageCatalog {
    /// Catalog bundled with the binary.
    pub fn builtin() -> Self {
        let locales = BUILTIN
            .iter()
            .map(|(tag, text)| {
                let messages: BTreeMap<String, String> =
                    serde_json::from_str(text).expect("bundled catalog is valid JSON");
                (tag.to_string(), messages)
            })
            .collect();
        Self { locales }
    }

    pub fn from_maps(locales: BTreeMap<String, BTreeMap<String, String>>) -> Result<Self, String> {
        let catalog = Self { locales };
        catalog.validate()?;
        Ok(catalog)
    }

    /// Checks that the fallback locale exists and defines every key used by
    /// any other locale.
    pub fn validate(&self) -> Result<(), String> {
        let en = self
            .locales
            .get(FALLBACK_LOCALE)
            .ok_or_else(|| format!("catalog has no {FALLBACK_LOCALE:?} locale"))?;
        for (tag, messages) in &self.locales {
            if let Some(key) = messages.keys().find(|k| !en.contains_key(*k)) {
                return Err(format!("key {key:?} of locale {tag:?} is missing from {FALLBACK_LOCALE:?}"));
            }
        }
        Ok(())
    }

    pub fn locales(&self) -> impl Iterator<Item = &str> {
        self.locales.keys().map(String::as_str)
    }

    pub fn has_locale(&self, tag: &str) -> bool {
        self.locales.contains_key(tag)
    }

    /// Message for `key`, falling back to English and then to the key.
    pub fn get<'a>(&'a self, locale: &str, key: &'a str) -> &'a str {
        self.locales
            .get(locale)
            .and_then(|m| m.get(key))
            .or_else(|| self.locales.get(FALLBACK_LOCALE).and_then(|m| m.get(key)))
            .map_or(key, String::as_str)
    }

    /// Every key, translated where the locale has it.
    pub fn messages(&self, locale: &str) -> BTreeMap<String, String> {
        let mut out = self.locales.get(FALLBACK_LOCALE).cloned().unwrap_or_default();
        if let Some(m) = self.locales.get(locale) {
            out.extend(m.iter().map(|(k, v)| (k.clone(), v.clone())));
        }
        out
    }

    /// Catalog locale matching a language tag such as `ja`, `ja-JP` or
    /// `de_DE.UTF-8`.
    pub fn match_tag(&self, tag: &str) -> Option<String> {
        let norm = tag
            .split(['.', '@'])
            .next()
            .unwrap_or("")
            .trim()
            .replace('_', "-")
            .to_ascii_lowercase();
        if norm.is_empty() || norm == "*" || norm == "c" || norm == "posix" {
            return None;
        }
        if self.has_locale(&norm) {
            return Some(norm);
        }
        let primary = norm.split('-').next().unwrap_or("");
        self.has_locale(primary).then(|| primary.to_string())
    }
}

/// Language tags from an `Accept-Language` header, most preferred first.
pub fn parse_accept_language(header: &str) -> Vec<String> {
    let mut tags: Vec<(f64, usize, String)> = header
        .split(',')
        .enumerate()
        .filter_map(|(i, part)| {
            let mut pieces = part.split(';');
            let tag = pieces.next()?.trim();
            if tag.is_empty() {
                return None;
            }
            let q = pieces
                .find_map(|p| p.trim().strip_prefix("q=").map(|q| q.trim().parse::<f64>().unwrap_or(0.0)))
                .unwrap_or(1.0);
            (q > 0.0).then(|| (q, i, tag.to_string()))
        })
        .collect();
    tags.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    tags.into_iter().map(|(_, _, t)| t).collect()
}

/// Locale from the process environment, if any variable names one.
pub fn env_locale() -> Option<String> {
    LOCALE_ENV_VARS
        .iter()
        .filter_map(|v| std::env::var(v).ok())
        .find(|v| !v.trim().is_empty())
}

/// First catalog match among: the explicit request, the client's
/// `Accept-Language` preferences, the environment locale, then English.
pub fn resolve_locale(
    requested: Option<&str>,
    accept_language: Option<&str>,
    environment: Option<&str>,
    catalog: &MessageCatalog,
) -> String {
    requested
        .and_then(|r| catalog.match_tag(r))
        .or_else(|| {
            accept_language
                .map(parse_accept_language)
                .unwrap_or_default()
                .iter()
                .find_map(|t| catalog.match_tag(t))
        })
        .or_else(|| environment.and_then(|e| catalog.match_tag(e)))
        .unwrap_or_else(|| FALLBACK_LOCALE.to_string())
}
