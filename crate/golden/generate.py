"""Regenerates view_math.json: magnifier and hit-test cases with expected
outputs computed here, independently of the Rust engine.

    python3 golden/generate.py > golden/view_math.json
"""

import json
import random

MIN_DISPLAY = 8


def clamp(v, lo, hi):
    return lo if v < lo else hi if v > hi else v


def magnifier(cursor, size, zoom, display):
    w, h = size
    cx, cy = cursor
    if not (zoom > 1.0) or zoom != zoom or zoom == float("inf"):
        return {"error": "invalid_zoom"}
    if display < MIN_DISPLAY:
        return {"error": "invalid_display_size"}
    if not (0.0 <= cx <= w and 0.0 <= cy <= h):
        return {"error": "cursor_outside_image"}
    side = display / zoom
    if side > w or side > h:
        return {"error": "magnifier_larger_than_image"}
    x = clamp(cx - side / 2.0, 0.0, w - side)
    y = clamp(cy - side / 2.0, 0.0, h - side)
    return {"source_rect": {"x": x, "y": y, "w": side, "h": side}}


def nearest(d1, d2, tol):
    a, b = d1 <= tol, d2 <= tol
    if a and b:
        return "first" if d1 <= d2 else "second"
    if a:
        return "first"
    if b:
        return "second"
    return None


HANDLES = {
    ("first", "first"): "nw",
    ("second", "first"): "ne",
    ("first", "second"): "sw",
    ("second", "second"): "se",
    ("first", None): "w",
    ("second", None): "e",
    (None, "first"): "n",
    (None, "second"): "s",
}


def region(box, px, py, tol):
    l, t = box["x"], box["y"]
    r, b = l + box["w"], t + box["h"]
    if not (l - tol <= px <= r + tol and t - tol <= py <= b + tol):
        return None
    horiz = nearest(abs(px - l), abs(px - r), tol)
    vert = nearest(abs(py - t), abs(py - b), tol)
    handle = HANDLES.get((horiz, vert))
    if handle:
        return {"handle": handle}
    if l <= px <= r and t <= py <= b:
        return "inside"
    return None


def hit(boxes, px, py, tol):
    tol = max(tol, 0.0)
    found = []
    for i, a in enumerate(boxes):
        reg = region(a["bbox"], px, py, tol)
        if reg is not None:
            found.append((a["bbox"]["w"] * a["bbox"]["h"], i, {"box_id": a["box_id"], "region": reg}))
    found.sort(key=lambda e: (e[0], e[1]))
    return [e[2] for e in found]


def num(rng, lo, hi, grid):
    """A value in [lo, hi]: on a coarse grid most of the time, else arbitrary."""
    if rng.random() < 0.7:
        return round(rng.uniform(lo, hi) / grid) * grid
    return rng.uniform(lo, hi)


def main():
    rng = random.Random(20240611)
    cases = []
    for i in range(100):
        w, h = rng.randint(16, 4000), rng.randint(16, 3000)
        zoom = rng.choice([1.5, 2.0, 3.0, 4.0, 8.0, rng.uniform(1.01, 10.0)])
        display = rng.choice([64, 128, 200, 256, rng.randint(8, 400)])
        edge = rng.random()
        if edge < 0.15:
            cursor = (rng.choice([0.0, float(w)]), num(rng, 0, h, 0.5))
        elif edge < 0.3:
            cursor = (num(rng, 0, w, 0.5), rng.choice([0.0, float(h)]))
        else:
            cursor = (num(rng, 0, w, 0.25), num(rng, 0, h, 0.25))
        if i % 12 == 5:
            zoom = rng.choice([1.0, 0.5])
        elif i % 12 == 7:
            display = rng.randint(1, 7)
        elif i % 12 == 9:
            cursor = (w + 1.5, cursor[1])
        elif i % 12 == 11:
            w, h = 16, 20
            zoom, display = 2.0, 64
        cases.append({
            "kind": "magnifier",
            "input": {"cursor": list(cursor), "image_size": {"width": w, "height": h}, "zoom": zoom, "display_size": display},
            "expected": magnifier(cursor, (w, h), zoom, display),
        })
    for i in range(100):
        w, h = rng.randint(32, 1920), rng.randint(32, 1080)
        boxes = []
        next_id = rng.randint(1, 50)
        for _ in range(rng.randint(0, 8)):
            bw = num(rng, 1, w / 2, 1.0) or 1.0
            bh = num(rng, 1, h / 2, 1.0) or 1.0
            x = num(rng, 0, w - bw, 1.0)
            y = num(rng, 0, h - bh, 1.0)
            boxes.append({"box_id": next_id, "bbox": {"x": x, "y": y, "w": bw, "h": bh}})
            next_id += rng.randint(1, 3)
        if boxes and rng.random() < 0.3:
            dup = dict(boxes[0])
            dup["box_id"] = next_id
            boxes.append(dup)
        tol = rng.choice([0.0, 2.0, 4.0, 6.0, rng.uniform(0, 10)])
        if boxes and rng.random() < 0.6:
            b = rng.choice(boxes)["bbox"]
            px = b["x"] + rng.choice([0.0, b["w"], b["w"] / 2, -tol / 2, b["w"] + tol])
            py = b["y"] + rng.choice([0.0, b["h"], b["h"] / 2, tol / 3, b["h"] - 0.5])
        else:
            px, py = num(rng, 0, w, 0.5), num(rng, 0, h, 0.5)
        cases.append({
            "kind": "hit",
            "input": {"image_size": {"width": w, "height": h}, "boxes": boxes, "point": [px, py], "tolerance": tol},
            "expected": hit(boxes, px, py, tol),
        })
    print(json.dumps({"version": 1, "cases": cases}, indent=1))


if __name__ == "__main__":
    main()
