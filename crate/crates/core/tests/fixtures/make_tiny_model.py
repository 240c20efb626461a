"""Builds tiny_detector.onnx, a fixed-output network following the adapter
contract: one detection at canvas (32, 32, 16, 16) with objectness 0.9 whose
embedding, like `global`, is the per-channel mean of the input."""

import onnx
from onnx import TensorProto, helper

S = 64

box = helper.make_tensor("box", TensorProto.FLOAT, [1, 1, 5], [32.0, 32.0, 16.0, 16.0, 0.9])
shape = helper.make_tensor("shape", TensorProto.INT64, [3], [1, 1, 3])
axes = helper.make_tensor("axes", TensorProto.INT64, [2], [2, 3])

nodes = [
    helper.make_node("ReduceMean", ["images", "axes"], ["global"], keepdims=0),
    helper.make_node("Reshape", ["global", "shape"], ["emb"]),
    helper.make_node("Concat", ["box", "emb"], ["detections"], axis=2),
]
graph = helper.make_graph(
    nodes,
    "tiny_detector",
    [helper.make_tensor_value_info("images", TensorProto.FLOAT, [1, 3, S, S])],
    [
        helper.make_tensor_value_info("detections", TensorProto.FLOAT, [1, 1, 8]),
        helper.make_tensor_value_info("global", TensorProto.FLOAT, [1, 3]),
    ],
    initializer=[box, shape, axes],
)
model = helper.make_model(graph, opset_imports=[helper.make_opsetid("", 18)])
model.ir_version = 8
onnx.checker.check_model(model)
onnx.save(model, "tiny_detector.onnx")
