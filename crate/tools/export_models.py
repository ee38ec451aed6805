#!/usr/bin/env python3
"""Convert the pretrained cascade detector and emotion classifier weights
into ONNX graphs understood by the face-affect runtime.

Inputs:
  --mtcnn-weights  mtcnn_weights.npy from the `mtcnn` 0.1.1 package (MIT)
  --emotion-model  emotion_model.hdf5 from the `fer` 22.5.1 package (MIT)

The protobuf wire format is written by hand so that no onnx package is
needed. Only the subset of fields the runtime reads is emitted.
"""

import argparse
import hashlib
import json
import os
import struct

import numpy as np

# ---------------------------------------------------------------- protobuf


def varint(n):
    if n < 0:
        n += 1 << 64
    out = bytearray()
    while True:
        b = n & 0x7F
        n >>= 7
        if n:
            out.append(b | 0x80)
        else:
            out.append(b)
            return bytes(out)


def key(field, wire):
    return varint((field << 3) | wire)


def f_varint(field, n):
    return key(field, 0) + varint(n)


def f_bytes(field, data):
    if isinstance(data, str):
        data = data.encode()
    return key(field, 2) + varint(len(data)) + data


def f_float(field, x):
    return key(field, 5) + struct.pack("<f", x)


FLOAT, INT64 = 1, 7


def tensor(name, array):
    array = np.ascontiguousarray(array)
    if array.dtype == np.int64:
        dtype = INT64
    else:
        array = array.astype("<f4")
        dtype = FLOAT
    out = b"".join(f_varint(1, d) for d in array.shape)
    out += f_varint(2, dtype)
    out += f_bytes(8, name)
    out += f_bytes(9, array.tobytes())
    return out


def attr(name, value):
    out = f_bytes(1, name)
    if isinstance(value, float):
        out += f_float(2, value) + f_varint(20, 1)
    elif isinstance(value, int):
        out += f_varint(3, value) + f_varint(20, 2)
    elif isinstance(value, str):
        out += f_bytes(4, value) + f_varint(20, 3)
    elif isinstance(value, (list, tuple)):
        out += b"".join(f_varint(8, v) for v in value) + f_varint(20, 7)
    else:
        raise TypeError(value)
    return out


def value_info(name, dims):
    shape = b""
    for d in dims:
        dim = f_bytes(2, d) if isinstance(d, str) else f_varint(1, d)
        shape += f_bytes(1, dim)
    tensor_type = f_varint(1, FLOAT) + f_bytes(2, shape)
    return f_bytes(1, name) + f_bytes(2, f_bytes(1, tensor_type))


class Graph:
    def __init__(self, name):
        self.name = name
        self.nodes = []
        self.inits = []
        self.inputs = []
        self.outputs = []
        self.counter = 0

    def fresh(self, prefix):
        self.counter += 1
        return f"{prefix}_{self.counter}"

    def init(self, prefix, array):
        name = self.fresh(prefix)
        self.inits.append(tensor(name, array))
        return name

    def node(self, op, inputs, attrs=None, n_out=1, out=None):
        outs = out if out is not None else [self.fresh(op.lower()) for _ in range(n_out)]
        if isinstance(outs, str):
            outs = [outs]
        body = b"".join(f_bytes(1, i) for i in inputs)
        body += b"".join(f_bytes(2, o) for o in outs)
        body += f_bytes(3, self.fresh("n"))
        body += f_bytes(4, op)
        for k, v in (attrs or {}).items():
            body += f_bytes(5, attr(k, v))
        self.nodes.append(body)
        return outs[0] if len(outs) == 1 else outs

    def serialize(self):
        g = b"".join(f_bytes(1, n) for n in self.nodes)
        g += f_bytes(2, self.name)
        g += b"".join(f_bytes(5, t) for t in self.inits)
        g += b"".join(f_bytes(11, v) for v in self.inputs)
        g += b"".join(f_bytes(12, v) for v in self.outputs)
        opset = f_bytes(1, "") + f_varint(2, 13)
        return f_varint(1, 7) + f_bytes(2, "face-affect-export") + f_bytes(7, g) + f_bytes(8, opset)

    # -- layer helpers (weights in Keras layout)

    def conv(self, x, kernel, bias=None, stride=1, pads=(0, 0, 0, 0), group=1):
        if group == 1:
            w = kernel.transpose(3, 2, 0, 1)
        else:
            w = kernel.transpose(2, 3, 0, 1)
        ins = [x, self.init("w", w)]
        if bias is not None:
            ins.append(self.init("b", bias))
        kh, kw = kernel.shape[:2]
        return self.node(
            "Conv",
            ins,
            {
                "kernel_shape": [kh, kw],
                "strides": [stride, stride],
                "pads": list(pads),
                "group": group,
            },
        )

    def prelu(self, x, alpha, spatial=True):
        a = alpha.reshape(-1, 1, 1) if spatial else alpha.reshape(-1)
        return self.node("PRelu", [x, self.init("alpha", a)])

    def maxpool(self, x, k, s, same):
        attrs = {"kernel_shape": [k, k], "strides": [s, s]}
        if same:
            attrs["auto_pad"] = "SAME_UPPER"
        return self.node("MaxPool", [x], attrs)

    def dense(self, x, kernel, bias, out=None):
        return self.node(
            "Gemm", [x, self.init("w", kernel), self.init("b", bias)], out=out
        )

    def bn(self, x, gamma, beta, mean, var, eps):
        return self.node(
            "BatchNormalization",
            [x, self.init("g", gamma), self.init("b", beta), self.init("m", mean), self.init("v", var)],
            {"epsilon": float(eps)},
        )


# ------------------------------------------------------------------- MTCNN


def pnet(w):
    g = Graph("pnet")
    g.inputs.append(value_info("input", [1, 3, "height", "width"]))
    x = g.node("Transpose", ["input"], {"perm": [0, 1, 3, 2]})
    x = g.prelu(g.conv(x, w[0], w[1]), w[2])
    x = g.maxpool(x, 2, 2, True)
    x = g.prelu(g.conv(x, w[3], w[4]), w[5])
    x = g.prelu(g.conv(x, w[6], w[7]), w[8])
    logits = g.conv(x, w[9], w[10])
    prob = g.node("Softmax", [logits], {"axis": 1})
    reg = g.conv(x, w[11], w[12])
    g.node("Transpose", [prob], {"perm": [0, 1, 3, 2]}, out="prob")
    g.node("Transpose", [reg], {"perm": [0, 1, 3, 2]}, out="reg")
    g.outputs += [value_info("prob", [1, 2, "h", "w"]), value_info("reg", [1, 4, "h", "w"])]
    return g


def flatten_nhwc(g, x):
    x = g.node("Transpose", [x], {"perm": [0, 2, 3, 1]})
    return g.node("Flatten", [x], {"axis": 1})


def rnet(w):
    g = Graph("rnet")
    g.inputs.append(value_info("input", ["n", 3, 24, 24]))
    x = g.node("Transpose", ["input"], {"perm": [0, 1, 3, 2]})
    x = g.prelu(g.conv(x, w[0], w[1]), w[2])
    x = g.maxpool(x, 3, 2, True)
    x = g.prelu(g.conv(x, w[3], w[4]), w[5])
    x = g.maxpool(x, 3, 2, False)
    x = g.prelu(g.conv(x, w[6], w[7]), w[8])
    x = flatten_nhwc(g, x)
    x = g.prelu(g.dense(x, w[9], w[10]), w[11], spatial=False)
    logits = g.dense(x, w[12], w[13])
    g.node("Softmax", [logits], {"axis": 1}, out="prob")
    g.dense(x, w[14], w[15], out="reg")
    g.outputs += [value_info("prob", ["n", 2]), value_info("reg", ["n", 4])]
    return g


def onet(w):
    g = Graph("onet")
    g.inputs.append(value_info("input", ["n", 3, 48, 48]))
    x = g.node("Transpose", ["input"], {"perm": [0, 1, 3, 2]})
    x = g.prelu(g.conv(x, w[0], w[1]), w[2])
    x = g.maxpool(x, 3, 2, True)
    x = g.prelu(g.conv(x, w[3], w[4]), w[5])
    x = g.maxpool(x, 3, 2, False)
    x = g.prelu(g.conv(x, w[6], w[7]), w[8])
    x = g.maxpool(x, 2, 2, True)
    x = g.prelu(g.conv(x, w[9], w[10]), w[11])
    x = flatten_nhwc(g, x)
    x = g.prelu(g.dense(x, w[12], w[13]), w[14], spatial=False)
    logits = g.dense(x, w[15], w[16])
    g.node("Softmax", [logits], {"axis": 1}, out="prob")
    g.dense(x, w[17], w[18], out="reg")
    g.dense(x, w[19], w[20], out="landmarks")
    g.outputs += [
        value_info("prob", ["n", 2]),
        value_info("reg", ["n", 4]),
        value_info("landmarks", ["n", 10]),
    ]
    return g


# ----------------------------------------------------------------- emotion


def emotion(path):
    import h5py

    f = h5py.File(path, "r")
    cfg = json.loads(f.attrs["model_config"])
    weights = f["model_weights"]

    def params(layer):
        out = {}

        def visit(name, obj):
            if isinstance(obj, h5py.Dataset):
                out[name.split("/")[-1].split(":")[0]] = np.array(obj)

        weights[layer].visititems(visit)
        return out

    g = Graph("emotion")
    g.inputs.append(value_info("input", ["n", 1, 48, 48]))
    # the classifier was trained at 64x64; crops arrive at 48x48
    scales = g.init("scales", np.array([1.0, 1.0, 64 / 48, 64 / 48], dtype=np.float32))
    x = g.node(
        "Resize",
        ["input", "", scales],
        {"mode": "linear", "coordinate_transformation_mode": "half_pixel"},
    )
    x = g.node("Sub", [x, g.init("half", np.array([0.5], dtype=np.float32))])
    x = g.node("Mul", [x, g.init("two", np.array([2.0], dtype=np.float32))])

    names = {cfg["config"]["layers"][0]["name"]: x}
    for layer in cfg["config"]["layers"][1:]:
        cls = layer["class_name"]
        c = layer["config"]
        name = layer["name"]
        ins = [names[n[0]] for n in layer["inbound_nodes"][0]]
        if cls == "Conv2D":
            p = params(name)
            k = c["kernel_size"][0]
            pad = k // 2 if c["padding"] == "same" else 0
            y = g.conv(ins[0], p["kernel"], p.get("bias"), c["strides"][0], (pad,) * 4)
        elif cls == "SeparableConv2D":
            p = params(name)
            k = c["kernel_size"][0]
            pad = k // 2 if c["padding"] == "same" else 0
            dw = p["depthwise_kernel"]
            y = g.conv(ins[0], dw, None, 1, (pad,) * 4, group=dw.shape[2])
            y = g.conv(y, p["pointwise_kernel"], p.get("bias"))
        elif cls == "BatchNormalization":
            p = params(name)
            y = g.bn(ins[0], p["gamma"], p["beta"], p["moving_mean"], p["moving_variance"], c["epsilon"])
        elif cls == "Activation":
            if c["activation"] == "relu":
                y = g.node("Relu", ins)
            elif c["activation"] == "softmax":
                y = g.node("Softmax", ins, {"axis": 1}, out="scores")
            else:
                raise ValueError(c["activation"])
        elif cls == "MaxPooling2D":
            y = g.maxpool(ins[0], c["pool_size"][0], c["strides"][0], c["padding"] == "same")
        elif cls == "Add":
            y = g.node("Add", ins)
        elif cls == "GlobalAveragePooling2D":
            y = g.node("GlobalAveragePool", ins)
            y = g.node("Flatten", [y], {"axis": 1})
        else:
            raise ValueError(cls)
        names[name] = y
    g.outputs.append(value_info("scores", ["n", 7]))
    return g


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--mtcnn-weights", required=True)
    ap.add_argument("--emotion-model", required=True)
    ap.add_argument("--out", required=True)
    args = ap.parse_args()

    os.makedirs(args.out, exist_ok=True)
    w = np.load(args.mtcnn_weights, allow_pickle=True).tolist()
    graphs = {
        "pnet.onnx": pnet(w["pnet"]),
        "rnet.onnx": rnet(w["rnet"]),
        "onet.onnx": onet(w["onet"]),
        "emotion.onnx": emotion(args.emotion_model),
    }
    for fname, g in graphs.items():
        data = g.serialize()
        with open(os.path.join(args.out, fname), "wb") as fh:
            fh.write(data)
        print(f"{hashlib.sha256(data).hexdigest()}  {fname}")


if __name__ == "__main__":
    main()
