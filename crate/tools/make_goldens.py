#!/usr/bin/env python3
"""Record reference outputs of the original Keras networks and of the
reference cascade detector, used as oracles by the Rust test suite.

Requires tensorflow, h5py, opencv and scikit-image, plus the unpacked
`mtcnn` 0.1.1 package on PYTHONPATH.
"""

import argparse
import json
import os

import numpy as np


def pattern(n, offset=0.0):
    i = np.arange(n, dtype=np.float64)
    return (np.sin(0.731 * i + offset) * np.cos(0.0173 * i)).astype(np.float32)


def nchw_to_keras(x):
    # the cascade networks were trained on transposed images: (n, w, h, c)
    return np.transpose(x, (0, 3, 2, 1))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--mtcnn-weights", required=True)
    ap.add_argument("--emotion-model", required=True)
    ap.add_argument("--out", required=True)
    args = ap.parse_args()

    import tensorflow as tf
    from mtcnn.network.factory import NetworkFactory

    os.makedirs(args.out, exist_ok=True)
    w = np.load(args.mtcnn_weights, allow_pickle=True).tolist()
    fac = NetworkFactory()
    goldens = {}

    p = fac.build_pnet()
    p.set_weights(w["pnet"])
    x = pattern(1 * 3 * 30 * 40).reshape(1, 3, 30, 40)
    reg, prob = p.predict(nchw_to_keras(x), verbose=0)
    goldens["pnet"] = {
        "input_shape": list(x.shape),
        "prob_shape": [1, 2, prob.shape[2], prob.shape[1]],
        "prob": np.transpose(prob, (0, 3, 2, 1)).ravel().tolist(),
        "reg": np.transpose(reg, (0, 3, 2, 1)).ravel().tolist(),
    }

    r = fac.build_rnet()
    r.set_weights(w["rnet"])
    x = pattern(2 * 3 * 24 * 24, 0.5).reshape(2, 3, 24, 24)
    reg, prob = r.predict(nchw_to_keras(x), verbose=0)
    goldens["rnet"] = {"input_shape": list(x.shape), "prob": prob.ravel().tolist(), "reg": reg.ravel().tolist()}

    o = fac.build_onet()
    o.set_weights(w["onet"])
    x = pattern(2 * 3 * 48 * 48, 1.0).reshape(2, 3, 48, 48)
    reg, lm, prob = o.predict(nchw_to_keras(x), verbose=0)
    goldens["onet"] = {
        "input_shape": list(x.shape),
        "prob": prob.ravel().tolist(),
        "reg": reg.ravel().tolist(),
        "landmarks": lm.ravel().tolist(),
    }

    em = tf.keras.models.load_model(args.emotion_model, compile=False)
    x = 0.5 + 0.5 * pattern(48 * 48, 2.0).reshape(1, 48, 48, 1)
    up = tf.image.resize(x, (64, 64), method="bilinear").numpy()
    scores = em.predict((up - 0.5) * 2.0, verbose=0)
    goldens["emotion"] = {"input_shape": [1, 1, 48, 48], "scores": scores.ravel().tolist()}

    gray = np.full((1, 48, 48, 1), 0.5, dtype=np.float32)
    scores = em.predict((tf.image.resize(gray, (64, 64)).numpy() - 0.5) * 2.0, verbose=0)
    goldens["emotion_gray"] = {"scores": scores.ravel().tolist()}

    with open(os.path.join(args.out, "network_goldens.json"), "w") as fh:
        json.dump(goldens, fh)

    import cv2
    from mtcnn import MTCNN
    from skimage import data

    img = data.astronaut()
    cv2.imwrite(os.path.join(args.out, "astronaut.png"), cv2.cvtColor(img, cv2.COLOR_RGB2BGR))
    det = MTCNN(weights_file=args.mtcnn_weights).detect_faces(img)
    ref = [
        {
            "box": [int(v) for v in d["box"]],
            "confidence": float(d["confidence"]),
            "keypoints": {k: [int(a) for a in v] for k, v in d["keypoints"].items()},
        }
        for d in det
    ]
    with open(os.path.join(args.out, "astronaut_detections.json"), "w") as fh:
        json.dump(ref, fh, indent=1)
    print(json.dumps(ref))


if __name__ == "__main__":
    main()
