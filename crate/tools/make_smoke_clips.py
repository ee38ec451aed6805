"""Render the two short Y4M clips used by the end-to-end smoke test.

Source: the public-domain NASA astronaut portrait bundled with scikit-image
(also at crates/core/tests/data/astronaut.png).

  solo.y4m  one face panning slowly, every frame
  duo.y4m   the same face next to its mirror image, every frame
"""

import sys
from pathlib import Path

import numpy as np
from PIL import Image

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "crates" / "core" / "tests" / "data"
OUT = DATA / "smoke"
FRAMES = 10
SCALE = 0.75
SIDE = 180


def to_y4m(frames, path, fps=2):
    h, w, _ = frames[0].shape
    with open(path, "wb") as f:
        f.write(f"YUV4MPEG2 W{w} H{h} F{fps}:1 Ip A1:1 C420jpeg XCOLORRANGE=FULL\n".encode())
        for rgb in frames:
            r, g, b = (rgb[..., i].astype(np.float64) for i in range(3))
            y = 0.299 * r + 0.587 * g + 0.114 * b
            cb = 128 - 0.168736 * r - 0.331264 * g + 0.5 * b
            cr = 128 + 0.5 * r - 0.418688 * g - 0.081312 * b
            sub = lambda c: c.reshape(h // 2, 2, w // 2, 2).mean(axis=(1, 3))
            f.write(b"FRAME\n")
            for plane in (y, sub(cb), sub(cr)):
                f.write(np.clip(np.rint(plane), 0, 255).astype(np.uint8).tobytes())


def main():
    src = Image.open(DATA / "astronaut.png").convert("RGB")
    src = src.resize((round(src.width * SCALE), round(src.height * SCALE)), Image.LANCZOS)
    img = np.asarray(src)
    # face center in the scaled portrait
    cx, cy = round((179 + 44) * SCALE), round((60 + 56) * SCALE)

    def window(dx):
        x0 = min(max(cx - SIDE // 2 + dx, 0), img.shape[1] - SIDE)
        y0 = min(max(cy - SIDE // 2, 0), img.shape[0] - SIDE)
        return img[y0 : y0 + SIDE, x0 : x0 + SIDE]

    OUT.mkdir(parents=True, exist_ok=True)
    pans = [round(4 * np.sin(i / FRAMES * 2 * np.pi)) for i in range(FRAMES)]
    to_y4m([window(d) for d in pans], OUT / "solo.y4m")
    to_y4m([np.concatenate([window(d), window(-d)[:, ::-1]], axis=1) for d in pans], OUT / "duo.y4m")
    return 0


if __name__ == "__main__":
    sys.exit(main())
