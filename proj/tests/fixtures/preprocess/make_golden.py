#!/usr/bin/env python3
"""Golden preprocessing outputs for frame.png and its landmark sidecar.

frame.png is a 160x120 synthetic face rendered by `eyetheia generate-synthetic --subjects 1
--samples 3 --seed 5` (frame 0001). This script recomputes, with numpy only:

  boxes   hull of the face-mesh eye contours / face oval in pixels, grown by (1 + 2p) about the
          centre (p = 0.25 eyes, 0.10 face), clamped to the frame
  crops   bilinear resample, source coordinate x0 + (j + 0.5) * w / tw - 0.5 clamped to the image,
          then / 255 - 0.5 (constant mean image)
  grid    25x25 cells whose centre lies in [x0, x1) x [y0, y1)

and stores per-tensor checksums (sum, sum of squares, max |v|) plus a few fixed entries for the
tiny (16/32) and full (112/224) input sizes.

Run: python3 make_golden.py
"""
import json
import os

import numpy as np
from PIL import Image

HERE = os.path.dirname(os.path.abspath(__file__))

LEFT_EYE = [263, 249, 390, 373, 374, 380, 381, 382, 362, 466, 388, 387, 386, 385, 384, 398]
RIGHT_EYE = [33, 7, 163, 144, 145, 153, 154, 155, 133, 246, 161, 160, 159, 158, 157, 173]
FACE_OVAL = [10, 338, 297, 332, 284, 251, 389, 356, 454, 323, 361, 288, 397, 365, 379, 378, 400, 377,
             152, 148, 176, 149, 150, 136, 172, 58, 132, 93, 234, 127, 162, 21, 54, 103, 67, 109]


def box(lm, idx, pad, w, h):
    pts = lm[idx] * np.array([w, h], dtype=np.float64)
    x0, y0 = pts.min(axis=0)
    x1, y1 = pts.max(axis=0)
    cx, cy = (x0 + x1) / 2, (y0 + y1) / 2
    hw, hh = (x1 - x0) / 2 * (1 + 2 * pad), (y1 - y0) / 2 * (1 + 2 * pad)
    return [float(np.clip(cx - hw, 0, w)), float(np.clip(cy - hh, 0, h)),
            float(np.clip(cx + hw, 0, w)), float(np.clip(cy + hh, 0, h))]


def crop(img, b, th, tw):
    h, w, _ = img.shape
    xs = np.clip(b[0] + (np.arange(tw) + 0.5) * (b[2] - b[0]) / tw - 0.5, 0, w - 1)
    ys = np.clip(b[1] + (np.arange(th) + 0.5) * (b[3] - b[1]) / th - 0.5, 0, h - 1)
    x0 = np.floor(xs).astype(int)
    y0 = np.floor(ys).astype(int)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (xs - x0)[None, :, None]
    fy = (ys - y0)[:, None, None]
    top = img[y0][:, x0] * (1 - fx) + img[y0][:, x1] * fx
    bottom = img[y1][:, x0] * (1 - fx) + img[y1][:, x1] * fx
    out = top * (1 - fy) + bottom * fy  # th x tw x 3
    return out.transpose(2, 0, 1) / 255.0 - 0.5


def grid(b, w, h, n=25):
    g = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            cx, cy = (j + 0.5) * w / n, (i + 0.5) * h / n
            g[i, j] = b[0] <= cx < b[2] and b[1] <= cy < b[3]
    return g.reshape(-1)


def summary(t):
    flat = t.reshape(-1)
    picks = [0, len(flat) // 7, len(flat) // 3, len(flat) // 2, 2 * len(flat) // 3, len(flat) - 1]
    return {"shape": list(t.shape), "sum": float(flat.sum()), "sum_sq": float((flat ** 2).sum()),
            "max_abs": float(np.abs(flat).max()), "entries": {str(i): float(flat[i]) for i in picks}}


def main():
    img = np.asarray(Image.open(os.path.join(HERE, "frame.png")).convert("RGB"), dtype=np.float64)
    h, w, _ = img.shape
    with open(os.path.join(HERE, "frame.png.landmarks.json")) as f:
        lm = np.asarray(json.load(f), dtype=np.float64).reshape(-1, 2)
    boxes = {"left_eye": box(lm, LEFT_EYE, 0.25, w, h), "right_eye": box(lm, RIGHT_EYE, 0.25, w, h),
             "face": box(lm, FACE_OVAL, 0.10, w, h)}
    golden = {"provenance": "make_golden.py over frame.png (synthetic, seed 5)", "frame": [w, h],
              "boxes": boxes, "profiles": {}}
    for name, eye, face in (("tiny", 16, 32), ("full", 112, 224)):
        golden["profiles"][name] = {
            "left_eye": summary(crop(img, boxes["left_eye"], eye, eye)),
            "right_eye": summary(crop(img, boxes["right_eye"], eye, eye)),
            "face": summary(crop(img, boxes["face"], face, face)),
        }
    g = grid(boxes["face"], w, h)
    golden["face_grid_ones"] = [int(i) for i in np.flatnonzero(g)]
    with open(os.path.join(HERE, "golden.json"), "w") as f:
        json.dump(golden, f, indent=2)
        f.write("\n")
    print(json.dumps(boxes))


if __name__ == "__main__":
    main()
