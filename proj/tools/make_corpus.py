#!/usr/bin/env python3
"""Deterministic synthetic JPEG corpus for tests and analysis runs.

Generates photographic-looking baseline JPEGs (smooth fields + soft shapes +
grain) in two disjoint-seed splits, plus a handful of edge-case files:

  stat/   statistical split (profiling)
  test/   held-out split
  extra/  flat 16x16, progressive, restart-interval, optimized-Huffman,
          grayscale, 4:4:4 variants
"""

import argparse
import pathlib

import numpy as np
from PIL import Image

try:
    import cv2
except ImportError:  # restart-marker file is skipped without cv2
    cv2 = None


def smooth_field(rng, h, w, cells, lo=0.0, hi=255.0):
    """Low-frequency random field: tiny grid blown up with bicubic resize."""
    grid = rng.uniform(lo, hi, size=(cells, cells)).astype(np.float32)
    img = Image.fromarray(grid, mode="F").resize((w, h), Image.BICUBIC)
    return np.asarray(img, dtype=np.float32)


def synth_rgb(seed):
    rng = np.random.default_rng(seed)
    w = int(rng.integers(96, 320)) & ~1
    h = int(rng.integers(96, 320)) & ~1

    channels = []
    base_cells = int(rng.integers(3, 7))
    for _ in range(3):
        channels.append(smooth_field(rng, h, w, base_cells))
    img = np.stack(channels, axis=-1)

    # soft-edged shapes
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float32)
    for _ in range(int(rng.integers(2, 7))):
        cx, cy = rng.uniform(0, w), rng.uniform(0, h)
        rx = rng.uniform(w * 0.05, w * 0.4)
        ry = rng.uniform(h * 0.05, h * 0.4)
        d = ((xx - cx) / rx) ** 2 + ((yy - cy) / ry) ** 2
        mask = np.clip(1.5 - d, 0.0, 1.0)[..., None]
        color = rng.uniform(0, 255, size=3).astype(np.float32)
        alpha = rng.uniform(0.3, 0.9)
        img = img * (1 - alpha * mask) + color * (alpha * mask)

    # directional texture on one channel, then grain everywhere
    freq = rng.uniform(0.05, 0.3)
    phase = rng.uniform(0, 2 * np.pi)
    stripes = 12 * np.sin(freq * (xx + 0.6 * yy) + phase)
    img[..., int(rng.integers(0, 3))] += stripes
    img += rng.normal(0, rng.uniform(1.0, 4.0), size=img.shape)

    return Image.fromarray(np.clip(img, 0, 255).astype(np.uint8), "RGB"), rng


def save_one(img, rng, path):
    quality = int(rng.integers(70, 93))
    kind = rng.uniform()
    if kind < 0.15:
        img.convert("L").save(path, quality=quality)
    elif kind < 0.3:
        img.save(path, quality=quality, subsampling=0)  # 4:4:4
    else:
        img.save(path, quality=quality, subsampling=2)  # 4:2:0


def write_split(out, name, count, seed_base):
    split = out / name
    split.mkdir(parents=True, exist_ok=True)
    for i in range(count):
        img, rng = synth_rgb(seed_base + i)
        save_one(img, rng, split / f"{name}_{i:03d}.jpg")


def write_extras(out):
    extra = out / "extra"
    extra.mkdir(parents=True, exist_ok=True)

    Image.new("L", (16, 16), 128).save(extra / "flat.jpg", quality=90)

    img, _ = synth_rgb(770001)
    img.save(extra / "progressive.jpg", quality=85, progressive=True)
    img.save(extra / "optimized.jpg", quality=85, optimize=True)
    img.convert("L").save(extra / "gray.jpg", quality=85)
    img.save(extra / "s444.jpg", quality=85, subsampling=0)
    img.save(extra / "plain.jpg", quality=85, subsampling=2)

    if cv2 is not None:
        bgr = np.asarray(img)[:, :, ::-1]
        cv2.imwrite(
            str(extra / "restart.jpg"),
            bgr,
            [cv2.IMWRITE_JPEG_QUALITY, 85, cv2.IMWRITE_JPEG_RST_INTERVAL, 4],
        )


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", required=True, type=pathlib.Path)
    ap.add_argument("--stat", type=int, default=300)
    ap.add_argument("--test", type=int, default=300)
    args = ap.parse_args()

    stamp = args.out / f"complete-{args.stat}-{args.test}"
    if stamp.exists():
        print(f"corpus already present in {args.out}")
        return

    write_split(args.out, "stat", args.stat, seed_base=1000)
    write_split(args.out, "test", args.test, seed_base=900000)
    write_extras(args.out)
    stamp.touch()
    print(f"corpus written to {args.out}")


if __name__ == "__main__":
    main()
