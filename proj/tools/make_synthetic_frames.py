#!/usr/bin/env python3
"""Write synthetic 16-bit PGM luminance frames for the terrain pipeline.

A bright region drifts across a sloped surface while a shadowed band
recedes, loosely imitating sunrise over a crater rim. Real imagery can be
used instead; any grayscale PGM or CSV matrix works.
"""
import argparse
import math
import pathlib


def frame(k, size):
    s = size / 20.0
    cr, cc = (6.0 + 2.0 * k) * s, (5.0 + 2.5 * k) * s
    terminator = (8 - 2 * k) * s
    rows = []
    for r in range(size):
        row = []
        for c in range(size):
            d2 = (r - cr) ** 2 + (c - cc) ** 2
            lit = 900.0 + 12.0 * c / s + 2500.0 * math.exp(-d2 / (2.0 * (7.0 * s) ** 2))
            dark = 150.0 + 10.0 * r / s
            # soft shadow edge; a hard edge would break any Lipschitz bound
            w = 1.0 / (1.0 + math.exp(-(c - terminator) / (2.0 * s)))
            row.append(round(dark + w * (lit - dark)))
        rows.append(row)
    return rows


def write_pgm(path, rows):
    h, w = len(rows), len(rows[0])
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n65535\n".encode())
        for row in rows:
            for v in row:
                f.write(int(v).to_bytes(2, "big"))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="configs/lunar_frames")
    ap.add_argument("--size", type=int, default=100)
    ap.add_argument("--frames", type=int, default=5)
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for k in range(args.frames):
        write_pgm(out / f"frame{k}.pgm", frame(k, args.size))


if __name__ == "__main__":
    main()
