#!/usr/bin/env python3
"""Sweep the quadratic regularization weight on a noisy 16x-undersampled
simulation and print the bias/noise trade-off table; optionally dump
magnitude PNGs of the reconstructions.

Usage: python scripts/bias_noise_tradeoff.py [--out-dir figs]
"""

import argparse
import os

import numpy as np

import pics
from pics.cli import export_png
from pics.operators import SenseCartesian
from pics.solvers import QuadraticPenalty, cg_normal


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--size", type=int, default=32)
    ap.add_argument("--coils", type=int, default=8)
    ap.add_argument("--sigma", type=float, default=0.002)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--out-dir", default=None)
    args = ap.parse_args()

    n = args.size
    ells = [
        pics.Ellipse(center=(0.0, 0.0), semi_axes=(0.34, 0.38), amplitude=1.0),
        pics.Ellipse(center=(0.1, 0.12), semi_axes=(0.06, 0.05), angle=0.3, amplitude=0.5),
    ]
    sens, filt = pics.gen_sensitivities(args.coils, (n, n), seed=9)
    mask = pics.regular_mask((n, n), 4, 4, acs=4)
    y0 = pics.synth_multicoil_kspace(ells, filt, mask)
    op = SenseCartesian(sens, mask)
    truth = pics.phantom_image(ells, (n, n))
    cov = args.sigma**2 * np.eye(args.coils)

    r = (np.arange(n) - n // 2) / n
    X, Y = np.meshgrid(r, r, indexing="ij")
    flat = ((X / 0.34) ** 2 + (Y / 0.38) ** 2 < 0.5) & (
        ((X - 0.1) / 0.1) ** 2 + ((Y - 0.12) / 0.1) ** 2 > 2.0
    )

    print(f"{'alpha':>10} {'noise var (flat)':>18} {'bias (rel l2)':>15}")
    for alpha in (1e-3, 1e-2, 1e-1, 1e0, 1e1):
        recs = []
        for seed in range(args.seeds):
            yn = pics.add_noise(y0, pics.NoiseModel(covariance=cov, seed=seed))
            yn = yn * mask.mask[:, :, None]
            xh, _ = cg_normal(op, yn, QuadraticPenalty(alpha=alpha), tol=1e-9, max_iter=300)
            recs.append(xh)
        recs = np.array(recs)
        noise_var = np.mean(np.var(recs, axis=0)[flat])
        bias = np.linalg.norm(recs.mean(axis=0) - truth) / np.linalg.norm(truth)
        print(f"{alpha:10.0e} {noise_var:18.3e} {bias:15.4f}")
        if args.out_dir:
            os.makedirs(args.out_dir, exist_ok=True)
            export_png(
                recs[0], "magnitude", os.path.join(args.out_dir, f"recon_a{alpha:.0e}.png")
            )
    if args.out_dir:
        export_png(truth, "magnitude", os.path.join(args.out_dir, "truth.png"))
        print(f"wrote PNGs to {args.out_dir}/")


if __name__ == "__main__":
    main()
