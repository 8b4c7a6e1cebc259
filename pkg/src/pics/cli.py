"""Command-line front end.

One binary, one subcommand per pipeline stage:

    phantom -> sens -> sample -> synth -> noise/whiten ->
        recon-cg | recon-fista | recon-admm | ecalib | nlinv | power

plus `convert` for the array format and `png` for magnitude/phase export.
Exit codes: 0 success, 1 usage error, 2 numerical failure.  All outputs
are written atomically; `--seed` makes every stochastic stage
reproducible.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

import numpy as np

from . import sampling, sim
from .arrays import read_array, write_array
from .calib import build_calibration_matrix, espirit_maps, split_subspaces
from .errors import NumericalError
from .nlinv import nlinv
from .operators import NufftSense, SenseCartesian
from .rkhs import build_kernel, power_map
from .solvers import ProxPenalty, QuadraticPenalty, admm, cg_normal, fista
from .wavelets import WaveletTransform

_POWER_SAMPLE_LIMIT = 4000


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _atomic_npy(path, arr):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".npy")
    try:
        with os.fdopen(fd, "wb") as fh:
            np.save(fh, arr)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load(path):
    if path.endswith(".npy"):
        return np.asarray(np.load(path), dtype=complex)
    return read_array(path)


def _store(path, arr):
    if path.endswith(".npy"):
        _atomic_npy(path, np.asarray(arr, dtype=complex))
    else:
        write_array(path, arr)


def _load_pattern(path, traj: bool) -> sampling.SamplingPattern:
    arr = _load(path)
    kind = "trajectory" if traj else "cartesian-mask"
    return sampling.pattern_from_array(arr, kind)


def _load_ellipses(path):
    if path is None:
        return sim.shepp_logan()
    with open(path, "r", encoding="utf-8") as fh:
        return sim.read_ellipses(fh)


def _auto_levels(extents, cap=3):
    lev = 0
    n = min(int(e) for e in extents)
    while lev < cap and n % 2 == 0 and n > 1:
        n //= 2
        lev += 1
    if lev == 0:
        raise _UsageError(f"grid {extents} cannot host a wavelet transform")
    return lev


def _write_report(path, report):
    lines = []
    res = report.residual_trace or []
    for i, obj in enumerate(report.objective_trace):
        entry = {"iteration": i, "objective": float(np.real(obj))}
        if i < len(res):
            entry["residual"] = float(res[i])
        lines.append(json.dumps(entry))
    lines.append(
        json.dumps(
            {
                "iterations": report.iterations,
                "residual_norm": float(report.residual_norm),
                "converged": bool(report.converged),
            }
        )
    )
    payload = ("\n".join(lines) + "\n").encode("utf-8")
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-report-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def export_png(array: np.ndarray, mode: str, out_path: str) -> None:
    """Render a 2D array to an 8-bit PNG: linear gray over [0, max] for
    magnitude, cyclic hue over (-pi, pi] for phase."""
    from PIL import Image

    arr = np.asarray(array)
    if arr.ndim != 2:
        raise ValueError(f"PNG export needs a 2D array, got {arr.ndim}-d")
    if mode == "magnitude":
        mag = np.abs(arr)
        top = mag.max()
        gray = np.zeros_like(mag) if top == 0 else mag / top
        rgb = np.repeat((gray[:, :, None] * 255).round().astype(np.uint8), 3, axis=2)
    elif mode == "phase":
        hue = (np.angle(arr) + np.pi) / (2 * np.pi)  # (-pi, pi] -> (0, 1]
        rgb = (_hsv_to_rgb(hue) * 255).round().astype(np.uint8)
    else:
        raise ValueError(f"unknown PNG mode {mode!r}")
    img = Image.fromarray(rgb, mode="RGB")
    d = os.path.dirname(os.path.abspath(out_path))
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".png")
    os.close(fd)
    try:
        img.save(tmp, format="PNG")
        os.replace(tmp, out_path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _hsv_to_rgb(h):
    """Full-saturation HSV to RGB, vectorized."""
    i = np.floor(h * 6.0).astype(int) % 6
    f = h * 6.0 - np.floor(h * 6.0)
    p = np.zeros_like(h)
    q = 1.0 - f
    t = f
    one = np.ones_like(h)
    lut = [
        (one, t, p),
        (q, one, p),
        (p, one, t),
        (p, q, one),
        (t, p, one),
        (one, p, q),
    ]
    rgb = np.zeros(h.shape + (3,))
    for idx, (r, g, b) in enumerate(lut):
        m = i == idx
        rgb[m, 0] = r[m]
        rgb[m, 1] = g[m]
        rgb[m, 2] = b[m]
    return rgb


def _build_parser() -> _Parser:
    p = _Parser(prog="pics", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("convert", help="convert between .hdr/.dat and .npy")
    c.add_argument("input")
    c.add_argument("output")

    c = sub.add_parser("phantom", help="rasterize the analytic phantom")
    c.add_argument("--size", type=int, default=64)
    c.add_argument("--ellipses", default=None, help="ellipse list file")
    c.add_argument("--kspace", action="store_true", help="emit gridded k-space")
    c.add_argument("--pointwise", action="store_true", help="indicator raster")
    c.add_argument("--out", required=True)

    c = sub.add_parser("sens", help="draw smooth random coil sensitivities")
    c.add_argument("--coils", type=int, default=8)
    c.add_argument("--size", type=int, default=64)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--coeffs", type=int, default=7, help="filter size K")
    c.add_argument("--out", required=True)
    c.add_argument("--out-filter", default=None)

    c = sub.add_parser("sample", help="generate a sampling pattern")
    c.add_argument("--size", type=int, default=64)
    g = c.add_mutually_exclusive_group(required=True)
    g.add_argument("--regular", nargs=2, type=int, metavar=("R1", "R2"))
    g.add_argument("--poisson", nargs=2, type=float, metavar=("RMIN", "EXP"))
    g.add_argument("--radial", nargs=2, type=int, metavar=("SPOKES", "SAMPLES"))
    c.add_argument("--acs", type=int, default=0)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out", required=True)

    c = sub.add_parser("synth", help="analytic multi-coil k-space")
    c.add_argument("--ellipses", default=None)
    c.add_argument("--filter", required=True, dest="filter_path")
    c.add_argument("--pattern", required=True)
    c.add_argument("--traj", action="store_true")
    c.add_argument("--out", required=True)

    c = sub.add_parser("noise", help="add correlated complex Gaussian noise")
    c.add_argument("--input", required=True)
    c.add_argument("--sigma", type=float, default=None, help="iid noise level")
    c.add_argument("--cov", default=None, help="covariance matrix file")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out", required=True)

    c = sub.add_parser("whiten", help="decorrelate coils")
    c.add_argument("--input", required=True)
    c.add_argument("--cov", required=True)
    c.add_argument("--out", required=True)
    c.add_argument("--out-matrix", default=None)

    for name in ("recon-cg", "recon-fista", "recon-admm"):
        c = sub.add_parser(name, help=f"{name.split('-')[1]} reconstruction")
        c.add_argument("--input", required=True)
        c.add_argument("--pattern", required=True)
        c.add_argument("--maps", required=True)
        c.add_argument("--traj", action="store_true")
        c.add_argument("--oversample", type=float, default=1.0)
        c.add_argument("--alpha", type=float, default=0.0)
        c.add_argument("--lambda", type=float, default=0.0, dest="lam")
        c.add_argument("--reg", choices=("l2", "l1wav", "tv"), default="l1wav")
        c.add_argument("--rho", type=float, default=1.0)
        c.add_argument("--tol", type=float, default=1e-8)
        c.add_argument("--max-iter", type=int, default=100)
        c.add_argument("--x0", default=None)
        c.add_argument("--report", default=None)
        c.add_argument("--out", required=True)

    c = sub.add_parser("ecalib", help="ESPIRiT sensitivity extraction")
    c.add_argument("--input", required=True, help="gridded k-space with ACS")
    c.add_argument("--patch", type=int, default=6)
    c.add_argument("--acs", type=int, default=24)
    c.add_argument("--thresh", type=float, default=1e-3)
    c.add_argument("--maps", type=int, default=1)
    c.add_argument("--crop", type=float, default=0.0)
    c.add_argument("--out", required=True)
    c.add_argument("--out-eigenvalues", default=None)

    c = sub.add_parser("nlinv", help="joint image/sensitivity estimation")
    c.add_argument("--input", required=True)
    c.add_argument("--pattern", required=True)
    c.add_argument("--newton", type=int, default=10)
    c.add_argument("--alpha0", type=float, default=1.0)
    c.add_argument("--q", type=float, default=0.5)
    c.add_argument("--sobolev-s", type=float, default=None)
    c.add_argument("--sobolev-l", type=float, default=16.0)
    c.add_argument("--report", default=None)
    c.add_argument("--out", required=True)
    c.add_argument("--out-sens", default=None)

    c = sub.add_parser("power", help="power-function heat map of a pattern")
    c.add_argument("--pattern", required=True)
    c.add_argument("--maps", required=True)
    c.add_argument("--coil", type=int, default=0)
    c.add_argument("--ridge", type=float, default=0.0)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out", required=True)

    c = sub.add_parser("png", help="export magnitude or phase image")
    c.add_argument("--input", required=True)
    c.add_argument("--mode", choices=("magnitude", "phase"), default="magnitude")
    c.add_argument("--out", required=True)
    return p


def _sense_operator(args):
    maps_arr = _load(args.maps)
    if maps_arr.ndim == 4 and maps_arr.shape[-1] == 1:
        maps_arr = maps_arr[:, :, :, 0]
    maps = sim.SensitivitySet(maps=maps_arr, oversample_factor=args.oversample)
    pattern = _load_pattern(args.pattern, args.traj)
    y = _load(args.input)
    if args.traj:
        if args.oversample != 1.0:
            raise _UsageError("trajectory reconstruction uses --oversample 1")
        return NufftSense(maps, pattern), y, pattern
    return SenseCartesian(maps, pattern), y, pattern


def _cmd_convert(args):
    _store(args.output, _load(args.input))


def _cmd_phantom(args):
    ell = _load_ellipses(args.ellipses)
    n = args.size
    if args.kspace:
        out = sim.phantom_grid_kspace(ell, (n, n))
    else:
        out = sim.phantom_image(ell, (n, n), pointwise=args.pointwise)
    _store(args.out, out)


def _cmd_sens(args):
    sens, filt = sim.gen_sensitivities(
        args.coils, (args.size, args.size), seed=args.seed, n_coeffs=args.coeffs
    )
    _store(args.out, sens.maps)
    if args.out_filter:
        _store(args.out_filter, filt.coeffs)


def _cmd_sample(args):
    n = args.size
    if args.regular is not None:
        pat = sampling.regular_mask((n, n), args.regular[0], args.regular[1], args.acs)
        _store(args.out, sampling.mask_to_array(pat))
    elif args.poisson is not None:
        pat = sampling.poisson_disc(
            (n, n), args.poisson[0], args.poisson[1], seed=args.seed, acs=args.acs
        )
        _store(args.out, sampling.mask_to_array(pat))
    else:
        pat = sampling.radial_traj(args.radial[0], args.radial[1], (n, n))
        _store(args.out, sampling.traj_to_array(pat))


def _cmd_synth(args):
    ell = _load_ellipses(args.ellipses)
    coeffs = _load(args.filter_path)
    filt = sim.CoilFilter(n_coils=coeffs.shape[-1], coeffs=coeffs)
    pattern = _load_pattern(args.pattern, args.traj)
    _store(args.out, sim.synth_multicoil_kspace(ell, filt, pattern))


def _noise_model(args, n_coils):
    if args.cov is not None:
        cov = _load(args.cov)
    elif args.sigma is not None:
        cov = (args.sigma**2) * np.eye(n_coils)
    else:
        raise _UsageError("need --sigma or --cov")
    return sim.NoiseModel(covariance=cov, seed=args.seed)


def _cmd_noise(args):
    y = _load(args.input)
    model = _noise_model(args, y.shape[-1])
    _store(args.out, sim.add_noise(y, model))


def _cmd_whiten(args):
    y = _load(args.input)
    cov = _load(args.cov)
    white, W = sim.whiten(y, cov)
    _store(args.out, white)
    if args.out_matrix:
        _store(args.out_matrix, W)


def _cmd_recon_cg(args):
    op, y, _ = _sense_operator(args)
    x0 = _load(args.x0) if args.x0 else None
    pen = QuadraticPenalty(alpha=args.alpha, reference=x0)
    x, report = cg_normal(op, y, pen, tol=args.tol, max_iter=args.max_iter)
    _store(args.out, x)
    if args.report:
        _write_report(args.report, report)


def _prox_penalty(args, extents):
    if args.reg == "l1wav":
        T = WaveletTransform(extents, _auto_levels(extents))
        return ProxPenalty(kind="l1-transform", lam=args.lam, transform=T)
    if args.reg == "tv":
        return ProxPenalty(kind="tv-iso", lam=args.lam, dims=(0, 1))
    return ProxPenalty(kind="l2", lam=args.lam)


def _cmd_recon_fista(args):
    op, y, _ = _sense_operator(args)
    if args.reg != "l1wav":
        raise _UsageError("recon-fista supports --reg l1wav")
    pen = _prox_penalty(args, op.domain_extents)
    x0 = _load(args.x0) if args.x0 else None
    x, report = fista(op, y, pen, max_iter=args.max_iter, tol=args.tol, x_init=x0)
    _store(args.out, x)
    if args.report:
        _write_report(args.report, report)


def _cmd_recon_admm(args):
    op, y, _ = _sense_operator(args)
    pen = _prox_penalty(args, op.domain_extents)
    x0 = _load(args.x0) if args.x0 else None
    x, report = admm(
        op, y, [pen], rho=args.rho, max_iter=args.max_iter, tol=args.tol, x_init=x0
    )
    _store(args.out, x)
    if args.report:
        _write_report(args.report, report)


def _cmd_ecalib(args):
    y = _load(args.input)
    if y.ndim != 3:
        raise _UsageError("ecalib expects gridded (X, Y, coils) k-space")
    nx, ny = y.shape[:2]
    a = args.acs
    acs = y[
        nx // 2 - a // 2 : nx // 2 - a // 2 + a,
        ny // 2 - a // 2 : ny // 2 - a // 2 + a,
        :,
    ]
    cal = build_calibration_matrix(acs, (args.patch, args.patch))
    cal = split_subspaces(cal, args.thresh)
    res = espirit_maps(cal, (nx, ny), n_maps=args.maps, crop_tol=args.crop)
    out = res.eigenvector_maps
    if args.maps == 1:
        out = out[:, :, :, 0]
    _store(args.out, out)
    if args.out_eigenvalues:
        _store(args.out_eigenvalues, res.eigenvalue_maps.astype(complex))


def _cmd_nlinv(args):
    y = _load(args.input)
    pattern = _load_pattern(args.pattern, traj=False)
    img, sens, report = nlinv(
        y,
        pattern,
        n_newton=args.newton,
        alpha0=args.alpha0,
        q_reduction=args.q,
        sobolev_s=args.sobolev_s,
        sobolev_l=args.sobolev_l,
    )
    _store(args.out, img)
    if args.out_sens:
        _store(args.out_sens, sens.maps)
    if args.report:
        _write_report(args.report, report)


def _cmd_power(args):
    maps_arr = _load(args.maps)
    maps = sim.SensitivitySet(maps=maps_arr)
    pattern = _load_pattern(args.pattern, traj=False)
    pts = pattern.sample_points()
    if pts.shape[0] * maps.n_coils > _POWER_SAMPLE_LIMIT:
        keep = _POWER_SAMPLE_LIMIT // maps.n_coils
        rng = np.random.Generator(np.random.Philox(args.seed))
        sel = rng.choice(pts.shape[0], size=keep, replace=False)
        pts = pts[np.sort(sel)]
        print(
            f"pattern subsampled to {keep} of {pattern.n_samples} positions "
            "for the dense Gram solve",
            file=sys.stderr,
        )
    ctx = build_kernel(maps)
    pm = power_map(ctx, pts, coil_j=args.coil, ridge=args.ridge)
    _store(args.out, pm.astype(complex))


def _cmd_png(args):
    arr = _load(args.input)
    export_png(arr, args.mode, args.out)


_COMMANDS = {
    "convert": _cmd_convert,
    "phantom": _cmd_phantom,
    "sens": _cmd_sens,
    "sample": _cmd_sample,
    "synth": _cmd_synth,
    "noise": _cmd_noise,
    "whiten": _cmd_whiten,
    "recon-cg": _cmd_recon_cg,
    "recon-fista": _cmd_recon_fista,
    "recon-admm": _cmd_recon_admm,
    "ecalib": _cmd_ecalib,
    "nlinv": _cmd_nlinv,
    "power": _cmd_power,
    "png": _cmd_png,
}


def run(argv) -> int:
    """Parse and execute one subcommand; returns the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        _COMMANDS[args.command](args)
        return 0
    except _UsageError as exc:
        print(f"pics: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"pics: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"pics: numerical failure: {exc}", file=sys.stderr)
        return 2
    except np.linalg.LinAlgError as exc:
        print(f"pics: numerical failure: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
