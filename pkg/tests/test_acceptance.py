"""Acceptance suite: one test per criterion, each printing a PASS line
with the measured figure once its assertions hold.  Tolerances are fixed
here, not configurable."""

import numpy as np

import pics
from pics import (
    Ellipse,
    NoiseModel,
    add_noise,
    gen_sensitivities,
    phantom_image,
    poisson_disc,
    radial_traj,
    regular_mask,
    whiten,
)
from pics.calib import build_calibration_matrix, espirit_maps, split_subspaces
from pics.nlinv import NlinvModel, nlinv, sobolev_weight
from pics.operators import Nufft, NufftSense, SenseCartesian, ToeplitzNormal
from pics.rkhs import (
    build_kernel,
    build_system,
    coil_signals,
    image_norm,
    interpolate,
    power_function,
    solve_weights,
)
from pics.sim import SensitivitySet, synth_multicoil_kspace
from pics.solvers import ProxPenalty, QuadraticPenalty, admm, cg_normal, fista, ista
from pics.wavelets import WaveletTransform

from oracles import smooth_test_phantom


def _report(num, text):
    print(f"\nACCEPTANCE {num:2d} PASS: {text}")


def _adjoint_gap(op, rng, n_pairs=20):
    worst = 0.0
    for _ in range(n_pairs):
        x = rng.normal(size=op.domain_extents) + 1j * rng.normal(size=op.domain_extents)
        y = rng.normal(size=op.codomain_extents) + 1j * rng.normal(
            size=op.codomain_extents
        )
        lhs = np.vdot(y, op.apply(x))
        rhs = np.vdot(op.adjoint(y), x)
        worst = max(worst, abs(lhs - rhs) / max(abs(lhs), 1e-30))
    return worst


def test_criterion_1_operator_soundness():
    rng = np.random.default_rng(0)
    n = 16
    worst = 0.0
    for r in (1, 2, 4):
        sens, _ = gen_sensitivities(4, (n, n), seed=r)
        op = SenseCartesian(sens, regular_mask((n, n), r, 1))
        worst = max(worst, _adjoint_gap(op, rng))
    traj = radial_traj(12, 16, (n, n))
    worst = max(worst, _adjoint_gap(Nufft(traj, (n, n)), rng))
    sens, _ = gen_sensitivities(4, (n, n), seed=9)
    worst = max(worst, _adjoint_gap(NufftSense(sens, traj), rng))
    assert worst < 1e-10
    _report(1, f"adjoint identity, worst relative gap {worst:.2e} < 1e-10")


def test_criterion_2_dense_oracle_equivalence():
    n = 8
    sens, filt = gen_sensitivities(3, (n, n), seed=5)
    mask = regular_mask((n, n), 2, 1)
    op = SenseCartesian(sens, mask)
    ells = [Ellipse(center=(0.05, -0.05), semi_axes=(0.25, 0.3), amplitude=1.0)]
    y = synth_multicoil_kspace(ells, filt, mask)
    x, _ = cg_normal(op, y, QuadraticPenalty(alpha=0.01), tol=1e-12, max_iter=500)

    cols = []
    for i in range(n * n):
        e = np.zeros(n * n, dtype=complex)
        e[i] = 1.0
        out = op.apply(e.reshape(n, n))
        cols.append(np.concatenate([out[:, :, j].reshape(-1) for j in range(3)]))
    F = np.array(cols).T
    yv = np.concatenate([y[:, :, j].reshape(-1) for j in range(3)])
    dense = np.linalg.solve(
        F.conj().T @ F + 0.01 * np.eye(n * n), F.conj().T @ yv
    ).reshape(n, n)
    err = np.linalg.norm(x - dense) / np.linalg.norm(dense)
    assert err < 1e-6
    _report(2, f"cg_normal vs dense normal-equation solve, rel err {err:.2e} < 1e-6")


def test_criterion_3_solver_cross_agreement():
    n = 8
    sens, filt = gen_sensitivities(3, (n, n), seed=5)
    mask = regular_mask((n, n), 2, 1)
    op = SenseCartesian(sens, mask)
    ells = [Ellipse(center=(0.05, -0.05), semi_axes=(0.25, 0.3), amplitude=1.0)]
    y = synth_multicoil_kspace(ells, filt, mask)
    pen = ProxPenalty(
        kind="l1-transform", lam=0.05, transform=WaveletTransform((n, n), 3)
    )
    _, ri = ista(op, y, pen, max_iter=2000, tol=0)
    _, rf = fista(op, y, pen, max_iter=500, tol=0)
    _, ra = admm(op, y, [pen], rho=0.1, max_iter=200, tol=0)
    oi, of, oa = (
        ri.objective_trace[-1],
        rf.objective_trace[-1],
        ra.objective_trace[-1],
    )
    gaps = [abs(a - b) / max(a, b) for a, b in ((oi, of), (oi, oa), (of, oa))]
    assert max(gaps) < 1e-3
    assert rf.objective_trace[100] <= ri.objective_trace[100]
    _report(
        3,
        f"ISTA/FISTA/ADMM objectives mutually within {max(gaps):.2e} < 1e-3, "
        "FISTA(100) <= ISTA(100)",
    )


def test_criterion_4_toeplitz_normal():
    rng = np.random.default_rng(1)
    n = 16
    sens, _ = gen_sensitivities(4, (n, n), seed=1)
    op = NufftSense(sens, radial_traj(16, 16, (n, n)))
    tn = ToeplitzNormal(op)
    worst = 0.0
    for _ in range(5):
        x = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        a = op.normal(x)
        b = tn.normal(x)
        worst = max(worst, np.linalg.norm(a - b) / np.linalg.norm(a))
    assert worst < 1e-5
    _report(4, f"Toeplitz normal vs adjoint(apply), rel err {worst:.2e} < 1e-5")


def test_criterion_5_espirit_recovery():
    n = 48
    ells = smooth_test_phantom()
    sens, filt = gen_sensitivities(8, (n, n), seed=11)
    y_full = synth_multicoil_kspace(ells, filt, regular_mask((n, n), 1, 1))
    lo = n // 2 - 12
    acs = y_full[lo : lo + 24, lo : lo + 24, :]
    cal = split_subspaces(build_calibration_matrix(acs, (6, 6)), 1e-3)
    res = espirit_maps(cal, (n, n), n_maps=1)

    truth = phantom_image(ells, (n, n))
    rss = np.sqrt((np.abs(sens.maps) ** 2).sum(-1))
    support = (np.abs(truth) * rss) > 0.1 * (np.abs(truth) * rss).max()
    ev = res.eigenvalue_maps[:, :, 0]
    assert ev[support].min() >= 0.99
    assert ev[support].max() <= 1.001
    est = res.eigenvector_maps[:, :, :, 0]
    corr = np.abs(np.einsum("xyn,xyn->xy", est.conj(), sens.maps)) / (
        np.linalg.norm(est, axis=2) * np.linalg.norm(sens.maps, axis=2) + 1e-30
    )
    assert corr[support].min() > 0.99

    mask = regular_mask((n, n), 2, 1, acs=24)
    y2 = synth_multicoil_kspace(ells, filt, mask)
    op = SenseCartesian(SensitivitySet(maps=est), mask)
    xh, _ = cg_normal(op, y2, QuadraticPenalty(alpha=1e-6), tol=1e-10, max_iter=400)
    gauge = np.exp(1j * np.angle(sens.maps[:, :, 0]))
    ref = truth * rss * gauge
    err = np.linalg.norm((xh - ref)[support]) / np.linalg.norm(ref[support])
    assert err < 0.02
    _report(
        5,
        f"ESPIRiT: eigenvalue in [{ev[support].min():.4f}, {ev[support].max():.4f}], "
        f"map correlation >= {corr[support].min():.4f}, R=2 recon err {err:.4f} < 0.02",
    )


def test_criterion_6_nonlinear_inversion():
    # derivative check
    rng = np.random.default_rng(0)
    pat = regular_mask((16, 16), 2, 1, acs=6)
    model = NlinvModel(pat, sobolev_weight((16, 16)))
    image = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
    coeffs = rng.normal(size=(16, 16, 4)) + 1j * rng.normal(size=(16, 16, 4))
    coils = model.render_coils(coeffs)
    di = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
    dc = rng.normal(size=(16, 16, 4)) + 1j * rng.normal(size=(16, 16, 4))

    def forward(i_, c_):
        return model.forward(i_, model.render_coils(c_))

    errs = []
    for eps in (1e-3, 5e-4):
        pred = eps * model.derivative(image, coils, di, dc)
        diff = forward(image + eps * di, coeffs + eps * dc) - forward(image, coeffs)
        errs.append(np.linalg.norm(diff - pred))
    ratio = errs[0] / errs[1]
    assert 3.5 <= ratio <= 4.5

    # joint estimation accuracy at R=2 after 10 Newton steps
    n = 32
    ells = [
        Ellipse(center=(0.0, 0.0), semi_axes=(0.3, 0.35), amplitude=1.0),
        Ellipse(center=(0.06, 0.05), semi_axes=(0.1, 0.12), angle=0.4, amplitude=0.5),
    ]
    sens, filt = gen_sensitivities(8, (n, n), seed=21)
    mask = regular_mask((n, n), 2, 1, acs=12)
    y = synth_multicoil_kspace(ells, filt, mask)
    mhat, chat, _ = nlinv(y, mask, n_newton=10, q_reduction=1 / 3, sobolev_l=8.0)
    truth = phantom_image(ells, (n, n))
    prod_true = truth[:, :, None] * sens.maps
    prod_est = mhat[:, :, None] * chat.maps
    err = np.linalg.norm(prod_est - prod_true) / np.linalg.norm(prod_true)
    assert err < 0.05
    _report(
        6,
        f"NLINV: finite-difference ratio {ratio:.2f} in [3.5, 4.5], "
        f"coil-image product rel err {err:.4f} < 0.05 after 10 Newton steps",
    )


def test_criterion_7_rkhs():
    rng = np.random.default_rng(0)
    n, coils = 16, 4
    sens, _ = gen_sensitivities(coils, (n, n), seed=2)
    ctx = build_kernel(sens)

    # kernel vs direct sum
    r = (np.arange(n) - n // 2) / n
    worst_k = 0.0
    for _ in range(10):
        s, t = rng.integers(coils), rng.integers(coils)
        d0 = int(rng.integers(-(n - 1), n))
        d1 = int(rng.integers(-(n - 1), n))
        phase = np.exp(-2j * np.pi * (d0 * r[:, None] + d1 * r[None, :]))
        direct = (sens.maps[:, :, s] * sens.maps[:, :, t].conj() * phase).sum() / n**2
        worst_k = max(worst_k, abs(ctx.table[d0 + n - 1, d1 + n - 1, s, t] - direct))
    assert worst_k < 1e-10

    mask = regular_mask((n, n), 2, 1, acs=4)
    system = build_system(ctx, mask)
    img = phantom_image(smooth_test_phantom(), (n, n))
    f = coil_signals(sens, img)
    norm_f = image_norm(img)
    pts = mask.sample_points().astype(int)
    fsamp = f[pts[:, 0] + n // 2, pts[:, 1] + n // 2, :].reshape(-1)

    # power vanishes at sampled locations
    worst_p0 = 0.0
    for idx in (0, 7, 20):
        u = solve_weights(system, pts[idx], 1)
        worst_p0 = max(worst_p0, power_function(system, pts[idx], 1, u))
    assert worst_p0 < 1e-6

    # error bound on 50 held-out targets
    sampled = set(map(tuple, pts))
    held_out = [
        (i - n // 2, j - n // 2)
        for i in range(n)
        for j in range(n)
        if (i - n // 2, j - n // 2) not in sampled
    ]
    rng.shuffle(held_out)
    for k in held_out[:50]:
        j = int(rng.integers(coils))
        u = solve_weights(system, k, j)
        fhat = interpolate(u, fsamp)
        ftrue = f[k[0] + n // 2, k[1] + n // 2, j]
        P = power_function(system, k, j, u)
        assert abs(ftrue - fhat) ** 2 <= norm_f**2 * P**2 + 1e-9

    # monotone under sample addition
    base = pts[rng.choice(len(pts), size=14, replace=False)].astype(float)
    extra = np.array([held_out[0]], dtype=float)
    small = build_system(ctx, base)
    big = build_system(ctx, np.vstack([base, extra]))
    for k in held_out[1:6]:
        j = int(rng.integers(coils))
        p_small = power_function(small, k, j, solve_weights(small, k, j))
        p_big = power_function(big, k, j, solve_weights(big, k, j))
        assert p_big <= p_small + 1e-8
    _report(
        7,
        f"RKHS: kernel oracle gap {worst_k:.1e} < 1e-10, P(sample) <= {worst_p0:.1e}, "
        "error bound holds on 50 held-out targets, P monotone under sample addition",
    )


def test_criterion_8_sampling_patterns():
    # Poisson-disc minimum-distance property, 5 seeds
    for seed in range(5):
        pat = poisson_disc((24, 24), r_min=2.0, density_exponent=1.0, seed=seed)
        pts = np.argwhere(pat.mask == 1).astype(float)
        c = np.array([12.0, 12.0])
        k_max = float(np.hypot(12.0, 12.0))
        radii = 2.0 * (1.0 + np.hypot(*(pts - c).T) / k_max)
        for a in range(len(pts)):
            d = np.hypot(*(pts[a] - pts[a + 1 :]).T)
            assert np.all(d >= np.minimum(radii[a], radii[a + 1 :]) - 1e-9)

    # regular masks vs set-enumeration oracles
    def oracle(n, r1, r2, acs):
        kept = set()
        c = n // 2
        for i in range(n):
            for j in range(n):
                if (i - c) % r1 == 0 and (j - c) % r2 == 0:
                    kept.add((i, j))
        lo = c - acs // 2
        for i in range(lo, lo + acs):
            for j in range(lo, lo + acs):
                kept.add((i, j))
        return kept

    for n, r1, r2, acs in ((8, 1, 4, 0), (16, 2, 2, 4)):
        pat = regular_mask((n, n), r1, r2, acs)
        kept = {(i, j) for i, j in np.argwhere(pat.mask == 1)}
        assert kept == oracle(n, r1, r2, acs)
    _report(8, "Poisson-disc min-distance holds for 5 seeds; 1x4 and 2x2 masks match enumeration")


def test_criterion_9_regularization_tradeoff():
    n = 32
    ells = [
        Ellipse(center=(0.0, 0.0), semi_axes=(0.34, 0.38), amplitude=1.0),
        Ellipse(center=(0.1, 0.12), semi_axes=(0.06, 0.05), angle=0.3, amplitude=0.5),
    ]
    sens, filt = gen_sensitivities(8, (n, n), seed=9)
    mask = regular_mask((n, n), 4, 4, acs=4)
    y0 = synth_multicoil_kspace(ells, filt, mask)
    op = SenseCartesian(sens, mask)
    truth = phantom_image(ells, (n, n))
    r = (np.arange(n) - n // 2) / n
    X, Y = np.meshgrid(r, r, indexing="ij")
    flat = ((X / 0.34) ** 2 + (Y / 0.38) ** 2 < 0.5) & (
        ((X - 0.1) / 0.1) ** 2 + ((Y - 0.12) / 0.1) ** 2 > 2.0
    )
    sigma = 0.002
    noise_var, bias = [], []
    for alpha in (1e-3, 1e-1, 1e1):
        recs = []
        for seed in range(5):
            yn = add_noise(y0, NoiseModel(covariance=sigma**2 * np.eye(8), seed=seed))
            yn = yn * mask.mask[:, :, None]
            xh, _ = cg_normal(op, yn, QuadraticPenalty(alpha=alpha), tol=1e-9, max_iter=300)
            recs.append(xh)
        recs = np.array(recs)
        noise_var.append(float(np.mean(np.var(recs, axis=0)[flat])))
        bias.append(
            float(np.linalg.norm(recs.mean(axis=0) - truth) / np.linalg.norm(truth))
        )
    assert noise_var[0] > noise_var[1] > noise_var[2]
    assert bias[0] < bias[1] < bias[2]
    _report(
        9,
        "bias/noise trade-off across alpha {1e-3, 1e-1, 1e1}: "
        f"noise var {noise_var[0]:.1e} > {noise_var[1]:.1e} > {noise_var[2]:.1e}, "
        f"bias {bias[0]:.3f} < {bias[1]:.3f} < {bias[2]:.3f}",
    )


def test_criterion_10_whitening():
    cov = np.array(
        [
            [2.0, 0.4 + 0.3j, 0.1j],
            [0.4 - 0.3j, 1.5, 0.2],
            [-0.1j, 0.2, 1.0],
        ]
    )
    noise = add_noise(np.zeros((100_000, 3), dtype=complex), NoiseModel(cov, seed=3))
    white, _ = whiten(noise, cov)
    emp = (white.T @ white.conj()) / white.shape[0]
    gap = np.abs(emp - np.eye(3)).max()
    assert gap < 0.05
    _report(10, f"post-whitening covariance within {gap:.3f} < 0.05 of identity (1e5 samples)")
