import numpy as np
import pytest

import pics
from pics import Ellipse, fftc, gen_sensitivities, regular_mask, resize_center
from pics.operators import Nufft, NufftSense, SenseCartesian, ToeplitzNormal
from pics.sampling import SamplingPattern
from pics.sim import SensitivitySet, phantom_image, synth_multicoil_kspace

from oracles import centered_dft_matrix, dft_sum, materialize


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


def test_sense_trivial_coil_is_fftc(rng):
    maps = SensitivitySet(maps=np.ones((8, 8, 1), dtype=complex))
    op = SenseCartesian(maps, regular_mask((8, 8), 1, 1))
    x = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    assert np.abs(op.apply(x)[:, :, 0] - fftc(x)).max() < 1e-13


def test_sense_adjoint_identity(rng):
    sens, _ = gen_sensitivities(4, (16, 16), seed=2)
    op = SenseCartesian(sens, regular_mask((16, 16), 2, 1))
    assert _adjoint_gap(op, rng) < 1e-10


def test_sense_dense_materialization(rng):
    sens, _ = gen_sensitivities(2, (8, 8), seed=4)
    pat = regular_mask((8, 8), 2, 1)
    op = SenseCartesian(sens, pat)
    W = centered_dft_matrix(8)
    DFT2 = np.kron(W, W)  # row-major vectorization
    mats = []
    mask_diag = np.diag(pat.mask.reshape(-1).astype(float))
    for j in range(2):
        mats.append(mask_diag @ DFT2 @ np.diag(sens.maps[:, :, j].reshape(-1)))
    dense_oracle = np.vstack(mats)

    cols = []
    for i in range(64):
        e = np.zeros(64, dtype=complex)
        e[i] = 1.0
        out = op.apply(e.reshape(8, 8))
        cols.append(np.concatenate([out[:, :, j].reshape(-1) for j in range(2)]))
    dense_op = np.array(cols).T
    assert np.abs(dense_op - dense_oracle).max() < 1e-10


def test_sense_extent_mismatch():
    sens, _ = gen_sensitivities(2, (8, 8), seed=0)
    with pytest.raises(ValueError):
        SenseCartesian(sens, regular_mask((16, 16), 1, 1))


def test_sense_normal_is_adjoint_apply(rng):
    sens, _ = gen_sensitivities(3, (8, 8), seed=1)
    op = SenseCartesian(sens, regular_mask((8, 8), 2, 2, acs=2))
    x = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    assert np.abs(op.normal(x) - op.adjoint(op.apply(x))).max() < 1e-12


def test_sense_normal_psd(rng):
    sens, _ = gen_sensitivities(3, (8, 8), seed=1)
    op = SenseCartesian(sens, regular_mask((8, 8), 2, 2))
    for _ in range(5):
        x = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
        q = np.vdot(x, op.normal(x)).real
        assert q >= -1e-10 * np.linalg.norm(x) ** 2


def test_oversampled_sense_reproduces_analytic_samples():
    # image on the central block; analytic data on the full rendered grid:
    # discrete forward must match on the central physical k-block and the
    # residual must halve when the render grid doubles
    ells = [
        Ellipse(center=(0.02, -0.03), semi_axes=(0.12, 0.09), angle=0.4, amplitude=1.0),
        Ellipse(center=(-0.05, 0.05), semi_axes=(0.05, 0.04), amplitude=0.6),
    ]

    def residual(grid):
        sens, filt = gen_sensitivities(4, (grid, grid), seed=3, oversample=2.0)
        full = regular_mask((grid, grid), 1, 1)
        y = synth_multicoil_kspace(ells, filt, full)
        op = SenseCartesian(sens, full)
        assert op.domain_extents == (grid // 2, grid // 2)
        x = resize_center(phantom_image(ells, (grid, grid)), op.domain_extents)
        fwd = op.apply(x)
        blk = lambda a: resize_center(a.transpose(2, 0, 1), (4, 32, 32))
        return np.linalg.norm(blk(fwd) - blk(y)) / np.linalg.norm(blk(y))

    e128 = residual(128)
    assert e128 < 1e-3
    assert residual(256) <= e128 / 2.0


def test_oversampled_sense_adjoint(rng):
    sens, _ = gen_sensitivities(3, (16, 16), seed=5, oversample=2.0)
    op = SenseCartesian(sens, regular_mask((16, 16), 2, 1))
    assert op.domain_extents == (8, 8)
    assert _adjoint_gap(op, rng) < 1e-10


def test_nufft_on_grid_matches_fftc(rng):
    n = 16
    k = np.arange(n) - n // 2
    pts = np.stack(np.meshgrid(k, k, indexing="ij"), -1).reshape(-1, 2).astype(float)
    op = Nufft(SamplingPattern(kind="trajectory", points=pts), (n, n))
    x = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    got = op.apply(x).reshape(n, n)
    want = fftc(x)
    assert np.linalg.norm(got - want) / np.linalg.norm(want) < 1e-6


def test_nufft_matches_direct_sum(rng):
    n = 16
    pts = rng.uniform(-n / 2, n / 2, size=(5, 2))
    op = Nufft(SamplingPattern(kind="trajectory", points=pts), (n, n))
    x = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    want = dft_sum(x, pts)
    got = op.apply(x)
    assert np.abs(got - want).max() / np.abs(want).max() < 1e-6


def test_nufft_adjoint_identity(rng):
    traj = pics.radial_traj(8, 16, (16, 16))
    op = Nufft(traj, (16, 16))
    assert _adjoint_gap(op, rng) < 1e-10


def test_nufft_validation():
    bad = SamplingPattern(kind="trajectory", points=np.array([[20.0, 0.0]]))
    with pytest.raises(ValueError, match="outside"):
        Nufft(bad, (16, 16))
    ok = SamplingPattern(kind="trajectory", points=np.array([[1.0, 0.0]]))
    with pytest.raises(ValueError):
        Nufft(ok, (16, 16), oversample=1.1)
    with pytest.raises(ValueError):
        Nufft(ok, (16, 16), kernel_width=2)


def test_nufft_sense_adjoint(rng):
    sens, _ = gen_sensitivities(4, (16, 16), seed=1)
    traj = pics.radial_traj(12, 16, (16, 16))
    op = NufftSense(sens, traj)
    assert _adjoint_gap(op, rng, n_pairs=10) < 1e-10


def test_toeplitz_matches_adjoint_apply(rng):
    sens, _ = gen_sensitivities(4, (16, 16), seed=1)
    traj = pics.radial_traj(16, 16, (16, 16))
    op = NufftSense(sens, traj)
    tn = ToeplitzNormal(op)
    for _ in range(3):
        x = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
        a = op.normal(x)
        b = tn.normal(x)
        assert np.linalg.norm(a - b) / np.linalg.norm(a) < 1e-5


def test_toeplitz_full_raster_is_identity(rng):
    n = 16
    k = np.arange(n) - n // 2
    pts = np.stack(np.meshgrid(k, k, indexing="ij"), -1).reshape(-1, 2).astype(float)
    tn = ToeplitzNormal(Nufft(SamplingPattern(kind="trajectory", points=pts), (n, n)))
    x = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    assert np.linalg.norm(tn.normal(x) - x) / np.linalg.norm(x) < 1e-12


def test_toeplitz_quadratic_form_real(rng):
    tn = ToeplitzNormal(Nufft(pics.radial_traj(8, 16, (16, 16)), (16, 16)))
    x = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
    q = np.vdot(x, tn.normal(x))
    assert abs(q.imag) / abs(q) < 1e-10


def test_toeplitz_requires_trajectory_operator():
    sens, _ = gen_sensitivities(2, (8, 8), seed=0)
    op = SenseCartesian(sens, regular_mask((8, 8), 1, 1))
    with pytest.raises(ValueError):
        ToeplitzNormal(op)
    with pytest.raises(NotImplementedError):
        ToeplitzNormal(Nufft(pics.radial_traj(4, 8, (8, 8)), (8, 8))).apply(
            np.ones((8, 8))
        )


def test_materialized_nufft_adjoint_is_conjugate_transpose(rng):
    # the dense adjoint equals the conjugate transpose of the dense apply
    traj = SamplingPattern(kind="trajectory", points=rng.uniform(-4, 4, size=(7, 2)))
    op = Nufft(traj, (8, 8))
    A = materialize(op, (8, 8))
    cols = []
    for i in range(7):
        e = np.zeros(7, dtype=complex)
        e[i] = 1.0
        cols.append(op.adjoint(e).reshape(-1))
    Ah = np.array(cols).T
    assert np.abs(Ah - A.conj().T).max() < 1e-12
