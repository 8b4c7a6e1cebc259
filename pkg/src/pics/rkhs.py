"""Sampling analysis in the reproducing-kernel picture.

Ideal multi-coil k-space signals generated by images on the FOV grid form
a finite-dimensional RKHS whose matrix-valued kernel is the discretized
FOV integral of c_s * conj(c_t) against a Fourier phase.  This module
builds the kernel, solves for interpolation weights, recovers unsampled
k-space values, and evaluates the power function (the pointwise
worst-case error factor of a sampling pattern).

Dense Gram solves bound practical sample counts to a few thousand; the
CLI subsamples patterns beyond that.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .arrays import fftc
from .sampling import SamplingPattern
from .sim import SensitivitySet


@dataclass
class KernelContext:
    """Precomputed kernel table K_st(dk) for integer offsets dk on the
    doubled difference grid, normalized to the unit-FOV measure."""

    maps: SensitivitySet
    table: np.ndarray  # (2X-1, 2Y-1, N, N)

    @property
    def grid_extents(self):
        return self.maps.grid_extents

    @property
    def n_coils(self):
        return self.maps.n_coils

    def value(self, s: int, t: int, dk) -> complex:
        """Kernel K_st at an offset; table lookup for integer offsets,
        direct FOV sum otherwise."""
        d0, d1 = float(dk[0]), float(dk[1])
        nx, ny = self.grid_extents
        if d0 == int(d0) and d1 == int(d1) and abs(d0) < nx and abs(d1) < ny:
            return self.table[int(d0) + nx - 1, int(d1) + ny - 1, s, t]
        m = self.maps.maps
        r0 = (np.arange(nx) - nx // 2) / nx
        r1 = (np.arange(ny) - ny // 2) / ny
        phase = np.exp(-2j * np.pi * (d0 * r0[:, None] + d1 * r1[None, :]))
        return complex(
            (m[:, :, s] * m[:, :, t].conj() * phase).sum() / (nx * ny)
        )


@dataclass
class InterpolationSystem:
    """Gram system of one sample set: kernel evaluations between samples,
    an eigendecomposition for (pseudo-)inversion, and solver metadata."""

    ctx: KernelContext
    points: np.ndarray  # (n_points, 2)
    ridge: float
    gram: np.ndarray
    eigvals: np.ndarray
    eigvecs: np.ndarray
    used_pseudo_inverse: bool
    n_coils: int = field(init=False)

    def __post_init__(self):
        self.n_coils = self.ctx.n_coils


def build_kernel(maps: SensitivitySet) -> KernelContext:
    """K_st(dk) = (1/XY) sum_r c_s(r) conj(c_t(r)) exp(-2 pi i r dk).

    Computed exactly for all integer offsets with one FFT per coil pair;
    the FOV sum is periodic in dk with the grid period, so the doubled
    table is the periodic extension of the centered FFT values.
    """
    m = maps.maps
    nx, ny, n_coils = m.shape
    prods = m[:, :, :, None] * m.conj()[:, :, None, :]  # (X, Y, s, t)
    base = fftc(prods, axes=(0, 1)) / np.sqrt(nx * ny)  # = (1/XY) sum, centered
    d0 = np.arange(-(nx - 1), nx)
    d1 = np.arange(-(ny - 1), ny)
    i0 = (d0 + nx // 2) % nx
    i1 = (d1 + ny // 2) % ny
    table = base[np.ix_(i0, i1)]
    return KernelContext(maps=maps, table=table)


def _sample_points(sample_locs) -> np.ndarray:
    if isinstance(sample_locs, SamplingPattern):
        return sample_locs.sample_points()
    return np.atleast_2d(np.asarray(sample_locs, dtype=float))


def build_system(
    ctx: KernelContext, sample_locs, ridge: float = 0.0
) -> InterpolationSystem:
    """Assemble and factor the Hermitian Gram matrix of all (coil, sample)
    pairs; sample index runs point-major, coil-minor.

    With ridge = 0 a singular Gram is handled by an eigenvalue cutoff
    pseudo-inverse (reported through ``used_pseudo_inverse``).
    """
    if ridge < 0:
        raise ValueError("ridge must be >= 0")
    pts = _sample_points(sample_locs)
    if pts.shape[0] == 0:
        raise ValueError("sample set is empty")
    n_pts = pts.shape[0]
    n_coils = ctx.n_coils
    nx, ny = ctx.grid_extents
    diffs = pts[None, :, :] - pts[:, None, :]  # row (t,l) minus col (s,k): l - k? see below
    # gram[(t,l),(s,k)] = K_st(k - l)
    on_grid = np.all(diffs == np.rint(diffs)) and np.all(
        np.abs(diffs[:, :, 0]) < nx
    ) and np.all(np.abs(diffs[:, :, 1]) < ny)
    gram = np.empty((n_pts, n_coils, n_pts, n_coils), dtype=complex)
    if on_grid:
        idx0 = np.rint(diffs[:, :, 0]).astype(int) + nx - 1
        idx1 = np.rint(diffs[:, :, 1]).astype(int) + ny - 1
        # table[idx(l,k)] with difference k - l: diffs[l, k] = pts[k] - pts[l]
        block = ctx.table[idx0, idx1]  # (l, k, s, t)
        gram = block.transpose(0, 3, 1, 2)  # -> (l, t, k, s)
    else:
        for a in range(n_pts):
            for b in range(n_pts):
                dk = pts[b] - pts[a]
                for s in range(n_coils):
                    for t in range(n_coils):
                        gram[a, t, b, s] = ctx.value(s, t, dk)
    gram = gram.reshape(n_pts * n_coils, n_pts * n_coils)
    gram = 0.5 * (gram + gram.conj().T)  # enforce exact Hermitian symmetry
    if ridge > 0:
        eigvals, eigvecs = np.linalg.eigh(gram + ridge * np.eye(gram.shape[0]))
        used_pinv = False
    else:
        eigvals, eigvecs = np.linalg.eigh(gram)
        used_pinv = bool(eigvals.min() <= 1e-10 * max(eigvals.max(), 0.0))
    return InterpolationSystem(
        ctx=ctx,
        points=pts,
        ridge=ridge,
        gram=gram,
        eigvals=eigvals,
        eigvecs=eigvecs,
        used_pseudo_inverse=used_pinv,
    )


def _target_rhs_batch(system: InterpolationSystem, targets, coil_j: int) -> np.ndarray:
    """rhs[(t,l), i] = K_jt(target_i - l); table gather when everything is
    on-grid, direct kernel sums otherwise."""
    ctx = system.ctx
    pts = system.points
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    n_pts, n_coils = pts.shape[0], system.n_coils
    nx, ny = ctx.grid_extents
    diffs0 = targets[None, :, 0] - pts[:, None, 0]
    diffs1 = targets[None, :, 1] - pts[:, None, 1]
    on_grid = (
        np.all(diffs0 == np.rint(diffs0))
        and np.all(diffs1 == np.rint(diffs1))
        and np.all(np.abs(diffs0) < nx)
        and np.all(np.abs(diffs1) < ny)
    )
    if on_grid:
        i0 = np.rint(diffs0).astype(int) + nx - 1
        i1 = np.rint(diffs1).astype(int) + ny - 1
        block = ctx.table[i0, i1, coil_j, :]  # (n_pts, n_targets, n_coils)
        rhs = block.transpose(0, 2, 1).reshape(n_pts * n_coils, -1)
        return rhs
    rhs = np.empty((n_pts, n_coils, targets.shape[0]), dtype=complex)
    for i, tk in enumerate(targets):
        for a in range(n_pts):
            dk = (tk[0] - pts[a, 0], tk[1] - pts[a, 1])
            for t in range(n_coils):
                rhs[a, t, i] = ctx.value(coil_j, t, dk)
    return rhs.reshape(n_pts * n_coils, -1)


def _target_rhs(system: InterpolationSystem, target_k, coil_j: int) -> np.ndarray:
    """rhs[(t,l)] = K_jt(target - l) for every sample (t, l)."""
    return _target_rhs_batch(system, [target_k], coil_j)[:, 0]


def _apply_inverse(system: InterpolationSystem, rhs: np.ndarray) -> np.ndarray:
    w, v = system.eigvals, system.eigvecs
    if system.ridge > 0:
        inv = 1.0 / w
    else:
        cutoff = 1e-10 * max(w.max(), 0.0)
        inv = np.where(w > cutoff, 1.0 / np.where(w > cutoff, w, 1.0), 0.0)
    proj = v.conj().T @ rhs
    scaled = inv[:, None] * proj if proj.ndim == 2 else inv * proj
    return v @ scaled


def solve_weights(
    system: InterpolationSystem, target_k, target_coil: int
) -> np.ndarray:
    """Interpolation coefficients u for recovering coil ``target_coil`` at
    ``target_k`` from the system's samples (point-major, coil-minor)."""
    rhs = _target_rhs(system, target_k, target_coil)
    return _apply_inverse(system, rhs)


def interpolate(weights: np.ndarray, samples: np.ndarray) -> complex:
    """f_hat = sum_t sum_l f_t(l) u^{t,l}; linear in the data."""
    samples = np.asarray(samples).reshape(-1)
    if samples.shape != weights.shape:
        raise ValueError(
            f"weights ({weights.shape}) and samples ({samples.shape}) disagree"
        )
    return complex(np.sum(samples * weights))


def power_function(
    system: InterpolationSystem, target_k, target_coil: int, weights: np.ndarray
) -> float:
    """Pointwise error bound factor:
    P^2 = K_jj(0) - sum_{t,l} K_jt(target - l) conj(u^{t,l})."""
    rhs = _target_rhs(system, target_k, target_coil)
    k_self = system.ctx.value(target_coil, target_coil, (0.0, 0.0)).real
    p2 = k_self - np.vdot(weights, rhs).real
    if p2 < -1e-8:
        raise ValueError(f"power function is {p2:.3e} < -1e-8: inconsistent weights")
    return float(np.sqrt(max(p2, 0.0)))


def power_map(
    ctx: KernelContext,
    sample_locs,
    coil_j: int = 0,
    targets=None,
    ridge: float = 0.0,
) -> np.ndarray:
    """Power function over a grid of targets (default: every grid
    position), returned as a real (X, Y) array for heat maps."""
    system = build_system(ctx, sample_locs, ridge)
    nx, ny = ctx.grid_extents
    if targets is None:
        k0 = np.arange(nx) - nx // 2
        k1 = np.arange(ny) - ny // 2
        targets = np.stack(np.meshgrid(k0, k1, indexing="ij"), -1).reshape(-1, 2)
        out_shape = (nx, ny)
    else:
        targets = np.atleast_2d(np.asarray(targets, dtype=float))
        out_shape = (targets.shape[0],)
    rhs = _target_rhs_batch(system, targets, coil_j)
    weights = _apply_inverse(system, rhs)
    k_self = ctx.value(coil_j, coil_j, (0.0, 0.0)).real
    p2 = k_self - np.einsum("si,si->i", weights.conj(), rhs).real
    if p2.min() < -1e-8:
        raise ValueError(
            f"power function reached {p2.min():.3e} < -1e-8: inconsistent system"
        )
    return np.sqrt(np.maximum(p2, 0.0)).reshape(out_shape)


def coil_signals(maps: SensitivitySet, image: np.ndarray) -> np.ndarray:
    """Exact ideal k-space of a gridded image under the kernel's measure:
    f_t(k) = (1/XY) sum_r image(r) c_t(r) exp(-2 pi i k r) on the grid."""
    m = maps.maps
    nx, ny = image.shape
    return fftc(image[:, :, None] * m, axes=(0, 1)) / np.sqrt(nx * ny)


def image_norm(image: np.ndarray) -> float:
    """Discretized L2(FOV) norm matching the kernel normalization."""
    return float(np.linalg.norm(image) / np.sqrt(image.size))
