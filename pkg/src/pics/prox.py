"""Proximal operators and finite-difference helpers for the splitting
solvers: complex soft-thresholding, group (isotropic) thresholding, and an
approximate isotropic-TV prox via dual projection iterations."""

from __future__ import annotations

import numpy as np


def prox_l1(z: np.ndarray, threshold: float) -> np.ndarray:
    """Complex magnitude soft-threshold, elementwise.

    z * max(|z| - t, 0) / |z|, with 0 where z vanishes; shrinks the
    magnitude and keeps the phase.
    """
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    z = np.asarray(z, dtype=complex)
    mag = np.abs(z)
    scale = np.maximum(mag - threshold, 0.0)
    return np.where(mag > 0, z * (scale / np.where(mag > 0, mag, 1.0)), 0.0)


def grad(x: np.ndarray, dims) -> np.ndarray:
    """Forward differences along ``dims``, Neumann boundary (last
    difference of each axis is zero).  Output shape (len(dims), *x.shape)."""
    x = np.asarray(x, dtype=complex)
    out = np.zeros((len(dims),) + x.shape, dtype=complex)
    for i, d in enumerate(dims):
        sl_hi = [slice(None)] * x.ndim
        sl_lo = [slice(None)] * x.ndim
        sl_hi[d] = slice(1, None)
        sl_lo[d] = slice(0, -1)
        diff = x[tuple(sl_hi)] - x[tuple(sl_lo)]
        dst = [slice(None)] * x.ndim
        dst[d] = slice(0, -1)
        out[(i, *dst)] = diff
    return out


def div(p: np.ndarray, dims) -> np.ndarray:
    """Negative adjoint of :func:`grad` (discrete divergence)."""
    p = np.asarray(p, dtype=complex)
    out = np.zeros(p.shape[1:], dtype=complex)
    for i, d in enumerate(dims):
        comp = p[i]
        ndim = comp.ndim
        fwd = [slice(None)] * ndim
        fwd[d] = slice(0, -1)
        back = [slice(None)] * ndim
        back[d] = slice(1, None)
        upd = np.zeros_like(comp)
        upd[tuple(fwd)] += comp[tuple(fwd)]
        upd[tuple(back)] -= comp[tuple(fwd)]
        out += upd
    return out


def group_soft(p: np.ndarray, threshold: float) -> np.ndarray:
    """Isotropic soft-threshold: shrink the per-pixel vector magnitude
    across the leading (difference-direction) axis."""
    mag = np.sqrt((np.abs(p) ** 2).sum(axis=0))
    scale = np.maximum(mag - threshold, 0.0) / np.where(mag > 0, mag, 1.0)
    return p * scale[None]


def prox_tv_iso(
    z: np.ndarray, lam: float, rho: float = 1.0, inner_iters: int = 50, dims=None
) -> np.ndarray:
    """Approximate prox of (lam/rho) * TV_iso via Chambolle's dual
    projection; lam = 0 returns the input unchanged."""
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    z = np.asarray(z, dtype=complex)
    if lam == 0:
        return z.copy()
    if dims is None:
        dims = tuple(range(z.ndim))
    weight = lam / rho
    tau = 1.0 / (4.0 * len(dims))
    p = np.zeros((len(dims),) + z.shape, dtype=complex)
    for _ in range(inner_iters):
        g = grad(div(p, dims) - z / weight, dims)
        denom = 1.0 + tau * np.sqrt((np.abs(g) ** 2).sum(axis=0))
        p = (p + tau * g) / denom[None]
    return z - weight * div(p, dims)
