"""Subspace auto-calibration: the multi-channel Casorati calibration
matrix, its SVD split into signal and null spaces, and sensitivity
extraction as pointwise eigenvectors of the image-domain projection
operator."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arrays import fftc, ifftc, resize_center


@dataclass
class CalibrationMatrix:
    """Overlapping (patch x coil) blocks of calibration k-space as rows,
    plus the SVD split once :func:`split_subspaces` has run."""

    matrix: np.ndarray
    patch_extents: tuple[int, int]
    n_coils: int
    singular_values: np.ndarray
    v_signal: np.ndarray | None = None
    v_null: np.ndarray | None = None
    threshold: float | None = None


@dataclass
class EspiritResult:
    eigenvalue_maps: np.ndarray  # (X, Y, n_maps), descending per pixel
    eigenvector_maps: np.ndarray  # (X, Y, N, n_maps), unit norm per pixel
    threshold: float


def build_calibration_matrix(acs_kspace: np.ndarray, patch_extents) -> CalibrationMatrix:
    """Slide a patch over the fully-interior calibration region; every
    position contributes one row holding the vectorized (kx, ky, coil)
    block.  The full SVD is computed immediately."""
    acs = np.asarray(acs_kspace, dtype=complex)
    if acs.ndim != 3:
        raise ValueError("calibration k-space must be (cx, cy, n_coils)")
    cx, cy, n_coils = acs.shape
    px, py = int(patch_extents[0]), int(patch_extents[1])
    if px > cx or py > cy:
        raise ValueError(
            f"patch {px}x{py} exceeds the {cx}x{cy} calibration region"
        )
    n_rows = (cx - px + 1) * (cy - py + 1)
    rows = np.empty((n_rows, px * py * n_coils), dtype=complex)
    r = 0
    for i in range(cx - px + 1):
        for j in range(cy - py + 1):
            rows[r] = acs[i : i + px, j : j + py, :].reshape(-1)
            r += 1
    svals = np.linalg.svd(rows, compute_uv=False)
    return CalibrationMatrix(
        matrix=rows,
        patch_extents=(px, py),
        n_coils=n_coils,
        singular_values=svals,
    )


def split_subspaces(cal: CalibrationMatrix, rel_threshold: float) -> CalibrationMatrix:
    """Populate v_signal (sigma >= rel_threshold * sigma_max) and its
    orthogonal complement v_null."""
    if not 0 < rel_threshold < 1:
        raise ValueError("rel_threshold must lie in (0, 1)")
    _, s, vh = np.linalg.svd(cal.matrix, full_matrices=True)
    if s.size == 0 or s[0] == 0:
        raise ValueError("calibration matrix is zero: empty signal space")
    n_sig = int(np.count_nonzero(s >= rel_threshold * s[0]))
    if n_sig == 0:
        raise ValueError("all singular values fall below the threshold")
    # patches (rows of C) lie in the span of the *conjugated* right singular
    # vectors: C v = 0 is an unconjugated product, so the Hermitian
    # projector for patch vectors uses vh.T, not vh.conj().T
    v = vh.T
    cal.v_signal = v[:, :n_sig]
    cal.v_null = v[:, n_sig:]
    cal.singular_values = s
    cal.threshold = rel_threshold
    return cal


def _pixel_operator(cal: CalibrationMatrix, grid_extents) -> np.ndarray:
    """The image-domain form of the patch-projection operator.

    Returns the (X, Y, N, N) field of Hermitian PSD matrices G(r) =
    (1/M) sum_l H_l(r) H_l(r)^H where H_l is the grid rendering of the
    l-th signal-space kernel and M the patch size; sensitivities are
    eigenvalue-one eigenvectors of G wherever the image is supported.
    """
    if cal.v_signal is None:
        raise ValueError("run split_subspaces before extracting maps")
    nx, ny = int(grid_extents[0]), int(grid_extents[1])
    px, py = cal.patch_extents
    n_coils = cal.n_coils
    n_kernels = cal.v_signal.shape[1]
    kernels = cal.v_signal.T.reshape(n_kernels, px, py, n_coils)
    H = np.empty((nx, ny, n_coils, n_kernels), dtype=complex)
    scale = np.sqrt(nx * ny)
    for l in range(n_kernels):
        for c in range(n_coils):
            H[:, :, c, l] = scale * ifftc(resize_center(kernels[l, :, :, c], (nx, ny)))
    return np.einsum("xynl,xyml->xynm", H, H.conj()) / (px * py)


def espirit_maps(
    cal: CalibrationMatrix,
    grid_extents,
    n_maps: int = 1,
    crop_tol: float = 0.0,
) -> EspiritResult:
    """Pointwise eigendecomposition of the image-domain calibration
    operator; the top eigenvector per pixel is the sensitivity vector,
    with eigenvalue one on the image support.

    Eigenvector phase is gauged so the first coil (or the strongest coil
    where the first vanishes) is real and positive.  Pixels whose top
    eigenvalue falls below crop_tol get zeroed maps.
    """
    if not 1 <= n_maps <= cal.n_coils:
        raise ValueError(f"n_maps must lie in [1, {cal.n_coils}]")
    G = _pixel_operator(cal, grid_extents)
    nx, ny = G.shape[:2]
    n_coils = cal.n_coils
    w, v = np.linalg.eigh(G.reshape(-1, n_coils, n_coils))
    w = w[:, ::-1][:, :n_maps]  # descending
    v = v[:, :, ::-1][:, :, :n_maps]
    ref = v[:, 0, :].copy()
    weak = np.abs(ref) < 1e-6
    if np.any(weak):
        strongest = np.argmax(np.abs(v), axis=1)
        ref_alt = np.take_along_axis(v, strongest[:, None, :], axis=1)[:, 0, :]
        ref = np.where(weak, ref_alt, ref)
    phase = np.where(np.abs(ref) > 0, ref / np.where(np.abs(ref) > 0, np.abs(ref), 1.0), 1.0)
    v = v * phase.conj()[:, None, :]
    if crop_tol > 0:
        v = np.where(w[:, None, :] >= crop_tol, v, 0.0)
    return EspiritResult(
        eigenvalue_maps=w.reshape(nx, ny, n_maps).real,
        eigenvector_maps=v.reshape(nx, ny, n_coils, n_maps),
        threshold=cal.threshold if cal.threshold is not None else np.nan,
    )


def apply_kspace_projection(cal: CalibrationMatrix, kspace: np.ndarray) -> np.ndarray:
    """Apply the patch-projection operator to gridded multi-coil k-space
    (cyclic patch extraction over the whole grid); reproduces ideal
    signals when the signal subspace is accurate."""
    ksp = np.asarray(kspace, dtype=complex)
    if ksp.ndim != 3 or ksp.shape[2] != cal.n_coils:
        raise ValueError("k-space must be (X, Y, n_coils)")
    G = _pixel_operator(cal, ksp.shape[:2])
    imgs = ifftc(ksp, axes=(0, 1))
    mixed = np.einsum("xynm,xym->xyn", G, imgs)
    return fftc(mixed, axes=(0, 1))
