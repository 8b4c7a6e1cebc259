"""Analytic multi-coil k-space simulation.

Test data is synthesized directly in the Fourier domain: ellipse phantoms
have a closed-form transform, and coil sensitivities are short k-space
filters, so simulated samples never pass through the reconstruction grid
(no inverse crime).  Scale conventions are chosen so that a SENSE forward
operator applied to the pixel raster of the phantom reproduces the
simulated samples up to discretization error:

* ``render_sensitivities`` renders a filter as the plain zero-padded
  inverse FFT of its coefficients,
* ``synth_multicoil_kspace`` convolves the filter coefficients directly
  with the analytic phantom transform,
* ``phantom_image`` returns the band-limited raster in physical units
  (``sqrt(prod(extents))`` times the inverse FFT of the gridded analytic
  coefficients).
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np
from scipy.special import j1

from .arrays import ifftc, resize_center
from .errors import NumericalError
from .sampling import SamplingPattern


@dataclass(frozen=True)
class Ellipse:
    """One phantom ellipse; lengths in FOV units, FOV = [-0.5, 0.5)^2."""

    center: tuple[float, float]
    semi_axes: tuple[float, float]
    angle: float = 0.0
    amplitude: complex = 1.0 + 0.0j

    def __post_init__(self):
        a, b = self.semi_axes
        if not (a > 0 and b > 0):
            raise ValueError(f"semi-axes must be positive, got {self.semi_axes}")


@dataclass(frozen=True)
class CoilFilter:
    """Per-coil k-space filter, coefficients centered at DC.

    coeffs has shape (K, K, n_coils) with K odd; entry (i, j) sits at the
    integer k-space offset (i - K//2, j - K//2).
    """

    n_coils: int
    coeffs: np.ndarray

    def __post_init__(self):
        k0, k1, n = self.coeffs.shape
        if k0 != k1 or k0 % 2 == 0:
            raise ValueError(f"filter must be odd and square, got {k0}x{k1}")
        if n != self.n_coils:
            raise ValueError("coil count does not match coefficient array")


@dataclass(frozen=True)
class SensitivitySet:
    """Rendered coil maps on the (possibly oversampled) FOV grid."""

    maps: np.ndarray  # (X, Y, n_coils)
    oversample_factor: float = 1.0
    support_mask: np.ndarray | None = None

    @property
    def n_coils(self) -> int:
        return self.maps.shape[-1]

    @property
    def grid_extents(self) -> tuple[int, int]:
        return self.maps.shape[0], self.maps.shape[1]


@dataclass(frozen=True)
class NoiseModel:
    """Complex Gaussian noise, correlated across coils, white across samples."""

    covariance: np.ndarray
    seed: int = 0

    def __post_init__(self):
        cov = np.asarray(self.covariance, dtype=complex)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
            raise ValueError("covariance must be a square matrix")
        if np.max(np.abs(cov - cov.conj().T)) > 1e-12 * max(1.0, np.abs(cov).max()):
            raise ValueError("covariance must be Hermitian")
        eigvals = np.linalg.eigvalsh(cov)
        if eigvals.min() <= 0:
            raise ValueError("covariance must be positive definite")
        object.__setattr__(self, "covariance", cov)


def _jinc(radius):
    """pi-normalized disk transform J1(2 pi r)/r with its r->0 limit."""
    r = np.asarray(radius, dtype=float)
    out = np.empty_like(r)
    small = r < 1e-8
    rs = np.where(small, 1.0, r)
    out = j1(2.0 * np.pi * rs) / rs
    return np.where(small, np.pi * (1.0 - 0.5 * (np.pi * r) ** 2), out)


def phantom_kspace(ellipses, kcoords) -> np.ndarray:
    """Exact Fourier transform of an ellipse superposition.

    kcoords is an (n, 2) array of continuous k-space positions in cycles
    per FOV.  For a single ellipse the value at the origin is
    ``amplitude * pi * a * b`` (the ellipse area integral).
    """
    k = np.atleast_2d(np.asarray(kcoords, dtype=float))
    if k.ndim != 2 or k.shape[1] != 2:
        raise ValueError("kcoords must be an (n, 2) array")
    if not np.all(np.isfinite(k)):
        raise ValueError("kcoords must be finite")
    out = np.zeros(k.shape[0], dtype=complex)
    for e in ellipses:
        a, b = e.semi_axes
        c, s = np.cos(e.angle), np.sin(e.angle)
        # rotate k into the ellipse frame, then scale by the semi-axes
        kr0 = c * k[:, 0] + s * k[:, 1]
        kr1 = -s * k[:, 0] + c * k[:, 1]
        rho = np.hypot(a * kr0, b * kr1)
        phase = np.exp(-2j * np.pi * (k[:, 0] * e.center[0] + k[:, 1] * e.center[1]))
        out += e.amplitude * a * b * _jinc(rho) * phase
    return out


def phantom_grid_kspace(ellipses, extents) -> np.ndarray:
    """Analytic transform evaluated on the centered integer grid."""
    nx, ny = int(extents[0]), int(extents[1])
    k0 = np.arange(nx) - nx // 2
    k1 = np.arange(ny) - ny // 2
    kk = np.stack(np.meshgrid(k0, k1, indexing="ij"), axis=-1).reshape(-1, 2)
    return phantom_kspace(ellipses, kk).reshape(nx, ny)


def phantom_image(ellipses, extents, pointwise: bool = False) -> np.ndarray:
    """Phantom raster in physical units.

    By default returns the band-limited raster (truncated Fourier series
    of the analytic transform); with ``pointwise=True`` the indicator
    functions are sampled directly at the grid positions, which carries
    genuine discretization error into any discrete forward model.
    """
    nx, ny = int(extents[0]), int(extents[1])
    if pointwise:
        r0 = (np.arange(nx) - nx // 2) / nx
        r1 = (np.arange(ny) - ny // 2) / ny
        X, Y = np.meshgrid(r0, r1, indexing="ij")
        img = np.zeros((nx, ny), dtype=complex)
        for e in ellipses:
            c, s = np.cos(e.angle), np.sin(e.angle)
            dx, dy = X - e.center[0], Y - e.center[1]
            u = (c * dx + s * dy) / e.semi_axes[0]
            v = (-s * dx + c * dy) / e.semi_axes[1]
            img[u * u + v * v <= 1.0] += e.amplitude
        return img
    grid = phantom_grid_kspace(ellipses, (nx, ny))
    return np.sqrt(grid.size) * ifftc(grid)


def render_sensitivities(
    filt: CoilFilter, grid_extents, oversample: float = 1.0
) -> SensitivitySet:
    """Render a coil filter on a grid: zero-pad to the grid and inverse FFT."""
    nx, ny = int(grid_extents[0]), int(grid_extents[1])
    maps = np.empty((nx, ny, filt.n_coils), dtype=complex)
    for j in range(filt.n_coils):
        maps[:, :, j] = ifftc(resize_center(filt.coeffs[:, :, j], (nx, ny)))
    return SensitivitySet(maps=maps, oversample_factor=oversample)


def gen_sensitivities(
    n_coils: int,
    grid_extents,
    seed: int = 0,
    n_coeffs: int = 7,
    oversample: float = 1.0,
) -> tuple[SensitivitySet, CoilFilter]:
    """Draw smooth random coil maps as short k-space filters.

    Each coil gets a dominant DC term plus random low-order coefficients
    under a radial decay envelope; the non-DC energy is bounded so the
    root-sum-of-squares over coils stays >= 0.2 everywhere.  Deterministic
    for a fixed seed (counter-based Philox stream).
    """
    if n_coils < 1:
        raise ValueError("n_coils must be >= 1")
    if n_coeffs % 2 == 0 or n_coeffs < 1:
        raise ValueError("n_coeffs must be odd and >= 1")
    rng = np.random.Generator(np.random.Philox(seed))
    K = n_coeffs
    h = K // 2
    q0, q1 = np.meshgrid(np.arange(K) - h, np.arange(K) - h, indexing="ij")
    radius = np.hypot(q0, q1)
    envelope = np.exp(-((radius / max(h, 1) * 1.2) ** 2))
    coeffs = (
        rng.standard_normal((K, K, n_coils)) + 1j * rng.standard_normal((K, K, n_coils))
    ) * envelope[:, :, None]
    dc_phase = np.exp(2j * np.pi * rng.random(n_coils))
    for j in range(n_coils):
        coeffs[h, h, j] = 0.0
        wiggle = np.abs(coeffs[:, :, j]).sum()
        if wiggle > 0:
            # keep |c_j| >= 0.3 pointwise so the RSS floor holds by construction
            coeffs[:, :, j] *= 0.7 * (0.4 + 0.6 * rng.random()) / wiggle
        coeffs[h, h, j] = dc_phase[j]
    filt = CoilFilter(n_coils=n_coils, coeffs=coeffs)
    sens = render_sensitivities(filt, grid_extents, oversample)
    rss = np.sqrt((np.abs(sens.maps) ** 2).sum(axis=-1))
    scale = 1.0 / rss.mean()
    if rss.min() * scale < 0.2:
        scale = 0.25 / rss.min()
    filt = CoilFilter(n_coils=n_coils, coeffs=coeffs * scale)
    return render_sensitivities(filt, grid_extents, oversample), filt


def synth_multicoil_kspace(ellipses, filt: CoilFilter, pattern: SamplingPattern):
    """Analytic multi-coil samples: filter coefficients convolved with the
    phantom transform, evaluated exactly at the pattern's sample positions.

    Returns a masked (X, Y, n_coils) grid for Cartesian patterns and an
    (n_points, n_coils) array for trajectories.
    """
    points = pattern.sample_points()
    if points.shape[0] == 0:
        raise ValueError("sampling pattern is empty")
    K = filt.coeffs.shape[0]
    h = K // 2
    vals = np.zeros((points.shape[0], filt.n_coils), dtype=complex)
    for i in range(K):
        for j in range(K):
            shifted = points - np.array([i - h, j - h], dtype=float)
            base = phantom_kspace(ellipses, shifted)
            vals += base[:, None] * filt.coeffs[i, j, :][None, :]
    if pattern.kind == "cartesian-mask":
        nx, ny = pattern.mask.shape
        out = np.zeros((nx, ny, filt.n_coils), dtype=complex)
        idx = np.nonzero(pattern.mask)
        out[idx[0], idx[1], :] = vals
        return out
    return vals


def add_noise(y: np.ndarray, model: NoiseModel) -> np.ndarray:
    """Add seeded complex Gaussian noise with inter-coil covariance.

    The coil dimension is the last axis; samples are independent.  The
    realization is a pure function of (shape, model.seed).
    """
    y = np.asarray(y, dtype=complex)
    n = model.covariance.shape[0]
    if y.shape[-1] != n:
        raise ValueError(
            f"coil dimension {y.shape[-1]} does not match covariance size {n}"
        )
    L = np.linalg.cholesky(model.covariance)
    rng = np.random.Generator(np.random.Philox(model.seed))
    g = (rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape)) / np.sqrt(2)
    return y + np.einsum("jk,...k->...j", L, g)


def whiten(y: np.ndarray, covariance) -> tuple[np.ndarray, np.ndarray]:
    """Decorrelate coils: apply inv(L) for the Cholesky factor L of the
    covariance along the last axis.  Returns (whitened data, whitening matrix).
    """
    cov = np.asarray(covariance, dtype=complex)
    try:
        L = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"covariance is not positive definite: {exc}") from exc
    W = np.linalg.inv(L)
    return np.einsum("jk,...k->...j", W, np.asarray(y, dtype=complex)), W


# Shepp-Logan-like default phantom (modified-contrast variant), FOV units.
def shepp_logan() -> list[Ellipse]:
    """The default 10-ellipse head phantom scaled to the unit FOV."""
    with resources.files("pics.data").joinpath("shepp_logan.txt").open("r") as fh:
        return read_ellipses(fh)


def read_ellipses(fh) -> list[Ellipse]:
    """Parse an ellipse list: one `cx cy a b angle re im` per line."""
    ellipses = []
    for lineno, line in enumerate(fh, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if len(tok) != 7:
            raise ValueError(f"line {lineno}: expected 7 fields, got {len(tok)}")
        cx, cy, a, b, angle, re, im = (float(t) for t in tok)
        ellipses.append(
            Ellipse(center=(cx, cy), semi_axes=(a, b), angle=angle, amplitude=re + 1j * im)
        )
    return ellipses


def write_ellipses(fh, ellipses) -> None:
    for e in ellipses:
        fh.write(
            f"{e.center[0]:.10g} {e.center[1]:.10g} {e.semi_axes[0]:.10g} "
            f"{e.semi_axes[1]:.10g} {e.angle:.10g} "
            f"{e.amplitude.real:.10g} {e.amplitude.imag:.10g}\n"
        )
