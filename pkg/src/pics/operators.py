"""Forward models F = P o G: Cartesian SENSE, gridding nuFFT for arbitrary
trajectories, and the Toeplitz-embedded normal operator.

Every operator exposes apply / adjoint / normal and satisfies the adjoint
inner-product identity by construction (the adjoint is the exact transpose
of the apply pipeline).  The coil dimension is always last in data space.
"""

from __future__ import annotations

import numpy as np
from scipy.special import i0

from .arrays import fftc, ifftc, resize_center
from .sampling import SamplingPattern
from .sim import SensitivitySet


class LinearOperator:
    """Base class carrying domain/codomain extents."""

    domain_extents: tuple
    codomain_extents: tuple

    def apply(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def adjoint(self, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def normal(self, x: np.ndarray) -> np.ndarray:
        return self.adjoint(self.apply(x))


class SenseCartesian(LinearOperator):
    """Masked multi-coil Fourier operator.

    With oversample_factor > 1 the image lives on the central block of the
    rendered FOV: it is zero-padded in image space before the coil
    multiplication, so the coil filters see an aperiodic (non-wrapping)
    image and the acquired grid samples k-space at 1/oversample spacing
    relative to the image extent.
    """

    def __init__(self, maps: SensitivitySet, pattern: SamplingPattern):
        if pattern.kind != "cartesian-mask":
            raise ValueError("SenseCartesian needs a Cartesian mask pattern")
        gx, gy = maps.grid_extents
        if pattern.extents != (gx, gy):
            raise ValueError(
                f"mask extents {pattern.extents} do not match map grid {(gx, gy)}"
            )
        ov = float(maps.oversample_factor)
        x_ext = (int(round(gx / ov)), int(round(gy / ov)))
        if abs(x_ext[0] * ov - gx) > 1e-9 or abs(x_ext[1] * ov - gy) > 1e-9:
            raise ValueError(
                f"grid {(gx, gy)} is not divisible by oversample factor {ov}"
            )
        self.maps = maps
        self.pattern = pattern
        self.domain_extents = x_ext
        self.codomain_extents = (gx, gy, maps.n_coils)

    def apply(self, x):
        x = np.asarray(x, dtype=complex)
        if x.shape != self.domain_extents:
            raise ValueError(f"expected image {self.domain_extents}, got {x.shape}")
        pad = resize_center(x, self.maps.grid_extents)
        coil_imgs = self.maps.maps * pad[:, :, None]
        ksp = fftc(coil_imgs, axes=(0, 1))
        return ksp * self.pattern.mask[:, :, None]

    def adjoint(self, y):
        y = np.asarray(y, dtype=complex)
        if y.shape != self.codomain_extents:
            raise ValueError(f"expected data {self.codomain_extents}, got {y.shape}")
        imgs = ifftc(y * self.pattern.mask[:, :, None], axes=(0, 1))
        combined = (self.maps.maps.conj() * imgs).sum(axis=-1)
        return resize_center(combined, self.domain_extents)


def _kb_beta(width: int, oversample: float) -> float:
    # Beatty et al. choice for the Kaiser-Bessel shape parameter
    return np.pi * np.sqrt(
        (width / oversample) ** 2 * (oversample - 0.5) ** 2 - 0.8
    )


def _kb_kernel(u, width, beta):
    arg = 1.0 - (2.0 * u / width) ** 2
    out = np.zeros_like(np.asarray(u, dtype=float))
    inside = arg > 0
    out[inside] = i0(beta * np.sqrt(arg[inside]))
    return out


def _kb_apodization(n, fine_n, width, beta):
    """Image response of the gridding kernel on the image grid (1 axis)."""
    x = (np.arange(n) - n // 2) / fine_n
    arg = beta**2 - (np.pi * width * x) ** 2
    out = np.where(
        arg > 0,
        np.sinh(np.sqrt(np.abs(arg))) / np.sqrt(np.abs(arg)),
        np.sinc(np.sqrt(np.abs(arg)) / np.pi),
    )
    return out * width


class Nufft(LinearOperator):
    """Gridding non-uniform FFT: apodization correction, zero-padded FFT,
    Kaiser-Bessel interpolation onto trajectory points."""

    def __init__(
        self,
        traj: SamplingPattern,
        extents,
        oversample: float = 2.0,
        kernel_width: int = 6,
    ):
        if traj.kind != "trajectory":
            raise ValueError("Nufft needs a trajectory pattern")
        if oversample < 1.25:
            raise ValueError("oversample must be >= 1.25")
        if kernel_width < 3:
            raise ValueError("kernel_width must be >= 3")
        nx, ny = int(extents[0]), int(extents[1])
        pts = traj.points
        if np.any(np.abs(pts[:, 0]) > nx / 2) or np.any(np.abs(pts[:, 1]) > ny / 2):
            raise ValueError("trajectory points lie outside the grid")
        self.traj = traj
        self.domain_extents = (nx, ny)
        self.codomain_extents = (pts.shape[0],)
        self.oversample = float(oversample)
        self.width = int(kernel_width)
        self.fine = (int(round(nx * oversample)), int(round(ny * oversample)))
        # kernel_width counts original grid cells; the interpolation stencil
        # spans width * oversample cells of the fine grid
        fine_width = int(round(self.width * self.oversample))
        beta = _kb_beta(fine_width, self.oversample)
        self._fine_width = fine_width
        self._apod = np.outer(
            _kb_apodization(nx, self.fine[0], fine_width, beta),
            _kb_apodization(ny, self.fine[1], fine_width, beta),
        )
        self._scale = np.sqrt(self.fine[0] * self.fine[1] / (nx * ny))
        # per-point interpolation tables: indices (mod fine grid) and weights
        self._idx = []
        self._wts = []
        for axis, (n_fine, n_img) in enumerate(zip(self.fine, (nx, ny))):
            p = pts[:, axis] * (n_fine / n_img) + n_fine // 2
            first = np.ceil(p - fine_width / 2.0).astype(int)
            offs = np.arange(fine_width)
            grid = first[:, None] + offs[None, :]
            self._wts.append(_kb_kernel(grid - p[:, None], fine_width, beta))
            self._idx.append(np.mod(grid, n_fine))

    def apply(self, x):
        x = np.asarray(x, dtype=complex)
        if x.shape != self.domain_extents:
            raise ValueError(f"expected image {self.domain_extents}, got {x.shape}")
        pad = resize_center(x / self._apod, self.fine)
        ksp = fftc(pad) * self._scale
        out = np.zeros(self.codomain_extents, dtype=complex)
        for a in range(self._fine_width):
            rows = ksp[self._idx[0][:, a], :]
            for b in range(self._fine_width):
                vals = rows[np.arange(rows.shape[0]), self._idx[1][:, b]]
                out += self._wts[0][:, a] * self._wts[1][:, b] * vals
        return out

    def adjoint(self, y):
        y = np.asarray(y, dtype=complex)
        if y.shape != self.codomain_extents:
            raise ValueError(f"expected data {self.codomain_extents}, got {y.shape}")
        ksp = np.zeros(self.fine, dtype=complex)
        for a in range(self._fine_width):
            for b in range(self._fine_width):
                np.add.at(
                    ksp,
                    (self._idx[0][:, a], self._idx[1][:, b]),
                    self._wts[0][:, a] * self._wts[1][:, b] * y,
                )
        img = resize_center(ifftc(ksp) * self._scale, self.domain_extents)
        return img / self._apod


class NufftSense(LinearOperator):
    """nuFFT composed with coil sensitivities: x -> (n_points, n_coils)."""

    def __init__(
        self,
        maps: SensitivitySet,
        traj: SamplingPattern,
        oversample: float = 2.0,
        kernel_width: int = 6,
    ):
        if maps.oversample_factor != 1.0:
            raise ValueError("non-Cartesian operators use oversample_factor 1 maps")
        self.maps = maps
        self.nufft = Nufft(traj, maps.grid_extents, oversample, kernel_width)
        self.traj = traj
        self.domain_extents = maps.grid_extents
        self.codomain_extents = (traj.points.shape[0], maps.n_coils)

    def apply(self, x):
        x = np.asarray(x, dtype=complex)
        out = np.empty(self.codomain_extents, dtype=complex)
        for j in range(self.maps.n_coils):
            out[:, j] = self.nufft.apply(self.maps.maps[:, :, j] * x)
        return out

    def adjoint(self, y):
        y = np.asarray(y, dtype=complex)
        out = np.zeros(self.domain_extents, dtype=complex)
        for j in range(self.maps.n_coils):
            out += self.maps.maps[:, :, j].conj() * self.nufft.adjoint(y[:, j])
        return out


class ToeplitzNormal(LinearOperator):
    """Exact normal operator of a trajectory forward model: convolution
    with the trajectory's point-spread function via two zero-padded FFTs.

    Only ``normal`` is available; the underlying apply/adjoint stay with
    the originating operator.
    """

    def __init__(self, op: LinearOperator):
        if isinstance(op, NufftSense):
            traj, extents, maps = op.traj, op.domain_extents, op.maps
        elif isinstance(op, Nufft):
            traj, extents, maps = op.traj, op.domain_extents, None
        else:
            raise ValueError("ToeplitzNormal needs a Nufft or NufftSense operator")
        self.maps = maps
        self.domain_extents = extents
        self.codomain_extents = extents
        nx, ny = extents
        pts = traj.points
        # psf on the difference grid, embedded in a (2nx, 2ny) circulant
        d0 = np.arange(-nx + 1, nx)
        d1 = np.arange(-ny + 1, ny)
        e0 = np.exp(2j * np.pi * np.outer(pts[:, 0], d0 / nx))
        e1 = np.exp(2j * np.pi * np.outer(pts[:, 1], d1 / ny))
        h = e0.T @ e1
        kern = np.zeros((2 * nx, 2 * ny), dtype=complex)
        kern[np.ix_(np.mod(d0, 2 * nx), np.mod(d1, 2 * ny))] = h
        self._kern_hat = np.fft.fft2(kern)
        self._norm = 1.0 / (nx * ny)

    def _convolve(self, x):
        nx, ny = self.domain_extents
        pad = np.zeros((2 * nx, 2 * ny), dtype=complex)
        pad[:nx, :ny] = x
        out = np.fft.ifft2(np.fft.fft2(pad) * self._kern_hat)
        return out[:nx, :ny] * self._norm

    def normal(self, x):
        x = np.asarray(x, dtype=complex)
        if x.shape != self.domain_extents:
            raise ValueError(f"expected image {self.domain_extents}, got {x.shape}")
        if self.maps is None:
            return self._convolve(x)
        out = np.zeros(self.domain_extents, dtype=complex)
        for j in range(self.maps.n_coils):
            cj = self.maps.maps[:, :, j]
            out += cj.conj() * self._convolve(cj * x)
        return out

    def apply(self, x):
        raise NotImplementedError("ToeplitzNormal provides the normal map only")

    adjoint = apply


def sense_cartesian(maps: SensitivitySet, pattern: SamplingPattern) -> SenseCartesian:
    return SenseCartesian(maps, pattern)


def nufft(
    traj: SamplingPattern, extents, oversample: float = 2.0, kernel_width: int = 6
) -> Nufft:
    return Nufft(traj, extents, oversample, kernel_width)


def toeplitz_normal(op: LinearOperator) -> ToeplitzNormal:
    return ToeplitzNormal(op)
