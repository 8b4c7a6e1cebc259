"""Joint estimation of image and coil sensitivities by regularized
Gauss-Newton iteration (nonlinear inversion).

The unknowns are the image and per-coil k-space coefficients rescaled by
a Sobolev weight, which turns the smoothness penalty on the coils into a
plain l2 norm.  Each Newton step solves the regularized linearized system
with an inner conjugate-gradient solve while the regularization weight
shrinks geometrically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arrays import fftc, ifftc
from .errors import DivergenceError
from .sampling import SamplingPattern
from .sim import SensitivitySet
from .solvers import SolveReport, conjugate_gradient


@dataclass
class NlinvState:
    """Current Gauss-Newton iterate: image plus weighted coil coefficients."""

    image: np.ndarray
    coil_coeffs: np.ndarray  # (X, Y, n_coils), Sobolev-rescaled k-space
    alpha_n: float
    beta_n: float
    iteration: int


def sobolev_weight(extents, s: float | None = None, l: float = 16.0) -> np.ndarray:
    """Diagonal k-space weight (1 + s |k|^2)^(-l/2); s defaults to 220/N^2."""
    nx, ny = int(extents[0]), int(extents[1])
    if s is None:
        s = 220.0 / max(nx, ny) ** 2
    k0 = np.arange(nx) - nx // 2
    k1 = np.arange(ny) - ny // 2
    k2 = k0[:, None] ** 2 + k1[None, :] ** 2
    return (1.0 + s * k2) ** (-l / 2.0)


class NlinvModel:
    """Forward map, Frechet derivative, and its adjoint for the bilinear
    coil-image model under a Cartesian sampling mask."""

    def __init__(self, pattern: SamplingPattern, weight: np.ndarray):
        if pattern.kind != "cartesian-mask":
            raise ValueError("nonlinear inversion expects a Cartesian mask pattern")
        self.mask = pattern.mask.astype(float)
        self.weight = weight
        self.extents = pattern.extents
        self._scale = np.sqrt(self.mask.shape[0] * self.mask.shape[1])

    def render_coils(self, coeffs: np.ndarray) -> np.ndarray:
        """Weighted coefficients to image-domain sensitivities."""
        return self._scale * ifftc(self.weight[:, :, None] * coeffs, axes=(0, 1))

    def render_coils_adjoint(self, imgs: np.ndarray) -> np.ndarray:
        return self._scale * self.weight[:, :, None] * fftc(imgs, axes=(0, 1))

    def forward(self, image, coils) -> np.ndarray:
        ksp = fftc(image[:, :, None] * coils, axes=(0, 1))
        return ksp * self.mask[:, :, None]

    def derivative(self, image, coils, d_image, d_coeffs) -> np.ndarray:
        d_coils = self.render_coils(d_coeffs)
        ksp = fftc(
            d_image[:, :, None] * coils + image[:, :, None] * d_coils, axes=(0, 1)
        )
        return ksp * self.mask[:, :, None]

    def derivative_adjoint(self, image, coils, d_data) -> tuple[np.ndarray, np.ndarray]:
        a = ifftc(d_data * self.mask[:, :, None], axes=(0, 1))
        d_image = (coils.conj() * a).sum(axis=-1)
        d_coeffs = self.render_coils_adjoint(image.conj()[:, :, None] * a)
        return d_image, d_coeffs


def _pack(image, coeffs):
    return np.concatenate([image[:, :, None], coeffs], axis=2)


def _unpack(x):
    return x[:, :, 0], x[:, :, 1:]


def nlinv(
    y: np.ndarray,
    pattern: SamplingPattern,
    n_newton: int = 10,
    alpha0: float = 1.0,
    q_reduction: float = 0.5,
    sobolev_s: float | None = None,
    sobolev_l: float = 16.0,
    inner_tol: float = 1e-6,
    inner_iter: int = 250,
) -> tuple[np.ndarray, SensitivitySet, SolveReport]:
    """Iteratively regularized Gauss-Newton reconstruction.

    Starts from a constant image and zero coils; each step applies the
    explicit update (DF^H DF + a_n I)^-1 (DF^H (y - F x) + a_n (x_0 - x))
    with a_n = alpha0 * q_reduction^n.  Raises DivergenceError when the
    data residual grows three Newton steps in a row.
    """
    if n_newton < 1:
        raise ValueError("n_newton must be >= 1")
    if alpha0 <= 0:
        raise ValueError("alpha0 must be positive")
    if not 0 < q_reduction < 1:
        raise ValueError("q_reduction must lie in (0, 1)")
    y = np.asarray(y, dtype=complex)
    nx, ny = pattern.extents
    n_coils = y.shape[-1]
    if y.shape != (nx, ny, n_coils):
        raise ValueError(f"data shape {y.shape} does not match pattern grid")
    weight = sobolev_weight((nx, ny), sobolev_s, sobolev_l)
    model = NlinvModel(pattern, weight)

    # normalize the data so alpha0 has a scale-free meaning; undone below
    data_norm = np.linalg.norm(y)
    scale = np.sqrt(nx * ny) / data_norm if data_norm > 0 else 1.0
    yn = y * scale

    image = np.ones((nx, ny), dtype=complex)
    coeffs = np.zeros((nx, ny, n_coils), dtype=complex)
    x_ref = _pack(image.copy(), coeffs.copy())

    residuals = []
    grew = 0
    alpha = alpha0
    for it in range(n_newton):
        coils = model.render_coils(coeffs)
        resid = yn - model.forward(image, coils)
        res_norm = float(np.linalg.norm(resid))
        if residuals and res_norm > residuals[-1]:
            grew += 1
            if grew >= 3:
                raise DivergenceError(
                    f"residual grew {grew} consecutive Newton steps",
                    state=NlinvState(
                        image=image / scale,
                        coil_coeffs=coeffs,
                        alpha_n=alpha,
                        beta_n=alpha,
                        iteration=it,
                    ),
                )
        else:
            grew = 0
        residuals.append(res_norm)

        gi, gc = model.derivative_adjoint(image, coils, resid)
        x = _pack(image, coeffs)
        rhs = _pack(gi, gc) + alpha * (x_ref - x)

        def apply_A(dx, image=image, coils=coils, alpha=alpha):
            di, dc = _unpack(dx)
            dd = model.derivative(image, coils, di, dc)
            ai, ac = model.derivative_adjoint(image, coils, dd)
            return _pack(ai, ac) + alpha * dx

        dx, _, _, _ = conjugate_gradient(
            apply_A, rhs, tol=inner_tol, max_iter=inner_iter
        )
        di, dc = _unpack(dx)
        image = image + di
        coeffs = coeffs + dc
        alpha = alpha * q_reduction

    coils = model.render_coils(coeffs)
    final_res = float(np.linalg.norm(yn - model.forward(image, coils)))
    residuals.append(final_res)
    report = SolveReport(
        iterations=n_newton,
        objective_trace=residuals,
        residual_norm=final_res / np.linalg.norm(yn) if data_norm > 0 else final_res,
        converged=True,
    )
    sens = SensitivitySet(maps=coils, oversample_factor=1.0)
    return image / scale, sens, report
