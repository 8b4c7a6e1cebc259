"""Reconstruction solvers: CG on the regularized normal equations, ISTA,
FISTA, and a multi-penalty ADMM with a proximal-operator registry.

All solvers are matrix-free; they touch the forward model only through
apply/adjoint/normal.  Objectives use the convention
``0.5 * ||F x - y||^2 + sum_n R_n(B_n x)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError
from .operators import LinearOperator
from .prox import div, grad, group_soft, prox_l1


@dataclass
class QuadraticPenalty:
    """alpha * || sqrt(W) (x - reference) ||^2 with diagonal positive W."""

    alpha: float = 0.0
    weight: np.ndarray | None = None  # diagonal entries, image shaped
    reference: np.ndarray | None = None

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.weight is not None and np.any(np.asarray(self.weight).real <= 0):
            raise ValueError("weight entries must be positive")


@dataclass
class ProxPenalty:
    """One regularization term R(B x) with an efficient prox.

    kind 'l1-transform': lam * ||T x||_1 for an orthonormal transform T,
    kind 'l2':           lam * ||x||_2^2,
    kind 'tv-iso':       lam * isotropic TV over finite-difference dims.
    """

    kind: str
    lam: float
    transform: object | None = None
    dims: tuple = (0, 1)

    def __post_init__(self):
        if self.kind not in ("l1-transform", "l2", "tv-iso"):
            raise ValueError(f"unknown penalty kind {self.kind!r}")
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        if self.kind == "l1-transform" and self.transform is None:
            raise ValueError("l1-transform penalty needs a transform handle")


@dataclass
class SolveReport:
    iterations: int
    objective_trace: list = field(default_factory=list)
    residual_norm: float = np.nan
    converged: bool = False
    residual_trace: list | None = None
    primal_residual: float | None = None
    dual_residual: float | None = None


def _vdot(a, b) -> complex:
    return complex(np.vdot(a, b))


def conjugate_gradient(apply_A, b, x0=None, tol=1e-6, max_iter=200, ref_norm=None):
    """CG for a Hermitian positive (semi-)definite system A x = b.

    Returns (x, energy_trace, residual_trace, converged).  The energy
    0.5<x,Ax> - Re<b,x> decreases monotonically by construction.
    """
    x = np.zeros_like(b) if x0 is None else x0.astype(complex)
    r = b - apply_A(x) if x0 is not None else b.copy()
    p = r.copy()
    rr = _vdot(r, r).real
    ref = np.sqrt(rr) if ref_norm is None else ref_norm
    energy = 0.0 if x0 is None else (0.5 * _vdot(x, apply_A(x)).real - _vdot(b, x).real)
    energies = [energy]
    residuals = [np.sqrt(rr)]
    converged = np.sqrt(rr) <= tol * ref
    for it in range(max_iter):
        if converged:
            break
        Ap = apply_A(p)
        pAp = _vdot(p, Ap).real
        if not np.isfinite(pAp):
            raise NumericalError(f"CG produced non-finite values at iteration {it}")
        if pAp <= 0:
            break  # direction of zero curvature: b is reached up to null space
        alpha = rr / pAp
        x = x + alpha * p
        r = r - alpha * Ap
        energy -= 0.5 * alpha * rr
        rr_new = _vdot(r, r).real
        if not np.isfinite(rr_new):
            raise NumericalError(f"CG produced non-finite values at iteration {it}")
        energies.append(energy)
        residuals.append(np.sqrt(rr_new))
        p = r + (rr_new / rr) * p
        rr = rr_new
        converged = np.sqrt(rr) <= tol * ref
    return x, energies, residuals, converged


def cg_normal(
    op: LinearOperator,
    y: np.ndarray,
    penalty: QuadraticPenalty | None = None,
    tol: float = 1e-9,
    max_iter: int = 200,
) -> tuple[np.ndarray, SolveReport]:
    """Solve (F^H F + alpha W)(x - x0) = F^H (y - F x0), the shifted normal
    equations of the quadratically regularized least-squares problem."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    penalty = penalty or QuadraticPenalty()
    alpha = penalty.alpha
    w = penalty.weight

    def apply_A(z):
        out = op.normal(z)
        if alpha > 0:
            out = out + alpha * (w * z if w is not None else z)
        return out

    x0 = penalty.reference
    rhs = op.adjoint(y if x0 is None else y - op.apply(x0))
    ref = np.linalg.norm(op.adjoint(y))
    z, energies, residuals, converged = conjugate_gradient(
        apply_A, rhs, tol=tol, max_iter=max_iter, ref_norm=ref
    )
    x = z if x0 is None else x0 + z
    report = SolveReport(
        iterations=len(residuals) - 1,
        objective_trace=energies,
        residual_norm=residuals[-1] / ref if ref > 0 else residuals[-1],
        converged=bool(converged),
        residual_trace=residuals,
    )
    return x, report


def power_iteration(op: LinearOperator, n_iter: int = 30, seed: int = 0) -> float:
    """Largest eigenvalue estimate of F^H F by plain power iteration."""
    rng = np.random.Generator(np.random.Philox(seed))
    x = rng.standard_normal(op.domain_extents) + 1j * rng.standard_normal(
        op.domain_extents
    )
    x /= np.linalg.norm(x)
    lam = 1.0
    for _ in range(n_iter):
        x = op.normal(x)
        lam = np.linalg.norm(x)
        if lam == 0:
            return 0.0
        x /= lam
    return float(lam)


def _l1_objective(op, y, penalty, x):
    resid = op.apply(x) - y
    res_norm = float(np.linalg.norm(resid))
    return 0.5 * res_norm**2 + penalty.lam * np.abs(
        penalty.transform.forward(x)
    ).sum(), res_norm


def ista(
    op: LinearOperator,
    y: np.ndarray,
    penalty: ProxPenalty,
    step: float | None = None,
    max_iter: int = 100,
    tol: float = 1e-8,
    x_init: np.ndarray | None = None,
) -> tuple[np.ndarray, SolveReport]:
    """Iterative soft-thresholding: gradient step on the data term, then
    soft-thresholding in the transform basis."""
    if penalty.kind != "l1-transform":
        raise ValueError("ista handles l1-transform penalties")
    L = power_iteration(op)
    if step is None:
        step = 1.0 / L
    if not 0 < step < 2.0 / L:
        raise ValueError(f"step {step} outside (0, {2.0 / L:.3g})")
    x = (
        np.zeros(op.domain_extents, dtype=complex)
        if x_init is None
        else x_init.astype(complex)
    )
    T = penalty.transform
    obj, res = _l1_objective(op, y, penalty, x)
    trace, res_trace = [obj], [res]
    converged = False
    for it in range(max_iter):
        z = x + step * op.adjoint(y - op.apply(x))
        x_new = T.inverse(prox_l1(T.forward(z), penalty.lam * step))
        delta = np.linalg.norm(x_new - x) / max(np.linalg.norm(x_new), 1e-30)
        x = x_new
        obj, res = _l1_objective(op, y, penalty, x)
        trace.append(obj)
        res_trace.append(res)
        if not np.isfinite(obj):
            raise NumericalError(f"ISTA objective non-finite at iteration {it}")
        if delta < tol:
            converged = True
            break
    return x, SolveReport(
        iterations=len(trace) - 1,
        objective_trace=trace,
        residual_norm=res_trace[-1],
        converged=converged,
        residual_trace=res_trace,
    )


def fista_momentum(t: float) -> float:
    """Next value of the Nesterov momentum sequence."""
    return 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))


def fista(
    op: LinearOperator,
    y: np.ndarray,
    penalty: ProxPenalty,
    step: float | None = None,
    max_iter: int = 100,
    tol: float = 1e-8,
    x_init: np.ndarray | None = None,
) -> tuple[np.ndarray, SolveReport]:
    """ISTA with Nesterov's ravine (momentum) step; same fixed points."""
    if penalty.kind != "l1-transform":
        raise ValueError("fista handles l1-transform penalties")
    L = power_iteration(op)
    if step is None:
        step = 1.0 / L
    if not 0 < step < 2.0 / L:
        raise ValueError(f"step {step} outside (0, {2.0 / L:.3g})")
    T = penalty.transform
    x = (
        np.zeros(op.domain_extents, dtype=complex)
        if x_init is None
        else x_init.astype(complex)
    )
    v = x.copy()
    t = 1.0
    obj, res = _l1_objective(op, y, penalty, x)
    trace, res_trace = [obj], [res]
    converged = False
    for it in range(max_iter):
        z = v + step * op.adjoint(y - op.apply(v))
        x_new = T.inverse(prox_l1(T.forward(z), penalty.lam * step))
        t_new = fista_momentum(t)
        v = x_new + ((t - 1.0) / t_new) * (x_new - x)
        delta = np.linalg.norm(x_new - x) / max(np.linalg.norm(x_new), 1e-30)
        x, t = x_new, t_new
        obj, res = _l1_objective(op, y, penalty, x)
        trace.append(obj)
        res_trace.append(res)
        if not np.isfinite(obj):
            raise NumericalError(f"FISTA objective non-finite at iteration {it}")
        if delta < tol:
            converged = True
            break
    return x, SolveReport(
        iterations=len(trace) - 1,
        objective_trace=trace,
        residual_norm=res_trace[-1],
        converged=converged,
        residual_trace=res_trace,
    )


class _Identity:
    def forward(self, x):
        return x

    adjoint = forward


class _Grad:
    def __init__(self, dims):
        self.dims = tuple(dims)

    def forward(self, x):
        return grad(x, self.dims)

    def adjoint(self, p):
        return -div(p, self.dims)


class _Orth:
    def __init__(self, transform):
        self.t = transform

    def forward(self, x):
        return self.t.forward(x)

    def adjoint(self, z):
        return self.t.inverse(z)


def _penalty_machinery(p: ProxPenalty):
    if p.kind == "l1-transform":
        B = _Orth(p.transform)
        return B, (lambda v, rho: prox_l1(v, p.lam / rho)), (
            lambda v: p.lam * np.abs(v).sum()
        )
    if p.kind == "l2":
        B = _Identity()
        return B, (lambda v, rho: v * (rho / (rho + 2.0 * p.lam))), (
            lambda v: p.lam * _vdot(v, v).real
        )
    B = _Grad(p.dims)
    return B, (lambda v, rho: group_soft(v, p.lam / rho)), (
        lambda v: p.lam * np.sqrt((np.abs(v) ** 2).sum(axis=0)).sum()
    )


def admm(
    op: LinearOperator,
    y: np.ndarray,
    penalties,
    rho: float = 1.0,
    max_iter: int = 50,
    tol: float = 1e-6,
    inner_tol: float = 1e-6,
    inner_iter: int = 100,
    x_init: np.ndarray | None = None,
) -> tuple[np.ndarray, SolveReport]:
    """Scaled-form ADMM for 0.5||Fx - y||^2 + sum_n R_n(B_n x).

    The x-update (the data-fidelity prox against the augmented quadratic)
    is solved by an inner CG on F^H F + rho * sum_n B_n^H B_n.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    penalties = list(penalties)
    if not penalties:
        raise ValueError("need at least one penalty")
    # a zero-weight penalty contributes nothing to the objective; dropping
    # it keeps the splitting (and its convergence path) unaffected
    active = [p for p in penalties if p.lam > 0]
    if not active:
        x, base = cg_normal(op, y, tol=max(tol, 1e-10), max_iter=max_iter * inner_iter)
        base.primal_residual = 0.0
        base.dual_residual = 0.0
        return x, base
    penalties = active
    machinery = [_penalty_machinery(p) for p in penalties]
    Bs = [m[0] for m in machinery]
    proxes = [m[1] for m in machinery]
    costs = [m[2] for m in machinery]

    x = (
        np.zeros(op.domain_extents, dtype=complex)
        if x_init is None
        else x_init.astype(complex)
    )
    zs = [B.forward(x) for B in Bs]
    us = [np.zeros_like(z) for z in zs]
    Fy = op.adjoint(y)

    def apply_A(v):
        out = op.normal(v)
        for B in Bs:
            out = out + rho * B.adjoint(B.forward(v))
        return out

    def objective(v):
        resid = op.apply(v) - y
        res_norm = float(np.linalg.norm(resid))
        val = 0.5 * res_norm**2
        for B, cost in zip(Bs, costs):
            val += cost(B.forward(v))
        return val, res_norm

    obj, res = objective(x)
    trace, res_trace = [obj], [res]
    primal = dual = np.inf
    converged = False
    for it in range(max_iter):
        rhs = Fy.copy()
        for B, z, u in zip(Bs, zs, us):
            rhs = rhs + rho * B.adjoint(z - u)
        try:
            x, _, _, _ = conjugate_gradient(
                apply_A, rhs, x0=x, tol=inner_tol, max_iter=inner_iter
            )
        except NumericalError as exc:
            raise NumericalError(f"ADMM inner CG failed at iteration {it}: {exc}") from exc
        primal_sq = dual_sq = 0.0
        for i, (B, prox) in enumerate(zip(Bs, proxes)):
            Bx = B.forward(x)
            z_new = prox(Bx + us[i], rho)
            dual_sq += np.linalg.norm(B.adjoint(z_new - zs[i])) ** 2
            zs[i] = z_new
            us[i] = us[i] + Bx - z_new
            primal_sq += np.linalg.norm(Bx - z_new) ** 2
        primal = np.sqrt(primal_sq)
        dual = rho * np.sqrt(dual_sq)
        obj, res = objective(x)
        trace.append(obj)
        res_trace.append(res)
        if not np.isfinite(obj):
            raise NumericalError(f"ADMM objective non-finite at iteration {it}")
        scale = max(np.linalg.norm(x), 1e-30)
        if primal < tol * scale and dual < tol * scale:
            converged = True
            break
    return x, SolveReport(
        iterations=len(trace) - 1,
        objective_trace=trace,
        residual_norm=res_trace[-1],
        converged=converged,
        residual_trace=res_trace,
        primal_residual=float(primal),
        dual_residual=float(dual),
    )
