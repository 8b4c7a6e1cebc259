"""Under-sampling pattern generators: regular Cartesian lattices with an
auto-calibration block, variable-density Poisson-disc masks, and radial
trajectories.

All generators are pure functions of their arguments (plus seed); k-space
positions are in grid units, DC at index N//2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SamplingPattern:
    """Either a binary Cartesian mask over the grid or an explicit list of
    continuous k-space coordinates."""

    kind: str  # "cartesian-mask" | "trajectory"
    mask: np.ndarray | None = None
    points: np.ndarray | None = None  # (n, 2), grid units
    acs_extent: int = 0

    def __post_init__(self):
        if self.kind == "cartesian-mask":
            if self.mask is None:
                raise ValueError("cartesian pattern needs a mask")
            m = np.asarray(self.mask)
            if not np.all((m == 0) | (m == 1)):
                raise ValueError("mask values must be 0 or 1")
            if m.sum() < 1:
                raise ValueError("mask must contain at least one sample")
            object.__setattr__(self, "mask", m.astype(np.int8))
        elif self.kind == "trajectory":
            if self.points is None:
                raise ValueError("trajectory pattern needs points")
            p = np.asarray(self.points, dtype=float)
            if p.ndim != 2 or p.shape[1] != 2:
                raise ValueError("points must be (n, 2)")
            if not np.all(np.isfinite(p)):
                raise ValueError("trajectory points must be finite")
            object.__setattr__(self, "points", p)
        else:
            raise ValueError(f"unknown pattern kind {self.kind!r}")

    @property
    def extents(self):
        if self.kind != "cartesian-mask":
            raise ValueError("trajectory patterns have no grid extents")
        return self.mask.shape

    def sample_points(self) -> np.ndarray:
        """All sample positions as an (n, 2) float array in grid units."""
        if self.kind == "trajectory":
            return self.points
        idx = np.argwhere(self.mask == 1).astype(float)
        idx[:, 0] -= self.mask.shape[0] // 2
        idx[:, 1] -= self.mask.shape[1] // 2
        return idx

    @property
    def n_samples(self) -> int:
        if self.kind == "cartesian-mask":
            return int(self.mask.sum())
        return self.points.shape[0]


def _acs_block(mask: np.ndarray, acs: int) -> None:
    if acs == 0:
        return
    nx, ny = mask.shape
    x0 = nx // 2 - acs // 2
    y0 = ny // 2 - acs // 2
    mask[x0 : x0 + acs, y0 : y0 + acs] = 1


def regular_mask(extents, r1: int, r2: int, acs: int = 0) -> SamplingPattern:
    """Keep every r1-th row and r2-th column, both anchored on the center
    line, plus a fully sampled acs x acs center block."""
    nx, ny = int(extents[0]), int(extents[1])
    if r1 < 1 or r2 < 1:
        raise ValueError("acceleration factors must be >= 1")
    if acs < 0 or acs > min(nx, ny):
        raise ValueError(f"acs block {acs} does not fit the {nx}x{ny} grid")
    rows = (np.arange(nx) - nx // 2) % r1 == 0
    cols = (np.arange(ny) - ny // 2) % r2 == 0
    mask = np.outer(rows, cols).astype(np.int8)
    _acs_block(mask, acs)
    return SamplingPattern(kind="cartesian-mask", mask=mask, acs_extent=acs)


def poisson_disc(
    extents,
    r_min: float,
    density_exponent: float = 0.0,
    seed: int = 0,
    acs: int = 0,
    candidates_per_point: int = 30,
) -> SamplingPattern:
    """Variable-density Poisson-disc mask (Bridson-style dart throwing on
    grid-quantized candidates).

    The local exclusion radius grows with distance from the k-space center
    as r(k) = r_min * (1 + |k|/k_max) ** density_exponent; a pair of kept
    samples is never closer than the smaller of their two radii.
    """
    nx, ny = int(extents[0]), int(extents[1])
    if r_min <= 0:
        raise ValueError("r_min must be positive")
    rng = np.random.Generator(np.random.Philox(seed))
    cx, cy = nx // 2, ny // 2
    k_max = float(np.hypot(nx / 2.0, ny / 2.0))

    def radius(p):
        return r_min * (1.0 + np.hypot(p[0] - cx, p[1] - cy) / k_max) ** density_exponent

    accepted = [np.array([cx, cy], dtype=float)]
    radii = [radius(accepted[0])]
    active = [0]
    occupied = {(cx, cy)}
    while active:
        pick = int(rng.integers(len(active)))
        base = accepted[active[pick]]
        r_base = radii[active[pick]]
        placed = False
        for _ in range(candidates_per_point):
            rho = r_base * (1.0 + rng.random())
            theta = 2.0 * np.pi * rng.random()
            cand = np.rint(base + rho * np.array([np.cos(theta), np.sin(theta)]))
            if not (0 <= cand[0] < nx and 0 <= cand[1] < ny):
                continue
            key = (int(cand[0]), int(cand[1]))
            if key in occupied:
                continue
            r_cand = radius(cand)
            pts = np.asarray(accepted)
            d = np.hypot(pts[:, 0] - cand[0], pts[:, 1] - cand[1])
            if np.all(d >= np.minimum(np.asarray(radii), r_cand)):
                accepted.append(cand)
                radii.append(r_cand)
                active.append(len(accepted) - 1)
                occupied.add(key)
                placed = True
                break
        if not placed:
            active.pop(pick)
    mask = np.zeros((nx, ny), dtype=np.int8)
    pts = np.asarray(accepted, dtype=int)
    mask[pts[:, 0], pts[:, 1]] = 1
    _acs_block(mask, acs)
    return SamplingPattern(kind="cartesian-mask", mask=mask, acs_extent=acs)


def radial_traj(n_spokes: int, n_samples_per_spoke: int, extents) -> SamplingPattern:
    """Equally-angled diametric spokes through DC, angles i*pi/n_spokes.

    With n_samples_per_spoke equal to the grid size, samples are spaced
    one grid unit from -N/2 to N/2 - 1; odd sample counts always hit the
    center.
    """
    if n_spokes < 1:
        raise ValueError("need at least one spoke")
    if n_samples_per_spoke < 2:
        raise ValueError("need at least two samples per spoke")
    n = float(max(int(extents[0]), int(extents[1])))
    m = n_samples_per_spoke
    radii = (np.arange(m) - m // 2) * (n / m)
    angles = np.arange(n_spokes) * np.pi / n_spokes
    points = np.empty((n_spokes * m, 2), dtype=float)
    for i, th in enumerate(angles):
        points[i * m : (i + 1) * m, 0] = radii * np.cos(th)
        points[i * m : (i + 1) * m, 1] = radii * np.sin(th)
    return SamplingPattern(kind="trajectory", points=points)


def mask_to_array(pattern: SamplingPattern) -> np.ndarray:
    """Mask as a complex array for the on-disk format (0/1 values)."""
    return pattern.mask.astype(complex)


def traj_to_array(pattern: SamplingPattern) -> np.ndarray:
    """Trajectory as the (2, n_points) complex array used on disk."""
    return pattern.points.T.astype(complex)


def pattern_from_array(arr: np.ndarray, kind: str) -> SamplingPattern:
    """Rebuild a pattern from its on-disk array representation."""
    if kind == "cartesian-mask":
        return SamplingPattern(kind=kind, mask=np.rint(arr.real).astype(np.int8))
    if kind == "trajectory":
        if arr.shape[0] != 2:
            raise ValueError("trajectory arrays must have shape (2, n_points)")
        return SamplingPattern(kind=kind, points=arr.real.T.copy())
    raise ValueError(f"unknown pattern kind {kind!r}")
