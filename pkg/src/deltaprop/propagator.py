"""Product-formula propagators with unitary Cayley sub-steps.

A run over ``[s, t]`` with ``n`` slices freezes the Hamiltonian at one sample
time per slice and applies ``substeps`` Cayley steps of width
``(t - s) / (n * substeps)``. Backward runs (``t < s``) use the same loop with
a negative step and sample points marching downward from ``s``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .hamiltonians import SpatialGrid
from .numkit import (
    DEFAULT_TOLERANCES,
    HermitianBanded,
    NumericalError,
    ShiftedFactorization,
    Tolerances,
    apply,
)

Family = Callable[[float], HermitianBanded]


@dataclass(frozen=True, eq=False)
class WaveFunction:
    """State on the interior nodes of ``grid``; ``||psi||^2 = h * sum |psi_k|^2``."""

    grid: SpatialGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.complex128, copy=True)
        if v.shape != (self.grid.dim,):
            raise ValueError(f"expected {self.grid.dim} interior values, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("wave function has non-finite entries")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def norm(self):
        return float(np.sqrt(self.grid.h) * np.linalg.norm(self.values))

    def density(self):
        return np.abs(self.values) ** 2

    def boundary_mass(self, fraction=0.1):
        """Probability mass within ``fraction * half_width`` of either boundary."""
        x = self.grid.interior
        near = np.abs(x) > (1.0 - fraction) * self.grid.half_width
        return float(self.grid.h * np.sum(self.density()[near]))

    def with_values(self, values):
        return WaveFunction(self.grid, values)

    def distance(self, other):
        if other.grid != self.grid:
            raise ValueError("states live on different grids")
        return float(np.sqrt(self.grid.h) * np.linalg.norm(self.values - other.values))

    def normalized(self):
        return self.with_values(self.values / self.norm())


@dataclass(frozen=True)
class GaussianPacket:
    """``exp(-(x-c)^2 / (4 w^2) + i k x)``, normalized on whichever grid it is placed."""

    center: float = 0.0
    width: float = 1.0
    momentum: float = 0.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-((x - self.center) ** 2) / (4.0 * self.width**2) + 1j * self.momentum * x)

    def on(self, grid: SpatialGrid) -> WaveFunction:
        return WaveFunction(grid, self(grid.interior)).normalized()


def random_smooth_state(grid: SpatialGrid, rng, center_range=None, width_range=(0.5, 2.0),
                        momentum_range=(-2.0, 2.0), max_bumps=3) -> WaveFunction:
    """Sum of a few random Gaussians, tapered to zero near the boundary."""
    L = grid.half_width
    if center_range is None:
        center_range = (-0.4 * L, 0.4 * L)
    x = grid.interior
    vals = np.zeros(grid.dim, dtype=np.complex128)
    for _ in range(rng.integers(1, max_bumps + 1)):
        pkt = GaussianPacket(
            rng.uniform(*center_range), rng.uniform(*width_range), rng.uniform(*momentum_range)
        )
        amp = rng.normal() + 1j * rng.normal()
        vals += amp * pkt(x)
    # smooth taper over the outer 20% of the domain
    r = np.clip((np.abs(x) - 0.8 * L) / (0.2 * L), 0.0, 1.0)
    vals *= np.cos(0.5 * np.pi * r) ** 2
    return WaveFunction(grid, vals).normalized()


# ---------------------------------------------------------------------------
# stepping


class CayleyStepper:
    """``psi -> (I + i dt/2 H)^{-1} (I - i dt/2 H) psi`` with a cached factorization."""

    def __init__(self, H: HermitianBanded, dt, tol: Tolerances = DEFAULT_TOLERANCES):
        self.H = H
        self.dt = float(dt)
        # steps so small that 2/dt overflows act as the identity in floating point
        self._trivial = self.dt == 0.0 or not np.isfinite(2.0 / abs(self.dt))
        if not self._trivial:
            # (I + i dt/2 H) x = r  <=>  (H + z) x = z r  with  z = -2i/dt
            self._z = -2j / self.dt
            self._lu = ShiftedFactorization(H, self._z, tol)

    def __call__(self, v):
        if self._trivial:
            return np.array(v, dtype=np.complex128, copy=True)
        rhs = v - 0.5j * self.dt * apply(self.H, v)
        return self._lu.solve(self._z * rhs)


def cayley_step(H: HermitianBanded, psi: WaveFunction, dt, tol=DEFAULT_TOLERANCES) -> WaveFunction:
    if H.dim != psi.grid.dim:
        raise ValueError(f"dimension mismatch: operator {H.dim}, state {psi.grid.dim}")
    return psi.with_values(CayleyStepper(H, dt, tol)(psi.values))


@dataclass(frozen=True)
class ProductSchedule:
    s: float
    t: float
    n_slices: int
    substeps: int = 4
    sampling: str = "left"

    def __post_init__(self):
        if int(self.n_slices) != self.n_slices or self.n_slices < 1:
            raise ValueError("n_slices must be a positive integer")
        if int(self.substeps) != self.substeps or self.substeps < 1:
            raise ValueError("substeps must be a positive integer")
        if self.sampling not in ("left", "midpoint"):
            raise ValueError(f"sampling must be 'left' or 'midpoint', got {self.sampling!r}")

    @property
    def width(self):
        """Signed slice width; negative for backward runs."""
        return (self.t - self.s) / self.n_slices

    def slice_start(self, k):
        return self.s + k * (self.t - self.s) / self.n_slices

    def sample_time(self, k):
        if self.sampling == "left":
            return self.slice_start(k)
        return self.s + (k + 0.5) * (self.t - self.s) / self.n_slices

    def sample_times(self):
        return [self.sample_time(k) for k in range(self.n_slices)]


@dataclass(frozen=True)
class SliceRecord:
    index: int
    sample_time: float
    end_time: float
    norm: float


@dataclass
class PropagatorRun:
    schedule: ProductSchedule
    direction: str
    initial: WaveFunction
    final: WaveFunction
    records: List[SliceRecord] = field(default_factory=list)
    snapshots: List[tuple] = field(default_factory=list)

    @property
    def norm_drift(self):
        return abs(self.final.norm() - self.initial.norm())


def _run(family: Family, psi0: WaveFunction, schedule: ProductSchedule, direction,
         tol, snapshot_stride) -> PropagatorRun:
    run = PropagatorRun(schedule, direction, psi0, psi0)
    if snapshot_stride:
        run.snapshots.append((schedule.s, psi0))
    if schedule.t == schedule.s:
        return run
    dt = schedule.width / schedule.substeps
    v = np.array(psi0.values)
    sqrt_h = np.sqrt(psi0.grid.h)
    for k in range(schedule.n_slices):
        tk = schedule.sample_time(k)
        step = CayleyStepper(family(tk), dt, tol)
        for _ in range(schedule.substeps):
            v = step(v)
        if not np.all(np.isfinite(v)):
            raise NumericalError(f"non-finite state after slice {k} (sample time {tk:g})")
        end = schedule.slice_start(k + 1)
        run.records.append(SliceRecord(k, tk, end, float(sqrt_h * np.linalg.norm(v))))
        if snapshot_stride and ((k + 1) % snapshot_stride == 0 or k + 1 == schedule.n_slices):
            run.snapshots.append((end, psi0.with_values(v)))
    run.final = psi0.with_values(v)
    return run


def evolve_forward(family: Family, psi0: WaveFunction, schedule: ProductSchedule,
                   tol=DEFAULT_TOLERANCES, snapshot_stride: Optional[int] = None) -> PropagatorRun:
    """Approximate ``U(t, s) psi0`` for ``t >= s``.

    Slices are applied in increasing time order, the factor frozen at ``s``
    acting first.
    """
    if schedule.t < schedule.s:
        raise ValueError("forward evolution needs t >= s; use evolve_backward")
    return _run(family, psi0, schedule, "forward", tol, snapshot_stride)


def evolve_backward(family: Family, psi0: WaveFunction, schedule: ProductSchedule,
                    tol=DEFAULT_TOLERANCES, snapshot_stride: Optional[int] = None) -> PropagatorRun:
    """Approximate ``V(t, s) psi0`` for ``t <= s`` (evolution to an earlier time)."""
    if schedule.t > schedule.s:
        raise ValueError("backward evolution needs t <= s; use evolve_forward")
    return _run(family, psi0, schedule, "backward", tol, snapshot_stride)


def evolve_bidirectional(family: Family, psi0: WaveFunction, s, t, n_slices, substeps=4,
                         sampling="left", tol=DEFAULT_TOLERANCES,
                         snapshot_stride: Optional[int] = None) -> PropagatorRun:
    schedule = ProductSchedule(s, t, n_slices, substeps, sampling)
    if t >= s:
        return evolve_forward(family, psi0, schedule, tol, snapshot_stride)
    return evolve_backward(family, psi0, schedule, tol, snapshot_stride)
