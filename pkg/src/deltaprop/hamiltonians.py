"""Grid discretizations of the time-dependent Hamiltonians.

Two problem families are covered:

* static points: ``-(1/2) d/dx (1/m) d/dx + V + sum_j kappa_j(t) delta(x - x_j)``
* two moving points: ``-(1/2) d^2/dx^2 + sum_j kappa_j(t) delta(x - x_j(t))``,
  either assembled directly in the lab frame or in the co-moving frame where
  the points sit at -1 and +1 (``assemble_L``).

Point interactions are discretized as ``kappa / h`` on the nearest grid node.
All operators act on interior nodes; the two boundary nodes carry a Dirichlet
condition.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import simpson

from .numkit import HermitianBanded
from .profiles import ScalarProfile, constant


class CoincidentNodeWarning(UserWarning):
    """Two point interactions landed on the same grid node; couplings were summed."""


class SafeRegionError(ValueError):
    pass


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform grid on ``[-half_width, half_width]`` with ``n`` nodes (boundaries included)."""

    half_width: float
    n: int

    def __post_init__(self):
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")
        if int(self.n) != self.n or self.n < 8:
            raise ValueError("grid needs at least 8 nodes")

    @property
    def h(self):
        return 2.0 * self.half_width / (self.n - 1)

    @property
    def nodes(self):
        return -self.half_width + self.h * np.arange(self.n)

    @property
    def interior(self):
        return self.nodes[1:-1]

    @property
    def dim(self):
        return self.n - 2

    def half_nodes(self):
        x = self.nodes
        return 0.5 * (x[:-1] + x[1:])

    def nearest_interior(self, x):
        """Interior-vector index of the node nearest to ``x``."""
        k = int(np.floor((x + self.half_width) / self.h + 0.5))
        return k - 1

    def check_safe(self, x, what="point"):
        margin = 2.0 * self.h
        if not (-self.half_width + margin <= x <= self.half_width - margin):
            raise SafeRegionError(
                f"{what} at x={x:.6g} is within 2h={margin:.3g} of the boundary "
                f"of [-{self.half_width:g}, {self.half_width:g}]"
            )

    def refined(self):
        """Grid with half the spacing whose even nodes coincide with this one."""
        return SpatialGrid(self.half_width, 2 * self.n - 1)


# ---------------------------------------------------------------------------
# problem specifications


@dataclass(frozen=True, eq=False)
class StaticDeltaFamilySpec:
    """Fixed points ``x_j`` with time-dependent non-negative couplings."""

    points: Sequence[float]
    couplings: Sequence[ScalarProfile]
    mass: ScalarProfile = constant(0.5)
    potential: ScalarProfile = constant(0.0)
    lipschitz: Optional[float] = None
    window: tuple = (0.0, 1.0)

    def __post_init__(self):
        pts = tuple(float(p) for p in self.points)
        cps = tuple(self.couplings)
        if len(pts) != len(cps) or not pts:
            raise ValueError("need one coupling profile per point (at least one point)")
        if len(set(pts)) != len(pts):
            raise ValueError("interaction points must be distinct")
        a, b = self.window
        if not b > a:
            raise ValueError("window end must exceed window start")
        if self.lipschitz is not None and self.lipschitz < 0:
            raise ValueError("Lipschitz constant must be non-negative")
        for j, kap in enumerate(cps):
            if kap.inf(a, b) < 0:
                raise ValueError(f"coupling {j} is negative on the window")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "couplings", cps)
        object.__setattr__(self, "window", (float(a), float(b)))

    def kappas(self, t):
        return np.array([k(t) for k in self.couplings])

    @property
    def is_autonomous(self):
        return all(k.kind == "constant" for k in self.couplings)


@dataclass(frozen=True, eq=False)
class MovingDeltaSpec:
    """Two moving points ``x1(t) < x2(t)`` with couplings ``kappa1, kappa2``."""

    x1: ScalarProfile
    x2: ScalarProfile
    kappa1: ScalarProfile
    kappa2: ScalarProfile
    window: tuple = (0.0, 1.0)
    x_floor: float = 1e-6

    def __post_init__(self):
        a, b = self.window
        if not b > a:
            raise ValueError("window end must exceed window start")
        ts = np.linspace(a, b, 1025)
        if np.any(self.x2(ts) - self.x1(ts) <= 0):
            raise ValueError("trajectories must satisfy x1(t) < x2(t) on the window")
        for name in ("kappa1", "kappa2"):
            if getattr(self, name).inf(a, b) < 0:
                raise ValueError(f"{name} is negative on the window")
        object.__setattr__(self, "window", (float(a), float(b)))

    def center(self, t):
        return 0.5 * (self.x1(t) + self.x2(t))

    def center_rate(self, t):
        return 0.5 * (self.x1.derivative(t) + self.x2.derivative(t))

    def relative(self, t):
        return 0.5 * (self.x2(t) - self.x1(t))

    def relative_rate(self, t):
        return 0.5 * (self.x2.derivative(t) - self.x1.derivative(t))

    def checked_relative(self, t):
        x = self.relative(t)
        if x <= self.x_floor:
            raise ValueError(
                f"half-separation x(t)={x:.3e} at t={t:g} is below the floor "
                f"{self.x_floor:g}; the points must stay ordered"
            )
        return x


# ---------------------------------------------------------------------------
# assembly


def _kinetic(grid, mass_at_nodes):
    """Conservative-flux stencil for ``-(1/2) d/dx (1/m) d/dx``.

    ``m`` at half-nodes is the harmonic mean of the adjacent node values.
    """
    m = np.asarray(mass_at_nodes, dtype=float)
    if np.any(m <= 0):
        raise ValueError("mass must be positive on the grid")
    inv_m_half = 0.5 * (1.0 / m[:-1] + 1.0 / m[1:])
    a = 0.5 * inv_m_half / grid.h**2
    diag = a[:-1] + a[1:]
    off = -a[1:-1]
    return diag, off


def _free_kinetic(grid, mass=1.0):
    return _kinetic(grid, np.full(grid.n, mass))


def _delta_diag(grid, points, strengths, label="point"):
    add = np.zeros(grid.dim)
    seen = {}
    for j, (x, kap) in enumerate(zip(points, strengths)):
        grid.check_safe(x, f"{label} {j}")
        k = grid.nearest_interior(x)
        if k in seen:
            warnings.warn(
                f"{label}s {seen[k]} and {j} share grid node {k}; couplings summed",
                CoincidentNodeWarning,
                stacklevel=3,
            )
        seen.setdefault(k, j)
        add[k] += kap / grid.h
    return add


def assemble_static(spec: StaticDeltaFamilySpec, grid: SpatialGrid, t) -> HermitianBanded:
    diag, off = _kinetic(grid, spec.mass(grid.nodes))
    pot = spec.potential(grid.interior)
    if np.any(pot < 0):
        raise ValueError("potential must be non-negative on the grid")
    diag = diag + pot + _delta_diag(grid, spec.points, spec.kappas(t))
    return HermitianBanded(diag, off)


def assemble_moving_direct(spec: MovingDeltaSpec, grid: SpatialGrid, t) -> HermitianBanded:
    """Lab-frame operator ``-(1/2) d^2/dx^2 + sum_j kappa_j(t) delta(x - x_j(t))``."""
    diag, off = _free_kinetic(grid, 1.0)
    pts = (spec.x1(t), spec.x2(t))
    try:
        add = _delta_diag(grid, pts, (spec.kappa1(t), spec.kappa2(t)), "moving point")
    except SafeRegionError as exc:
        raise SafeRegionError(f"t={t:g}: {exc}") from None
    return HermitianBanded(diag + add, off)


def _simpson_integral(f, t, quad_step):
    if t == 0:
        return 0.0
    n = max(2, 2 * int(np.ceil(abs(t) / (2.0 * quad_step))))
    s = np.linspace(0.0, t, n + 1)
    return float(simpson(f(s), x=s))


def time_integrals(spec: MovingDeltaSpec, t, quad_step):
    """``(int_0^t (xdot^2 + 1), int_0^t xdot*ydot, int_0^t ydot^2)`` by composite Simpson."""
    if not quad_step > 0:
        raise ValueError("quad_step must be positive")
    xd, yd = spec.relative_rate, spec.center_rate
    a2 = _simpson_integral(lambda s: xd(s) ** 2 + 1.0, t, quad_step)
    a1 = _simpson_integral(lambda s: xd(s) * yd(s), t, quad_step)
    a0 = _simpson_integral(lambda s: yd(s) ** 2, t, quad_step)
    return a2, a1, a0


def beta_coefficients(spec: MovingDeltaSpec, t, quad_step):
    """Return ``(beta0, beta1)`` of the co-moving frame kinetic term."""
    a2, a1, _ = time_integrals(spec, t, quad_step)
    x, xd, yd = spec.relative(t), spec.relative_rate(t), spec.center_rate(t)
    beta1 = a2 - x * xd
    beta0 = a1 - x * yd
    return beta0, beta1


def kappa_scaled(spec: MovingDeltaSpec, t):
    x = spec.checked_relative(t)
    return spec.kappa1(t) / x, spec.kappa2(t) / x


def assemble_L(spec: MovingDeltaSpec, grid: SpatialGrid, t, quad_step) -> HermitianBanded:
    """Co-moving frame operator

        (1/(2 x^2)) (P + b1 X + b0)^2 + X^2/2 + k1 delta(x+1) + k2 delta(x-1)

    with the square expanded as ``P^2 + b1 (PX + XP) + 2 b0 P + b1^2 X^2 +
    2 b0 b1 X + b0^2``. ``P^2`` uses the 3-point stencil, ``P`` the centered
    difference, ``PX + XP`` the product of the centered ``P`` with the nodal
    coordinate matrix. The result has a complex off-diagonal.
    """
    x = spec.checked_relative(t)
    beta0, beta1 = beta_coefficients(spec, t, quad_step)
    k1, k2 = kappa_scaled(spec, t)
    h = grid.h
    X = grid.interior
    c = 1.0 / (2.0 * x * x)

    # P[k, k+1] = -i/(2h);  (PX + XP)[k, k+1] = -i (x_k + x_{k+1}) / (2h)
    p_off = -0.5j / h
    px_off = -0.5j * (X[:-1] + X[1:]) / h
    off = c * (-1.0 / h**2 + beta1 * px_off + 2.0 * beta0 * p_off)
    diag = c * (2.0 / h**2 + (beta1 * X + beta0) ** 2) + 0.5 * X**2
    diag = diag + _delta_diag(grid, (-1.0, 1.0), (k1, k2), "co-moving point")
    return HermitianBanded(diag, off)


# ---------------------------------------------------------------------------
# families: callables t -> HermitianBanded with grid-dependent parts cached


class StaticFamily:
    """``t -> H(t)`` for a static-point spec on a fixed grid."""

    def __init__(self, spec: StaticDeltaFamilySpec, grid: SpatialGrid):
        self.spec = spec
        self.grid = grid
        mass_nodes = spec.mass(grid.nodes)
        diag, off = _kinetic(grid, mass_nodes)
        pot = spec.potential(grid.interior)
        if np.any(pot < 0):
            raise ValueError("potential must be non-negative on the grid")
        self._base_diag = diag + pot
        self._off = off
        # safe-region checks and coincidence warnings
        _delta_diag(grid, spec.points, np.zeros(len(spec.points)))
        self.delta_nodes = tuple(sorted({grid.nearest_interior(x) for x in spec.points}))
        self._node_of = np.array([grid.nearest_interior(x) for x in spec.points])
        self.mass_sup = float(np.max(mass_nodes))

    def __call__(self, t):
        diag = self._base_diag.copy()
        np.add.at(diag, self._node_of, self.spec.kappas(t) / self.grid.h)
        return HermitianBanded(diag, self._off)

    @property
    def is_autonomous(self):
        return self.spec.is_autonomous


class MovingFamily:
    """Lab-frame ``t -> H(t)`` for two moving points."""

    is_autonomous = False

    def __init__(self, spec: MovingDeltaSpec, grid: SpatialGrid):
        self.spec = spec
        self.grid = grid

    def __call__(self, t):
        return assemble_moving_direct(self.spec, self.grid, t)


class CoMovingFamily:
    """Co-moving frame ``t -> L(t)``."""

    is_autonomous = False

    def __init__(self, spec: MovingDeltaSpec, grid: SpatialGrid, quad_step):
        self.spec = spec
        self.grid = grid
        self.quad_step = quad_step

    def __call__(self, t):
        return assemble_L(self.spec, self.grid, t, self.quad_step)


# ---------------------------------------------------------------------------
# Lipschitz data


def estimate_lipschitz(spec: StaticDeltaFamilySpec, pairs=1000, rng=None):
    """Sampled estimate of ``sup sum_j |k_j(t) - k_j(s)| / |t - s|`` over the window."""
    rng = np.random.default_rng(0) if rng is None else rng
    a, b = spec.window
    t = rng.uniform(a, b, pairs)
    s = rng.uniform(a, b, pairs)
    keep = t != s
    t, s = t[keep], s[keep]
    diff = sum(np.abs(k(t) - k(s)) for k in spec.couplings)
    return float(np.max(diff / np.abs(t - s))) if t.size else 0.0


def lipschitz_constant(spec: StaticDeltaFamilySpec, rng=None):
    """``(C, estimated)``: the declared constant if present, else a sampled estimate."""
    if spec.lipschitz is not None:
        return float(spec.lipschitz), False
    return estimate_lipschitz(spec, rng=rng), True


def mass_sup(spec: StaticDeltaFamilySpec, grid: Optional[SpatialGrid] = None):
    m = spec.mass
    if m.kind == "constant":
        return float(m.value)
    if m.kind == "table":
        return float(max(m.values))
    if grid is None:
        raise ValueError("an expression mass profile needs a grid to bound its supremum")
    return m.sup(-grid.half_width, grid.half_width, extra=grid.nodes)


def gamma_bound(spec: StaticDeltaFamilySpec, grid: Optional[SpatialGrid] = None):
    """Form-norm growth rate ``(1/2) C max(1, 2 sup m)``."""
    c, _ = lipschitz_constant(spec)
    return 0.5 * c * max(1.0, 2.0 * mass_sup(spec, grid))
