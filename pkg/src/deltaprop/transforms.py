"""Shift, dilation and gauge unitaries on the grid, and the lab-frame propagator
rebuilt from a co-moving frame run.

Conventions (fixed here, checked by round-trip tests):

==========================  =====================================
operator                    grid action
==========================  =====================================
``exp(-i tau P)``           ``shift_apply(psi, +tau)``: ``f(x - tau)``
``exp(i ln(theta) L)``      ``dilate_apply(psi, theta)``: ``sqrt(theta) f(theta x)``
``Gamma(t)``                ``gauge_apply(psi, phase(t), +1)``
``Gamma(t)^{-1}``           ``gauge_apply(psi, phase(t), -1)``
==========================  =====================================

Off-lattice resampling uses 4-point Lagrange interpolation; nodes outside the
domain read as zero. FFT resampling is deliberately avoided because the
domain is Dirichlet-truncated, not periodic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hamiltonians import CoMovingFamily, MovingDeltaSpec, SpatialGrid, time_integrals
from .propagator import ProductSchedule, WaveFunction, evolve_backward, evolve_forward


class BoundaryMassError(ValueError):
    pass


def _full(psi: WaveFunction):
    f = np.zeros(psi.grid.n, dtype=np.complex128)
    f[1:-1] = psi.values
    return f


def interpolate(grid: SpatialGrid, full_values, xq):
    """Cubic Lagrange interpolation of nodal values (boundary nodes included)."""
    xq = np.asarray(xq, dtype=float)
    u = (xq + grid.half_width) / grid.h
    j = np.floor(u).astype(np.int64)
    r = u - j
    w = (
        -r * (r - 1.0) * (r - 2.0) / 6.0,
        (r + 1.0) * (r - 1.0) * (r - 2.0) / 2.0,
        -(r + 1.0) * r * (r - 2.0) / 2.0,
        (r + 1.0) * r * (r - 1.0) / 6.0,
    )
    n = grid.n
    out = np.zeros(xq.shape, dtype=np.complex128)
    for offset, wk in zip((-1, 0, 1, 2), w):
        idx = j + offset
        ok = (idx >= 0) & (idx < n)
        out[ok] += wk[ok] * full_values[idx[ok]]
    out[np.abs(xq) > grid.half_width] = 0.0
    return out


def _check_mass(psi: WaveFunction, lost, mass_tol, what):
    h = psi.grid.h
    m = h * np.sum(psi.density()[lost])
    total = psi.norm() ** 2
    if m > mass_tol * max(total, np.finfo(float).tiny):
        raise BoundaryMassError(
            f"{what}: fraction {m / total:.3e} of the state would land within 2h of "
            f"the boundary or outside the domain (limit {mass_tol:g})"
        )


def shift_apply(psi: WaveFunction, tau, mass_tol=1e-8) -> WaveFunction:
    """``(S(tau) psi)(x) = psi(x - tau)``."""
    grid = psi.grid
    if tau == 0:
        return psi
    x = grid.interior
    _check_mass(psi, np.abs(x + tau) > grid.half_width - 2.0 * grid.h, mass_tol,
                f"shift by {tau:g}")
    m = tau / grid.h
    if abs(m - round(m)) < 1e-9:
        # lattice shift: pure index move
        m = int(round(m))
        out = np.zeros(grid.dim, dtype=np.complex128)
        if m >= 0:
            out[m:] = psi.values[: grid.dim - m]
        else:
            out[:m] = psi.values[-m:]
        return psi.with_values(out)
    return psi.with_values(interpolate(grid, _full(psi), x - tau))


def dilate_apply(psi: WaveFunction, theta, theta_bounds=(1e-2, 1e2), mass_tol=1e-8) -> WaveFunction:
    """``(W(theta) psi)(x) = sqrt(theta) psi(theta x)``."""
    lo, hi = theta_bounds
    if not lo <= theta <= hi:
        raise ValueError(f"dilation factor {theta:g} outside [{lo:g}, {hi:g}]")
    if theta == 1:
        return psi
    grid = psi.grid
    x = grid.interior
    _check_mass(psi, np.abs(x / theta) > grid.half_width - 2.0 * grid.h, mass_tol,
                f"dilation by {theta:g}")
    return psi.with_values(np.sqrt(theta) * interpolate(grid, _full(psi), theta * x))


@dataclass(frozen=True)
class GaugePhase:
    """``phase(x) = (a2 x^2 + 2 a1 x + a0) / 2``."""

    t: float
    a2: float
    a1: float
    a0: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * (self.a2 * x * x + 2.0 * self.a1 * x + self.a0)


def gauge_phase(spec: MovingDeltaSpec, t, quad_step) -> GaugePhase:
    a2, a1, a0 = time_integrals(spec, t, quad_step)
    return GaugePhase(float(t), a2, a1, a0)


def gauge_apply(psi: WaveFunction, phase: GaugePhase, sign=1) -> WaveFunction:
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    return psi.with_values(psi.values * np.exp(1j * sign * phase(psi.grid.interior)))


def default_quad_step(spec: MovingDeltaSpec, s, t):
    span = abs(t - s)
    if span == 0:
        span = spec.window[1] - spec.window[0]
    return span / 1024.0


def assemble_G(spec: MovingDeltaSpec, s, t, lam, grid: SpatialGrid, quad_step=None):
    """Lab-frame propagator action built from a co-moving frame action ``lam``.

    Applies, right to left, ``exp(i y(s) P)``, ``exp(i ln x(s) L)``,
    ``Gamma(s)^{-1}``, ``lam``, ``Gamma(t)``, ``exp(-i ln x(t) L)``,
    ``exp(-i y(t) P)``.
    """
    if quad_step is None:
        quad_step = default_quad_step(spec, s, t)
    x_s, x_t = spec.checked_relative(s), spec.checked_relative(t)
    y_s, y_t = spec.center(s), spec.center(t)
    phase_s = gauge_phase(spec, s, quad_step)
    phase_t = gauge_phase(spec, t, quad_step)

    def G(psi: WaveFunction) -> WaveFunction:
        if psi.grid != grid:
            raise ValueError("state grid does not match the propagator grid")
        v = shift_apply(psi, -y_s)
        v = dilate_apply(v, x_s)
        v = gauge_apply(v, phase_s, -1)
        v = lam(v)
        v = gauge_apply(v, phase_t, +1)
        v = dilate_apply(v, 1.0 / x_t)
        return shift_apply(v, y_t)

    return G


def comoving_action(spec: MovingDeltaSpec, grid: SpatialGrid, s, t, n_slices, substeps=4,
                    sampling="left", quad_step=None):
    """Product-formula approximation of the co-moving propagator ``Lambda(t, s)``."""
    if quad_step is None:
        quad_step = default_quad_step(spec, s, t)
    family = CoMovingFamily(spec, grid, quad_step)
    schedule = ProductSchedule(s, t, n_slices, substeps, sampling)
    evolve = evolve_forward if t >= s else evolve_backward

    def lam(psi):
        return evolve(family, psi, schedule).final

    return lam


def evolve_via_comoving(spec: MovingDeltaSpec, psi: WaveFunction, s, t, n_slices, substeps=4,
                        sampling="left", quad_step=None) -> WaveFunction:
    """Lab-frame state at ``t`` obtained through the co-moving frame."""
    if quad_step is None:
        quad_step = default_quad_step(spec, s, t)
    lam = comoving_action(spec, psi.grid, s, t, n_slices, substeps, sampling, quad_step)
    return assemble_G(spec, s, t, lam, psi.grid, quad_step)(psi)
