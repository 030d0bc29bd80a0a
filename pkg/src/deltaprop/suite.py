"""The ``verify`` run: every structural check on one problem, one report."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import List

import numpy as np

from . import diagnostics as dg
from .diagnostics import FAIL, PASS, REPORT, DiagnosticsReport, verdict
from .hamiltonians import (
    MovingDeltaSpec,
    MovingFamily,
    SpatialGrid,
    StaticDeltaFamilySpec,
    StaticFamily,
    gamma_bound,
    lipschitz_constant,
)
from .numkit import Tolerances
from .propagator import (
    ProductSchedule,
    WaveFunction,
    evolve_backward,
    evolve_bidirectional,
    evolve_forward,
    random_smooth_state,
)


@dataclass(frozen=True)
class CheckTolerances:
    unitarity: float = 1e-10
    cocycle: float = 1e-12
    inverse: float = 1e-10
    form_growth: float = 1e-8
    equivalence: float = 1e-6
    stability: float = 1e-8
    oracle: float = 1e-10
    frame_ratio: float = 10.0
    mass: float = 1e-8


@dataclass(frozen=True)
class VerifySettings:
    trials: int = 200
    pairs: int = 50
    stability_samples: int = 100
    equivalence_nodes: int = 256
    equivalence_pairs: int = 20
    inverse_n: List[int] = field(default_factory=lambda: [8, 16, 32, 64])
    checks: CheckTolerances = CheckTolerances()
    engine: Tolerances = Tolerances()


def _window_pairs(rng, window, count):
    a, b = window
    return [(float(t), float(s)) for t, s in rng.uniform(a, b, (count, 2))]


def _common_checks(family, psi: WaveFunction, schedule: ProductSchedule, settings: VerifySettings,
                   rng, autonomous, window):
    ct, tol = settings.checks, settings.engine
    rep = DiagnosticsReport()
    s, t, n = schedule.s, schedule.t, schedule.n_slices
    sched_txt = f"[{s:g}, {t:g}], n={n}, substeps={schedule.substeps}, {schedule.sampling}"
    norm0 = psi.norm()

    fwd = evolve_forward(family, psi, schedule, tol)
    drift = fwd.norm_drift / norm0
    rep.add("unitarity forward", sched_txt, drift, ct.unitarity, verdict(drift <= ct.unitarity),
            "unitary Cayley factors", f"{ct.unitarity:g}")
    back_sched = dataclasses.replace(schedule, s=t, t=s)
    bwd = evolve_backward(family, fwd.final, back_sched, tol)
    drift_b = bwd.norm_drift / norm0
    rep.add("unitarity backward", sched_txt, drift_b, ct.unitarity,
            verdict(drift_b <= ct.unitarity), "unitary Cayley factors", f"{ct.unitarity:g}")

    same = evolve_bidirectional(family, psi, s, s, n, schedule.substeps, schedule.sampling, tol)
    diff = float(np.max(np.abs(same.final.values - psi.values)))
    rep.add("bidirectional G(t,t) = I", f"t={s:g}", diff, 0.0, verdict(diff == 0.0), "exact dispatch")

    # r on a slice boundary: identical factor sequences
    k = max(1, n // 2) if n > 1 else 1
    r = schedule.slice_start(k) if n > 1 else s
    d = dg.cocycle_defect(family, psi, s, r, t, n, schedule.substeps, schedule.sampling, tol)
    rep.add("cocycle commensurate", f"{sched_txt}, r={r:.6g}", d, ct.cocycle,
            verdict(d <= ct.cocycle), "identical frozen samples", f"{ct.cocycle:g}")
    # r a third of the way into a slice stays off every dyadic refinement
    r_mid = s + (k + 1.0 / 3.0) * (t - s) / n
    for nn in (n, 2 * n):
        d = dg.cocycle_defect(family, psi, s, r_mid, t, nn, schedule.substeps, schedule.sampling, tol)
        rep.add("cocycle mid-slice", f"r={r_mid:.6g}, n={nn}", d, None, REPORT, "self-convergence")

    if autonomous:
        vu, uv = dg.inverse_defect(family, psi, s, t, n, schedule.substeps, schedule.sampling, tol)
        worst = max(vu, uv)
        rep.add("inverse relation", sched_txt, worst, ct.inverse, verdict(worst <= ct.inverse),
                "Cayley inverse pairing", f"{ct.inverse:g}")
    else:
        defects = []
        for nn in settings.inverse_n:
            vu, uv = dg.inverse_defect(family, psi, s, t, nn, schedule.substeps, schedule.sampling, tol)
            defects.append(max(vu, uv))
            rep.add("inverse defect", f"n={nn}", max(vu, uv), None, REPORT, "slice refinement")
        mono = all(b < a for a, b in zip(defects, defects[1:]))
        rep.add("inverse defect monotone", f"n in {settings.inverse_n}", float(mono), 1.0,
                verdict(mono), "slice refinement")

    for direction in ("forward", "backward"):
        _, _, srep = dg.stability_constants(
            family, psi.grid, window, settings.stability_samples, rng, substeps=schedule.substeps,
            direction=direction, m_tol=ct.stability, beta_tol=ct.stability)
        rep.extend(srep)
    return rep


def verify_static(spec: StaticDeltaFamilySpec, grid: SpatialGrid, psi: WaveFunction,
                  schedule: ProductSchedule, settings: VerifySettings = VerifySettings(),
                  rng=None) -> DiagnosticsReport:
    rng = np.random.default_rng(0) if rng is None else rng
    ct, tol = settings.checks, settings.engine
    family = StaticFamily(spec, grid)
    rep = _common_checks(family, psi, schedule, settings, rng, spec.is_autonomous, spec.window)

    # compatibility: the run depends only on samples inside [s, t]
    a, b = spec.window
    wide = dataclasses.replace(spec, window=(a - 1.0, b + 1.0))
    r1 = evolve_forward(family, psi, schedule, tol).final
    r2 = evolve_forward(StaticFamily(wide, grid), psi, schedule, tol).final
    same = bool(np.array_equal(r1.values, r2.values))
    rep.add("interval compatibility", "window widened by 1 on each side", float(not same), 0.0,
            verdict(same), "bitwise comparison")

    # form-norm growth on random smooth states
    gamma = gamma_bound(spec, grid)
    c_lip, estimated = lipschitz_constant(spec)
    if estimated:
        rep.add("Lipschitz constant", f"sampled over window {spec.window}", c_lip, None, REPORT,
                "estimated from 1000 random pairs")
    states = np.column_stack([random_smooth_state(grid, rng).values for _ in range(settings.trials)])
    worst_ratio, worst_bound, violations, worst_trace = 0.0, 0.0, 0, 0.0
    for t, s in _window_pairs(rng, spec.window, settings.pairs):
        sub = dg.form_growth_check(family, grid, t, s, rng=rng, states=states,
                                   rel_tol=ct.form_growth, gamma=gamma)
        r = sub.find("form growth max ratio")[0]
        if r.measured / r.bound >= worst_ratio / max(worst_bound, 1e-300):
            worst_ratio, worst_bound = r.measured, r.bound
        violations += int(sub.find("form growth violations")[0].measured)
        worst_trace = max(worst_trace, sub.find("trace inequality")[0].measured,
                          sub.find("trace inequality (form)")[0].measured)
    inputs = f"{settings.trials} states x {settings.pairs} pairs, gamma={gamma:.6g}"
    prov = "growth-rate formula, " + ("estimated C" if estimated else "declared C")
    rep.add("form growth worst ratio/bound", inputs, worst_ratio / worst_bound, 1.0,
            verdict(violations == 0), prov, f"rel {ct.form_growth:g}")
    rep.add("form growth violations", inputs, float(violations), 0.0, verdict(violations == 0), prov)
    rep.add("trace inequality worst", inputs, worst_trace, 1.0,
            verdict(worst_trace <= 1.0 + ct.form_growth), "point-value bound")

    # equivalence constants on an oracle-scale grid
    small = SpatialGrid(grid.half_width, min(settings.equivalence_nodes, grid.n))
    sfam = StaticFamily(spec, small)
    gamma_small = gamma_bound(spec, small)
    worst, worst_sym = 0.0, np.inf
    for t, s in _window_pairs(rng, spec.window, settings.equivalence_pairs):
        c_ts = dg.equivalence_constant(sfam, small, t, s, tol)
        c_st = dg.equivalence_constant(sfam, small, s, t, tol)
        worst = max(worst, c_ts / np.exp(gamma_small * abs(t - s)))
        worst_sym = min(worst_sym, c_ts * c_st)
    inputs = f"{settings.equivalence_pairs} pairs, n={small.n}, gamma={gamma_small:.6g}"
    rep.add("equivalence constant / exp(gamma|t-s|)", inputs, worst, 1.0 + ct.equivalence,
            verdict(worst <= 1.0 + ct.equivalence), prov, f"rel {ct.equivalence:g}")
    rep.add("equivalence constant c(t,s)c(s,t)", inputs, worst_sym, 1.0,
            verdict(worst_sym >= 1.0 - 1e-12), "structural")

    # exact exponential: semigroup law and agreement with the product formula
    Hs = sfam(schedule.s)
    phi = random_smooth_state(small, rng)
    T1, T2 = 0.3, 0.45
    one = dg.autonomous_oracle(Hs, T1 + T2, phi, tol)
    two = dg.autonomous_oracle(Hs, T2, dg.autonomous_oracle(Hs, T1, phi, tol), tol)
    d = one.distance(two) / phi.norm()
    rep.add("oracle semigroup law", f"n={small.n}, T1={T1}, T2={T2}", d, ct.oracle,
            verdict(d <= ct.oracle), "exact exponential", f"{ct.oracle:g}")
    frozen = lambda _t: Hs  # noqa: E731
    T = schedule.t - schedule.s
    prod = evolve_forward(frozen, phi, ProductSchedule(0.0, T, schedule.n_slices, schedule.substeps), tol).final
    ref = dg.autonomous_oracle(Hs, T, phi, tol)
    rep.add("product formula vs oracle (frozen H)", f"n={small.n}, T={T:g}",
            prod.distance(ref) / phi.norm(), None, REPORT, "Cayley error")

    # left vs midpoint sampling against a fine reference
    if not spec.is_autonomous:
        ref_n = 4 * schedule.n_slices
        for sampling in ("left", "midpoint"):
            ref = evolve_bidirectional(family, psi, schedule.s, schedule.t, ref_n, schedule.substeps,
                                       "midpoint", tol).final
            out = evolve_bidirectional(family, psi, schedule.s, schedule.t, schedule.n_slices,
                                       schedule.substeps, sampling, tol).final
            rep.add("sampling error", f"{sampling}, n={schedule.n_slices} vs midpoint n={ref_n}",
                    out.distance(ref) / psi.norm(), None, REPORT, "self-convergence")
    return rep


def verify_moving(spec: MovingDeltaSpec, grid: SpatialGrid, psi: WaveFunction,
                  schedule: ProductSchedule, settings: VerifySettings = VerifySettings(),
                  rng=None) -> DiagnosticsReport:
    rng = np.random.default_rng(0) if rng is None else rng
    family = MovingFamily(spec, grid)
    lo, hi = min(schedule.s, schedule.t), max(schedule.s, schedule.t)
    return _common_checks(family, psi, schedule, settings, rng, False, (lo, hi))


__all__ = [
    "CheckTolerances",
    "VerifySettings",
    "verify_static",
    "verify_moving",
    "PASS",
    "FAIL",
    "REPORT",
]
