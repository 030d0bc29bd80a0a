"""Quantified checks of propagator structure and of the form-norm estimates.

Every check produces :class:`Record` rows. A record is PASS/FAIL when the
check asserts an inequality and REPORT when the number is informational
(e.g. empirical convergence orders).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
import scipy.linalg

from .hamiltonians import (
    MovingDeltaSpec,
    MovingFamily,
    SpatialGrid,
    StaticFamily,
    gamma_bound,
    lipschitz_constant,
)
from .numkit import (
    DEFAULT_TOLERANCES,
    HermitianBanded,
    NumericalError,
    OracleCapError,
    ShiftedFactorization,
    Tolerances,
    apply,
    eig_dense,
    quadratic_form,
)
from .propagator import (
    CayleyStepper,
    GaussianPacket,
    ProductSchedule,
    WaveFunction,
    evolve_backward,
    evolve_bidirectional,
    evolve_forward,
    random_smooth_state,
)
from .transforms import default_quad_step, evolve_via_comoving

PASS, FAIL, REPORT = "PASS", "FAIL", "REPORT"


@dataclass(frozen=True)
class Record:
    check: str
    inputs: str
    measured: float
    bound: Optional[float]
    status: str
    provenance: str
    tolerance: str = ""

    FIELDS = ("check", "inputs", "measured", "bound", "status", "provenance", "tolerance")


def verdict(ok):
    return PASS if ok else FAIL


@dataclass
class DiagnosticsReport:
    records: List[Record] = field(default_factory=list)

    def add(self, *args, **kwargs):
        rec = Record(*args, **kwargs)
        self.records.append(rec)
        return rec

    def extend(self, other: "DiagnosticsReport"):
        self.records.extend(other.records)
        return self

    def sorted(self):
        # stable: records of one check keep their insertion order
        return sorted(self.records, key=lambda r: r.check)

    @property
    def failed(self):
        return [r for r in self.records if r.status == FAIL]

    @property
    def ok(self):
        return not self.failed

    def find(self, check):
        return [r for r in self.records if r.check == check]

    def to_text(self):
        lines = []
        for r in self.sorted():
            bound = "-" if r.bound is None else f"{r.bound:.6g}"
            lines.append(
                f"[{r.status:6s}] {r.check}: measured={r.measured:.6g} bound={bound} "
                f"({r.provenance}; {r.inputs}{'; tol ' + r.tolerance if r.tolerance else ''})"
            )
        n_fail = len(self.failed)
        lines.append(f"{len(self.records)} records, {n_fail} failed")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# exact exponential oracle


def autonomous_oracle(H: HermitianBanded, T, psi, tol: Tolerances = DEFAULT_TOLERANCES):
    """``exp(-i T H) psi`` through a dense eigendecomposition."""
    values = psi.values if isinstance(psi, WaveFunction) else np.asarray(psi, dtype=np.complex128)
    if H.dim > tol.oracle_cap:
        raise OracleCapError(f"oracle needs dim <= {tol.oracle_cap}, got {H.dim}")
    if T == 0:
        out = np.array(values, dtype=np.complex128)
    else:
        lam, V = eig_dense(H, tol)
        out = V @ (np.exp(-1j * T * lam) * (V.conj().T @ values))
    return psi.with_values(out) if isinstance(psi, WaveFunction) else out


# ---------------------------------------------------------------------------
# stability constants


def fit_growth(total_sigma, log_ratio):
    """Smallest ``M`` for the least-squares slope ``beta >= 0`` of ``log ratio``
    against ``sum sigma``, so that every sample satisfies the bound."""
    x, y = np.asarray(total_sigma, dtype=float), np.asarray(log_ratio, dtype=float)
    design = np.column_stack([np.ones_like(x), x])
    (_, beta), *_ = np.linalg.lstsq(design, y, rcond=None)
    beta = max(float(beta), 0.0)
    return float(np.exp(np.max(y - beta * x))), beta


def stability_constants(family, grid: SpatialGrid, window, samples=100, rng=None,
                        max_factors=10, max_sigma=None, substeps=4, direction="forward",
                        m_tol=1e-8, beta_tol=1e-8):
    """Fit ``(M, beta)`` with ``||prod_k exp(-sigma_k A(t_k))|| <= M exp(beta sum sigma_k)``.

    ``A(t) = i H(t)`` and each factor is realized by ``substeps`` Cayley steps.
    Forward products use descending tuples ``t_1 >= ... >= t_n`` with the
    ``t_n`` factor acting first; backward products use ascending tuples and
    factors ``exp(+sigma A)``. Operator norms are estimated on random smooth
    states.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    a, b = window
    if max_sigma is None:
        max_sigma = 0.1 * (b - a)
    sign = 1.0 if direction == "forward" else -1.0
    log_ratio, total_sigma = [], []
    for _ in range(samples):
        n = int(rng.integers(1, max_factors + 1))
        times = np.sort(rng.uniform(a, b, n))
        times = times[::-1] if direction == "forward" else times
        sigmas = rng.uniform(0.0, max_sigma, n)
        psi = random_smooth_state(grid, rng)
        v = np.array(psi.values)
        # rightmost factor (index n-1) acts first
        for tk, sk in zip(times[::-1], sigmas[::-1]):
            step = CayleyStepper(family(tk), sign * sk / substeps)
            for _ in range(substeps):
                v = step(v)
        ratio = np.linalg.norm(v) / np.linalg.norm(psi.values)
        log_ratio.append(np.log(ratio))
        total_sigma.append(sigmas.sum())
    M, beta = fit_growth(total_sigma, log_ratio)
    order = "t_1 >= t_2 >= ... >= t_n" if direction == "forward" else "t_1 <= t_2 <= ... <= t_n"
    report = DiagnosticsReport()
    inputs = f"{samples} products of <= {max_factors} factors, {direction}, tuples {order}"
    report.add(f"stability {direction} M", inputs, M, 1.0 + m_tol, verdict(M <= 1.0 + m_tol),
               "unitary factors", f"{m_tol:g}")
    report.add(f"stability {direction} beta", inputs, beta, beta_tol,
               verdict(beta <= beta_tol), "unitary factors", f"{beta_tol:g}")
    return M, beta, report


# ---------------------------------------------------------------------------
# form-norm scale


def equivalence_constant(family, grid: SpatialGrid, t, s, tol: Tolerances = DEFAULT_TOLERANCES,
                         max_iter=2000, rtol=1e-14):
    """``c(t,s) = ||(H(t)+I)^{1/2} (H(s)+I)^{-1/2}||``.

    Dense generalized eigensolve up to the oracle cap; above it, power
    iteration on ``(H(s)+I)^{-1}(H(t)+I)`` with a Rayleigh-quotient stop.
    """
    At, As = family(t).shifted(1.0), family(s).shifted(1.0)
    if At.equals(As):
        return 1.0
    if At.dim <= tol.oracle_cap:
        # full spectrum: the subset drivers fail on the highly degenerate
        # eigenvalue 1 that a low-rank At - As produces
        lam = scipy.linalg.eigh(At.to_dense(), As.to_dense(), eigvals_only=True)
        return float(np.sqrt(lam[-1]))
    lu = ShiftedFactorization(As, 0.0, tol)
    rng = np.random.default_rng(12345)
    v = rng.normal(size=At.dim) + 0j
    rho_old = np.inf
    for _ in range(max_iter):
        v = lu.solve(apply(At, v))
        v /= np.linalg.norm(v)
        rho = quadratic_form(At, v) / quadratic_form(As, v)
        if abs(rho - rho_old) <= rtol * rho:
            return float(np.sqrt(rho))
        rho_old = rho
    raise NumericalError(f"iterative equivalence constant did not converge in {max_iter} iterations")


def _trace_sides(grid: SpatialGrid, F):
    """Per column ``h sum (|D+ f|^2 + |f|^2)`` with Dirichlet padding; every
    point value ``|f_j|^2`` is bounded by it."""
    h = grid.h
    pad = np.zeros((F.shape[0] + 2, F.shape[1]), dtype=np.complex128)
    pad[1:-1] = F
    dplus = np.diff(pad, axis=0) / h
    rhs = h * (np.sum(np.abs(dplus) ** 2, axis=0) + np.sum(np.abs(F) ** 2, axis=0))
    return rhs


def form_growth_check(family: StaticFamily, grid: SpatialGrid, t, s, trials=200, rng=None,
                      states=None, rel_tol=1e-8, gamma=None):
    """Check ``<f,(H(t)+I)f> <= exp(2 gamma |t-s|) <f,(H(s)+I)f>`` on random smooth states,
    together with the point-evaluation bounds behind it."""
    rng = np.random.default_rng(0) if rng is None else rng
    if states is None:
        states = np.column_stack([random_smooth_state(grid, rng).values for _ in range(trials)])
    F = states
    if gamma is None:
        gamma = gamma_bound(family.spec, grid)
    At, As = family(t).shifted(1.0), family(s).shifted(1.0)
    qt, qs = quadratic_form(At, F), quadratic_form(As, F)
    ratio = qt / qs
    bound = np.exp(2.0 * gamma * abs(t - s)) * (1.0 + rel_tol)
    worst = float(ratio.max())
    n_viol = int(np.sum(ratio > bound))
    c_lip, estimated = lipschitz_constant(family.spec)
    prov = "growth-rate formula, " + ("estimated C" if estimated else "declared C")
    report = DiagnosticsReport()
    inputs = f"t={t:.6g}, s={s:.6g}, {F.shape[1]} states, gamma={gamma:.6g}, C={c_lip:.6g}"
    report.add("form growth max ratio", inputs, worst, float(bound), verdict(n_viol == 0), prov,
               f"rel {rel_tol:g}")
    report.add("form growth violations", inputs, float(n_viol), 0.0, verdict(n_viol == 0), prov)

    # point values at the interaction nodes
    rhs = _trace_sides(grid, F)
    const = max(1.0, 2.0 * family.mass_sup)
    h = grid.h
    # unweighted forms carry a factor 1/h relative to the L2 inner product
    form_s = h * qs
    worst_trace, worst_form = 0.0, 0.0
    for j in family.delta_nodes:
        pj = np.abs(F[j]) ** 2
        worst_trace = max(worst_trace, float(np.max(pj / rhs)))
        worst_form = max(worst_form, float(np.max(pj / (const * form_s))))
    report.add("trace inequality", inputs, worst_trace, 1.0,
               verdict(worst_trace <= 1.0 + rel_tol), "point-value bound", f"rel {rel_tol:g}")
    report.add("trace inequality (form)", inputs, worst_form, 1.0,
               verdict(worst_form <= 1.0 + rel_tol), "point-value bound with mass factor",
               f"rel {rel_tol:g}")
    return report


# ---------------------------------------------------------------------------
# propagator axioms


def split_slices(n_slices, s, r, t):
    """Slice counts for ``[s, r]`` and ``[r, t]`` and whether ``r`` is a slice boundary."""
    if t == s:
        return 0, 0, True
    pos = n_slices * (r - s) / (t - s)
    k = int(round(pos))
    commensurate = abs(pos - k) < 1e-9
    if not commensurate:
        k = min(max(k, 1), n_slices - 1) if n_slices > 1 else 1
    return k, max(n_slices - k, 1), commensurate


def cocycle_defect(family, psi: WaveFunction, s, r, t, n_slices, substeps=4, sampling="left",
                   tol=DEFAULT_TOLERANCES):
    """``||U(t,r) U(r,s) psi - U(t,s) psi|| / ||psi||``.

    ``r`` should sit on a slice boundary of ``[s, t]``; otherwise the slice
    counts are rounded and the value is only meaningful as a report.
    """
    if not s <= r <= t:
        raise ValueError("need s <= r <= t")
    direct = evolve_forward(family, psi, ProductSchedule(s, t, n_slices, substeps, sampling), tol).final
    n1, n2, _ = split_slices(n_slices, s, r, t)
    mid = psi
    if r > s:
        mid = evolve_forward(family, psi, ProductSchedule(s, r, n1, substeps, sampling), tol).final
    composed = mid
    if t > r:
        composed = evolve_forward(family, mid, ProductSchedule(r, t, n2, substeps, sampling), tol).final
    return composed.distance(direct) / psi.norm()


def inverse_defect(family, psi: WaveFunction, s, t, n_slices, substeps=4, sampling="left",
                   tol=DEFAULT_TOLERANCES):
    """``(||V(s,t)U(t,s)psi - psi||, ||U(t,s)V(s,t)psi - psi||)`` relative to ``||psi||``."""
    if t < s:
        raise ValueError("need s <= t")
    fwd = ProductSchedule(s, t, n_slices, substeps, sampling)
    bwd = ProductSchedule(t, s, n_slices, substeps, sampling)
    vu = evolve_backward(family, evolve_forward(family, psi, fwd, tol).final, bwd, tol).final
    uv = evolve_forward(family, evolve_backward(family, psi, bwd, tol).final, fwd, tol).final
    nrm = psi.norm()
    return vu.distance(psi) / nrm, uv.distance(psi) / nrm


# ---------------------------------------------------------------------------
# convergence


@dataclass
class ConvergenceTable:
    n_slices: List[int]
    errors: List[float]
    orders: List[float]
    reference_n: int

    @property
    def monotone(self):
        return all(b < a for a, b in zip(self.errors, self.errors[1:]))

    def rows(self):
        return list(zip(self.n_slices, self.errors, self.orders))


def convergence_study(family, psi: WaveFunction, s, t, n_list: Sequence[int], reference_n,
                      substeps=4, sampling="left", tol=DEFAULT_TOLERANCES):
    """Errors of ``n``-slice runs against a ``reference_n``-slice run.

    Orders are successive ``log(e_prev/e) / log(n/n_prev)``; they are reported,
    never asserted.
    """
    n_list = list(n_list)
    if reference_n < max(n_list):
        raise ValueError("reference_n must be at least max(n_list)")
    ref = evolve_bidirectional(family, psi, s, t, reference_n, substeps, sampling, tol).final
    errors = []
    for n in n_list:
        if n == reference_n:
            errors.append(0.0)
            continue
        out = evolve_bidirectional(family, psi, s, t, n, substeps, sampling, tol).final
        errors.append(out.distance(ref) / psi.norm())
    orders = [float("nan")]
    for (n0, e0), (n1, e1) in zip(zip(n_list, errors), zip(n_list[1:], errors[1:])):
        if e0 > 0 and e1 > 0:
            orders.append(float(np.log(e0 / e1) / np.log(n1 / n0)))
        else:
            orders.append(float("nan"))
    return ConvergenceTable(n_list, errors, orders, reference_n)


# ---------------------------------------------------------------------------
# lab frame vs co-moving frame


@dataclass
class FrameLevel:
    nodes: int
    h: float
    n_slices: int
    quad_step: float
    distance: float
    direct_selfconv: float
    comoving_selfconv: float
    direct_norm: float
    comoving_norm: float
    direct_boundary_mass: float
    comoving_boundary_mass: float


@dataclass
class FrameReport:
    levels: List[FrameLevel]
    report: DiagnosticsReport

    @property
    def distances(self):
        return [lv.distance for lv in self.levels]


def _restricted_distance(coarse: WaveFunction, fine: WaveFunction):
    """L2 distance on the coarse grid, fine state sampled at the shared nodes."""
    if fine.grid.n != 2 * coarse.grid.n - 1:
        raise ValueError("grids are not nested")
    diff = coarse.values - fine.values[1::2]
    return float(np.sqrt(coarse.grid.h) * np.linalg.norm(diff))


def frame_consistency(spec: MovingDeltaSpec, packet: GaussianPacket, s, t, levels=3,
                      base_grid: SpatialGrid = SpatialGrid(20.0, 401), base_slices=16,
                      substeps=4, sampling="left", base_quad_step=None, ratio_limit=10.0,
                      comoving_slices_factor=1):
    """Compare direct lab-frame evolution with the co-moving route under refinement.

    Level ``k`` halves ``h``, the slice width and the quadrature step ``k``
    times. The direct route's self-convergence error at a level is its
    distance to the previous level's state on the shared nodes.
    ``comoving_slices_factor`` lets the co-moving run use a different slice
    count from the lab run.
    """
    if levels < 2:
        raise ValueError("need at least two refinement levels")
    if base_quad_step is None:
        base_quad_step = 4.0 * default_quad_step(spec, s, t)
    rows = []
    grid = base_grid
    prev_d = prev_g = None
    for k in range(levels):
        n_sl = base_slices * 2**k
        q = base_quad_step / 2**k
        psi = packet.on(grid)
        if t >= s:
            d = evolve_forward(MovingFamily(spec, grid), psi,
                               ProductSchedule(s, t, n_sl, substeps, sampling)).final
        else:
            d = evolve_backward(MovingFamily(spec, grid), psi,
                                ProductSchedule(s, t, n_sl, substeps, sampling)).final
        g = evolve_via_comoving(spec, psi, s, t, n_sl * comoving_slices_factor, substeps,
                                sampling, q)
        rows.append(FrameLevel(
            grid.n, grid.h, n_sl, q, d.distance(g),
            float("nan") if prev_d is None else _restricted_distance(prev_d, d),
            float("nan") if prev_g is None else _restricted_distance(prev_g, g),
            d.norm(), g.norm(), d.boundary_mass(), g.boundary_mass(),
        ))
        prev_d, prev_g = d, g
        grid = grid.refined()

    report = DiagnosticsReport()
    for k, lv in enumerate(rows):
        inputs = f"level {k}: n={lv.nodes}, slices={lv.n_slices}, quad_step={lv.quad_step:.4g}"
        report.add("frame distance", inputs, lv.distance, None, REPORT, "lab vs co-moving route")
        report.add("frame boundary mass", inputs,
                   max(lv.direct_boundary_mass, lv.comoving_boundary_mass), None, REPORT,
                   "mass within 10% of the boundary")
    dist = [lv.distance for lv in rows]
    mono = all(b < a for a, b in zip(dist, dist[1:]))
    report.add("frame distance monotone", f"{levels} levels", float(mono), 1.0, verdict(mono),
               "refinement study")
    final, selfconv = rows[-1].distance, rows[-1].direct_selfconv
    ok = final <= ratio_limit * selfconv
    report.add("frame distance vs self-convergence", f"finest level, limit {ratio_limit:g}x",
               final / selfconv, ratio_limit, verdict(ok), "direct-route self-convergence")
    return FrameReport(rows, report)
