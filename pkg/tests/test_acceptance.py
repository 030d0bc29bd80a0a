"""Acceptance criteria, one test each. Every test prints one PASS/FAIL line,
repeated in the terminal summary."""

import time

import numpy as np
from conftest import ACCEPTANCE_LINES, two_delta_spec
from deltaprop.diagnostics import (
    autonomous_oracle,
    cocycle_defect,
    equivalence_constant,
    form_growth_check,
    frame_consistency,
    inverse_defect,
    stability_constants,
)
from deltaprop.hamiltonians import MovingDeltaSpec, SpatialGrid, StaticFamily, gamma_bound
from deltaprop.profiles import constant, poly
from deltaprop.propagator import (
    GaussianPacket,
    ProductSchedule,
    evolve_backward,
    evolve_bidirectional,
    evolve_forward,
    random_smooth_state,
)


def _log(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)


def test_criterion_1_unitarity():
    spec = two_delta_spec()
    grid = SpatialGrid(20.0, 1024)
    fam = StaticFamily(spec, grid)
    psi = GaussianPacket(-5.0, 1.0, 2.0).on(grid)
    worst = 0.0
    t0 = time.perf_counter()
    for s, t, n, sub, sampling in [(0.0, 1.0, 256, 4, "left"), (0.3, 2.7, 97, 3, "midpoint"),
                                   (5.0, 1.0, 64, 4, "left"), (2.0, 9.5, 200, 1, "left")]:
        run = evolve_bidirectional(fam, psi, s, t, n, sub, sampling)
        drift = max(abs(r.norm - psi.norm()) for r in run.records) / psi.norm()
        worst = max(worst, drift)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-10 and elapsed < 5.0
    _log(1, ok, f"max relative norm drift {worst:.2e} (limit 1e-10), {elapsed:.2f} s (limit 5 s)")
    assert worst <= 1e-10
    assert elapsed < 5.0


def test_criterion_2_propagator_axioms():
    spec = two_delta_spec()
    grid = SpatialGrid(20.0, 512)
    fam = StaticFamily(spec, grid)
    psi = GaussianPacket(-5.0, 1.0, 2.0).on(grid)
    worst = 0.0
    for s, r, t, n in [(0.0, 0.5, 1.0, 64), (0.0, 0.25, 1.0, 64), (1.0, 2.5, 4.0, 48)]:
        worst = max(worst, cocycle_defect(fam, psi, s, r, t, n))
    same = [evolve_bidirectional(fam, psi, t, t, 16).final for t in (0.0, 0.7, 3.0)]
    exact = all(np.array_equal(p.values, psi.values) for p in same)
    ok = worst <= 1e-12 and exact
    _log(2, ok, f"commensurate cocycle defect {worst:.2e} (limit 1e-12), G(t,t) = I exactly: {exact}")
    assert worst <= 1e-12
    assert exact


def test_criterion_3_inverse_relation():
    grid = SpatialGrid(20.0, 512)
    psi = GaussianPacket(-5.0, 1.0, 2.0).on(grid)
    auto = StaticFamily(two_delta_spec(autonomous=True), grid)
    vu, uv = inverse_defect(auto, psi, 0.0, 1.0, 32)
    lip = StaticFamily(two_delta_spec(), grid)
    defects = [max(inverse_defect(lip, psi, 0.0, 1.0, n)) for n in (8, 16, 32, 64)]
    mono = all(b < a for a, b in zip(defects, defects[1:]))
    ok = max(vu, uv) <= 1e-10 and mono
    _log(3, ok, f"autonomous defect {max(vu, uv):.2e} (limit 1e-10); Lipschitz defects "
                + ", ".join(f"{d:.2e}" for d in defects) + f" monotone: {mono}")
    assert max(vu, uv) <= 1e-10
    assert mono


def test_criterion_4_oracle_equivalence():
    # packet kept several widths away from both points over the run
    spec = two_delta_spec(autonomous=True)
    packet = GaussianPacket(-10.0, 1.0, 1.0)
    T = 1.0
    t0 = time.perf_counter()
    errors = []
    for n, slices in ((256, 64), (512, 128)):
        grid = SpatialGrid(20.0, n)
        fam = StaticFamily(spec, grid)
        psi = packet.on(grid)
        out = evolve_forward(fam, psi, ProductSchedule(0.0, T, slices, 8)).final
        ref = autonomous_oracle(fam(0.0), T, psi)
        errors.append(out.distance(ref) / psi.norm())
    elapsed = time.perf_counter() - t0
    ratio = errors[0] / errors[1]
    ok = errors[0] <= 1e-4 and 3.0 <= ratio <= 5.0 and elapsed < 10.0
    _log(4, ok, f"error {errors[0]:.2e} (limit 1e-4), ratio on doubling grid and slices "
                f"{ratio:.2f} (expected ~4), {elapsed:.2f} s")
    assert errors[0] <= 1e-4
    assert 3.0 <= ratio <= 5.0
    assert elapsed < 10.0


def test_criterion_5_form_growth():
    spec = two_delta_spec()
    grid = SpatialGrid(20.0, 1024)
    fam = StaticFamily(spec, grid)
    gamma = gamma_bound(spec, grid)
    rng = np.random.default_rng(5)
    states = np.column_stack([random_smooth_state(grid, rng).values for _ in range(200)])
    violations, worst = 0, 0.0
    for t, s in rng.uniform(0.0, 1.0, (50, 2)):
        rep = form_growth_check(fam, grid, t, s, states=states, rel_tol=1e-8, gamma=gamma)
        r = rep.find("form growth max ratio")[0]
        worst = max(worst, r.measured / r.bound)
        violations += int(rep.find("form growth violations")[0].measured)
    ok = violations == 0
    _log(5, ok, f"gamma={gamma:g}, 200 states x 50 pairs, violations {violations}, "
                f"worst ratio/bound {worst:.4f}")
    assert violations == 0


def test_criterion_6_equivalence_constant():
    spec = two_delta_spec()
    rng = np.random.default_rng(6)
    worst = 0.0
    for n in (128, 256, 512):
        grid = SpatialGrid(20.0, n)
        fam = StaticFamily(spec, grid)
        gamma = gamma_bound(spec, grid)
        for t, s in rng.uniform(0.0, 1.0, (10, 2)):
            c = equivalence_constant(fam, grid, t, s)
            worst = max(worst, c / np.exp(gamma * abs(t - s)))
    ok = worst <= 1.0 + 1e-6
    _log(6, ok, f"max c(t,s) / exp(gamma|t-s|) = {worst:.6f} (limit 1 + 1e-6)")
    assert ok


def test_criterion_7_stability():
    spec = two_delta_spec()
    grid = SpatialGrid(20.0, 512)
    fam = StaticFamily(spec, grid)
    rng = np.random.default_rng(7)
    results = []
    for direction in ("forward", "backward"):
        M, beta, _ = stability_constants(fam, grid, (0.0, 1.0), 100, rng, direction=direction)
        results.append((direction, M, beta))
    ok = all(M <= 1 + 1e-8 and beta <= 1e-8 for _, M, beta in results)
    _log(7, ok, "; ".join(f"{d}: M-1={M - 1:.1e}, beta={b:.1e}" for d, M, b in results)
         + " (limits 1e-8)")
    assert ok


def test_criterion_8_frame_consistency():
    spec = MovingDeltaSpec(poly(-1.0, -0.1), poly(1.0, 0.1), constant(1.0), constant(1.0),
                           window=(0.0, 1.0))
    t0 = time.perf_counter()
    res = frame_consistency(spec, GaussianPacket(0.0, 0.7, 0.5), 0.0, 1.0, levels=3,
                            base_grid=SpatialGrid(20.0, 401), base_slices=16)
    elapsed = time.perf_counter() - t0
    d = res.distances
    mono = all(b < a for a, b in zip(d, d[1:]))
    ratio = res.levels[-1].distance / res.levels[-1].direct_selfconv
    ok = mono and ratio <= 10.0 and elapsed < 120.0
    _log(8, ok, "distances " + ", ".join(f"{x:.3e}" for x in d)
         + f"; final/self-convergence {ratio:.2f} (limit 10); {elapsed:.1f} s")
    assert mono
    assert ratio <= 10.0
    assert elapsed < 120.0


def test_criterion_9_determinism(tmp_path, configs_dir):
    from deltaprop.cli import main

    summary, all_same = [], True
    for name in ("simulate", "verify", "converge", "frames"):
        outs = []
        for k in range(2):
            out = tmp_path / name / f"run{k}"
            assert main([str(configs_dir / f"{name}.toml"), "--out", str(out), "--seed", "11"]) == 0
            outs.append(out)
        files = sorted(p.name for p in outs[0].iterdir())
        same = files == sorted(p.name for p in outs[1].iterdir()) and all(
            (outs[0] / f).read_bytes() == (outs[1] / f).read_bytes() for f in files)
        all_same &= same
        summary.append(f"{name} {len(files)} files {'identical' if same else 'DIFFER'}")
    _log(9, all_same, "; ".join(summary))
    assert all_same
