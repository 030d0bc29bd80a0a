import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

from conftest import two_delta_spec
from deltaprop.diagnostics import autonomous_oracle
from deltaprop.hamiltonians import SpatialGrid, StaticDeltaFamilySpec, StaticFamily
from deltaprop.numkit import HermitianBanded
from deltaprop.profiles import constant
from deltaprop.propagator import (
    CayleyStepper,
    GaussianPacket,
    ProductSchedule,
    WaveFunction,
    cayley_step,
    evolve_backward,
    evolve_bidirectional,
    evolve_forward,
    random_smooth_state,
)

GRID = SpatialGrid(20.0, 256)
FAMILY = StaticFamily(two_delta_spec(), GRID)


def free_spec():
    return StaticDeltaFamilySpec([0.0], [constant(0.0)], lipschitz=0.0, window=(0.0, 10.0))


def test_wavefunction_norm_and_validation():
    g = SpatialGrid(1.0, 11)
    psi = WaveFunction(g, np.ones(9))
    assert psi.norm() == pytest.approx(np.sqrt(0.2 * 9))
    assert psi.normalized().norm() == pytest.approx(1.0)
    with pytest.raises(ValueError):
        WaveFunction(g, np.ones(5))
    with pytest.raises(ValueError):
        WaveFunction(g, np.full(9, np.nan))
    with pytest.raises(ValueError):
        psi.values[0] = 2.0


def test_gaussian_packet_is_normalized_and_centered():
    g = SpatialGrid(20.0, 1001)
    psi = GaussianPacket(3.0, 0.8, 1.5).on(g)
    x = g.interior
    assert psi.norm() == pytest.approx(1.0)
    assert g.h * np.sum(x * psi.density()) == pytest.approx(3.0, abs=1e-10)
    # density variance equals width^2
    assert g.h * np.sum((x - 3.0) ** 2 * psi.density()) == pytest.approx(0.64, rel=1e-8)


def test_random_smooth_state_vanishes_near_boundary(rng):
    psi = random_smooth_state(GRID, rng)
    assert psi.norm() == pytest.approx(1.0)
    assert np.all(psi.values[np.abs(GRID.interior) >= 20.0 - 1e-9] == 0)
    assert psi.boundary_mass(0.05) < 1e-12


def test_schedule_sample_times():
    sc = ProductSchedule(0.0, 1.0, 4)
    assert sc.sample_times() == [0.0, 0.25, 0.5, 0.75]
    assert ProductSchedule(0.0, 1.0, 4, sampling="midpoint").sample_times() == [0.125, 0.375, 0.625, 0.875]
    back = ProductSchedule(1.0, 0.0, 4)
    assert back.width == -0.25
    assert back.sample_times() == [1.0, 0.75, 0.5, 0.25]
    with pytest.raises(ValueError):
        ProductSchedule(0.0, 1.0, 0)
    with pytest.raises(ValueError):
        ProductSchedule(0.0, 1.0, 4, sampling="right")


@given(st.floats(-3.0, 3.0), st.integers(1, 8), st.integers(0, 1000))
def test_cayley_step_is_unitary(dt, n_sub, seed):
    psi = random_smooth_state(GRID, np.random.default_rng(seed))
    H = FAMILY(0.3)
    out = psi
    for _ in range(n_sub):
        out = cayley_step(H, out, dt)
    assert abs(out.norm() - psi.norm()) <= 1e-12


def test_cayley_zero_step_is_identity():
    psi = GaussianPacket().on(GRID)
    assert np.array_equal(cayley_step(FAMILY(0.0), psi, 0.0).values, psi.values)


def test_cayley_matches_dense_rational_function(rng):
    H = HermitianBanded(rng.normal(size=20), rng.normal(size=19) + 1j * rng.normal(size=19))
    v = rng.normal(size=20) + 0j
    dt = 0.37
    D = H.to_dense()
    ref = np.linalg.solve(np.eye(20) + 0.5j * dt * D, (np.eye(20) - 0.5j * dt * D) @ v)
    assert np.allclose(CayleyStepper(H, dt)(v), ref, atol=1e-13)


def test_cayley_local_error_is_third_order():
    g = SpatialGrid(20.0, 256)
    H = StaticFamily(free_spec(), g)(0.0)
    psi = GaussianPacket(0.0, 1.5, 1.0).on(g)
    errs = []
    for dt in (0.1, 0.05, 0.025):
        exact = autonomous_oracle(H, dt, psi)
        errs.append(cayley_step(H, psi, dt).distance(exact))
    assert 7.0 < errs[0] / errs[1] < 9.0
    assert 7.0 < errs[1] / errs[2] < 9.0


def test_direction_checks():
    psi = GaussianPacket().on(GRID)
    with pytest.raises(ValueError):
        evolve_forward(FAMILY, psi, ProductSchedule(1.0, 0.0, 4))
    with pytest.raises(ValueError):
        evolve_backward(FAMILY, psi, ProductSchedule(0.0, 1.0, 4))


def test_equal_times_return_input_exactly():
    psi = GaussianPacket(-3.0, 1.0, 1.0).on(GRID)
    run = evolve_bidirectional(FAMILY, psi, 0.4, 0.4, 10)
    assert run.final is psi


@given(st.floats(0.0, 5.0), st.floats(0.0, 5.0), st.integers(1, 40), st.sampled_from(["left", "midpoint"]))
def test_product_formula_conserves_norm(s, t, n, sampling):
    psi = GaussianPacket(-5.0, 1.0, 2.0).on(GRID)
    run = evolve_bidirectional(FAMILY, psi, s, t, n, 2, sampling)
    assert abs(run.final.norm() - 1.0) <= 1e-12
    assert run.direction == ("forward" if t >= s else "backward")


def test_backward_undoes_forward_for_autonomous_family():
    fam = StaticFamily(two_delta_spec(autonomous=True), GRID)
    psi = GaussianPacket(-5.0, 1.0, 2.0).on(GRID)
    fwd = evolve_forward(fam, psi, ProductSchedule(0.0, 2.0, 50)).final
    back = evolve_backward(fam, fwd, ProductSchedule(2.0, 0.0, 50)).final
    assert back.distance(psi) <= 1e-12


def test_records_and_snapshots():
    psi = GaussianPacket().on(GRID)
    run = evolve_forward(FAMILY, psi, ProductSchedule(0.0, 1.0, 10), snapshot_stride=3)
    assert [r.index for r in run.records] == list(range(10))
    assert run.records[-1].end_time == pytest.approx(1.0)
    assert [round(t, 12) for t, _ in run.snapshots] == [0.0, 0.3, 0.6, 0.9, 1.0]
    assert np.array_equal(run.snapshots[-1][1].values, run.final.values)


def test_free_packet_density_matches_analytic_spreading():
    # m = 1/2: density is Gaussian with center c + 2 k t and variance w^2 (1 + t^2 / w^4)
    g = SpatialGrid(30.0, 2048)
    c, w, k, T = -2.0, 1.0, 1.0, 1.5
    psi = GaussianPacket(c, w, k).on(g)
    out = evolve_forward(StaticFamily(free_spec(), g), psi, ProductSchedule(0.0, T, 300, 4)).final
    x = g.interior
    var = w**2 * (1 + T**2 / w**4)
    exact = np.exp(-((x - c - 2 * k * T) ** 2) / (2 * var)) / np.sqrt(2 * np.pi * var)
    err = g.h * np.sum(np.abs(out.density() - exact))
    assert err < 2e-3


def test_nonautonomous_run_depends_on_sampling():
    psi = GaussianPacket(-3.0, 1.0, 1.0).on(GRID)
    left = evolve_bidirectional(FAMILY, psi, 0.0, 1.0, 8).final
    mid = evolve_bidirectional(FAMILY, psi, 0.0, 1.0, 8, sampling="midpoint").final
    ref = evolve_bidirectional(FAMILY, psi, 0.0, 1.0, 512, sampling="midpoint").final
    assert left.distance(mid) > 0
    assert mid.distance(ref) < left.distance(ref)


@given(st.floats(0.0, 5.0), st.floats(0.1, 3.0), st.integers(2, 24), st.integers(1, 23),
       st.sampled_from(["left", "midpoint"]))
def test_cocycle_exact_on_slice_boundaries(s, span, n, k, sampling):
    from deltaprop.diagnostics import cocycle_defect

    k = min(k, n - 1)
    psi = GaussianPacket(-3.0, 1.0, 1.0).on(GRID)
    t = s + span
    r = ProductSchedule(s, t, n).slice_start(k)
    assert cocycle_defect(FAMILY, psi, s, r, t, n, 2, sampling) <= 1e-12


@pytest.mark.parametrize("dt", [5e-324, 2.2e-311, -1e-310])
def test_subnormal_step_is_identity(dt):
    psi = GaussianPacket().on(GRID)
    assert np.array_equal(cayley_step(FAMILY(0.0), psi, dt).values, psi.values)
