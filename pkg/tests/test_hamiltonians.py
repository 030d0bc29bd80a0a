import warnings

import numpy as np
import pytest
import scipy.integrate
from hypothesis import given
from hypothesis import strategies as st

from conftest import two_delta_spec
from deltaprop.hamiltonians import (
    CoincidentNodeWarning,
    CoMovingFamily,
    MovingDeltaSpec,
    MovingFamily,
    SafeRegionError,
    SpatialGrid,
    StaticDeltaFamilySpec,
    StaticFamily,
    assemble_L,
    assemble_moving_direct,
    assemble_static,
    beta_coefficients,
    estimate_lipschitz,
    gamma_bound,
    kappa_scaled,
    lipschitz_constant,
    mass_sup,
    time_integrals,
)
from deltaprop.numkit import apply
from deltaprop.profiles import constant, expression, poly, table


def test_grid_geometry():
    g = SpatialGrid(20.0, 401)
    assert g.h == 0.1
    assert g.nodes[0] == -20.0 and np.isclose(g.nodes[-1], 20.0)
    assert g.dim == 399
    r = g.refined()
    assert r.n == 801 and np.allclose(r.nodes[::2], g.nodes)
    assert g.interior[g.nearest_interior(0.04)] == pytest.approx(0.0, abs=1e-12)
    assert g.interior[g.nearest_interior(0.06)] == pytest.approx(0.1)


def test_grid_validation():
    with pytest.raises(ValueError):
        SpatialGrid(-1.0, 100)
    with pytest.raises(ValueError):
        SpatialGrid(1.0, 4)


def test_half_mass_gives_standard_laplacian():
    g = SpatialGrid(10.0, 101)
    spec = StaticDeltaFamilySpec([0.0], [constant(0.0)])
    H = assemble_static(spec, g, 0.0)
    assert np.allclose(H.diag, 2.0 / g.h**2, rtol=1e-14)
    assert np.allclose(H.offdiag, -1.0 / g.h**2, rtol=1e-14)


def test_constant_mass_scaling():
    g = SpatialGrid(10.0, 101)
    spec = StaticDeltaFamilySpec([0.0], [constant(0.0)], mass=constant(2.0))
    H = assemble_static(spec, g, 0.0)
    assert np.allclose(H.offdiag, -1.0 / (4.0 * g.h**2))


def test_variable_mass_uses_harmonic_mean():
    g = SpatialGrid(5.0, 41)
    mass = table([-5.0, 5.0], [0.5, 2.0])
    spec = StaticDeltaFamilySpec([0.0], [constant(0.0)], mass=mass)
    H = assemble_static(spec, g, 0.0)
    m = mass(g.nodes)
    inv_half = 0.5 * (1 / m[:-1] + 1 / m[1:])
    k = 7
    assert np.isclose(H.offdiag[k], -0.5 * inv_half[k + 1] / g.h**2)
    assert np.isclose(H.diag[k], 0.5 * (inv_half[k] + inv_half[k + 1]) / g.h**2)
    assert H.is_real


def test_kinetic_form_is_discrete_dirichlet_energy(rng):
    # <f, H f> = (1/2) sum |f_{k+1} - f_k|^2 / (m_half h^2) with zero boundary values
    g = SpatialGrid(5.0, 41)
    mass = expression([{"type": "poly", "coeffs": [1.0]}, {"type": "cos", "amp": 0.3, "freq": 1.0}])
    spec = StaticDeltaFamilySpec([0.0], [constant(0.0)], mass=mass)
    H = assemble_static(spec, g, 0.0)
    f = rng.normal(size=g.dim) + 1j * rng.normal(size=g.dim)
    m = mass(g.nodes)
    inv_half = 0.5 * (1 / m[:-1] + 1 / m[1:])
    pad = np.concatenate([[0], f, [0]])
    energy = 0.5 * np.sum(inv_half * np.abs(np.diff(pad)) ** 2) / g.h**2
    assert np.isclose(np.real(np.vdot(f, apply(H, f))), energy)


def test_delta_adds_kappa_over_h():
    g = SpatialGrid(20.0, 1024)
    spec = two_delta_spec()
    base = assemble_static(StaticDeltaFamilySpec([0.0], [constant(0.0)]), g, 0.0)
    H = assemble_static(spec, g, 0.7)
    added = H.diag - base.diag
    k1, k2 = g.nearest_interior(-2.0), g.nearest_interior(2.0)
    assert np.isclose(added[k1], (1 + np.sin(0.7) ** 2) / g.h)
    assert np.isclose(added[k2], 2.0 / g.h)
    assert np.count_nonzero(added) == 2


def test_static_family_matches_assembly():
    g = SpatialGrid(20.0, 300)
    spec = two_delta_spec()
    fam = StaticFamily(spec, g)
    for t in (0.0, 0.4, 3.3):
        assert fam(t).equals(assemble_static(spec, g, t))
    assert fam.delta_nodes == (g.nearest_interior(-2.0), g.nearest_interior(2.0))


def test_coincident_points_warn_and_sum():
    g = SpatialGrid(10.0, 21)
    spec = StaticDeltaFamilySpec([0.0, 0.1], [constant(1.0), constant(2.0)])
    with pytest.warns(CoincidentNodeWarning):
        H = assemble_static(spec, g, 0.0)
    base = assemble_static(StaticDeltaFamilySpec([0.0], [constant(0.0)]), g, 0.0)
    assert np.isclose((H.diag - base.diag).max(), 3.0 / g.h)


def test_point_near_boundary_rejected():
    g = SpatialGrid(5.0, 51)
    spec = StaticDeltaFamilySpec([4.95], [constant(1.0)])
    with pytest.raises(SafeRegionError):
        assemble_static(spec, g, 0.0)


def test_spec_validation():
    with pytest.raises(ValueError):
        StaticDeltaFamilySpec([0.0, 0.0], [constant(1.0), constant(1.0)])
    with pytest.raises(ValueError):
        StaticDeltaFamilySpec([0.0], [constant(-1.0)])
    with pytest.raises(ValueError):
        StaticDeltaFamilySpec([0.0], [constant(1.0)], window=(1.0, 0.0))
    with pytest.raises(ValueError):
        assemble_static(StaticDeltaFamilySpec([0.0], [constant(1.0)], potential=constant(-1.0)),
                        SpatialGrid(5.0, 51), 0.0)


def test_autonomy_flag():
    assert two_delta_spec(autonomous=True).is_autonomous
    assert not two_delta_spec().is_autonomous


def test_lipschitz_and_gamma():
    spec = two_delta_spec()
    assert lipschitz_constant(spec) == (1.0, False)
    assert gamma_bound(spec) == 0.5
    heavy = StaticDeltaFamilySpec([-2.0, 2.0], spec.couplings, mass=constant(2.0), lipschitz=1.0)
    assert gamma_bound(heavy) == 2.0
    undeclared = StaticDeltaFamilySpec([-2.0, 2.0], spec.couplings, window=(0.0, 10.0))
    c, estimated = lipschitz_constant(undeclared)
    assert estimated and 0.9 < c <= 1.0 + 1e-12
    assert estimate_lipschitz(undeclared) == c


def test_mass_sup_for_expressions():
    g = SpatialGrid(3.0, 61)
    m = expression([{"type": "poly", "coeffs": [1.0]}, {"type": "cos", "amp": 0.5, "freq": 1.0}])
    spec = StaticDeltaFamilySpec([0.0], [constant(1.0)], mass=m)
    assert np.isclose(mass_sup(spec, g), 1.5)
    with pytest.raises(ValueError):
        mass_sup(spec)


def linear_moving(v_rel=0.1, v_center=0.0):
    return MovingDeltaSpec(poly(-1.0, v_center - v_rel), poly(1.0, v_center + v_rel),
                           constant(1.0), constant(1.0), window=(0.0, 1.0))


def test_moving_geometry():
    spec = linear_moving(0.1, 0.2)
    assert spec.center(0.5) == pytest.approx(0.1)
    assert spec.relative(0.5) == pytest.approx(1.05)
    assert spec.center_rate(0.3) == pytest.approx(0.2)
    assert spec.relative_rate(0.3) == pytest.approx(0.1)


def test_moving_spec_rejects_crossing():
    with pytest.raises(ValueError):
        MovingDeltaSpec(poly(-1.0, 3.0), poly(1.0), constant(1.0), constant(1.0))


def test_moving_direct_operator():
    g = SpatialGrid(20.0, 401)
    spec = linear_moving()
    H = assemble_moving_direct(spec, g, 0.5)
    # -(1/2) d^2/dx^2
    assert np.allclose(H.offdiag, -0.5 / g.h**2)
    added = H.diag - 1.0 / g.h**2
    assert np.isclose(added[g.nearest_interior(-1.05)], 1.0 / g.h)
    assert np.isclose(added[g.nearest_interior(1.05)], 1.0 / g.h)
    assert MovingFamily(spec, g)(0.5).equals(H)


def test_time_integrals_linear_trajectories():
    # x = 1 + 0.1 t, y = 0.2 t: a2 = 1.01 t, a1 = 0.02 t, a0 = 0.04 t
    spec = linear_moving(0.1, 0.2)
    a2, a1, a0 = time_integrals(spec, 0.6, 0.01)
    assert a2 == pytest.approx(0.606, rel=1e-13)
    assert a1 == pytest.approx(0.012, rel=1e-13)
    assert a0 == pytest.approx(0.024, rel=1e-13)
    beta0, beta1 = beta_coefficients(spec, 0.6, 0.01)
    # beta1 = a2 - x xdot, beta0 = a1 - x ydot
    assert beta1 == pytest.approx(0.606 - 1.06 * 0.1, rel=1e-13)
    assert beta0 == pytest.approx(0.012 - 1.06 * 0.2, rel=1e-13)


def test_time_integrals_against_adaptive_quadrature():
    spec = MovingDeltaSpec(
        expression([{"type": "poly", "coeffs": [-1.0]}, {"type": "sin", "amp": 0.2, "freq": 3.0}]),
        expression([{"type": "poly", "coeffs": [1.0]}, {"type": "cos", "amp": 0.1, "freq": 2.0}]),
        constant(1.0), constant(1.0), window=(0.0, 1.0))
    t = 0.83
    ref = [
        scipy.integrate.quad(lambda s: spec.relative_rate(s) ** 2 + 1, 0, t)[0],
        scipy.integrate.quad(lambda s: spec.relative_rate(s) * spec.center_rate(s), 0, t)[0],
        scipy.integrate.quad(lambda s: spec.center_rate(s) ** 2, 0, t)[0],
    ]
    got = time_integrals(spec, t, 1e-3)
    assert np.allclose(got, ref, rtol=0, atol=1e-11)


def test_kappa_scaled():
    spec = linear_moving()
    assert kappa_scaled(spec, 1.0) == pytest.approx((1 / 1.1, 1 / 1.1))


def test_L_is_hermitian_and_complex():
    g = SpatialGrid(10.0, 101)
    L = assemble_L(linear_moving(0.1, 0.2), g, 0.5, 0.01)
    assert not L.is_real
    D = L.to_dense()
    assert np.allclose(D, D.conj().T)


def test_L_on_gaussian_matches_closed_form():
    # with no couplings, for f = exp(-xi^2/2) and g = (i + b1) xi + b0:
    # L f = [(1 - i b1 + g^2) / (2 x^2) + xi^2 / 2] f
    spec = MovingDeltaSpec(poly(-1.0, -0.1), poly(1.0, 0.3), constant(0.0), constant(0.0),
                           window=(0.0, 1.0))
    t, q = 0.7, 1e-3
    x = spec.relative(t)
    beta0, beta1 = beta_coefficients(spec, t, q)
    errs = []
    for n in (201, 401, 801):
        grid = SpatialGrid(10.0, n)
        xi = grid.interior
        f = np.exp(-xi**2 / 2)
        gg = (1j + beta1) * xi + beta0
        exact = ((1 - 1j * beta1 + gg**2) / (2 * x * x) + xi**2 / 2) * f
        got = apply(assemble_L(spec, grid, t, q), f)
        inner = np.abs(xi) < 6
        errs.append(np.max(np.abs(got - exact)[inner]))
    assert errs[-1] < 1e-3
    assert 3.5 < errs[0] / errs[1] < 4.5 and 3.5 < errs[1] / errs[2] < 4.5


def test_comoving_family_points_at_unit_positions():
    g = SpatialGrid(10.0, 201)
    spec = linear_moving()
    fam = CoMovingFamily(spec, g, 0.01)
    L = fam(0.0)
    no_kappa = MovingDeltaSpec(spec.x1, spec.x2, constant(0.0), constant(0.0), spec.window)
    added = L.diag - CoMovingFamily(no_kappa, g, 0.01)(0.0).diag
    assert set(np.nonzero(added)[0]) == {g.nearest_interior(-1.0), g.nearest_interior(1.0)}


@given(st.floats(0.0, 10.0))
def test_static_family_is_pure(t):
    g = SpatialGrid(20.0, 128)
    fam = StaticFamily(two_delta_spec(), g)
    assert fam(t).equals(fam(t))


def test_no_warning_for_separated_points():
    g = SpatialGrid(20.0, 256)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        StaticFamily(two_delta_spec(), g)(0.0)
