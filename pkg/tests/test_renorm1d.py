import math

import numpy as np
import pytest

from qprenorm.analytic import DiscDomain, TaylorPoly, differentiate, evaluate, sup_norm, taylor_at_zero_matrix
from qprenorm.errors import DegenerateScaling, InclusionFailure
from qprenorm.flm import FLMFamily, superstable_sequence
from qprenorm.renorm1d import (
    UnimodalMap,
    artifact_power,
    check_h0_inclusion,
    d_renormalize,
    domain_check,
    feigenbaum_spectrum,
    fixed_point_residual,
    newton_fixed_point,
    parity_defect,
    renormalize,
    superstable_parameter,
    two_cycle,
)
from qprenorm.spectral import fixed_point

# Taylor coefficients in x of the Feigenbaum function normalized by g(0) = 1,
# powers 2, 4, ..., 12 (published high-precision values, rounded to 10 places)
LITERATURE_EVEN_COEFFS = [
    -1.5276329970,
    0.1048151948,
    0.0267056705,
    -0.0035274097,
    0.0000816010,
    0.0000252851,
]

FEIGENBAUM_DELTA = 4.66920160910299
FAMILY_A = FLMFamily("A")


@pytest.fixture(scope="module")
def constants80(phi80):
    return feigenbaum_spectrum(phi80)


def logistic_map(alpha, order=80):
    return FAMILY_A.base_map(alpha, order)


# fixed point ----------------------------------------------------------------------

def test_fixed_point_residual(phi80):
    assert fixed_point_residual(phi80) < 1e-11


def test_fixed_point_normalized(phi80):
    assert abs(phi80(0.0) - 1.0) < 1e-10


def test_fixed_point_scaling(phi80):
    assert phi80.a == pytest.approx(-0.3995353, abs=1e-6)
    assert 1 / phi80.a == pytest.approx(-2.5029079, abs=1e-5)


def test_fixed_point_matches_literature_coefficients(phi80):
    x_coeffs = taylor_at_zero_matrix(phi80.domain, phi80.order) @ phi80.psi.coeffs
    assert x_coeffs[0] == pytest.approx(1.0, abs=1e-10)
    np.testing.assert_allclose(x_coeffs[2:14:2], LITERATURE_EVEN_COEFFS, atol=1e-9)


def test_fixed_point_is_even(phi80):
    assert parity_defect(phi80.psi) < 1e-10


def test_fixed_point_maps_to_itself(phi80):
    assert sup_norm(renormalize(phi80).psi - phi80.psi) < 1e-8


def test_newton_from_default_seed_small_order():
    phi = newton_fixed_point(order=40)
    assert phi.a == pytest.approx(-0.3995353, abs=1e-6)


# domain check ---------------------------------------------------------------------

def test_domain_check_fixed_point(phi80):
    assert domain_check(phi80, 0.01).ok


def test_domain_check_increasing_map():
    rep = domain_check(UnimodalMap.from_monomials([1.0, 1.0], 4))
    assert rep.a == pytest.approx(2.0)
    assert not rep.conditions["a<0"][0]


def test_domain_check_logistic():
    assert domain_check(logistic_map(3.3)).ok
    # below 1 + sqrt 5 the normalized logistic map has psi(1) > 0
    rep = domain_check(logistic_map(3.2))
    assert not rep.conditions["a<0"][0] and rep.a == pytest.approx(1 - 3.2 * 1.2 / 4)


# renormalize ----------------------------------------------------------------------

def test_renormalize_superstable_two_is_degenerate():
    a1 = 1 + math.sqrt(5)
    with pytest.raises(DegenerateScaling):
        renormalize(logistic_map(a1))


def critical_return(m, steps):
    x = 0.0
    for _ in range(steps):
        x = float(m(x))
    return x


@pytest.mark.parametrize("n", [2, 3, 4])
def test_renormalize_lowers_superstable_period(n):
    alphas = superstable_sequence(FAMILY_A, n)
    m = logistic_map(alphas[-1])
    assert abs(critical_return(m, 2 ** n)) < 1e-10
    r = renormalize(m)
    assert abs(critical_return(r, 2 ** (n - 1))) < 1e-7


def test_renormalize_preserves_normalization():
    r = renormalize(logistic_map(3.5))
    assert r(0.0) == pytest.approx(1.0, abs=1e-12)


# derivative ----------------------------------------------------------------------

def test_d_renormalize_zero_direction(phi80):
    assert not np.any(d_renormalize(phi80, TaylorPoly(np.zeros(81))).coeffs)


@pytest.mark.parametrize("base", ["phi", "logistic"])
def test_d_renormalize_finite_difference(phi40, base):
    m = phi40 if base == "phi" else logistic_map(3.45, 40)
    rng = np.random.default_rng(11)
    xs = np.linspace(-1.0, 1.0, 32)
    h = 1e-6
    worst = 0.0
    for _ in range(20):
        c = rng.standard_normal(41) * 0.7 ** np.arange(41)
        u = TaylorPoly(c)
        u = u / sup_norm(u)
        plus = renormalize(UnimodalMap(m.psi + h * u, check=False)).psi
        minus = renormalize(UnimodalMap(m.psi - h * u, check=False)).psi
        fd = (evaluate(plus, xs) - evaluate(minus, xs)) / (2 * h)
        an = evaluate(d_renormalize(m, u), xs)
        worst = max(worst, np.max(np.abs(fd - an)) / np.max(np.abs(fd)))
    assert worst < 1e-6


def test_power_iteration_gives_delta(phi80):
    # directions tangent to the normalized maps (u(0) = 0); that subspace is
    # invariant, and it excludes the 1/a**2 mode that rescales psi(0)
    rng = np.random.default_rng(5)
    u = TaylorPoly(rng.standard_normal(81) * 0.5 ** np.arange(81))
    u = u - float(evaluate(u, 0.0))
    for _ in range(30):
        w = d_renormalize(phi80, u)
        lam = float(np.dot(w.coeffs, u.coeffs) / np.dot(u.coeffs, u.coeffs))
        u = w / sup_norm(w)
    assert lam == pytest.approx(FEIGENBAUM_DELTA, abs=1e-4)


# spectrum -------------------------------------------------------------------------

def test_feigenbaum_delta(constants80):
    assert constants80.delta_feig == pytest.approx(4.66920, abs=1e-4)
    assert constants80.delta_feig == pytest.approx(FEIGENBAUM_DELTA, abs=1e-9)
    assert constants80.a_fixed < 0


def test_unstable_eigenvector_even(constants80):
    assert parity_defect(constants80.unstable_eigvec) < 1e-8


def test_artifacts_are_powers_of_a(constants80):
    a = constants80.a_fixed
    assert constants80.artifacts
    for i, j in constants80.artifacts.items():
        assert constants80.eigenvalues[i] == pytest.approx(a ** j, rel=1e-6)
    expanding = [i for i, lam in enumerate(constants80.eigenvalues) if abs(lam) > 1 + 1e-6]
    assert set(expanding) - set(constants80.artifacts) == {int(np.argmin(np.abs(constants80.eigenvalues - constants80.delta_feig)))}


def test_artifact_power_lookup():
    a = -0.4
    assert artifact_power(a ** -1, a) == -1
    assert artifact_power(a ** 3, a) == 3
    assert artifact_power(0.123, a) is None


@pytest.mark.slow
def test_delta_stable_across_orders(constants80):
    for n in (60, 100):
        assert feigenbaum_spectrum(fixed_point(n)).delta_feig == pytest.approx(constants80.delta_feig, abs=1e-6)


# H0 inclusion --------------------------------------------------------------------

def test_h0_default_domain(phi80):
    rep = check_h0_inclusion(phi80)
    assert rep.passed and rep.min_margin > 0 and rep.interior_ok
    doubled = check_h0_inclusion(phi80, samples=2 * rep.samples)
    assert doubled.min_margin == pytest.approx(rep.min_margin, rel=0.1)


def test_h0_large_domain_fails(phi80):
    with pytest.raises(InclusionFailure) as exc:
        check_h0_inclusion(phi80, domain=DiscDomain(0.0, 10.0))
    assert exc.value.sample is not None


def test_h0_scale_subcheck_triangle_inequality(phi80):
    d = phi80.domain
    a = phi80.a
    assert abs(a) * d.radius + abs(a * d.center - d.center) < d.radius
    assert check_h0_inclusion(phi80).scale_margin > 0


# superstable parameters ------------------------------------------------------------

def test_superstable_period_two_closed_form():
    # l(x) = alpha x (1 - x) with l(l(1/2)) = 1/2 solves to alpha = 1 + sqrt 5
    a1 = superstable_parameter(FAMILY_A, 1, (3.1, 3.4), guess=3.2)
    assert a1 == pytest.approx(1 + math.sqrt(5), abs=1e-10)


def quadratic_family(c):
    # x -> c - x**2 is not normalized, so its critical point can be fixed
    return TaylorPoly.from_monomials([c, 0.0, -1.0], 2), TaylorPoly.constant(1.0, 2)


def test_superstable_period_one():
    assert superstable_parameter(quadratic_family, 0, (-0.5, 0.5), guess=0.3) == pytest.approx(0.0, abs=1e-14)
    # period two: c - c**2 = 0 at c = 1
    assert superstable_parameter(quadratic_family, 1, (0.5, 1.2), guess=0.9) == pytest.approx(1.0, abs=1e-12)


def test_superstable_orbits_close():
    for n, al in enumerate(superstable_sequence(FAMILY_A, 6), start=1):
        assert abs(critical_return(logistic_map(al, 2), 2 ** n)) < 1e-12


def test_feigenbaum_ratio_from_superstable_sequence():
    s = superstable_sequence(FAMILY_A, 9)
    ratios = [(s[n - 1] - s[n - 2]) / (s[n] - s[n - 1]) for n in range(3, 9)]
    assert abs(ratios[-1] - 4.669) < 1e-2
    assert abs(ratios[-1] - FEIGENBAUM_DELTA) < abs(ratios[0] - FEIGENBAUM_DELTA)


# two-cycle ----------------------------------------------------------------------

def test_two_cycle_superstable():
    p0, p1 = two_cycle(logistic_map(1 + math.sqrt(5), 10))
    assert abs(p0) < 1e-12 and p1 == pytest.approx(1.0, abs=1e-12)


def test_two_cycle_quadratic_closed_form():
    # psi(x) = 1 - x^2: psi(psi(x)) = x factors as (x^2 + x - 1)(x^2 - x) = 0,
    # the 2-cycle is {0, 1}
    p0, p1 = two_cycle(UnimodalMap.from_monomials([1.0, 0.0, -1.0], 4))
    assert {round(p0, 12), round(p1, 12)} == {0.0, 1.0}


def test_two_cycle_of_scaled_quadratic():
    # psi(x) = 1 - k x^2, k = 1.3: cycle points solve k^2 x^2 - k x + 1 - k = 0
    k = 1.3
    p0, p1 = two_cycle(UnimodalMap.from_monomials([1.0, 0.0, -k], 4))
    roots = np.roots([k * k, -k, 1 - k])
    np.testing.assert_allclose(sorted([p0, p1]), sorted(roots.real), atol=1e-12)
    assert p0 == pytest.approx(min(roots.real, key=abs), abs=1e-12)


def test_two_cycle_of_fixed_point_repels(phi80):
    p0, p1 = two_cycle(phi80)
    d = differentiate(phi80.psi)
    assert p1 == pytest.approx(float(phi80(p0)), abs=1e-12)
    assert p0 == pytest.approx(float(phi80(p1)), abs=1e-10)
    assert abs(evaluate(d, p0) * evaluate(d, p1)) > 1
