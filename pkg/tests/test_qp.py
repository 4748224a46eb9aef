import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qprenorm.analytic import PairField, QPFunction, TaylorPoly, compose, differentiate, evaluate, scale_arg, sup_norm
from qprenorm.errors import AliasWarning, DegenerateScaling, ZeroSectionValue
from qprenorm.io import read_matrix, write_matrix
from qprenorm.qp import (
    ModeAction,
    SectionPoint,
    apply_L1,
    apply_L2,
    apply_Lomega,
    apply_Lomega_prime,
    dT_mode,
    phase_reduce,
    phase_shift_tgamma,
    project_pi1,
    qp_renormalize,
    rotate_Rgamma,
    section_values,
)
from qprenorm.renorm1d import d_renormalize

XS = np.linspace(-1.0, 1.0, 32)
angle = st.floats(-2.0, 2.0, allow_nan=False)


def random_pair(rng, n, decay=0.7):
    w = decay ** np.arange(n + 1)
    return PairField(TaylorPoly(rng.standard_normal(n + 1) * w), TaylorPoly(rng.standard_normal(n + 1) * w))


# L1, L2 ------------------------------------------------------------------------------

def test_L1_zero(act30):
    assert not np.any(apply_L1(act30, TaylorPoly(np.zeros(31))).coeffs)


def test_L1_on_constant_pointwise(act30):
    psi, a = act30.psi, act30.a
    got = evaluate(apply_L1(act30, TaylorPoly.constant(1.0, 30)), XS)
    expect = evaluate(differentiate(psi), evaluate(psi, a * XS)) / a
    np.testing.assert_allclose(got, expect, atol=1e-10)


def test_L1_general_pointwise(act30):
    rng = np.random.default_rng(1)
    g = TaylorPoly(rng.standard_normal(31) * 0.6 ** np.arange(31))
    psi, a = act30.psi, act30.a
    got = evaluate(apply_L1(act30, g), XS)
    expect = evaluate(differentiate(psi), evaluate(psi, a * XS)) * evaluate(g, a * XS) / a
    np.testing.assert_allclose(got, expect, atol=1e-10)


def test_L2_constant(act30):
    out = apply_L2(act30, TaylorPoly.constant(2.5, 30))
    np.testing.assert_allclose(out.coeffs, TaylorPoly.constant(2.5 / act30.a, 30).coeffs, atol=1e-14)


def test_L2_identity(act30):
    out = apply_L2(act30, TaylorPoly.identity(30))
    np.testing.assert_allclose(evaluate(out, XS), evaluate(act30.psi, act30.a * XS) / act30.a, atol=1e-12)


def test_L2_general_pointwise(act30):
    rng = np.random.default_rng(2)
    g = TaylorPoly(rng.standard_normal(31) * 0.6 ** np.arange(31))
    psi, a = act30.psi, act30.a
    np.testing.assert_allclose(
        evaluate(apply_L2(act30, g), XS), evaluate(g, evaluate(psi, a * XS)) / a, atol=1e-10
    )


def test_L2_matches_composition(act30):
    rng = np.random.default_rng(9)
    g = TaylorPoly(rng.standard_normal(31) * 0.6 ** np.arange(31))
    inner = scale_arg(act30.psi, act30.a)
    np.testing.assert_allclose(apply_L2(act30, g).coeffs, compose(g, inner).coeffs / act30.a, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31), st.floats(-3, 3), st.floats(-3, 3), angle)
def test_linearity(act30, seed, al, be, omega):
    rng = np.random.default_rng(seed)
    p, q = random_pair(rng, 30), random_pair(rng, 30)
    for op in (lambda g: apply_L1(act30, g), lambda g: apply_L2(act30, g)):
        lhs = op(p.u * al + q.u * be)
        rhs = op(p.u) * al + op(q.u) * be
        assert sup_norm(lhs - rhs) < 1e-12 * (1 + sup_norm(lhs))
    for op in (
        lambda x: apply_Lomega(act30, omega % 1.0, x),
        lambda x: rotate_Rgamma(omega, x),
        lambda x: phase_shift_tgamma(omega, x),
        lambda x: dT_mode(act30, omega % 1.0, 3, x),
    ):
        lhs = op(p * al + q * be)
        rhs = op(p) * al + op(q) * be
        assert sup_norm(lhs - rhs) < 1e-12 * (1 + sup_norm(lhs))


def test_pi1_linear():
    rng = np.random.default_rng(4)
    f = QPFunction.from_pair(random_pair(rng, 6), k=1, K=2, base=TaylorPoly(rng.standard_normal(7)))
    g = QPFunction.from_pair(random_pair(rng, 6), k=1, K=2)
    lhs = project_pi1(f * 2.0 + g * -0.5)
    rhs = project_pi1(f) * 2.0 + project_pi1(g) * -0.5
    assert sup_norm(lhs - rhs) < 1e-12


# L_omega -------------------------------------------------------------------------------

def test_Lomega_at_zero_is_L1_plus_L2(act30):
    rng = np.random.default_rng(6)
    p = random_pair(rng, 30)
    out = apply_Lomega(act30, 0.0, p)
    np.testing.assert_allclose(out.u.coeffs, (apply_L1(act30, p.u) + apply_L2(act30, p.u)).coeffs, atol=1e-13)
    np.testing.assert_allclose(out.v.coeffs, (apply_L1(act30, p.v) + apply_L2(act30, p.v)).coeffs, atol=1e-13)


def test_Lomega_at_zero_is_dR_without_rank_one(phi30, act30):
    rng = np.random.default_rng(7)
    u = TaylorPoly(rng.standard_normal(31) * 0.7 ** np.arange(31))
    out = apply_Lomega(act30, 0.0, PairField(u, TaylorPoly(np.zeros(31))))
    E = TaylorPoly(act30.E)
    expect = d_renormalize(phi30, u) - E * float(evaluate(u, 1.0))
    assert sup_norm(out.u - expect) < 1e-9
    assert sup_norm(out.v) == 0.0


def test_Lomega_zero(act30):
    assert sup_norm(apply_Lomega(act30, 0.3, PairField.zeros(30))) == 0.0


def test_Lomega_block_formula(act30):
    rng = np.random.default_rng(8)
    p = random_pair(rng, 30)
    w = 0.377
    c, s = np.cos(2 * np.pi * w), np.sin(2 * np.pi * w)
    L1u, L1v = apply_L1(act30, p.u), apply_L1(act30, p.v)
    L2u, L2v = apply_L2(act30, p.u), apply_L2(act30, p.v)
    out = apply_Lomega(act30, w, p)
    assert sup_norm(out.u - (L1u + L2u * c - L2v * s)) < 1e-12
    assert sup_norm(out.v - (L1v + L2u * s + L2v * c)) < 1e-12
    M = act30.lomega_matrix(w)
    np.testing.assert_allclose(M @ p.vector(), out.vector(), atol=1e-12)


def test_Lomega_commutes_with_rotation(act30):
    rng = np.random.default_rng(10)
    n = act30.order
    for _ in range(10):
        w, g = rng.random(), rng.random()
        p = random_pair(rng, n)
        lhs = apply_Lomega(act30, w, rotate_Rgamma(g, p))
        rhs = rotate_Rgamma(g, apply_Lomega(act30, w, p))
        assert sup_norm(lhs - rhs) < 1e-10
        t = 2 * np.pi * g
        I = np.eye(n + 1)
        R = np.block([[np.cos(t) * I, -np.sin(t) * I], [np.sin(t) * I, np.cos(t) * I]])
        M = act30.lomega_matrix(w)
        assert np.linalg.norm(M @ R - R @ M) < 1e-10


def test_matrix_export_round_trip(act30, tmp_path):
    path = tmp_path / "L.csv"
    write_matrix(path, act30.lomega_matrix(0.25))
    np.testing.assert_array_equal(read_matrix(path), act30.lomega_matrix(0.25))


# R_gamma and t_gamma -------------------------------------------------------------------

def test_rotation_identity_and_quarter():
    rng = np.random.default_rng(12)
    p = random_pair(rng, 5)
    assert sup_norm(rotate_Rgamma(0.0, p) - p) == 0.0
    q = rotate_Rgamma(0.25, p)
    assert sup_norm(q - PairField(-p.v, p.u)) < 1e-15


@given(angle)
def test_rotation_inverse(g):
    p = random_pair(np.random.default_rng(13), 5)
    assert sup_norm(rotate_Rgamma(g, rotate_Rgamma(-g, p)) - p) < 1e-14


def test_tgamma_identity_and_quarter():
    rng = np.random.default_rng(14)
    u = TaylorPoly(rng.standard_normal(6))
    p = PairField(u, TaylorPoly(np.zeros(6)))
    assert sup_norm(phase_shift_tgamma(0.0, p) - p) == 0.0
    q = phase_shift_tgamma(0.25, p)
    assert sup_norm(q - PairField(TaylorPoly(np.zeros(6)), -u)) < 1e-15


@given(angle, angle)
def test_tgamma_group(g, h):
    p = random_pair(np.random.default_rng(15), 5)
    lhs = phase_shift_tgamma(g, phase_shift_tgamma(h, p))
    assert sup_norm(lhs - phase_shift_tgamma(g + h, p)) < 1e-14


@given(angle, st.floats(0, 1), st.floats(-1, 1))
def test_tgamma_shifts_theta(g, th, x):
    p = random_pair(np.random.default_rng(16), 5)
    assert phase_shift_tgamma(g, p)(th, x) == pytest.approx(p(th + g, x), abs=1e-12)


# phase reduction ------------------------------------------------------------------------

def pair_with_section_values(u0, v0, n=5):
    d = PairField.zeros(n).domain
    u = TaylorPoly.constant(u0, n) + TaylorPoly(np.r_[0.0, 0.3, np.zeros(n - 1)], d)
    v = TaylorPoly.constant(v0, n) + TaylorPoly(np.r_[0.0, -0.2, np.zeros(n - 1)], d)
    # subtract the linear parts' values at 0 so u(0) = u0 and v(0) = v0
    return PairField(u - float(evaluate(u, 0.0)) + u0, v - float(evaluate(v, 0.0)) + v0)


def test_phase_reduce_three_four_five():
    s, g = phase_reduce(pair_with_section_values(3.0, 4.0))
    u0, v0 = section_values(s.pair)
    assert u0 == pytest.approx(0.0, abs=1e-14) and v0 == pytest.approx(5.0, abs=1e-14)


def test_phase_reduce_already_reduced():
    p = pair_with_section_values(0.0, 2.0)
    s, g = phase_reduce(p)
    assert g == 0.0
    assert sup_norm(s.pair - p) < 1e-15


def test_phase_reduce_zero_raises():
    with pytest.raises(ZeroSectionValue):
        phase_reduce(pair_with_section_values(0.0, 0.0))


def test_phase_reduce_gamma_applies():
    p = random_pair(np.random.default_rng(17), 8)
    s, g = phase_reduce(p)
    assert 0 <= g < 1
    assert sup_norm(phase_shift_tgamma(g, p) - s.pair) < 1e-12


@settings(max_examples=40)
@given(st.integers(0, 2 ** 31), angle)
def test_phase_reduce_is_quotient(seed, beta):
    p = random_pair(np.random.default_rng(seed), 8)
    s1, _ = phase_reduce(p)
    s2, _ = phase_reduce(phase_shift_tgamma(beta, p))
    assert sup_norm(s1.pair - s2.pair) < 1e-10 * sup_norm(p)


def test_section_point_validates():
    with pytest.raises(ValueError):
        SectionPoint(pair_with_section_values(1.0, 1.0))
    with pytest.raises(ValueError):
        SectionPoint(pair_with_section_values(0.0, -1.0))


# pi_1 -------------------------------------------------------------------------------------

def test_pi1_mode_zero_only():
    f = QPFunction.uncoupled(TaylorPoly(np.arange(4.0)), K=2)
    assert sup_norm(project_pi1(f)) == 0.0


def test_pi1_cos_mode():
    u = TaylorPoly(np.array([1.0, -2.0, 0.5]))
    f = QPFunction.from_pair(PairField(u, TaylorPoly(np.zeros(3))))
    p = project_pi1(f)
    np.testing.assert_allclose(p.u.coeffs, u.coeffs, atol=1e-15)
    assert sup_norm(p.v) == 0.0


def test_pi1_idempotent():
    p = random_pair(np.random.default_rng(18), 6)
    f = QPFunction.from_pair(p, k=1, K=3, base=TaylorPoly(np.ones(7)))
    once = project_pi1(f)
    twice = project_pi1(QPFunction.from_pair(once))
    np.testing.assert_array_equal(once.vector(), twice.vector())
    assert sup_norm(once - p) < 1e-15


# dT_mode -----------------------------------------------------------------------------------

def test_dT_mode_contract(act30):
    p = random_pair(np.random.default_rng(19), 30)
    w = 0.6180339887498949
    for k in (1, 2, 3, -1):
        lhs = dT_mode(act30, w, k, p)
        rhs = dT_mode(act30, (k * w) % 1.0, 1, p)
        assert sup_norm(lhs - rhs) < 1e-12
    # the shift theta -> theta + omega acts on the (u, v) pair as L at -omega
    assert sup_norm(dT_mode(act30, w, 1, p) - apply_Lomega(act30, 1 - w, p)) < 1e-12
    assert sup_norm(dT_mode(act30, w, 2, p) - apply_Lomega(act30, (-2 * w) % 1.0, p)) < 1e-12


def test_dT_mode_zero_rejected(act30):
    with pytest.raises(ValueError):
        dT_mode(act30, 0.3, 0, PairField.zeros(30))


def fd_qp_derivative(phi, omega, V, K, h=1e-6):
    base = QPFunction.uncoupled(phi.psi, K)
    plus = qp_renormalize(base + V * h, omega)
    minus = qp_renormalize(base - V * h, omega)
    return (plus - minus) / (2 * h)


@pytest.mark.parametrize("phi_name", ["phi30", "phi40"])
def test_dT_mode_matches_finite_difference(request, phi_name):
    phi = request.getfixturevalue(phi_name)
    act = ModeAction(phi)
    n = phi.order
    rng = np.random.default_rng(20)
    w = 0.6180339887498949
    worst = 0.0
    for _ in range(20):
        p = random_pair(rng, n)
        p = p / sup_norm(p)
        k = int(rng.integers(1, 3))
        fd = fd_qp_derivative(phi, w, QPFunction.from_pair(p, k=k, K=2), 2)
        m = fd.modes[fd.K + k]
        got = PairField(TaylorPoly(2 * m.real), TaylorPoly(-2 * m.imag))
        expect = dT_mode(act, w, k, p)
        worst = max(worst, sup_norm(got - expect) / sup_norm(expect))
        # single modes stay single modes
        other = [j for j in range(-2, 3) if abs(j) != k]
        assert max(np.max(np.abs(fd.modes[fd.K + j])) for j in other) < 1e-8
    assert worst < 1e-6


def test_dT_mode_mixed_two_mode_input(phi30, act30):
    rng = np.random.default_rng(21)
    p1, p2 = random_pair(rng, 30), random_pair(rng, 30)
    w = 0.3
    V = QPFunction.from_pair(p1, k=1, K=2) + QPFunction.from_pair(p2, k=2, K=2)
    fd = fd_qp_derivative(phi30, w, V, 2)
    for k, p in ((1, p1), (2, p2)):
        m = fd.modes[fd.K + k]
        got = PairField(TaylorPoly(2 * m.real), TaylorPoly(-2 * m.imag))
        expect = dT_mode(act30, w, k, p)
        assert sup_norm(got - expect) < 1e-6 * sup_norm(expect)


# qp_renormalize --------------------------------------------------------------------------

def test_qp_renormalize_uncoupled(phi30):
    from qprenorm.renorm1d import renormalize

    out = qp_renormalize(QPFunction.uncoupled(phi30.psi, K=2), 0.618)
    np.testing.assert_allclose(out.mode(0).coeffs, renormalize(phi30).psi.coeffs, atol=1e-12)
    assert np.max(np.abs(np.delete(out.modes, out.K, axis=0))) < 1e-12


def test_qp_renormalize_scale_is_mode_zero(phi30):
    # the mean of cos vanishes, so a = psi(1) and the result at eps -> 0 is unchanged
    eps = 1e-3
    V = QPFunction.from_pair(PairField(TaylorPoly.constant(1.0, 30), TaylorPoly(np.zeros(31))), K=1)
    f = QPFunction.uncoupled(phi30.psi, 1) + V * eps
    assert float(evaluate(f.mode(0), 1.0)) == phi30.a
    out = qp_renormalize(f, 0.2)
    assert np.all(np.isfinite(out.modes))


def test_qp_renormalize_degenerate():
    psi = TaylorPoly.from_monomials([1.0, 0.0, -1.0], 10)  # psi(1) = 0
    with pytest.raises(DegenerateScaling):
        qp_renormalize(QPFunction.uncoupled(psi, 1), 0.3)


def test_qp_renormalize_grid_too_small(phi30):
    with pytest.raises(ValueError):
        qp_renormalize(QPFunction.uncoupled(phi30.psi, 2), 0.3, grid=5)


def test_qp_renormalize_alias_warning(phi30):
    big = QPFunction.from_pair(PairField(TaylorPoly.constant(0.05, 30), TaylorPoly(np.zeros(31))), k=1, K=1)
    f = QPFunction.uncoupled(phi30.psi, 1) + big
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        qp_renormalize(f, 0.3)
    assert any(issubclass(r.category, AliasWarning) for r in rec)


# L'_omega --------------------------------------------------------------------------------

def test_Lomega_prime_dominant_direction_parallel(act30):
    w = 0.6180339887498949
    s, _ = phase_reduce(random_pair(np.random.default_rng(22), 30))
    for _ in range(400):
        s, nrm = apply_Lomega_prime(act30, w, s)
        s = SectionPoint(s.pair / nrm)
    s2, nrm = apply_Lomega_prime(act30, w, s)
    assert sup_norm(s2.pair / nrm - s.pair) < 1e-6


def test_Lomega_prime_rotation_quotient(act30):
    rng = np.random.default_rng(23)
    p = random_pair(rng, 30)
    s, _ = phase_reduce(p)
    for beta in rng.random(5):
        a, _ = apply_Lomega_prime(act30, 0.41, s)
        b, _ = apply_Lomega_prime(act30, 0.41, rotate_Rgamma(beta, s.pair))
        assert sup_norm(a.pair - b.pair) < 1e-10 * sup_norm(a.pair)


def test_Lomega_prime_zero_input(act30):
    with pytest.raises(ZeroSectionValue):
        apply_Lomega_prime(act30, 0.41, PairField.zeros(30))
