"""Linear operators of the quasi-periodic renormalization and its symmetries.

For a base map psi with a = psi(1) the two building blocks are

    L1 g(z) = psi'(psi(a z)) g(a z) / a
    L2 g(z) = g(psi(a z)) / a

and on pairs (u, v) the rotation-coupled operator is

    L_omega(u, v) = (L1 u + c L2 u - s L2 v,  L1 v + s L2 u + c L2 v),

with c, s the cosine and sine of 2 pi omega.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .analytic import (
    CONTAINMENT_MARGIN,
    PairField,
    QPFunction,
    TaylorPoly,
    compose,
    derivative_coeffs,
    evaluate,
    range_excess,
    sample_matrix,
    scale_arg_matrix,
)
from .errors import (
    AliasWarning,
    ContainmentViolation,
    DegenerateScaling,
    ZeroSectionValue,
)
from .rotation import as_rotation

SCALE_FLOOR = 1e-8
SECTION_FLOOR = 1e-13


def omega_value(omega):
    if isinstance(omega, (int, float, np.integer, np.floating)):
        return float(omega)
    return as_rotation(omega).value


def _psi_of(base):
    return base.psi if hasattr(base, "psi") else base


class ModeAction:
    """Matrices of L1, L2 and the derivative of the 1-D renormalization at one base map.

    Built once per base; every application afterwards is a matrix-vector
    product.
    """

    def __init__(self, base, check=True, margin=CONTAINMENT_MARGIN, floor=SCALE_FLOOR):
        psi = _psi_of(base)
        self.psi = psi
        self.domain = d = psi.domain
        n = psi.order
        c = np.asarray(psi.coeffs, dtype=float)
        a = float(evaluate(psi, 1.0))
        if abs(a) < floor:
            raise DegenerateScaling(f"|psi(1)| = {abs(a):.3e} below floor {floor:.1e}")
        self.a = a
        S = scale_arg_matrix(d, a, n)
        ca = S @ c  # psi(a z)
        w = ca.copy()
        w[0] -= d.center
        w /= d.radius
        if check:
            inner = TaylorPoly(ca, d)
            lin = TaylorPoly(d.affine(a, 0.0, 1), d)
            for name, q in (("a * disc", lin), ("psi(a * disc)", inner)):
                excess = range_excess(q)
                if excess > margin:
                    raise ContainmentViolation(f"{name} leaves the disc by {excess:.3e} radii")
        P = _kernels.power_table(w, n)  # column j: w**j
        dc = derivative_coeffs(c, d.radius)
        dpsi_inner = P @ dc  # psi'(psi(a z))
        h = dpsi_inner / a
        T = np.zeros((n + 1, n + 1))
        for j in range(n + 1):
            T[j:, j] = h[: n + 1 - j]
        self.S = S
        self.L1 = T @ S
        self.L2 = P / a
        self.renormalized = (P @ c) / a
        x = d.affine(1.0, 0.0, n)
        prod = _kernels.trunc_mul(dpsi_inner, S @ dc, n)
        self.E = _kernels.trunc_mul(x, prod, n) / a - (P @ c) / a ** 2
        self.ev1 = ((1.0 - d.center) / d.radius) ** np.arange(n + 1)
        self._dR = None

    @property
    def order(self):
        return self.psi.order

    @property
    def dR(self):
        """Matrix of the derivative of psi -> psi(psi(a x)) / a, a = psi(1)."""
        if self._dR is None:
            self._dR = self.L1 + self.L2 + np.outer(self.E, self.ev1)
        return self._dR

    def lomega_matrix(self, omega):
        """The 2(N+1)-square matrix of L_omega acting on stacked (u, v)."""
        t = 2 * np.pi * omega_value(omega)
        c, s = np.cos(t), np.sin(t)
        L1, L2 = self.L1, self.L2
        return np.block([[L1 + c * L2, -s * L2], [s * L2, L1 + c * L2]])

    def apply_pair(self, omega, u, v):
        t = 2 * np.pi * float(omega)
        c, s = np.cos(t), np.sin(t)
        b, d = self.L2 @ u, self.L2 @ v
        return self.L1 @ u + c * b - s * d, self.L1 @ v + s * b + c * d


def mode_action(base, **kw):
    return base if isinstance(base, ModeAction) else ModeAction(base, **kw)


def _coeffs(g, n):
    c = np.asarray(g.coeffs if isinstance(g, TaylorPoly) else g)
    out = np.zeros(n + 1, dtype=c.dtype)
    out[: min(n + 1, c.size)] = c[: n + 1]
    return out


def apply_L1(act, g):
    act = mode_action(act)
    return TaylorPoly(act.L1 @ _coeffs(g, act.order), act.domain)


def apply_L2(act, g):
    act = mode_action(act)
    return TaylorPoly(act.L2 @ _coeffs(g, act.order), act.domain)


def apply_Lomega(act, omega, p):
    act = mode_action(act)
    n = act.order
    u, v = act.apply_pair(omega_value(omega), _coeffs(p.u, n), _coeffs(p.v, n))
    return PairField(TaylorPoly(u, act.domain), TaylorPoly(v, act.domain))


def _rot(cg, sg, p):
    return PairField(p.u * cg - p.v * sg, p.u * sg + p.v * cg)


def rotate_Rgamma(gamma, p):
    """Planar rotation of (u, v) by the angle 2 pi gamma."""
    t = 2 * np.pi * gamma
    return _rot(np.cos(t), np.sin(t), p)


def phase_shift_tgamma(gamma, p):
    """theta -> theta + gamma on u cos(2 pi theta) + v sin(2 pi theta).

    u' = u cos(2 pi gamma) + v sin(2 pi gamma),
    v' = -u sin(2 pi gamma) + v cos(2 pi gamma).
    """
    t = 2 * np.pi * gamma
    return _rot(np.cos(t), -np.sin(t), p)


@dataclass(frozen=True)
class SectionPoint:
    """A pair with u(0) = 0 and v(0) > 0."""

    pair: PairField

    def __post_init__(self):
        u0 = float(evaluate(self.pair.u, 0.0))
        v0 = float(evaluate(self.pair.v, 0.0))
        scale = max(1.0, abs(v0))
        if abs(u0) > 1e-10 * scale or not v0 > 0:
            raise ValueError(f"not on the section: u(0) = {u0:.3e}, v(0) = {v0:.3e}")


def section_values(p):
    return float(evaluate(p.u, 0.0)), float(evaluate(p.v, 0.0))


def phase_reduce(p):
    """Shift theta so that u(0) = 0 and v(0) > 0.

    Returns the reduced :class:`SectionPoint` and the shift gamma in [0, 1).
    """
    u0, v0 = section_values(p)
    r = np.hypot(u0, v0)
    scale = max(sup_coeff(p), 1e-300)
    if r < SECTION_FLOOR * max(scale, 1.0) or r == 0:
        raise ZeroSectionValue(f"section value {r:.3e} vanishes")
    cg, sg = v0 / r, -u0 / r
    gamma = float(np.arctan2(sg, cg) / (2 * np.pi)) % 1.0
    reduced = PairField(p.u * cg + p.v * sg, -p.u * sg + p.v * cg)
    # the arithmetic leaves u(0) at rounding level; remove it exactly
    return SectionPoint(_snap(reduced)), gamma


def sup_coeff(p):
    return float(max(np.max(np.abs(p.u.coeffs)), np.max(np.abs(p.v.coeffs))))


def _snap(p):
    d = p.domain
    e0 = (-d.center / d.radius) ** np.arange(p.order + 1)
    u = np.array(p.u.coeffs, dtype=float)
    u[0] -= e0 @ u
    return PairField(TaylorPoly(u, d), p.v)


def project_pi1(f):
    """Mode +-1 of a quasi-periodic function as the real pair (u, v)."""
    c1 = f.mode(1).coeffs
    return PairField(TaylorPoly(2 * c1.real, f.domain), TaylorPoly(-2 * c1.imag, f.domain))


def dT_mode(act, omega, k, p):
    """Derivative of the quasi-periodic renormalization on the k-th Fourier mode.

    A mode e^{2 pi i k theta} c(z) picks up the factor e^{2 pi i k omega}
    from the shift theta -> theta + omega.  In the real pair coordinates
    (u, v) = (2 Re c, -2 Im c) that is L at the rotation number -k omega.
    """
    if k == 0:
        raise ValueError("mode 0 is the one-dimensional derivative")
    w = omega_value(omega)
    return apply_Lomega(act, (-k * w) % 1.0, p)


def qp_renormalize(f, omega, grid=None, alias_tol=1e-8):
    """(1/a) f(theta + omega, f(theta, a x)) with a the theta-mean of f(theta, 1).

    The inner map is built on a collocation grid in theta, composed with the
    shifted outer map point by point, and transformed back to Fourier modes.
    """
    w = omega_value(omega)
    K, n, d = f.K, f.order, f.domain
    J = grid or (4 * K + 1)
    if J < 4 * K + 1:
        raise ValueError("collocation grid must have at least 4K+1 points")
    a = float(evaluate(f.mode(0), 1.0))
    if abs(a) < SCALE_FLOOR:
        raise DegenerateScaling(f"mean of f(theta, 1) is {a:.3e}")
    S = scale_arg_matrix(d, a, n)
    thetas = np.arange(J) / J
    vals = np.zeros((J, n + 1))
    for j, th in enumerate(thetas):
        inner = f.at_theta(th)
        inner = TaylorPoly(S @ inner.coeffs, d)
        outer = f.at_theta(th + w)
        vals[j] = compose(outer, inner).coeffs
    spec = np.fft.fft(vals, axis=0) / J  # spec[k] ~ c_k
    ks = np.fft.fftfreq(J, 1.0 / J).astype(int)
    modes = np.zeros((2 * K + 1, n + 1), dtype=complex)
    kept = np.abs(ks) <= K
    for idx in np.nonzero(kept)[0]:
        modes[K + ks[idx]] = spec[idx]
    total = np.sum(np.abs(spec) ** 2)
    dropped = np.sum(np.abs(spec[~kept]) ** 2)
    if total > 0 and dropped > alias_tol * total:
        warnings.warn(f"discarded Fourier energy fraction {dropped / total:.2e}", AliasWarning)
    return QPFunction(modes / a, d, check=False)


def apply_Lomega_prime(act, omega, s):
    """Phase-reduced image of L_omega: returns (SectionPoint, sup norm)."""
    from .analytic import sup_norm

    p = s.pair if isinstance(s, SectionPoint) else s
    img = apply_Lomega(act, omega, p)
    reduced, _ = phase_reduce(img)
    return reduced, sup_norm(reduced.pair)


def pair_sampler(domain, order, samples=None):
    """Sample matrix for the pair sup norm on stacked coefficient vectors."""
    return sample_matrix(domain, order, samples)


def section_functional(domain, order):
    """Row vector e0 with e0 @ coeffs = value at x = 0."""
    return (-domain.center / domain.radius) ** np.arange(order + 1)

