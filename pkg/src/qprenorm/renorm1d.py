"""Doubling renormalization psi -> psi(psi(a x)) / a with a = psi(1)."""

from dataclasses import dataclass, field

import numpy as np

from .analytic import (
    DEFAULT_DOMAIN,
    DiscDomain,
    TaylorPoly,
    compose,
    differentiate,
    evaluate,
    scale_arg,
    sup_norm,
)
from .errors import (
    BracketMiss,
    DegenerateScaling,
    InclusionFailure,
    NoConvergence,
    NoCycle,
    SpectrumAnomaly,
)
from .linalg import eigen_decompose
from .qp import SCALE_FLOOR, ModeAction

NORMALIZATION_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class UnimodalMap:
    """A map normalized by psi(0) = 1, stored as an expansion on a disc."""

    psi: TaylorPoly
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        if self.check:
            v = float(np.real(evaluate(self.psi, 0.0)))
            if abs(v - 1.0) > NORMALIZATION_TOL * 1e3:
                raise ValueError(f"map is not normalized: psi(0) = {v!r}")

    @classmethod
    def from_monomials(cls, mono, order, domain=DEFAULT_DOMAIN):
        return cls(TaylorPoly.from_monomials(mono, order, domain))

    @property
    def a(self):
        return float(evaluate(self.psi, 1.0))

    @property
    def order(self):
        return self.psi.order

    @property
    def domain(self):
        return self.psi.domain

    def __call__(self, x):
        return evaluate(self.psi, x)


def _as_map(m):
    return m if isinstance(m, UnimodalMap) else UnimodalMap(m, check=False)


@dataclass
class DomainReport:
    a: float
    a_prime: float
    b_prime: float
    conditions: dict  # name -> (holds, margin)

    @property
    def ok(self):
        return all(h for h, _ in self.conditions.values())


def domain_check(m, delta=0.01):
    """Conditions for psi to be renormalizable on the interval of size delta."""
    m = _as_map(m)
    a = m.a
    ap = (1 + delta) * a
    bp = float(m(ap))
    psib = float(m(bp))
    cond = {
        "a<0": (a < 0, -a),
        "b'<1": (bp < 1, 1 - bp),
        "b'>-a'": (bp > -ap, bp + ap),
        "psi(b')<-a'": (psib < -ap, -ap - psib),
    }
    return DomainReport(a, ap, bp, cond)


def renormalize(m, floor=SCALE_FLOOR):
    m = _as_map(m)
    a = m.a
    if abs(a) < floor:
        raise DegenerateScaling(f"psi(1) = {a:.3e}: the map cannot be renormalized")
    inner = scale_arg(m.psi, a)
    return UnimodalMap(compose(m.psi, inner) / a, check=False)


def renorm_jacobian(m):
    return ModeAction(_as_map(m)).dR


def d_renormalize(m, u, action=None):
    """Directional derivative of the renormalization at ``m`` along ``u``.

    Differentiating (psi + h u)(psi(a_h x) + h u(a_h x)) / a_h with
    a_h = a + h u(1) gives L1 u + L2 u + u(1) E with

        E(x) = (x/a) psi'(psi(a x)) psi'(a x) - psi(psi(a x)) / a**2.
    """
    act = action or ModeAction(_as_map(m))
    c = np.zeros(act.order + 1)
    uc = u.coeffs if isinstance(u, TaylorPoly) else np.asarray(u)
    c[: min(c.size, uc.size)] = uc[: c.size]
    return TaylorPoly(act.dR @ c, act.domain)


def default_seed(order, domain=DEFAULT_DOMAIN):
    return UnimodalMap.from_monomials([1.0, 0.0, -1.5], order, domain)


def newton_fixed_point(seed=None, order=100, tol=1e-14, max_iter=50, residual_tol=1e-11):
    """Newton iteration for psi = R(psi) on the full coefficient vector.

    The normalization psi(0) = 1 is not imposed: it holds at every fixed
    point (R(psi)(0) = psi(psi(0)) / psi(1)), and the fixed point is isolated
    in the full space, so the square system R(c) - c = 0 suffices.
    """
    psi = (seed.psi if isinstance(seed, UnimodalMap) else seed) if seed is not None else default_seed(order).psi
    c = np.array(psi.coeffs, dtype=float)
    d = psi.domain
    n = c.size - 1
    eye = np.eye(n + 1)
    for _ in range(max_iter):
        act = ModeAction(TaylorPoly(c, d), check=False)
        F = act.renormalized - c
        step = np.linalg.solve(act.dR - eye, -F)
        c = c + step
        if np.max(np.abs(step)) < tol * max(1.0, np.max(np.abs(c))):
            break
    else:
        raise NoConvergence(f"Newton did not converge in {max_iter} iterations")
    phi = UnimodalMap(TaylorPoly(c, d), check=False)
    res = fixed_point_residual(phi)
    if not res < residual_tol:
        raise NoConvergence(f"fixed point residual {res:.3e} above {residual_tol:.1e}")
    return phi


def fixed_point_residual(phi):
    return sup_norm(renormalize(phi).psi - phi.psi)


@dataclass
class RenormConstants:
    delta_feig: float
    a_fixed: float
    unstable_eigvec: TaylorPoly
    eigenvalues: np.ndarray = field(repr=False)
    residuals: np.ndarray = field(repr=False)
    artifacts: dict = field(repr=False)  # eigenvalue index -> power of a


def artifact_power(lam, a, max_power=40, rtol=1e-6):
    """Integer j with lam = a**j, if any.

    Coordinate changes of the renormalized map produce eigenvalues that are
    powers of the scaling a = phi(1) (for instance 1/a and 1/a**2).
    """
    for j in range(-4, max_power + 1):
        ref = a ** j
        if abs(lam - ref) <= rtol * abs(ref):
            return j
    return None


def parity_defect(p):
    """Relative size of the odd part of p about x = 0."""
    m = np.abs(p.to_monomials())
    tot = m.sum()
    return float(m[1::2].sum() / tot) if tot > 0 else 0.0


def feigenbaum_spectrum(phi, expand_tol=1e-6):
    """Spectrum of the derivative at the fixed point; delta is the unique
    expanding eigenvalue that is not a power of a."""
    phi = _as_map(phi)
    act = ModeAction(phi)
    vals, vecs, res = eigen_decompose(act.dR)
    a = act.a
    artifacts = {}
    genuine = []
    for i, lam in enumerate(vals):
        j = artifact_power(lam, a) if abs(lam.imag) < 1e-9 else None
        if j is not None:
            artifacts[i] = j
        elif abs(lam) > 1 + expand_tol:
            genuine.append(i)
    if len(genuine) != 1:
        raise SpectrumAnomaly(
            f"{len(genuine)} expanding eigenvalues besides coordinate-change artifacts: "
            f"{[vals[i] for i in genuine]}"
        )
    i = genuine[0]
    v = vecs[:, i]
    v = v / v[np.argmax(np.abs(v))]
    return RenormConstants(float(vals[i].real), a, TaylorPoly(v.real, phi.domain), vals, res, artifacts)


@dataclass
class H0Report:
    passed: bool
    min_margin: float  # rho - max |phi(a z) - z0|
    scale_margin: float  # rho - max |a z - z0|
    interior_ok: bool
    samples: int
    worst_sample: complex


def check_h0_inclusion(phi, domain=None, samples=4096, margin=0.0, raise_on_failure=True):
    """Check that z -> a z and z -> phi(a z) map the disc boundary strictly inside.

    The image curve of the boundary under the holomorphic map z -> phi(a z)
    lies inside the disc; together with one interior point mapping inside,
    this witnesses phi(a W) inside W.
    """
    phi = _as_map(phi)
    d = domain or phi.domain
    a = phi.a
    zs = d.boundary(samples)
    az = a * zs
    scale_gap = d.radius - np.abs(az - d.center)
    img = phi(az)
    gap = d.radius - np.abs(img - d.center)
    k = int(np.argmin(gap))
    interior = bool(abs(phi(0.0) - d.center) < d.radius)
    ok = bool(np.min(gap) > margin and np.min(scale_gap) > 0 and interior)
    rep = H0Report(ok, float(np.min(gap)), float(np.min(scale_gap)), interior, samples, complex(zs[k]))
    if not ok and raise_on_failure:
        raise InclusionFailure(
            f"inclusion fails at z = {zs[k]:.6g}: margin {rep.min_margin:.3e}", sample=complex(zs[k])
        )
    return rep


def superstable_parameter(family, n, bracket, guess=None, tol=1e-14, max_iter=100):
    """Parameter at which the critical point 0 has period 2**n.

    ``family(alpha)`` returns ``(psi, dpsi)``: the map and its derivative in
    alpha, both callables (or expansions).  Newton on F**(2**n)(0) with the
    alpha-derivative propagated along the orbit.
    """
    lo, hi = bracket
    al = 0.5 * (lo + hi) if guess is None else float(guess)
    steps = 2 ** n
    for _ in range(max_iter):
        psi, dpsi = family(al)
        f, df, fa = _scalar(psi), _scalar(differentiate(psi)), _scalar(dpsi)
        y, dy = 0.0, 0.0
        for _ in range(steps):
            y, dy = f(y), df(y) * dy + fa(y)
        if dy == 0:
            raise NoConvergence("zero derivative along the critical orbit")
        step = y / dy
        al -= step
        if not lo <= al <= hi:
            raise BracketMiss(f"iterate {al} left the bracket {bracket}")
        if abs(step) < tol * max(1.0, abs(al)):
            return al
    raise NoConvergence(f"superstable parameter for n={n} did not converge")


def _scalar(p):
    """Fast scalar evaluator: monomial coefficients in x, Horner in floats."""
    if not isinstance(p, TaylorPoly):
        return p
    mono = p.to_monomials().real / p.domain.radius ** np.arange(p.order + 1)
    nz = np.nonzero(mono)[0]
    coeffs = [float(c) for c in mono[: (nz[-1] + 1 if nz.size else 1)]][::-1]

    def f(x):
        r = 0.0
        for c in coeffs:
            r = r * x + c
        return r

    return f


def two_cycle(m, scan=2001, tol=1e-14):
    """The real period-2 orbit (p0, p1), p0 the point nearest the critical point."""
    m = _as_map(m)
    psi = m.psi
    dpsi = differentiate(psi)
    d = psi.domain
    xs = np.linspace(d.center - d.radius, d.center + d.radius, scan)

    def g(x):
        return evaluate(psi, evaluate(psi, x)) - x

    def dg(x):
        return evaluate(dpsi, evaluate(psi, x)) * evaluate(dpsi, x) - 1.0

    # deflate the fixed points of psi, which also solve psi(psi(x)) = x
    h = g(xs) / (evaluate(psi, xs) - xs)
    roots = []
    for i in np.nonzero(np.sign(h[:-1]) * np.sign(h[1:]) <= 0)[0]:
        x = 0.5 * (xs[i] + xs[i + 1])
        for _ in range(60):
            dx = g(x) / dg(x)
            x -= dx
            if abs(dx) < tol:
                break
        if abs(g(x)) > 1e-10 or abs(evaluate(psi, x) - x) < 1e-8:
            continue
        if xs[0] - 1e-9 <= x <= xs[-1] + 1e-9:
            roots.append(float(x))
    if not roots:
        raise NoCycle("no real 2-cycle on the segment")
    p0 = min(roots, key=abs)
    return p0, float(evaluate(psi, p0))
