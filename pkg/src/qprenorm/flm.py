"""Forced logistic families and the slopes of their reducibility-loss curves.

The logistic map x -> alpha x (1 - x) is moved by y = 4/(alpha-2) x - 2/(alpha-2)
to the normalized form c0(y) = 1 - k y**2 with k = alpha (alpha - 2) / 4.
A forcing eps * f(x) cos(2 pi theta) becomes eps * 4/(alpha-2) f(x(y)) in
the new coordinate.
"""

from dataclasses import dataclass, field

import numpy as np

from .analytic import DEFAULT_DOMAIN, PairField, TaylorPoly, differentiate, evaluate, sup_norm
from .errors import (
    CurveSolveFailure,
    ParameterOutOfRange,
    ResonantDenominator,
    ZeroDenominator,
)
from .qp import ModeAction, _coeffs, dT_mode, omega_value, phase_reduce
from .renorm1d import UnimodalMap, superstable_parameter, two_cycle
from .rotation import as_rotation

DEFAULT_ORDER = 80


# -- families ---------------------------------------------------------------

def _k(alpha):
    return alpha * (alpha - 2.0) / 4.0


def _shape(name, alpha):
    """Monomial coefficients in y of the mode forcing for the named shape."""
    if name == "A":  # eps * alpha x (1 - x) cos, i.e. multiplicative forcing
        return [alpha / (alpha - 2.0), 0.0, -_k(alpha)]
    if name == "B":  # additive forcing eps * cos
        return [4.0 / (alpha - 2.0)]
    raise ValueError(f"unknown forcing shape {name!r}")


@dataclass(frozen=True)
class FLMFamily:
    """Two-parameter family c(alpha, eps) of forced logistic maps.

    ``variant`` "A": alpha (1 + eps cos 2 pi theta) x (1 - x);
    "B": alpha x (1 - x) + eps cos 2 pi theta;
    "eta": alpha x (1 - x) + eps (f1(x) cos 2 pi theta + eta f2(x) cos 4 pi theta)
    with f1, f2 given by the shapes of A or B.
    """

    variant: str = "A"
    eta: float = 0.0
    shape1: str = "A"
    shape2: str = "A"

    def __post_init__(self):
        if self.variant not in ("A", "B", "eta"):
            raise ValueError(f"unknown variant {self.variant!r}")

    def _check(self, alpha):
        if not 2.0 < alpha < 4.0:
            raise ParameterOutOfRange(f"alpha = {alpha} outside (2, 4)")

    def base_map(self, alpha, order=DEFAULT_ORDER, domain=DEFAULT_DOMAIN):
        self._check(alpha)
        return UnimodalMap.from_monomials([1.0, 0.0, -_k(alpha)], order, domain)

    def d_alpha(self, alpha, order=DEFAULT_ORDER, domain=DEFAULT_DOMAIN):
        self._check(alpha)
        return TaylorPoly.from_monomials([0.0, 0.0, -(alpha - 1.0) / 2.0], order, domain)

    def d_eps(self, alpha, order=DEFAULT_ORDER, domain=DEFAULT_DOMAIN):
        """Forcing direction by Fourier mode: {k: PairField}."""
        self._check(alpha)

        def cos_mode(shape, scale=1.0):
            u = TaylorPoly.from_monomials(np.multiply(_shape(shape, alpha), scale), order, domain)
            return PairField(u, TaylorPoly(np.zeros(order + 1), domain))

        if self.variant in ("A", "B"):
            return {1: cos_mode(self.variant)}
        modes = {1: cos_mode(self.shape1)}
        if self.eta:
            modes[2] = cos_mode(self.shape2, self.eta)
        return modes

    def __call__(self, alpha):
        """(map, alpha-derivative) as low-order expansions, for parameter solves."""
        return self.base_map(alpha, order=2).psi, self.d_alpha(alpha, order=2)


def family_at(fam, alpha, order=DEFAULT_ORDER):
    return fam.base_map(alpha, order), fam.d_alpha(alpha, order), fam.d_eps(alpha, order)


def superstable_sequence(fam, n_max):
    """alpha_1 .. alpha_{n_max} by Newton, guessing by Feigenbaum extrapolation."""
    out = [superstable_parameter(fam, 1, (3.1, 3.4), guess=3.2)]
    if n_max >= 2:
        out.append(superstable_parameter(fam, 2, (3.45, 3.53), guess=3.5))
    for n in range(3, n_max + 1):
        d = out[-1] - out[-2]
        out.append(superstable_parameter(fam, n, (out[-1], out[-1] + d), guess=out[-1] + d / 4.669))
    return out


def accumulation_point(alphas):
    """Aitken extrapolation of the last three superstable parameters."""
    a0, a1, a2 = alphas[-3:]
    return a2 - (a2 - a1) ** 2 / ((a2 - a1) - (a1 - a0))


# -- harmonic functions on the circle --------------------------------------

@dataclass
class HarmonicFunction:
    """c0 + sum_k (cos_k cos 2 pi k theta + sin_k sin 2 pi k theta)."""

    c0: float
    cos: np.ndarray
    sin: np.ndarray

    @classmethod
    def from_complex(cls, c0, coeffs):
        """From complex G_k with h = c0 + sum Re(G_k e^{2 pi i k theta})."""
        g = np.asarray(coeffs, dtype=complex)
        return cls(float(c0), g.real.copy(), -g.imag.copy())

    @property
    def degree(self):
        return self.cos.size

    def __call__(self, theta):
        t = 2 * np.pi * np.asarray(theta, dtype=float)
        k = np.arange(1, self.degree + 1)
        ph = np.multiply.outer(t, k)
        return self.c0 + np.cos(ph) @ self.cos + np.sin(ph) @ self.sin

    def derivative(self, theta, order=1):
        t = 2 * np.pi * np.asarray(theta, dtype=float)
        k = np.arange(1, self.degree + 1)
        ph = np.multiply.outer(t, k)
        w = (2 * np.pi * k) ** order
        if order % 2:
            sign = -1 if order % 4 == 1 else 1
            return sign * (np.sin(ph) @ (w * self.cos)) - sign * (np.cos(ph) @ (w * self.sin))
        sign = -1 if order % 4 == 2 else 1
        return sign * (np.cos(ph) @ (w * self.cos) + np.sin(ph) @ (w * self.sin))


def circle_min_max(h, grid=1024):
    """(m, M, argmin, argmax) of a harmonic function over the circle."""
    if h.degree == 0:
        return h.c0, h.c0, 0.0, 0.0
    if h.degree == 1 or not np.any(h.cos[1:]) and not np.any(h.sin[1:]):
        amp = float(np.hypot(h.cos[0], h.sin[0]))
        phase = float(np.arctan2(h.sin[0], h.cos[0]) / (2 * np.pi))
        return h.c0 - amp, h.c0 + amp, (phase + 0.5) % 1.0, phase % 1.0
    th = np.arange(grid) / grid
    vals = h(th)
    out = []
    for i in (int(np.argmin(vals)), int(np.argmax(vals))):
        t = th[i]
        for _ in range(50):
            d2 = h.derivative(t, 2)
            if d2 == 0:
                break
            dt = h.derivative(t, 1) / d2
            t -= dt
            if abs(dt) < 1e-15:
                break
        out.append(t % 1.0)
    return float(h(out[0])), float(h(out[1])), out[0], out[1]


# -- first-order variation of the 2-cycle multiplier -----------------------

def _forcing_values(modes, x):
    """Complex amplitudes C_k(x) = u_k(x) - i v_k(x) and their x-derivatives."""
    vals, ders = {}, {}
    for k, p in modes.items():
        vals[k] = complex(evaluate(p.u, x)) - 1j * complex(evaluate(p.v, x))
        ders[k] = complex(evaluate(differentiate(p.u), x)) - 1j * complex(evaluate(differentiate(p.v), x))
    return vals, ders


def _modes_of(v):
    return v if isinstance(v, dict) else {1: v}


def dG1_mode1(psi, omega, v, cycle=None):
    """First-order change of the multiplier of the invariant 2-periodic curves.

    Forcing g = psi + h V(theta, x), V a sum of Fourier modes.  Writing the
    curves as p0 + h dxa(theta), p1 + h dxb(theta), the invariance equations
    give per harmonic k (z = e^{2 pi i k omega})

        z B - psi'(p0) A = C(p0),     z A - psi'(p1) B = C(p1),

    and the multiplier varies by

        psi''(p1) psi'(p0) z B + psi'(p0) z C'(p1) + psi'(p1) (psi''(p0) A + C'(p0)).
    """
    psi = psi.psi if hasattr(psi, "psi") else psi
    w = omega_value(omega)
    p0, p1 = cycle if cycle is not None else two_cycle(psi)
    d1, d2 = differentiate(psi), differentiate(differentiate(psi))
    a0, a1 = float(evaluate(d1, p0)), float(evaluate(d1, p1))
    b0, b1 = float(evaluate(d2, p0)), float(evaluate(d2, p1))
    modes = _modes_of(v)
    C0, dC0 = _forcing_values(modes, p0)
    C1, dC1 = _forcing_values(modes, p1)
    H = max(modes)
    G = np.zeros(H, dtype=complex)
    for k in modes:
        z = np.exp(2j * np.pi * k * w)
        det = a0 * a1 - z * z
        if abs(det) < 1e-12:
            raise ResonantDenominator(f"harmonic {k}: multiplier resonates with the rotation")
        M = np.array([[-a0, z], [z, -a1]])
        A, B = np.linalg.solve(M, np.array([C0[k], C1[k]]))
        G[k - 1] = b1 * a0 * z * B + a0 * z * dC1[k] + a1 * (b0 * A + dC0[k])
    return HarmonicFunction.from_complex(0.0, G)


def dG1_superstable(psi, omega, v):
    """The same variation on a map whose 2-cycle is (0, 1) with psi'(0) = 0:

        psi'(1) [psi''(0) (psi'(1) C(0) z**-2 + C(1) z**-1) + C'(0)].
    """
    psi = psi.psi if hasattr(psi, "psi") else psi
    w = omega_value(omega)
    d1, d2 = differentiate(psi), differentiate(differentiate(psi))
    a1 = float(evaluate(d1, 1.0))
    b0 = float(evaluate(d2, 0.0))
    modes = _modes_of(v)
    C0, dC0 = _forcing_values(modes, 0.0)
    C1, _ = _forcing_values(modes, 1.0)
    G = np.zeros(max(modes), dtype=complex)
    for k in modes:
        z = np.exp(2j * np.pi * k * w)
        G[k - 1] = a1 * (b0 * (a1 * C0[k] / z ** 2 + C1[k] / z) + dC0[k])
    return HarmonicFunction.from_complex(0.0, G)


def dGhat1(psi, u):
    """First-order change of the 2-cycle multiplier for an unforced perturbation u
    at a map with superstable cycle (0, 1)."""
    psi = psi.psi if hasattr(psi, "psi") else psi
    d1, d2 = differentiate(psi), differentiate(differentiate(psi))
    a1 = float(evaluate(d1, 1.0))
    dx = float(evaluate(u, 1.0)) + a1 * float(evaluate(u, 0.0))
    return a1 * (float(evaluate(d2, 0.0)) * dx + float(evaluate(differentiate(u), 0.0)))


def G1_curve(psi, omega, forcing, h, harmonics=8, tol=1e-14, max_iter=50):
    """Invariant 2-periodic curves of (theta, x) -> (theta + omega, psi(x) + h V)
    and their multiplier G1(theta) = g_x(theta + omega, xb(theta + omega)) g_x(theta, xa(theta)).

    Newton on Fourier coefficients of the two curves, collocated on 2H + 1
    angles.  Returns (xa, xb, G1) with the curves as value tables on the
    collocation grid and G1 as a :class:`HarmonicFunction`.
    """
    psi = psi.psi if hasattr(psi, "psi") else psi
    w = omega_value(omega)
    modes = _modes_of(forcing)
    H = harmonics
    J = 2 * H + 1
    th = np.arange(J) / J
    ks = np.arange(1, H + 1)

    def basis(t):
        ph = 2 * np.pi * np.multiply.outer(t, ks)
        return np.hstack([np.ones((t.size, 1)), np.cos(ph), np.sin(ph)])

    B0, Bw = basis(th), basis(th + w)
    d1 = differentiate(psi)

    def g(t, x):
        val = evaluate(psi, x)
        for k, p in modes.items():
            c, s = np.cos(2 * np.pi * k * t), np.sin(2 * np.pi * k * t)
            val = val + h * (evaluate(p.u, x) * c + evaluate(p.v, x) * s)
        return val

    def gx(t, x):
        val = evaluate(d1, x)
        for k, p in modes.items():
            c, s = np.cos(2 * np.pi * k * t), np.sin(2 * np.pi * k * t)
            val = val + h * (evaluate(differentiate(p.u), x) * c + evaluate(differentiate(p.v), x) * s)
        return val

    p0, p1 = two_cycle(psi)
    X = np.zeros(2 * J)
    X[0], X[J] = p0, p1
    for _ in range(max_iter):
        xa, xb = B0 @ X[:J], B0 @ X[J:]
        F = np.concatenate([g(th, xa) - Bw @ X[J:], g(th, xb) - Bw @ X[:J]])
        Jm = np.block([[gx(th, xa)[:, None] * B0, -Bw], [-Bw, gx(th, xb)[:, None] * B0]])
        try:
            step = np.linalg.solve(Jm, -F)
        except np.linalg.LinAlgError as exc:
            raise CurveSolveFailure("singular curve Jacobian") from exc
        X += step
        if np.max(np.abs(step)) < tol:
            break
    else:
        raise CurveSolveFailure("Newton for the invariant curves did not converge")
    xa, xb = B0 @ X[:J], B0 @ X[J:]
    xbw = Bw @ X[J:]
    vals = gx(th + w, xbw) * gx(th, xa)
    c = np.linalg.solve(B0, vals)
    return xa, xb, HarmonicFunction(float(c[0]), c[1:H + 1].copy(), c[H + 1:].copy())


# -- the slope pipeline -----------------------------------------------------

@dataclass
class Pipeline:
    """f_k, u_k, v_k (by mode) and omega_k for k = 0 .. n-1."""

    alpha: float
    maps: list
    u: list
    v: list
    omegas: list
    gammas: list = field(default_factory=list)


def _apply_modes(act, omega, modes):
    return {k: dT_mode(act, omega, k, p) for k, p in modes.items()}


def run_sequences(fam, n, omega0, order=DEFAULT_ORDER, alpha=None, reduce=False, check=True):
    """Push the parameter directions through n - 1 renormalizations.

    f_k = R(f_{k-1}), u_k = DR(f_{k-1}) u_{k-1} and, mode by mode,
    v_k = DT_{omega_{k-1}}(f_{k-1}) v_{k-1}.  With ``reduce`` the mode-1
    vector is moved to the section after each step.
    """
    if alpha is None:
        alpha = superstable_sequence(fam, n)[-1]
    f, u, v = family_at(fam, alpha, order)
    om = as_rotation(omega0)
    omegas = list(om.orbit(n))
    pipe = Pipeline(alpha, [f], [u], [v], omegas)
    if reduce:
        v = _reduce_modes(v, pipe)
        pipe.v[0] = v
    for k in range(1, n):
        act = ModeAction(f, check=check)
        f = UnimodalMap(TaylorPoly(act.renormalized, f.domain), check=False)
        u = TaylorPoly(act.dR @ u.coeffs, f.domain)
        v = _apply_modes(act, omegas[k - 1], v)
        if reduce:
            v = _reduce_modes(v, pipe)
        pipe.maps.append(f)
        pipe.u.append(u)
        pipe.v.append(v)
    return pipe


def _reduce_modes(v, pipe):
    if set(v) != {1}:
        raise ValueError("phase reduction is defined for pure mode-1 directions")
    s, gamma = phase_reduce(v[1])
    pipe.gammas.append(gamma)
    return {1: s.pair}


def run_sequences_reduced(fam, n, omega0, order=DEFAULT_ORDER, alpha=None, check=True):
    return run_sequences(fam, n, omega0, order, alpha, reduce=True, check=check)


@dataclass
class SlopeRow:
    n: int
    alpha_n: float
    alpha_prime: float
    beta_prime: float
    m: float
    M: float
    denominator: float
    gammas: list = field(default_factory=list)


def slopes_from_pipeline(pipe, n, exact_cycle=False):
    f, u, v = pipe.maps[-1], pipe.u[-1], pipe.v[-1]
    om = pipe.omegas[n - 1]
    if exact_cycle:
        num = dG1_mode1(f, om, v)
    else:
        num = dG1_superstable(f, om, v)
    den = dGhat1(f, u)
    if abs(den) < 1e-12:
        raise ZeroDenominator("transversality fails: DG1hat u vanishes")
    m, M, _, _ = circle_min_max(num)
    return SlopeRow(n, pipe.alpha, -m / den, -M / den, m, M, den, list(pipe.gammas))


def slope_alpha_beta(fam, n, omega0, order=DEFAULT_ORDER, alpha=None, reduce=False, exact_cycle=False):
    """alpha'_n = -m(DG1 v) / DG1hat u and beta'_n = -M(DG1 v) / DG1hat u."""
    pipe = run_sequences(fam, n, omega0, order, alpha, reduce=reduce)
    return slopes_from_pipeline(pipe, n, exact_cycle)


def slope_table(fam, n_max, omega0, order=DEFAULT_ORDER, alphas=None):
    alphas = alphas or superstable_sequence(fam, n_max)
    return [slope_alpha_beta(fam, n, omega0, order, alpha=alphas[n - 1]) for n in range(1, n_max + 1)]


# -- conjecture diagnostics -------------------------------------------------

def fixed_point_pipeline(phi, fam, alpha_star, omega0, steps, order=None, action=None):
    """Mode-1 directions iterated at the fixed point itself, reduced to the section."""
    order = order or phi.order
    act = action or ModeAction(phi)
    v = fam.d_eps(alpha_star, order)[1]
    omegas = as_rotation(omega0).orbit(steps)
    out = [phase_reduce(v)[0].pair]
    for j in range(1, steps):
        out.append(phase_reduce(dT_mode(act, omegas[j - 1], 1, out[-1]))[0].pair)
    return out, omegas


@dataclass
class H3Row:
    n: int
    index: int
    norm_v: float
    abs_min: float
    difference: float


def conjecture_h3_table(fam, n_list, omega0, phi, order=None, alphas=None):
    """Per n: |v_k|, |m(DG1(omega_k, phi, v_k/|v_k|))| and |v~_k/|v~_k| - v_k/|v_k||,
    k = [n/2] - 1, v from the fixed-point pipeline and v~ from the family's."""
    order = order or phi.order
    n_max = max(n_list)
    alphas = alphas or superstable_sequence(fam, max(n_max, 3))
    alpha_star = accumulation_point(alphas)
    kmax = n_max // 2 - 1
    act = ModeAction(phi)
    fixed, omegas = fixed_point_pipeline(phi, fam, alpha_star, omega0, kmax + 1, order, act)
    cyc = two_cycle(phi)
    rows = []
    for n in n_list:
        k = n // 2 - 1
        vk = fixed[k]
        nv = sup_norm(vk)
        m, _, _, _ = circle_min_max(dG1_mode1(phi, omegas[k], vk / nv, cycle=cyc))
        pipe = run_sequences_reduced(fam, k + 1, omega0, order, alpha=alphas[n - 1])
        wk = pipe.v[-1][1]
        diff = sup_norm(wk / sup_norm(wk) - vk / nv)
        rows.append(H3Row(n, k, nv, abs(m), diff))
    return rows


def conjecture_h5_ratios(psi, omega0, v01, v02, steps, action=None):
    """r_n = (|v01| / |v02|) (|v_{n,2}| / |v_{n,1}|) for n = 0..steps.

    The first sequence is driven by L at omega_{k-1}, the second by L at
    2 omega_{k-1}; norms are accumulated in log form.
    """
    from . import _kernels
    from .analytic import sample_matrix

    act = action or ModeAction(psi)
    n = act.order
    V = sample_matrix(act.domain, n)
    om = as_rotation(omega0).orbit(steps + 1)
    u1, w1 = _coeffs(v01.u, n), _coeffs(v01.v, n)
    u2, w2 = _coeffs(v02.u, n), _coeffs(v02.v, n)
    log_ratio = _kernels.active.ratio_orbit(
        np.ascontiguousarray(act.L1), np.ascontiguousarray(act.L2), np.ascontiguousarray(V),
        om, u1.astype(float), w1.astype(float), u2.astype(float), w2.astype(float))
    return np.exp(log_ratio - log_ratio[0])


@dataclass
class UniversalityReport:
    n: np.ndarray
    ratios_a: np.ndarray
    ratios_b: np.ndarray
    ratio_gap: np.ndarray
    doubling_ratio: np.ndarray
    eta_values: list
    eta_deviation: dict
    factorization: np.ndarray


def universality_compare(famA, famB, omega0, n_max, phi=None, etas=(0.1, 0.05, 0.025), order=DEFAULT_ORDER):
    """Ratio sequences alpha'_n / alpha'_{n-1} for two families, the doubling ratio
    alpha'_n(omega0) / alpha'_{n-1}(2 omega0), and the eta-dependence of the
    ratios for families forced on modes 1 and 2."""
    om = as_rotation(omega0)
    alphas = superstable_sequence(famA, n_max)  # both variants share c(alpha, 0)
    sa = np.array([r.alpha_prime for r in slope_table(famA, n_max, om, order, alphas)])
    sb = np.array([r.alpha_prime for r in slope_table(famB, n_max, om, order, alphas)])
    s2 = np.array([r.alpha_prime for r in slope_table(famA, n_max, om.doubled(), order, alphas)])
    ns = np.arange(2, n_max + 1)
    ra, rb = sa[1:] / sa[:-1], sb[1:] / sb[:-1]
    dbl = sa[1:] / s2[:-1]
    base = FLMFamily("eta", 0.0, famA.variant if famA.variant != "eta" else famA.shape1)
    r0 = _ratios(base, n_max, om, order, alphas)
    dev = {}
    for eta in etas:
        fam = FLMFamily("eta", eta, base.shape1, base.shape2)
        dev[eta] = float(np.max(np.abs(_ratios(fam, n_max, om, order, alphas) - r0)))
    fac = np.full(ns.size, np.nan)
    if phi is not None:
        fac = _factorization(phi, famA, om, n_max, alphas)
    return UniversalityReport(ns, ra, rb, np.abs(ra - rb), dbl, list(etas), dev, fac)


def _ratios(fam, n_max, om, order, alphas):
    s = np.array([r.alpha_prime for r in slope_table(fam, n_max, om, order, alphas)])
    return s[1:] / s[:-1]


def _factorization(phi, fam, om, n_max, alphas):
    """delta^-1 * m_{n-1} / m_{n-2} * |DT_{omega_{n-2}} v_{n-2}/|v_{n-2}||
    along the fixed-point pipeline, for n = 2..n_max."""
    from .renorm1d import feigenbaum_spectrum

    delta = feigenbaum_spectrum(phi).delta_feig
    act = ModeAction(phi)
    vs, omegas = fixed_point_pipeline(phi, fam, accumulation_point(alphas), om, n_max, action=act)
    cyc = two_cycle(phi)
    mins = []
    for k, v in enumerate(vs):
        vn = v / sup_norm(v)
        mins.append(circle_min_max(dG1_mode1(phi, omegas[k], vn, cycle=cyc))[0])
    out = []
    for n in range(2, n_max + 1):
        vn = vs[n - 2] / sup_norm(vs[n - 2])
        grow = sup_norm(dT_mode(act, omegas[n - 2], 1, vn))
        out.append(mins[n - 1] / mins[n - 2] * grow / delta)
    return np.array(out)
