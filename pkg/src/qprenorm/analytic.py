"""Truncated expansions of analytic functions on a disc.

A function on the disc D(z0, rho) is stored by the coefficients of

    f(z) = sum_i f_i s**i,    s = (z - z0) / rho,

so that ``|s| <= 1`` on the disc and coefficient decay reads off the
distance to the nearest singularity directly.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ContainmentViolation, InsufficientTail

CONTAINMENT_MARGIN = 1e-3  # in units of the disc radius
_BOUNDARY_SAMPLES = 256


@dataclass(frozen=True)
class DiscDomain:
    center: float = 0.2
    radius: float = 1.5

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("disc radius must be positive")

    def to_unit(self, z):
        return (np.asarray(z) - self.center) / self.radius

    def boundary(self, m):
        t = 2 * np.pi * np.arange(m) / m
        return self.center + self.radius * np.exp(1j * t)

    def segment(self, m):
        """``m`` equispaced points of the real diameter."""
        return np.linspace(self.center - self.radius, self.center + self.radius, m)

    def affine(self, a, b, n):
        """Coefficients of x -> a x + b, re-expressed as a series in s."""
        c = np.zeros(n + 1)
        c[0] = a * self.center + b
        if n >= 1:
            c[1] = a * self.radius
        return c


DEFAULT_DOMAIN = DiscDomain()


def _frozen(a):
    a = np.array(a, copy=True)
    if a.dtype.kind not in "fc":
        a = a.astype(float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TaylorPoly:
    """Truncated expansion ``(f_0, ..., f_N)`` on a disc."""

    coeffs: np.ndarray
    domain: DiscDomain = field(default=DEFAULT_DOMAIN)

    def __post_init__(self):
        c = _frozen(np.atleast_1d(self.coeffs))
        if c.ndim != 1 or c.size == 0:
            raise ValueError("coefficients must be a non-empty vector")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "coeffs", c)

    # construction -----------------------------------------------------------
    @classmethod
    def constant(cls, value, order, domain=DEFAULT_DOMAIN):
        c = np.zeros(order + 1, dtype=np.result_type(value, float))
        c[0] = value
        return cls(c, domain)

    @classmethod
    def identity(cls, order, domain=DEFAULT_DOMAIN):
        return cls(domain.affine(1.0, 0.0, order), domain)

    @classmethod
    def from_monomials(cls, mono, order, domain=DEFAULT_DOMAIN):
        """Expand ``sum_k mono[k] x**k`` about the disc centre."""
        x = domain.affine(1.0, 0.0, order)
        return cls(_kernels.compose(np.asarray(mono, dtype=float), x, order), domain)

    # basic protocol ---------------------------------------------------------
    @property
    def order(self):
        return self.coeffs.size - 1

    def __call__(self, z):
        return evaluate(self, z)

    def __repr__(self):
        head = ", ".join(f"{c:.6g}" for c in self.coeffs[:4])
        more = ", ..." if self.coeffs.size > 4 else ""
        return f"TaylorPoly(N={self.order}, [{head}{more}])"

    def _like(self, coeffs):
        return TaylorPoly(coeffs, self.domain)

    def _aligned(self, other):
        if isinstance(other, TaylorPoly):
            if other.domain != self.domain:
                raise ValueError("polynomials live on different discs")
            n = max(self.order, other.order)
            return _pad(self.coeffs, n), _pad(other.coeffs, n)
        return None

    def __add__(self, other):
        pair = self._aligned(other)
        if pair is None:
            c = self.coeffs.copy().astype(np.result_type(self.coeffs, other))
            c[0] += other
            return self._like(c)
        return self._like(pair[0] + pair[1])

    __radd__ = __add__

    def __neg__(self):
        return self._like(-self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        pair = self._aligned(other)
        if pair is None:
            return self._like(self.coeffs * other)
        return self._like(_kernels.trunc_mul(pair[0], pair[1], pair[0].size - 1))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self._like(self.coeffs / scalar)

    def truncate(self, order):
        return self._like(_pad(self.coeffs, order))

    def real(self):
        return self._like(self.coeffs.real.copy())

    def to_monomials(self):
        """Coefficients of the same polynomial in powers of ``x / rho``.

        Used for parity diagnostics: a function even about 0 has vanishing
        odd entries.
        """
        n = self.order
        d = self.domain
        # s = (x - z0)/rho = t - z0/rho with t = x/rho
        shift = np.array([-d.center / d.radius, 1.0])
        return _kernels.compose(self.coeffs, shift, n)


def taylor_at_zero_matrix(domain, order):
    """Matrix taking basis coefficients to Taylor coefficients in powers of x about 0."""
    shift = np.array([-domain.center / domain.radius, 1.0])
    P = _kernels.power_table(shift, order)
    return P / domain.radius ** np.arange(order + 1)[:, None]


def _pad(c, order):
    out = np.zeros(order + 1, dtype=c.dtype)
    m = min(order + 1, c.size)
    out[:m] = c[:m]
    return out


def evaluate(p, z):
    """Horner evaluation of ``sum f_i ((z - z0)/rho)**i``.

    Points outside the disc are evaluated as well; use :func:`outside` to
    flag them.
    """
    s = p.domain.to_unit(z)
    c = p.coeffs
    r = np.zeros_like(s, dtype=np.result_type(s, c)) + c[-1]
    for k in c[-2::-1]:
        r = r * s + k
    return r[()] if np.ndim(r) == 0 else r


def outside(p, z):
    return np.abs(p.domain.to_unit(z)) > 1.0


def _effective_degree(c, rel=0.0):
    nz = np.nonzero(np.abs(c) > rel)[0]
    return int(nz[-1]) if nz.size else 0


def range_excess(q, samples=_BOUNDARY_SAMPLES):
    """max over the boundary of |q(z) - z0| / rho - 1 (positive means escape)."""
    zs = q.domain.boundary(samples)
    w = evaluate(q, zs)
    return float(np.max(np.abs(w - q.domain.center)) / q.domain.radius - 1.0)


def compose(p, q, margin=CONTAINMENT_MARGIN, check=True):
    """Truncated expansion of ``p o q`` at the order of ``q``.

    When the product of the degrees exceeds the truncation order the result
    is only meaningful if ``q`` maps the disc into the disc, so that case is
    checked on boundary samples.  Exact polynomial compositions are never
    rejected.
    """
    if p.domain != q.domain:
        raise ValueError("polynomials live on different discs")
    n = max(p.order, q.order)
    d = p.domain
    if np.array_equal(_pad(p.coeffs, n), d.affine(1.0, 0.0, n)):
        # identity outer map: skip the round trip through s, which is inexact
        return TaylorPoly(_pad(q.coeffs, n), d)
    if check and _effective_degree(p.coeffs) * _effective_degree(q.coeffs) > n:
        excess = range_excess(q)
        if excess > margin:
            raise ContainmentViolation(
                f"inner map leaves the disc: max |q - z0|/rho = {1 + excess:.6g}"
            )
    w = _pad(q.coeffs, n).astype(np.result_type(q.coeffs, float))
    w[0] -= d.center
    w = w / d.radius
    return TaylorPoly(_kernels.compose(p.coeffs, w, n), d)


def scale_arg_matrix(domain, a, order):
    """Matrix of p -> p(a x) on coefficient vectors (exact re-expansion)."""
    sigma = np.array([(a - 1.0) * domain.center / domain.radius, a])
    return _kernels.power_table(sigma, order)


def scale_arg(p, a, check=False, margin=CONTAINMENT_MARGIN):
    """``x -> p(a x)`` re-expanded about the same centre.

    The re-expansion of a polynomial under an affine substitution involves no
    truncation, so containment is only checked on request.
    """
    if a == 0:
        raise ValueError("scale factor must be nonzero")
    if check:
        lin = TaylorPoly(p.domain.affine(a, 0.0, 1), p.domain)
        excess = range_excess(lin)
        if excess > margin:
            raise ContainmentViolation(f"a * disc leaves the disc (a = {a})")
    S = scale_arg_matrix(p.domain, a, p.order)
    return TaylorPoly(S @ p.coeffs, p.domain)


def derivative_coeffs(c, rho):
    d = np.zeros_like(c)
    d[:-1] = np.arange(1, c.size) * c[1:] / rho
    return d


def differentiate(p):
    """Derivative, as an expansion of order N - 1 (order 0 stays order 0)."""
    c = p.coeffs
    if c.size == 1:
        return TaylorPoly(np.zeros(1, dtype=c.dtype), p.domain)
    return TaylorPoly(np.arange(1, c.size) * c[1:] / p.domain.radius, p.domain)


def sample_matrix(domain, order, m=None):
    """Vandermonde matrix mapping coefficients to values on the real segment."""
    m = 4 * order + 1 if m is None else m
    s = domain.to_unit(domain.segment(m))
    return np.vander(s, order + 1, increasing=True)


def sup_norm(p, samples=None):
    """Maximum modulus over equispaced samples of the real diameter.

    For a :class:`PairField` this is the maximum of sqrt(u**2 + v**2), the
    sup over the cylinder of u(x) cos(2 pi theta) + v(x) sin(2 pi theta).
    """
    if isinstance(p, PairField):
        n = p.order
        V = sample_matrix(p.domain, n, samples)
        a = V @ _pad(p.u.coeffs, n)
        b = V @ _pad(p.v.coeffs, n)
        return float(np.max(np.sqrt(np.abs(a) ** 2 + np.abs(b) ** 2)))
    V = sample_matrix(p.domain, p.order, samples)
    return float(np.max(np.abs(V @ p.coeffs)))


def estimate_radius(p, noise_floor=0.0, min_points=5):
    """Radius of convergence from the decay of the tail coefficients.

    Fits log|f_n| linearly over n in [N/2, N].  Coefficients at or below
    ``noise_floor * max|f|`` carry no decay information (rounding level) and
    are skipped like exact zeros.
    """
    c = np.abs(np.asarray(p.coeffs if isinstance(p, TaylorPoly) else p))
    rho = p.domain.radius if isinstance(p, TaylorPoly) else 1.0
    n = c.size - 1
    lo = n // 2
    idx = np.arange(lo, n + 1)
    tail = c[lo:]
    keep = tail > noise_floor * c.max() if c.max() > 0 else tail > 0
    keep &= tail > 0
    if keep.sum() < min_points:
        raise InsufficientTail(f"only {int(keep.sum())} usable tail coefficients")
    slope = np.polyfit(idx[keep], np.log(tail[keep]), 1)[0]
    return float(rho * np.exp(-slope))


def project_pN(p, order):
    """Coefficient vector of the order-``order`` truncation."""
    c = p.coeffs if isinstance(p, TaylorPoly) else np.asarray(p)
    return _pad(c, order)


def include_iN(coeffs, domain=DEFAULT_DOMAIN):
    return TaylorPoly(np.asarray(coeffs), domain)


@dataclass(frozen=True, eq=False)
class PairField:
    """(u, v) standing for u(x) cos(2 pi theta) + v(x) sin(2 pi theta)."""

    u: TaylorPoly
    v: TaylorPoly

    def __post_init__(self):
        if self.u.domain != self.v.domain:
            raise ValueError("pair components live on different discs")
        if self.u.order != self.v.order:
            n = max(self.u.order, self.v.order)
            object.__setattr__(self, "u", self.u.truncate(n))
            object.__setattr__(self, "v", self.v.truncate(n))

    @classmethod
    def from_vector(cls, vec, domain=DEFAULT_DOMAIN):
        vec = np.asarray(vec)
        h = vec.size // 2
        return cls(TaylorPoly(vec[:h], domain), TaylorPoly(vec[h:], domain))

    @classmethod
    def zeros(cls, order, domain=DEFAULT_DOMAIN):
        z = TaylorPoly(np.zeros(order + 1), domain)
        return cls(z, z)

    @property
    def domain(self):
        return self.u.domain

    @property
    def order(self):
        return self.u.order

    def vector(self):
        return np.concatenate([self.u.coeffs, self.v.coeffs])

    def __add__(self, other):
        return PairField(self.u + other.u, self.v + other.v)

    def __sub__(self, other):
        return PairField(self.u - other.u, self.v - other.v)

    def __mul__(self, scalar):
        return PairField(self.u * scalar, self.v * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return PairField(self.u / scalar, self.v / scalar)

    def __neg__(self):
        return PairField(-self.u, -self.v)

    def __call__(self, theta, x):
        t = 2 * np.pi * np.asarray(theta)
        return evaluate(self.u, x) * np.cos(t) + evaluate(self.v, x) * np.sin(t)

    def __repr__(self):
        return f"PairField(N={self.order})"


class QPFunction:
    """Finite Fourier series in theta with expansion-valued coefficients.

    ``modes`` has shape (2K + 1, N + 1); row ``K + k`` holds c_k.  Rows for
    negative k are kept as the conjugates of the positive ones.
    """

    def __init__(self, modes, domain=DEFAULT_DOMAIN, check=True):
        m = np.array(modes, dtype=complex)
        if m.ndim != 2 or m.shape[0] % 2 != 1:
            raise ValueError("modes must have shape (2K+1, N+1)")
        k = m.shape[0] // 2
        if check:
            err = np.max(np.abs(m - np.conj(m[::-1])), initial=0.0)
            scale = max(1.0, np.max(np.abs(m)))
            if err > 1e-10 * scale:
                raise ValueError("modes violate conjugate symmetry c_-k = conj(c_k)")
        # snap to exact symmetry
        m = 0.5 * (m + np.conj(m[::-1]))
        m[k] = m[k].real
        m.setflags(write=False)
        self.modes = m
        self.domain = domain

    @property
    def K(self):
        return self.modes.shape[0] // 2

    @property
    def order(self):
        return self.modes.shape[1] - 1

    def mode(self, k):
        if abs(k) > self.K:
            return TaylorPoly(np.zeros(self.order + 1, dtype=complex), self.domain)
        c = self.modes[self.K + k]
        return TaylorPoly(c.real.copy() if k == 0 else c.copy(), self.domain)

    @classmethod
    def from_modes(cls, table, K, order, domain=DEFAULT_DOMAIN):
        """Build from ``{k: coeffs}`` for k >= 0; negative modes are implied."""
        m = np.zeros((2 * K + 1, order + 1), dtype=complex)
        for k, c in table.items():
            c = _pad(np.asarray(c.coeffs if isinstance(c, TaylorPoly) else c, dtype=complex), order)
            m[K + k] = c
            if k:
                m[K - k] = np.conj(c)
        return cls(m, domain)

    @classmethod
    def uncoupled(cls, psi, K=1):
        return cls.from_modes({0: psi.coeffs}, K, psi.order, psi.domain)

    @classmethod
    def from_pair(cls, pair, k=1, K=None, base=None):
        """Embed u cos(2 pi k theta) + v sin(2 pi k theta), plus an optional mode 0."""
        K = k if K is None else K
        ck = 0.5 * (pair.u.coeffs - 1j * pair.v.coeffs)
        table = {k: ck}
        if base is not None:
            table[0] = base.coeffs
        return cls.from_modes(table, K, pair.order, pair.domain)

    def __add__(self, other):
        K = max(self.K, other.K)
        return QPFunction(_pad_modes(self.modes, K) + _pad_modes(other.modes, K), self.domain)

    def __sub__(self, other):
        return self + other * (-1.0)

    def __mul__(self, scalar):
        return QPFunction(self.modes * scalar, self.domain)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return QPFunction(self.modes / scalar, self.domain)

    def at_theta(self, theta):
        """The real expansion x -> f(theta, x) for one angle."""
        k = np.arange(-self.K, self.K + 1)
        ph = np.exp(2j * np.pi * k * theta)
        return TaylorPoly((ph @ self.modes).real, self.domain)

    def __call__(self, theta, x):
        return evaluate(self.at_theta(theta), x)


def _pad_modes(m, K):
    k0 = m.shape[0] // 2
    out = np.zeros((2 * K + 1, m.shape[1]), dtype=complex)
    out[K - k0: K + k0 + 1] = m
    return out
