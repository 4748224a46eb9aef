"""Spectra of L_omega: single records, sweeps over omega, order validation and
the linearization of the phase-reduced map."""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import linear_sum_assignment

from .analytic import DEFAULT_DOMAIN, PairField, TaylorPoly, estimate_radius, sample_matrix
from .errors import InsufficientTail, MatchFailure, PowerIterationDivergence, ZeroSectionValue
from .linalg import eigen_decompose
from .qp import ModeAction, omega_value, section_functional
from .renorm1d import newton_fixed_point

__all__ = [
    "SpectrumRecord",
    "SweepTable",
    "eigen_decompose",
    "fixed_point",
    "spectrum_of_Lomega",
    "omega_sweep",
    "max_jump_ratio",
    "validate_eigenvectors",
    "validate_radius",
    "distances_monotone",
    "section_jacobian_spectrum",
    "section_sweep",
    "match_to_reference",
]


def thread_count():
    try:
        return max(1, int(os.environ.get("QPRENORM_THREADS", "1")))
    except ValueError:
        return 1


@lru_cache(maxsize=16)
def fixed_point(order):
    """Newton fixed point at the given truncation order (cached)."""
    return newton_fixed_point(order=order)


def _base(phi, order):
    if phi is None or phi.order != order:
        return fixed_point(order)
    return phi


@dataclass
class SpectrumRecord:
    omega: float
    order: int
    eigenvalues: np.ndarray
    vectors: np.ndarray = field(repr=False)  # columns: stacked (u, v), complex
    residuals: np.ndarray = field(repr=False)

    def eigenvector(self, i, domain=DEFAULT_DOMAIN):
        return PairField.from_vector(self.vectors[:, i], domain)

    def top(self, m):
        return SpectrumRecord(self.omega, self.order, self.eigenvalues[:m],
                              self.vectors[:, :m], self.residuals[:m])


def spectrum_of_Lomega(phi=None, omega="golden", order=100, action=None):
    act = action or ModeAction(_base(phi, order))
    w = omega_value(omega)
    vals, vecs, res = eigen_decompose(act.lomega_matrix(w))
    return SpectrumRecord(w, act.order, vals, vecs, res)


def conjugate_partner_error(vals, tol=1e-9):
    """Largest distance from a complex eigenvalue to the nearest conjugate in the list."""
    worst = 0.0
    for lam in vals:
        if abs(lam.imag) > tol:
            worst = max(worst, float(np.min(np.abs(vals - np.conj(lam)))))
    return worst


def real_multiplicity_ok(vals, tol=1e-6):
    """Every real eigenvalue appears an even number of times (within tol)."""
    reals = np.sort(vals[np.abs(vals.imag) <= tol].real)
    i = 0
    while i < reals.size:
        j = i
        while j + 1 < reals.size and reals[j + 1] - reals[i] <= tol * max(1.0, abs(reals[i])):
            j += 1
        if (j - i + 1) % 2:
            return False
        i = j + 1
    return True


def match_to_reference(vals, ref):
    """Indices j such that vals[j[i]] is matched to ref[i] (optimal assignment on |vals - ref|)."""
    cost = np.abs(np.asarray(ref)[:, None] - np.asarray(vals)[None, :])
    rows, cols = linear_sum_assignment(cost)
    out = np.empty(len(ref), dtype=int)
    out[rows] = cols
    return out


@dataclass
class SweepTable:
    grid: np.ndarray
    order: int
    eigenvalues: np.ndarray  # (grid, m) complex, columns linked into tracks
    residuals: np.ndarray
    ambiguous: list = field(default_factory=list)  # (grid index, track index)

    def rows(self):
        for j, w in enumerate(self.grid):
            for i in range(self.eigenvalues.shape[1]):
                lam = self.eigenvalues[j, i]
                yield w, i, lam.real, lam.imag, abs(lam), self.residuals[j, i]


def omega_sweep(phi=None, grid_size=1280, order=100, top_m=24, action=None, threads=None):
    """Top eigenvalues of L_omega on an equispaced grid, linked into tracks by
    nearest-neighbour assignment between consecutive grid points."""
    if grid_size < 2:
        raise ValueError("grid needs at least two points")
    act = action or ModeAction(_base(phi, order))
    grid = np.arange(grid_size) / grid_size

    def one(w):
        vals, _, res = eigen_decompose(act.lomega_matrix(w))
        return vals[:top_m], res[:top_m]

    out = _map_grid(one, grid, threads)
    return _link_tracks(grid, act.order, out, top_m)


def _map_grid(fn, grid, threads):
    threads = threads or thread_count()
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(fn, grid))
    return [fn(w) for w in grid]


def _link_tracks(grid, order, out, top_m):
    m = min(top_m, min(o[0].size for o in out))
    vals = np.array([o[0][:m] for o in out])
    res = np.array([o[1][:m] for o in out])
    ambiguous = []
    for j in range(1, len(grid)):
        cost = np.abs(vals[j - 1][:, None] - vals[j][None, :])
        _, perm = linear_sum_assignment(cost)
        vals[j], res[j] = vals[j][perm], res[j][perm]
        close = np.abs(vals[j][:, None] - vals[j][None, :]) + np.eye(m) * 1.0
        for i in np.nonzero(np.min(close, axis=1) < 1e-8)[0]:
            ambiguous.append((j, int(i)))
    return SweepTable(np.asarray(grid), order, vals, res, ambiguous)


def max_jump_ratio(table, floor=1e-14):
    """Largest step along any track relative to the larger of its two
    neighbouring steps; a value near 1 means the tracks are continuous."""
    d = np.abs(np.diff(table.eigenvalues, axis=0))
    if d.shape[0] < 3:
        return 1.0
    local = np.maximum(np.roll(d, 1, axis=0), np.roll(d, -1, axis=0))
    return float(np.max(d / np.maximum(local, floor)))


# -- validation across truncation orders ------------------------------------

def _pad_pair(vec, n_from, n_to):
    h = n_from + 1
    out = np.zeros(2 * (n_to + 1), dtype=vec.dtype)
    out[:h] = vec[:h]
    out[n_to + 1: n_to + 1 + h] = vec[h:]
    return out


def _pair_sup(vec, V):
    n = V.shape[1]
    return float(np.max(np.sqrt(np.abs(V @ vec[:n]) ** 2 + np.abs(V @ vec[n:]) ** 2)))


def _cluster(vals, i, tol=1e-6):
    return np.nonzero(np.abs(vals - vals[i]) <= tol * max(1.0, abs(vals[i])))[0]


def subspace_distance(x, B, V):
    """Pair sup norm of x minus its least-squares projection on span(B), relative to x."""
    c, *_ = np.linalg.lstsq(B, x, rcond=None)
    return _pair_sup(x - B @ c, V) / _pair_sup(x, V)


def validate_eigenvectors(phi=None, omega="golden", orders=range(40, 101, 10), n_ref=110, count=24,
                          match_tol=1e-3):
    """Distance between eigenvectors at each order and at the reference order.

    Eigenvalues are matched by nearest distance; vectors are compared after
    the optimal complex rescaling within the (possibly two-dimensional)
    eigenspace of the reference.  Returns ``{N: distances}`` with NaN where
    no match was found.
    """
    w = omega_value(omega)
    ref = spectrum_of_Lomega(fixed_point(n_ref) if phi is None else phi, w, n_ref)
    V = sample_matrix(DEFAULT_DOMAIN, n_ref)
    table = {}
    failures = []
    for N in orders:
        rec = ref if N == n_ref else spectrum_of_Lomega(fixed_point(N), w, N)
        d = np.full(count, np.nan)
        for i in range(count):
            lam = ref.eigenvalues[i]
            j = int(np.argmin(np.abs(rec.eigenvalues - lam)))
            if abs(rec.eigenvalues[j] - lam) > match_tol * max(1.0, abs(lam)):
                failures.append((N, i))
                continue
            B = ref.vectors[:, _cluster(ref.eigenvalues, i)]
            xs = [_pad_pair(rec.vectors[:, k], N, n_ref) for k in _cluster(rec.eigenvalues, j)]
            d[i] = max(subspace_distance(x, B, V) for x in xs)
        table[N] = d
    if failures and len(failures) == count * len(list(orders)):
        raise MatchFailure("no eigenvalue could be matched across orders")
    return table


def distances_monotone(table, noise=0.1, plateau=3.0, rounding=1e-12):
    """Distances decrease with the order, up to a relative noise, until they
    reach the floor set by the reference order.

    For each eigenvector the floor is the larger of ``plateau`` times its
    smallest distance and ``rounding``: once the truncation error falls below
    the reference's own error, or to rounding level, the distance stops
    decreasing and only noise remains.
    """
    orders = sorted(table)
    D = np.array([table[N] for N in orders])
    for col in D.T:
        col = col[np.isfinite(col)]
        if col.size < 2:
            continue
        floor = max(plateau * col.min(), rounding)
        for prev, cur in zip(col[:-1], col[1:]):
            if cur > (1 + noise) * prev and cur > floor:
                return False
    return True


def validate_radius(record, count=24, noise_floor=0.0):
    """Smaller of the two estimated radii of convergence of each eigenvector."""
    n = record.order
    out = np.full(count, np.nan)
    for i in range(min(count, record.eigenvalues.size)):
        vec = record.vectors[:, i]
        radii = []
        for part in (vec[: n + 1], vec[n + 1:]):
            if np.max(np.abs(part)) == 0:
                continue
            radii.append(estimate_radius(TaylorPoly(np.abs(part)), noise_floor=noise_floor))
        if not radii:
            raise InsufficientTail("eigenvector vanishes")
        out[i] = min(radii)
    return out


# -- linearization of the phase-reduced map ---------------------------------

@dataclass
class SectionSpectrum:
    omega: float
    eigenvalues: np.ndarray
    gap: float
    fixed_point: np.ndarray = field(repr=False)
    power_ratio: float = np.nan
    iterations: int = 0
    residuals: np.ndarray = field(default=None, repr=False)


class _SectionMap:
    """s -> t_gamma(s) L_omega s on the hyperplane u(0) = 0, in coordinates
    (u_1..u_N, v_0..v_N); u_0 is fixed by the constraint."""

    def __init__(self, act, omega):
        self.n = n = act.order
        self.M = act.lomega_matrix(omega)
        self.e0 = section_functional(act.domain, n)
        self.V = sample_matrix(act.domain, n)

    def lift(self, y):
        n = self.n
        u = np.empty(n + 1)
        u[1:] = y[:n]
        u[0] = -self.e0[1:] @ y[:n]
        return np.concatenate([u, y[n:]])

    def drop(self, x):
        n = self.n
        return np.concatenate([x[1:n + 1], x[n + 1:]])

    def reduce(self, x):
        n = self.n
        u, v = x[: n + 1], x[n + 1:]
        u0, v0 = self.e0 @ u, self.e0 @ v
        r = np.hypot(u0, v0)
        if not r > 1e-13 * np.max(np.abs(x)):
            raise ZeroSectionValue("section value vanishes")
        cg, sg = v0 / r, -u0 / r
        return np.concatenate([u * cg + v * sg, -u * sg + v * cg])

    def __call__(self, y):
        return self.drop(self.reduce(self.M @ self.lift(y)))

    def norm(self, y):
        return _pair_sup(self.lift(y), self.V)


def section_jacobian_spectrum(act, omega, tol=1e-10, max_iter=500, h=1e-6):
    """Projective fixed point of the phase-reduced L_omega and the spectrum of
    its Jacobian there (central differences with one Richardson step)."""
    w = omega_value(omega)
    F = _SectionMap(act, w)
    n = act.order
    y = np.zeros(2 * n + 1)
    y[n] = 1.0  # v = 1, u = 0: on the section
    y /= F.norm(y)
    factors = []
    for it in range(1, max_iter + 1):
        z = F(y)
        nz = F.norm(z)
        factors.append(nz)
        z /= nz
        step = np.max(np.abs(z - y))
        y = z
        if step < tol:
            break
    else:
        raise PowerIterationDivergence(f"no projective fixed point at omega = {w} after {max_iter} steps")

    def central(hh):
        J = np.empty((y.size, y.size))
        for i in range(y.size):
            e = np.zeros(y.size)
            e[i] = hh
            J[:, i] = (F(y + e) - F(y - e)) / (2 * hh)
        return J

    J = (4 * central(h / 2) - central(h)) / 3
    vals, _, res = eigen_decompose(J)
    gap = float(abs(vals[1]) / abs(vals[0])) if vals.size > 1 else 0.0
    return SectionSpectrum(w, vals, gap, F.lift(y), float(factors[-1]), it, res)


def section_sweep(phi=None, grid_size=256, order=30, top_m=8, action=None, threads=None, **kw):
    """section_jacobian_spectrum on an equispaced omega grid, linked into tracks.

    Also returns the per-omega spectral gaps |lambda_2| / |lambda_1|.
    """
    act = action or ModeAction(_base(phi, order))
    grid = np.arange(grid_size) / grid_size
    specs = _map_grid(lambda w: section_jacobian_spectrum(act, w, **kw), grid, threads)
    table = _link_tracks(grid, act.order, [(s.eigenvalues, s.residuals) for s in specs], top_m)
    return table, np.array([s.gap for s in specs])
