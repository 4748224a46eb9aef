"""Projectivized skew dynamics (omega, v) -> (2 omega, L_omega v / |L_omega v|).

The full variant iterates pairs in B_1; the section variant applies the
phase reduction after every step so the orbit lives on u(0) = 0, v(0) > 0.
Recorded coordinates are Taylor coefficients about x = 0.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage

from . import _kernels
from .analytic import PairField, TaylorPoly, sample_matrix, sup_norm, taylor_at_zero_matrix
from .errors import EmbeddingOverlap, ParameterOutOfRange, ZeroImage
from .qp import ModeAction, apply_Lomega, phase_reduce, section_functional
from .rotation import RotationNumber, as_rotation

ZERO_NORM = 1e-300
COORDS = (0, 2, 4)
FULL_K0 = {0: 2.0, 2: 0.75, 4: 0.15}
SECTION_K0 = {2: 0.5, 4: 0.12}


@dataclass(frozen=True)
class RunConfig:
    order: int = 30
    transient: int = 2000
    record: int = 80000
    omega0: RotationNumber = RotationNumber("golden")
    seed: tuple = (0,)  # indices into (x_0..x_N, y_0..y_N) with unit weight
    variant: str = "full"
    K0: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "omega0", as_rotation(self.omega0))
        seed = (self.seed,) if np.isscalar(self.seed) else tuple(int(i) for i in self.seed)
        object.__setattr__(self, "seed", seed)
        if self.transient < 0 or self.record <= 0:
            raise ParameterOutOfRange("transient must be >= 0 and record > 0")
        if self.order < 4:
            raise ParameterOutOfRange("order must be at least 4 to record x_4, y_4")
        if self.variant not in ("full", "section"):
            raise ParameterOutOfRange(f"unknown variant {self.variant!r}")
        if not seed or any(not 0 <= i < 2 * (self.order + 1) for i in seed):
            raise ParameterOutOfRange(f"seed indices must lie in [0, {2 * (self.order + 1)})")


def seed_pair(cfg, domain):
    """The initial pair whose Taylor coordinates are the indicator of cfg.seed."""
    n = cfg.order
    x = np.zeros(2 * (n + 1))
    x[list(cfg.seed)] = 1.0
    u = TaylorPoly.from_monomials(x[: n + 1], n, domain)
    v = TaylorPoly.from_monomials(x[n + 1:], n, domain)
    return PairField(u, v)


def _normalized(p):
    nrm = sup_norm(p)
    if not nrm > ZERO_NORM:
        raise ZeroImage(f"image norm {nrm:.3e} underflows")
    return p / nrm


def step_full(state, act):
    omega, p = state
    img = apply_Lomega(act, omega, p)
    return (2.0 * omega) % 1.0, _normalized(img)


def step_section(state, act):
    """One step of the phase-reduced map; raises ZeroSectionValue if the
    image has u(0) = v(0) = 0."""
    omega, s = state
    p = s.pair if hasattr(s, "pair") else s
    img = apply_Lomega(act, omega, p)
    reduced, _ = phase_reduce(_normalized(img))
    return (2.0 * omega) % 1.0, reduced


@dataclass
class AttractorRun:
    config: RunConfig
    points: np.ndarray  # rows: omega, x0, y0, x2, y2, x4, y4 (NaN rows are gaps)
    defect: np.ndarray  # odd-coefficient defect after every step
    gaps: int
    final: PairField

    @property
    def valid(self):
        return self.points[~np.isnan(self.points).any(axis=1)]


def run_attractor(cfg, act=None, phi=None):
    """Discard cfg.transient iterates, then record cfg.record points."""
    if act is None:
        if phi is None:
            from .spectral import fixed_point

            phi = fixed_point(cfg.order)
        act = ModeAction(phi)
    if act.order != cfg.order:
        raise ParameterOutOfRange(f"operator order {act.order} differs from config order {cfg.order}")
    d, n = act.domain, act.order
    # the kernel reduces every image, so a seed off the section is fine
    p0 = seed_pair(cfg, d)
    steps = cfg.transient + cfg.record
    omegas = cfg.omega0.orbit(steps + 1)
    mono = np.ascontiguousarray(taylor_at_zero_matrix(d, n))
    rec, defect, u, v, status = _kernels.active.pair_orbit(
        np.ascontiguousarray(act.L1), np.ascontiguousarray(act.L2),
        np.ascontiguousarray(sample_matrix(d, n)), section_functional(d, n), mono, omegas,
        np.array(p0.u.coeffs, dtype=float), np.array(p0.v.coeffs, dtype=float),
        cfg.transient, cfg.variant == "section", np.array(COORDS, dtype=np.int64))
    if status >= 0:
        raise ZeroImage(f"orbit image vanished at step {status}")
    gaps = int(np.isnan(rec).any(axis=1).sum())
    final = PairField(TaylorPoly(u, d), TaylorPoly(v, d))
    return AttractorRun(cfg, rec, defect, gaps, final)


def even_subspace_defect(p):
    """Share of odd Taylor coefficients (about 0) in the total coefficient mass of u and v."""
    M = taylor_at_zero_matrix(p.domain, p.order)
    mu, mv = np.abs(M @ p.u.coeffs), np.abs(M @ p.v.coeffs)
    tot = mu.sum() + mv.sum()
    if tot == 0:
        return 0.0
    return float((mu[1::2].sum() + mv[1::2].sum()) / tot)


def torus_embed(points, K0, coord=0):
    """(cos(2 pi omega)(x + K0), sin(2 pi omega)(x + K0), y) for the pair (x_j, y_j).

    ``points`` is an attractor array (omega, x0, y0, x2, y2, x4, y4) or one
    such row; ``coord`` is the Taylor index j in COORDS.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    k = COORDS.index(coord)
    w, x, y = pts[:, 0], pts[:, 1 + 2 * k], pts[:, 2 + 2 * k]
    finite = np.isfinite(x)
    if finite.any() and K0 <= np.max(np.abs(x[finite])):
        warnings.warn(f"K0 = {K0} does not exceed max |x_{coord}| = {np.max(np.abs(x[finite])):.3g}",
                      EmbeddingOverlap, stacklevel=2)
    t = 2 * np.pi * w
    out = np.column_stack([np.cos(t) * (x + K0), np.sin(t) * (x + K0), y])
    return out[0] if np.ndim(points) == 1 else out


def omega_bin_counts(points, bins=64):
    w = points[:, 0]
    w = w[np.isfinite(w)]
    return np.histogram(w, bins=bins, range=(0.0, 1.0))[0]


def cluster_count(points, center, width, cutoff=0.1):
    """Single-linkage clusters of the coordinate cloud with omega in the bin
    [center - width/2, center + width/2), merged below cutoff times the
    bin's coordinate spread."""
    pts = points[~np.isnan(points).any(axis=1)]
    w = (pts[:, 0] - center + 0.5) % 1.0 - 0.5
    sel = pts[np.abs(w) < width / 2, 1:]
    if len(sel) < 2:
        return len(sel)
    keep = np.ptp(sel, axis=0) > 0
    sel = sel[:, keep]
    spread = float(np.linalg.norm(np.ptp(sel, axis=0)))
    Z = linkage(sel, method="single")
    return int(fcluster(Z, t=cutoff * spread, criterion="distance").max())


def bounding_box(points):
    pts = points[~np.isnan(points).any(axis=1)]
    return pts[:, 1:].min(axis=0), pts[:, 1:].max(axis=0)


def box_discrepancy(box_a, box_b):
    """Largest endpoint difference per coordinate, relative to that coordinate's scale.

    The scale is the larger of the box extent and the largest endpoint
    magnitude, floored at 1e-9 of the widest extent; coordinates pinned by
    the section (x_0 = 0, y_0 near 1) are then compared on a sensible scale.
    """
    lo_a, hi_a = box_a
    lo_b, hi_b = box_b
    ext = np.maximum(hi_a - lo_a, hi_b - lo_b)
    mag = np.max(np.abs([lo_a, hi_a, lo_b, hi_b]), axis=0)
    ext = np.maximum(np.maximum(ext, mag), 1e-9 * max(float(ext.max()), 1e-300))
    return float(np.max(np.maximum(np.abs(lo_a - lo_b), np.abs(hi_a - hi_b)) / ext))
