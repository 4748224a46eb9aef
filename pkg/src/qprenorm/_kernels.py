"""Hot loops, compiled with numba when available.

Set ``QPRENORM_DISABLE_NUMBA=1`` to force the pure-numpy path.  Both paths
are always importable as :data:`numpy_kernels` and :data:`numba_kernels`
(the latter is ``None`` without numba) so they can be benchmarked side by
side.
"""

import os
from types import SimpleNamespace

import numpy as np

_FLAG = os.environ.get("QPRENORM_DISABLE_NUMBA", "").strip().lower()
NUMBA_DISABLED = _FLAG in ("1", "true", "yes", "on")

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    njit = None


# -- pure numpy -------------------------------------------------------------

def _trunc_mul_np(a, b, n):
    out = np.zeros(n + 1, dtype=np.result_type(a, b))
    full = np.convolve(a, b)[: n + 1]
    out[: full.size] = full
    return out


def _compose_np(p, w, n):
    r = np.zeros(n + 1, dtype=np.result_type(p, w))
    r[0] = p[-1]
    for c in p[-2::-1]:
        r = np.convolve(r, w)[: n + 1]
        r[0] += c
    return r


def _power_table_np(w, n):
    P = np.zeros((n + 1, n + 1), dtype=w.dtype)
    col = np.zeros(n + 1, dtype=w.dtype)
    col[0] = 1.0
    for j in range(n + 1):
        P[:, j] = col
        col = np.convolve(col, w)[: n + 1]
    return P


# -- loop versions (numba targets) ------------------------------------------

def _trunc_mul_loop(a, b, n):
    out = np.zeros(n + 1)
    la = min(a.shape[0], n + 1)
    lb = b.shape[0]
    for i in range(la):
        ai = a[i]
        if ai == 0.0:
            continue
        top = min(lb, n + 1 - i)
        for j in range(top):
            out[i + j] += ai * b[j]
    return out


def _compose_loop(p, w, n):
    r = np.zeros(n + 1)
    r[0] = p[p.shape[0] - 1]
    for k in range(p.shape[0] - 2, -1, -1):
        r = _trunc_mul_loop(r, w, n)
        r[0] += p[k]
    return r


def _power_table_loop(w, n):
    P = np.zeros((n + 1, n + 1))
    col = np.zeros(n + 1)
    col[0] = 1.0
    for j in range(n + 1):
        P[:, j] = col
        col = _trunc_mul_loop(col, w, n)
    return P


# -- orbit loops: written with numpy primitives so one source serves both --

def _pair_orbit(L1, L2, V, e0, mono, omegas, u, v, n_skip, section, cidx):
    """Iterate (omega, u, v) -> (2 omega, normalized L_omega(u, v)).

    ``mono`` converts basis coefficients to the recorded Taylor coefficients.
    Returns the recorded rows (omega, u_c0, v_c0, u_c1, ...), the odd
    coefficient defect per step and the final state.  A row of NaN marks a
    step where the section value vanished.
    """
    n_steps = omegas.shape[0] - 1
    nc = cidx.shape[0]
    rec = np.full((n_steps - n_skip, 1 + 2 * nc), np.nan)
    defect = np.zeros(n_steps)
    odd = np.zeros(mono.shape[0])
    for i in range(1, mono.shape[0], 2):
        odd[i] = 1.0
    for t in range(n_steps):
        ang = 2.0 * np.pi * omegas[t]
        c = np.cos(ang)
        s = np.sin(ang)
        a = L1 @ u
        b = L2 @ u
        cc = L1 @ v
        d = L2 @ v
        nu = a + c * b - s * d
        nv = cc + s * b + c * d
        ok = True
        if section:
            u0 = e0 @ nu
            v0 = e0 @ nv
            r = np.sqrt(u0 * u0 + v0 * v0)
            if r < 1e-13 * (np.max(np.abs(nu)) + np.max(np.abs(nv)) + 1e-300):
                ok = False
            else:
                cg = v0 / r
                sg = -u0 / r
                tu = nu * cg + nv * sg
                nv = -nu * sg + nv * cg
                nu = tu
        vals = np.sqrt((V @ nu) ** 2 + (V @ nv) ** 2)
        nrm = np.max(vals)
        if not nrm > 1e-300:
            return rec, defect, u, v, t
        u = nu / nrm
        v = nv / nrm
        mu = np.abs(mono @ u)
        mv = np.abs(mono @ v)
        tot = np.sum(mu) + np.sum(mv)
        defect[t] = (odd @ mu + odd @ mv) / tot
        if t >= n_skip and ok:
            row = t - n_skip
            rec[row, 0] = omegas[t + 1]
            for j in range(nc):
                rec[row, 1 + 2 * j] = mono[cidx[j]] @ u
                rec[row, 2 + 2 * j] = mono[cidx[j]] @ v
    return rec, defect, u, v, -1


def _ratio_orbit(L1, L2, V, omegas, u1, v1, u2, v2):
    """Log-norm bookkeeping for two sequences driven by omega_k and 2 omega_k.

    Returns log(|v_{k,2}| / |v_{k,1}|) for k = 0..steps, where |.| is the
    pair sup norm on the sample lattice V.
    """
    n_steps = omegas.shape[0] - 1
    out = np.zeros(n_steps + 1)
    n1 = np.max(np.sqrt((V @ u1) ** 2 + (V @ v1) ** 2))
    n2 = np.max(np.sqrt((V @ u2) ** 2 + (V @ v2) ** 2))
    u1 = u1 / n1
    v1 = v1 / n1
    u2 = u2 / n2
    v2 = v2 / n2
    acc1 = np.log(n1)
    acc2 = np.log(n2)
    out[0] = acc2 - acc1
    for t in range(n_steps):
        for which in range(2):
            ang = 2.0 * np.pi * omegas[t] * (which + 1)
            c = np.cos(ang)
            s = np.sin(ang)
            if which == 0:
                u = u1
                v = v1
            else:
                u = u2
                v = v2
            b = L2 @ u
            d = L2 @ v
            nu = L1 @ u + c * b - s * d
            nv = L1 @ v + s * b + c * d
            nrm = np.max(np.sqrt((V @ nu) ** 2 + (V @ nv) ** 2))
            if which == 0:
                u1 = nu / nrm
                v1 = nv / nrm
                acc1 += np.log(nrm)
            else:
                u2 = nu / nrm
                v2 = nv / nrm
                acc2 += np.log(nrm)
        out[t + 1] = acc2 - acc1
    return out


numpy_kernels = SimpleNamespace(
    name="numpy",
    trunc_mul=_trunc_mul_np,
    compose=_compose_np,
    power_table=_power_table_np,
    pair_orbit=_pair_orbit,
    ratio_orbit=_ratio_orbit,
)

if njit is not None:
    _mul_nb = njit(cache=True)(_trunc_mul_loop)

    # the compose/power loops call the multiplication kernel, so rebind the
    # global they resolve to before compiling
    def _compose_src(p, w, n):
        r = np.zeros(n + 1)
        r[0] = p[p.shape[0] - 1]
        for k in range(p.shape[0] - 2, -1, -1):
            r = _mul_nb(r, w, n)
            r[0] += p[k]
        return r

    def _power_src(w, n):
        P = np.zeros((n + 1, n + 1))
        col = np.zeros(n + 1)
        col[0] = 1.0
        for j in range(n + 1):
            P[:, j] = col
            col = _mul_nb(col, w, n)
        return P

    numba_kernels = SimpleNamespace(
        name="numba",
        trunc_mul=_mul_nb,
        compose=njit(cache=True)(_compose_src),
        power_table=njit(cache=True)(_power_src),
        pair_orbit=njit(cache=True)(_pair_orbit),
        ratio_orbit=njit(cache=True)(_ratio_orbit),
    )
else:  # pragma: no cover
    numba_kernels = None

active = numpy_kernels if (NUMBA_DISABLED or numba_kernels is None) else numba_kernels


def _real(x):
    return np.ascontiguousarray(x, dtype=np.float64)


def trunc_mul(a, b, n):
    """First ``n + 1`` coefficients of the product of two series."""
    if np.iscomplexobj(a) or np.iscomplexobj(b):
        return _trunc_mul_np(np.asarray(a), np.asarray(b), n)
    return active.trunc_mul(_real(a), _real(b), n)


def compose(p, w, n):
    """Horner evaluation of the series ``p`` at the series ``w``, truncated."""
    if np.iscomplexobj(p) or np.iscomplexobj(w):
        return _compose_np(np.asarray(p), np.asarray(w), n)
    return active.compose(_real(p), _real(w), n)


def power_table(w, n):
    """Matrix whose column j holds the coefficients of ``w**j``."""
    if np.iscomplexobj(w):
        return _power_table_np(np.asarray(w), n)
    return active.power_table(_real(w), n)
