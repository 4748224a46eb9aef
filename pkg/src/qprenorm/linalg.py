"""Dense nonsymmetric eigenproblems.

LAPACK's geev (balancing, Hessenberg reduction, implicit double-shift QR)
does the work; this wrapper adds the ordering and residual contract.
"""

import numpy as np

from .errors import NoConvergenceQR


def sort_key(lam):
    # modulus descending; within a conjugate pair the upper half-plane first
    ang = np.angle(lam)
    return (-round(abs(lam), 12), 0 if ang >= 0 else 1, abs(ang))


def eigen_decompose(A):
    """Eigenvalues (modulus descending), unit eigenvectors and relative residuals.

    The residual of pair i is |A v_i - lam_i v_i| / |A| in the 2-norm.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    try:
        vals, vecs = np.linalg.eig(A)
    except np.linalg.LinAlgError as exc:
        raise NoConvergenceQR(str(exc)) from exc
    order = sorted(range(vals.size), key=lambda i: sort_key(vals[i]))
    vals, vecs = vals[order], vecs[:, order]
    vecs = vecs / np.linalg.norm(vecs, axis=0)
    scale = np.linalg.norm(A, 2) if A.size else 1.0
    res = np.linalg.norm(A @ vecs - vecs * vals, axis=0) / (scale or 1.0)
    return vals, vecs, res
