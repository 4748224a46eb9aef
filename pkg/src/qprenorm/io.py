"""Plain-text persistence: expansions, matrices, tables and reference comparison."""

import csv
import io as _io
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .analytic import DiscDomain, TaylorPoly
from .errors import SchemaMismatch


def fmt(x):
    """17 significant digits: enough for a bit-exact decimal round trip of a double."""
    return format(float(x), ".17g")


def taylor_to_text(p):
    if np.iscomplexobj(p.coeffs) and np.any(np.imag(p.coeffs)):
        raise ValueError("only real expansions are serialized")
    d = p.domain
    lines = ["z0,rho,N", f"{fmt(d.center)},{fmt(d.radius)},{p.order}", "index,coefficient"]
    lines += [f"{i},{fmt(c)}" for i, c in enumerate(np.real(p.coeffs))]
    return "\n".join(lines) + "\n"


def taylor_from_text(text):
    rows = [r.strip() for r in text.strip().splitlines() if r.strip()]
    if len(rows) < 3 or rows[0] != "z0,rho,N" or rows[2] != "index,coefficient":
        raise SchemaMismatch("not a TaylorPoly file: expected headers 'z0,rho,N' and 'index,coefficient'")
    z0, rho, n = rows[1].split(",")
    n = int(n)
    body = [r.split(",") for r in rows[3:]]
    if len(body) != n + 1 or [int(i) for i, _ in body] != list(range(n + 1)):
        raise SchemaMismatch(f"expected coefficient rows 0..{n}")
    coeffs = np.array([float(c) for _, c in body])
    return TaylorPoly(coeffs, DiscDomain(float(z0), float(rho)))


def write_taylor(path, p):
    with open(path, "w") as fh:
        fh.write(taylor_to_text(p))


def read_taylor(path):
    with open(path) as fh:
        return taylor_from_text(fh.read())


def write_matrix(path, A):
    A = np.asarray(A, dtype=float)
    with open(path, "w") as fh:
        fh.write("rows,cols\n")
        fh.write(f"{A.shape[0]},{A.shape[1]}\n")
        for row in A:
            fh.write(",".join(fmt(x) for x in row) + "\n")


def read_matrix(path):
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != "rows,cols":
        raise SchemaMismatch("matrix file must start with 'rows,cols'")
    r, c = (int(x) for x in lines[1].split(","))
    A = np.array([[float(x) for x in ln.split(",")] for ln in lines[2:]])
    if A.shape != (r, c):
        raise SchemaMismatch(f"declared {r}x{c}, found {A.shape}")
    return A


def write_table(path, header, rows):
    """CSV with a header row; floats at 17 significant digits."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(x) if isinstance(x, (float, np.floating)) else x for x in row])


def _data_lines(text):
    return [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]


def read_table(source):
    """Read a CSV (path or text) into (header, list of row dicts); '#' lines are comments."""
    if "\n" in source:
        text = source
    else:
        with open(source) as fh:
            text = fh.read()
    reader = csv.reader(_io.StringIO("\n".join(_data_lines(text))))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise SchemaMismatch("empty table") from None
    rows = []
    for raw in reader:
        if len(raw) != len(header):
            raise SchemaMismatch(f"row {raw} does not match header {header}")
        rows.append(dict(zip(header, (x.strip() for x in raw))))
    return header, rows


def reference_path(name):
    """Path of a bundled reference table: 'table1', 'table2' or 'table3'."""
    return str(resources.files("qprenorm") / "data" / f"{name}.csv")


@dataclass
class ComparisonReport:
    key: str
    columns: list
    keys: list
    abs_err: np.ndarray  # (rows, columns)
    rel_err: np.ndarray
    passed: bool
    tolerances: dict = field(default_factory=dict)

    def rows(self):
        for i, k in enumerate(self.keys):
            for j, c in enumerate(self.columns):
                yield k, c, self.abs_err[i, j], self.rel_err[i, j]


def compare_reference(produced, reference, tol=None, key=None, columns=None):
    """Per-row absolute and relative discrepancies of ``produced`` against ``reference``.

    Both are CSV paths or CSV text.  Rows are matched on ``key`` (default: the
    reference's first column); ``columns`` defaults to every other reference
    column.  ``tol`` maps a column name to an ``(abs, rel)`` pair, a row is
    within tolerance if either bound holds; a single pair applies to all.
    """
    ph, prow = read_table(produced)
    rh, rrow = read_table(reference)
    key = key or rh[0]
    cols = list(columns) if columns is not None else [c for c in rh if c != key]
    missing = [c for c in [key] + cols if c not in ph or c not in rh]
    if missing:
        raise SchemaMismatch(f"columns {missing} missing from one of the tables")
    index = {r[key]: r for r in prow}
    keys = [r[key] for r in rrow]
    absent = [k for k in keys if k not in index]
    if absent:
        raise SchemaMismatch(f"reference keys {absent} have no produced row")
    A = np.zeros((len(keys), len(cols)))
    R = np.zeros_like(A)
    for i, r in enumerate(rrow):
        p = index[r[key]]
        for j, c in enumerate(cols):
            ref, got = float(r[c]), float(p[c])
            A[i, j] = abs(got - ref)
            R[i, j] = A[i, j] / abs(ref) if ref != 0 else (0.0 if A[i, j] == 0 else np.inf)
    if tol is None:
        tols = {}
        passed = True
    else:
        tols = tol if isinstance(tol, dict) else {c: tuple(tol) for c in cols}
        passed = True
        for j, c in enumerate(cols):
            if c not in tols:
                continue
            ta, tr = tols[c]
            ok = (A[:, j] <= ta) | (R[:, j] <= tr)
            passed = passed and bool(ok.all())
    return ComparisonReport(key, cols, keys, A, R, passed, tols)
