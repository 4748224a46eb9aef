"""Command-line runner: one subcommand per experiment, each writing CSV output,
a key=value config snapshot and a JSON manifest.

Exit status: 0 on success, 1 on a numerical failure, 2 on a configuration error.
"""

import argparse
import hashlib
import json
import os
import sys
import time
import warnings

import numpy as np

from . import __version__, _kernels
from .config import ExperimentConfig, format_value, load_config, parse_value
from .errors import ConfigError, NumericalError, ParameterOutOfRange
from .io import compare_reference, reference_path, write_table, write_taylor

COMMANDS = {}


def command(name, help, **params):
    """Register a subcommand; params map a name to (default, help)."""

    def wrap(fn):
        COMMANDS[name] = (fn, help, params)
        return fn

    return wrap


class Outputs:
    def __init__(self, out_dir):
        self.dir = out_dir
        self.files = []

    def path(self, name):
        p = os.path.join(self.dir, name)
        self.files.append(p)
        return p


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _ref(value, name):
    if value in (None, ""):
        return None
    return reference_path(name) if value == name else value


def _family(name):
    from .flm import FLMFamily

    if name not in ("A", "B"):
        raise ParameterOutOfRange(f"family must be A or B, got {name!r}")
    return FLMFamily(name)


def _tuple(v):
    return tuple(v) if isinstance(v, (tuple, list)) else (v,)


# -- one-dimensional renormalization ----------------------------------------

@command("fixed-point", "Newton fixed point of the doubling renormalization",
         order=(80, "truncation order N"), tol=(1e-14, "Newton step tolerance"), out=("phi.csv", "output file"))
def run_fixed_point(p, out):
    from .renorm1d import fixed_point_residual, newton_fixed_point

    phi = newton_fixed_point(order=p["order"], tol=p["tol"])
    write_taylor(out.path(p["out"]), phi.psi)
    return {"a": phi.a, "residual": fixed_point_residual(phi), "order": phi.order}


@command("check-h0", "containment check of the fixed point on the disc D(1/5, 3/2)",
         order=(80, "truncation order N"), samples=(4096, "boundary samples"),
         out=("h0.csv", "output file"))
def run_check_h0(p, out):
    from .renorm1d import check_h0_inclusion
    from .spectral import fixed_point

    phi = fixed_point(p["order"])
    rep = check_h0_inclusion(phi, samples=p["samples"])
    rep2 = check_h0_inclusion(phi, samples=2 * p["samples"])
    change = abs(rep2.min_margin - rep.min_margin) / rep.min_margin
    rows = [("passed", int(rep.passed)), ("min_margin", rep.min_margin), ("scale_margin", rep.scale_margin),
            ("min_margin_doubled_samples", rep2.min_margin), ("relative_change", change),
            ("samples", rep.samples)]
    write_table(out.path(p["out"]), ["quantity", "value"], rows)
    return {"passed": rep.passed, "min_margin": rep.min_margin, "relative_change": change}


@command("feig-spectrum", "spectrum of the derivative at the fixed point and the Feigenbaum constant",
         order=(80, "truncation order N"), out=("feig_spectrum.csv", "output file"))
def run_feig_spectrum(p, out):
    from .renorm1d import feigenbaum_spectrum
    from .spectral import fixed_point

    rc = feigenbaum_spectrum(fixed_point(p["order"]))
    rows = []
    for i, lam in enumerate(rc.eigenvalues):
        rows.append((i + 1, lam.real, lam.imag, abs(lam), rc.residuals[i], rc.artifacts.get(i, "")))
    write_table(out.path(p["out"]), ["index", "re", "im", "modulus", "residual", "power_of_a"], rows)
    return {"delta": rc.delta_feig, "a": rc.a_fixed, "inverse_a": 1.0 / rc.a_fixed}


# -- spectra of L_omega -------------------------------------------------------

@command("spectrum", "eigenvalues of L_omega at one rotation number",
         omega=("golden", "rotation number (alias, fraction or expression)"), order=(100, "truncation order N"),
         top=(24, "eigenvalues kept"), ref=(None, "reference CSV, or 'table3' for the bundled one"),
         tol=(1e-4, "absolute tolerance against the reference"), out=("spectrum.csv", "output file"))
def run_spectrum(p, out):
    from .io import read_table
    from .spectral import match_to_reference, spectrum_of_Lomega

    rec = spectrum_of_Lomega(omega=p["omega"], order=p["order"]).top(p["top"])
    path = out.path(p["out"])
    rows = [(i + 1, lam.real, lam.imag, abs(lam), rec.residuals[i]) for i, lam in enumerate(rec.eigenvalues)]
    write_table(path, ["index", "re", "im", "modulus", "residual"], rows)
    summary = {"omega": rec.omega, "leading": [rec.eigenvalues[0].real, rec.eigenvalues[0].imag]}
    ref = _ref(p["ref"], "table3")
    if ref:
        # the reference need not be sorted by modulus: pair rows by optimal assignment
        _, rrows = read_table(ref)
        target = np.array([float(r["re"]) + 1j * float(r["im"]) for r in rrows])
        idx = match_to_reference(rec.eigenvalues, target)
        mpath = out.path("spectrum_matched.csv")
        write_table(mpath, ["index", "re", "im", "computed_index"],
                    [(r["index"], rec.eigenvalues[j].real, rec.eigenvalues[j].imag, j + 1) for r, j in zip(rrows, idx)])
        rep = compare_reference(mpath, ref, tol=(p["tol"], 0.0))
        write_table(out.path("spectrum_vs_reference.csv"), ["index", "column", "abs_err", "rel_err"], rep.rows())
        summary.update(reference_passed=rep.passed, max_abs_err=float(rep.abs_err.max()))
    return summary


_SWEEP_HEADER = ["omega", "index", "re", "im", "modulus", "residual"]


@command("sweep", "eigenvalue tracks of L_omega over an equispaced omega grid",
         grid=(1280, "grid points"), order=(100, "truncation order N"), top=(24, "tracks kept"),
         out=("sweep.csv", "output file"))
def run_sweep(p, out):
    from .spectral import omega_sweep

    tab = omega_sweep(grid_size=p["grid"], order=p["order"], top_m=p["top"])
    write_table(out.path(p["out"]), _SWEEP_HEADER, tab.rows())
    return {"grid": p["grid"], "ambiguous_links": len(tab.ambiguous)}


@command("sweep-section", "spectrum of the phase-reduced map's Jacobian over an omega grid",
         grid=(256, "grid points"), order=(30, "truncation order N"), top=(8, "tracks kept"),
         out=("sweep_section.csv", "output file"))
def run_sweep_section(p, out):
    from .spectral import section_sweep

    tab, gaps = section_sweep(grid_size=p["grid"], order=p["order"], top_m=p["top"])
    write_table(out.path(p["out"]), _SWEEP_HEADER, tab.rows())
    write_table(out.path("section_gaps.csv"), ["omega", "gap"], zip(tab.grid, gaps))
    return {"max_gap": float(gaps.max()), "ambiguous_links": len(tab.ambiguous)}


@command("validate", "eigenvector distances across orders and radii of convergence",
         omega=("golden", "rotation number"), orders=((40, 50, 60, 70, 80, 90, 100), "orders compared"),
         n_ref=(110, "reference order"), count=(24, "eigenvectors checked"),
         radius_order=(90, "order for the radius estimate"), out=("validate_distances.csv", "output file"))
def run_validate(p, out):
    from .spectral import distances_monotone, spectrum_of_Lomega, validate_eigenvectors, validate_radius

    orders = _tuple(p["orders"])
    table = validate_eigenvectors(omega=p["omega"], orders=orders, n_ref=p["n_ref"], count=p["count"])
    rows = [(N, i + 1, d[i]) for N, d in table.items() for i in range(p["count"])]
    write_table(out.path(p["out"]), ["order", "index", "distance"], rows)
    radii = validate_radius(spectrum_of_Lomega(omega=p["omega"], order=p["radius_order"]), p["count"])
    write_table(out.path("validate_radius.csv"), ["index", "radius"], [(i + 1, r) for i, r in enumerate(radii)])
    return {"monotone": distances_monotone(table), "min_radius": float(np.min(radii))}


# -- projectivized dynamics ---------------------------------------------------

@command("attractor", "orbit of (omega, v) -> (2 omega, L_omega v / |L_omega v|) with torus embeddings",
         order=(30, "truncation order N"), transient=(2000, "discarded iterates"),
         record=(80000, "recorded iterates"), omega=("golden", "initial rotation number"),
         seed=((0,), "Taylor coordinates set to 1 in the initial pair (x_0..x_N, y_0..y_N)"),
         variant=("full", "full or section"), k0=(None, "embedding constant(s), one per embedded pair"),
         out=("attractor.csv", "output file"))
def run_attractor_cmd(p, out):
    from .solenoid import COORDS, FULL_K0, SECTION_K0, RunConfig, run_attractor, torus_embed

    cfg = RunConfig(p["order"], p["transient"], p["record"], p["omega"], _tuple(p["seed"]), p["variant"])
    run = run_attractor(cfg)
    path = out.path(p["out"])
    names = ["omega"] + [f"{c}{j}" for j in COORDS for c in "xy"]
    write_table(path, names, run.points)
    defaults = FULL_K0 if cfg.variant == "full" else SECTION_K0
    k0 = dict(defaults) if p["k0"] is None else dict(zip(defaults, _tuple(p["k0"])))
    stem = os.path.splitext(p["out"])[0]
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        for j, K in k0.items():
            xyz = torus_embed(run.points, float(K), j)
            write_table(out.path(f"{stem}_embed_x{j}.csv"), ["X", "Y", "Z"], xyz)
    return {"points": int(len(run.points)), "gaps": run.gaps,
            "max_odd_defect": float(np.max(run.defect[cfg.transient:])),
            "embedding_warnings": [str(w.message) for w in caught]}


# -- forced logistic families -------------------------------------------------

@command("slopes", "slopes alpha'_n, beta'_n of the reducibility-loss curves",
         family=("A", "A or B"), omega=("golden", "rotation number"), n_max=(11, "largest n"),
         order=(80, "truncation order N"), ref=(None, "reference CSV (n, alpha_prime) or 'table2'"),
         out=("slopes.csv", "output file"))
def run_slopes(p, out):
    from .flm import slope_table, superstable_sequence

    if p["n_max"] < 1:
        raise ParameterOutOfRange("n_max must be at least 1")
    fam = _family(p["family"])
    table = slope_table(fam, p["n_max"], p["omega"], p["order"], superstable_sequence(fam, p["n_max"]))
    ref = _ref(p["ref"], "table2")
    refs = {}
    if ref:
        from .io import read_table

        _, rows = read_table(ref)
        refs = {int(r["n"]): float(r["alpha_prime"]) for r in rows}
    rows = []
    worst = 0.0
    for r in table:
        ea = er = ""
        if r.n in refs:
            ea = abs(r.alpha_prime - refs[r.n])
            er = ea / abs(refs[r.n])
            worst = max(worst, er)
        rows.append((r.n, r.alpha_n, r.alpha_prime, r.beta_prime, ea, er))
    header = ["n", "alpha_n", "alpha_prime", "beta_prime", "eps_abs_vs_reference", "eps_rel_vs_reference"]
    write_table(out.path(p["out"]), header, rows)
    summary = {"alpha_prime": [r.alpha_prime for r in table]}
    if refs:
        summary["max_rel_err"] = worst
    return summary


@command("conj-h3", "norms, minima and direction differences along the fixed-point pipeline",
         family=("A", "A or B"), omega=("golden", "rotation number"),
         n_list=((4, 5, 6, 7, 8, 9, 10, 11, 12, 13), "values of n"), order=(80, "truncation order N"),
         out=("conj_h3.csv", "output file"))
def run_conj_h3(p, out):
    from .flm import conjecture_h3_table
    from .spectral import fixed_point

    rows = conjecture_h3_table(_family(p["family"]), list(_tuple(p["n_list"])), p["omega"], fixed_point(p["order"]))
    write_table(out.path(p["out"]), ["n", "norm_v", "abs_min", "difference"],
                [(r.n, r.norm_v, r.abs_min, r.difference) for r in rows])
    return {"difference": [r.difference for r in rows]}


@command("conj-h5", "norm ratio of sequences driven at omega_k and 2 omega_k",
         omega=("golden", "rotation number"), steps=(20000, "iterates"), order=(30, "truncation order N"),
         out=("conj_h5.csv", "output file"))
def run_conj_h5(p, out):
    from .analytic import PairField, TaylorPoly
    from .flm import conjecture_h5_ratios
    from .spectral import fixed_point

    n = p["order"]
    one = PairField(TaylorPoly.constant(1.0, n), TaylorPoly.constant(0.0, n))
    r = conjecture_h5_ratios(fixed_point(n), p["omega"], one, one, p["steps"])
    write_table(out.path(p["out"]), ["n", "ratio"], enumerate(r))
    half = len(r) // 2
    slope = float(np.polyfit(np.arange(len(r) - half), np.log(r[half:]), 1)[0]) if len(r) > 3 else 0.0
    return {"min": float(r.min()), "max": float(r.max()), "log_ratio_slope": slope}


@command("universality", "ratio sequences of two families, doubling ratios and eta-mixing",
         omega=("golden", "rotation number"), n_max=(9, "largest n"), order=(80, "truncation order N"),
         etas=((0.1, 0.05, 0.025), "mode-2 forcing weights"), out=("universality.csv", "output file"))
def run_universality(p, out):
    from .flm import FLMFamily, universality_compare
    from .spectral import fixed_point

    if p["n_max"] < 3:
        raise ParameterOutOfRange("the fixed-point factorization needs n_max >= 3")
    rep = universality_compare(FLMFamily("A"), FLMFamily("B"), p["omega"], p["n_max"],
                               phi=fixed_point(p["order"]), etas=_tuple(p["etas"]), order=p["order"])
    write_table(out.path(p["out"]), ["n", "ratio_a", "ratio_b", "ratio_gap", "doubling_ratio", "factorization"],
                zip(rep.n, rep.ratios_a, rep.ratios_b, rep.ratio_gap, rep.doubling_ratio, rep.factorization))
    write_table(out.path("universality_eta.csv"), ["eta", "deviation"], rep.eta_deviation.items())
    return {"ratio_gap_last": float(rep.ratio_gap[-1]), "eta_deviation": rep.eta_deviation}


# -- driver --------------------------------------------------------------------

def _coerce(name, default, value):
    """Bring a flag or config value to the type of the parameter's default."""
    if isinstance(value, str):
        value = parse_value(value)
    if default is None or isinstance(default, str):
        return value
    if isinstance(default, bool):
        ok = isinstance(value, bool)
    elif isinstance(default, int):
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif isinstance(default, float):
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        value = float(value) if ok else value
    else:  # tuple of numbers; a single number is a one-element tuple
        items = _tuple(value)
        ok = all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in items)
        value = items
    if not ok:
        raise ConfigError(f"parameter {name}: cannot use {value!r} where {type(default).__name__} is expected")
    return value


def build_parser():
    ap = argparse.ArgumentParser(prog="qprenorm", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"qprenorm {__version__}")
    sub = ap.add_subparsers(dest="command", metavar="COMMAND")
    for name, (_, help_, params) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_, description=help_)
        sp.add_argument("--config", help="key=value file; command-line flags override it")
        sp.add_argument("--out-dir", default=None, help="directory for outputs (default .)")
        for key, (default, h) in params.items():
            sp.add_argument("--" + key.replace("_", "-"), dest=key, default=None,
                            help=f"{h} (default {format_value(default)})")
    return ap


def resolve(args):
    """Merge defaults, config file and flags into an ExperimentConfig."""
    fn, _, params = COMMANDS[args.command]
    merged = {k: d for k, (d, _) in params.items()}
    out_dir = "."
    if args.config:
        cfg = load_config(args.config, args.command)
        if cfg.command != args.command:
            raise ConfigError(f"config is for {cfg.command!r}, not {args.command!r}")
        unknown = set(cfg.params) - set(params)
        if unknown:
            raise ConfigError(f"unknown keys for {args.command}: {sorted(unknown)}")
        merged.update(cfg.params)
        out_dir = cfg.out_dir
    for k in params:
        v = getattr(args, k)
        if v is not None:
            merged[k] = v
    if args.out_dir is not None:
        out_dir = args.out_dir
    merged = {k: _coerce(k, params[k][0], v) for k, v in merged.items()}
    return ExperimentConfig(args.command, merged, out_dir)


def execute(cfg):
    """Run one configured command; returns the manifest dict."""
    fn = COMMANDS[cfg.command][0]
    os.makedirs(cfg.out_dir, exist_ok=True)
    out = Outputs(cfg.out_dir)
    stem = cfg.command.replace("-", "_")
    cfg_path = os.path.join(cfg.out_dir, f"{stem}.cfg")
    t0 = time.perf_counter()
    summary = fn(dict(cfg.params), out)
    wall = time.perf_counter() - t0
    with open(cfg_path, "w") as fh:
        fh.write(cfg.to_text())
    manifest = {
        "command": cfg.command,
        "version": __version__,
        "config": cfg.params,
        "config_file": os.path.basename(cfg_path),
        "numba": not _kernels.NUMBA_DISABLED and _kernels.numba_kernels is not None,
        "threads": os.environ.get("QPRENORM_THREADS", "1"),
        "wall_time_s": wall,
        "outputs": [{"file": os.path.basename(f), "sha256": _sha256(f), "bytes": os.path.getsize(f)}
                    for f in out.files],
        "summary": summary,
    }
    with open(os.path.join(cfg.out_dir, f"{stem}.manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, default=_json_default)
        fh.write("\n")
    return manifest


def _json_default(x):
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, tuple):
        return list(x)
    return str(x)


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.command is None:
        ap.print_help()
        return 2
    try:
        manifest = execute(resolve(args))
    except ConfigError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: ValueError: {exc}", file=sys.stderr)
        return 2
    print(json.dumps({"command": manifest["command"], "wall_time_s": round(manifest["wall_time_s"], 3),
                      "outputs": [o["file"] for o in manifest["outputs"]], "summary": manifest["summary"]},
                     default=_json_default))
    return 0


if __name__ == "__main__":
    sys.exit(main())
