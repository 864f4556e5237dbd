"""Command-line interface: ``ginprod <command> [options]``.

Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 acceptance
failure. Options may also come from a JSON file given by ``--config``; flags on
the command line override it.
"""

import argparse
import json
import math
import sys
import warnings

import numpy as np

from . import acceptance
from . import density as dens
from . import kernel as kern
from . import montecarlo as mc
from . import stieltjes as st
from .errors import (BranchTrackingError, ContourConfigError, DomainError,
                     EdgeProximityWarning, PrecisionLossError)
from .formats import (DENSITY_HEADER, EDGES_HEADER, KERNEL_HEADER, SAMPLE_HEADER,
                      STIELTJES_HEADER, STIELTJES_Z_HEADER, csv_text, json_text,
                      sample_rows)

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL, EXIT_ACCEPTANCE = 0, 2, 3, 4


class InputError(Exception):
    """Invalid flag or config value; the message names the field."""


# defaults per command; keys double as the accepted --config fields
DEFAULTS = {
    "edges": {"M": None, "y": None, "format": "csv", "output": None},
    "density": {"M": None, "y": None, "x": None, "x_min": None, "x_max": None,
                "points": 101, "format": "csv", "output": None},
    "stieltjes": {"ratios": None, "x": None, "x_min": None, "x_max": None,
                  "points": 101, "z": None, "format": "csv", "output": None},
    "sample": {"N": None, "nu": None, "trials": 1, "seed": 0, "y": None,
               "moments": 4, "format": "csv", "output": None, "stats": None},
    "kernel": {"N": None, "nu": None, "mode": "diagonal", "y": None, "theta": math.pi / 8,
               "x": None, "x_min": None, "x_max": None, "points": 21,
               "xi": [0.0, 0.5], "c": None, "T": None, "panels": None, "tol": 1e-10,
               "precision": "auto", "bits": None, "format": None, "output": None},
    "verify": {"suite": "all", "fast": False, "tolerance_scale": 1.0, "format": "text",
               "output": None},
}


def _grid_flags(p, what):
    p.add_argument("--x", type=float, nargs="+", default=argparse.SUPPRESS,
                   help=f"explicit {what} (dimensionless)")
    p.add_argument("--x-min", dest="x_min", type=float, default=argparse.SUPPRESS,
                   help="left end of a uniform grid (dimensionless)")
    p.add_argument("--x-max", dest="x_max", type=float, default=argparse.SUPPRESS,
                   help="right end of a uniform grid (dimensionless)")
    p.add_argument("--points", type=int, default=argparse.SUPPRESS,
                   help="number of uniform grid points (count)")


def _out_flags(p, formats):
    p.add_argument("--format", choices=formats, default=argparse.SUPPRESS,
                   help="output format")
    p.add_argument("--output", default=argparse.SUPPRESS,
                   help="output file path (default: standard output)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ginprod",
        description="Spectral law, resolvent, finite-N kernel and Monte Carlo checks for "
                    "products of rectangular complex Ginibre matrices.")
    parser.add_argument("--config", help="JSON file with option values; flags override it")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads (count; default GINPROD_THREADS or all cores)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("edges", help="closed-form spectral edges x_- and x_+")
    p.add_argument("--M", type=int, default=argparse.SUPPRESS, help="number of factors (count)")
    p.add_argument("--y", type=float, default=argparse.SUPPRESS,
                   help="common ratio N/N_j in (0, 1] (dimensionless)")
    _out_flags(p, ["csv", "json"])

    p = sub.add_parser("density", help="limiting density on a grid of x")
    p.add_argument("--M", type=int, default=argparse.SUPPRESS, help="number of factors (count)")
    p.add_argument("--y", type=float, default=argparse.SUPPRESS,
                   help="common ratio N/N_j in (0, 1] (dimensionless)")
    _grid_flags(p, "x values, scaled squared singular values")
    _out_flags(p, ["csv", "json"])

    p = sub.add_parser("stieltjes", help="density by resolvent inversion, distinct ratios")
    p.add_argument("--ratios", type=float, nargs="+", default=argparse.SUPPRESS,
                   help="ratios y_1..y_M, each in (0, 1] (dimensionless)")
    _grid_flags(p, "positive x values")
    p.add_argument("--z", nargs="+", default=argparse.SUPPRESS,
                   help="complex points such as 1+0.5j; reports G(z) instead of a density")
    _out_flags(p, ["csv", "json"])

    p = sub.add_parser("sample", help="Monte Carlo squared singular values of the product")
    p.add_argument("--N", type=int, default=argparse.SUPPRESS, help="smallest dimension (count)")
    p.add_argument("--nu", type=int, nargs="+", default=argparse.SUPPRESS,
                   help="offsets nu_1..nu_M, N_j = N + nu_j (count)")
    p.add_argument("--trials", type=int, default=argparse.SUPPRESS, help="independent products (count)")
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="64-bit unsigned seed")
    p.add_argument("--y", type=float, default=argparse.SUPPRESS,
                   help="ratio of the comparison law (default N/N_1 when all nu_j agree)")
    p.add_argument("--moments", type=int, default=argparse.SUPPRESS,
                   help="highest moment order checked, at most 4 (count)")
    p.add_argument("--stats", default=argparse.SUPPRESS,
                   help="path of the JSON statistics file (default: standard error)")
    _out_flags(p, ["csv"])

    p = sub.add_parser("kernel", help="finite-N kernel of the log squared singular values")
    p.add_argument("--N", type=int, default=argparse.SUPPRESS, help="smallest dimension (count)")
    p.add_argument("--nu", type=int, nargs="+", default=argparse.SUPPRESS,
                   help="offsets nu_1..nu_M (count)")
    p.add_argument("--mode", choices=["diagonal", "sine-check", "corollary", "mass"],
                   default=argparse.SUPPRESS, help="what to compute")
    p.add_argument("--y", type=float, default=argparse.SUPPRESS,
                   help="ratio of the limiting law for bulk scaling (default N/N_1)")
    p.add_argument("--theta", type=float, default=argparse.SUPPRESS,
                   help="bulk angle in (0, pi) (radians)")
    _grid_flags(p, "log-coordinates for the diagonal (natural log of eigenvalues)")
    p.add_argument("--xi", type=float, nargs="+", default=argparse.SUPPRESS,
                   help="local coordinates for sine-check (mean spacings)")
    p.add_argument("--c", type=float, default=argparse.SUPPRESS,
                   help="abscissa of the vertical contour (default automatic)")
    p.add_argument("--T", type=float, default=argparse.SUPPRESS,
                   help="contour truncation height (default automatic)")
    p.add_argument("--panels", type=int, default=argparse.SUPPRESS,
                   help="initial Gauss-Legendre panels (count; default automatic)")
    p.add_argument("--tol", type=float, default=argparse.SUPPRESS,
                   help="target error relative to 1 + |K| (dimensionless)")
    p.add_argument("--precision", choices=["auto", "double", "double-double", "multiprecision"],
                   default=argparse.SUPPRESS, help="residue-sum arithmetic")
    p.add_argument("--bits", type=int, default=argparse.SUPPRESS,
                   help="mantissa bits for multiprecision (bits)")
    _out_flags(p, ["csv", "json"])

    p = sub.add_parser("verify", help="run acceptance criteria; exit 4 if any fails")
    p.add_argument("suite", nargs="?", default=argparse.SUPPRESS,
                   help=f"one of {', '.join(acceptance.SUITES)} or comma-separated numbers 1-14")
    p.add_argument("--fast", action="store_true", default=argparse.SUPPRESS,
                   help="trim redundant grid sizes")
    p.add_argument("--tolerance-scale", dest="tolerance_scale", type=float,
                   default=argparse.SUPPRESS,
                   help="multiply every tolerance (test hook; values below 1 tighten)")
    _out_flags(p, ["text", "json"])
    return parser


def _load_config(path, command):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise InputError(f"config: cannot read {path}: {exc.strerror}")
    except json.JSONDecodeError as exc:
        raise InputError(f"config: invalid JSON: {exc}")
    if not isinstance(data, dict):
        raise InputError("config: top level must be an object")
    allowed = DEFAULTS[command]
    for key in data:
        if key not in allowed:
            raise InputError(f"config: unknown field '{key}' for command '{command}'")
    return data


def _options(args):
    opts = dict(DEFAULTS[args.command])
    if args.config:
        opts.update(_load_config(args.config, args.command))
    for key, val in vars(args).items():
        if key in opts:
            opts[key] = val
    return opts


def _require(opts, *names):
    for n in names:
        if opts.get(n) is None:
            raise InputError(f"{n}: required")


def _model_params(opts):
    _require(opts, "M", "y")
    try:
        return dens.ModelParams(opts["M"], opts["y"])
    except DomainError as exc:
        field = "M" if "M must" in str(exc) else "y"
        raise InputError(f"{field}: {exc}")


def _grid(opts, default_lo, default_hi, positive=False):
    if opts.get("x") is not None:
        xs = np.asarray(opts["x"], dtype=float)
    else:
        lo = default_lo if opts.get("x_min") is None else float(opts["x_min"])
        hi = default_hi if opts.get("x_max") is None else float(opts["x_max"])
        n = opts.get("points")
        if not isinstance(n, int) or n < 1:
            raise InputError(f"points: must be a positive integer, got {n!r}")
        if hi < lo:
            raise InputError("x_max: must not be smaller than x_min")
        xs = np.linspace(lo, hi, n)
    if xs.size == 0 or not np.all(np.isfinite(xs)):
        raise InputError("x: values must be finite")
    if positive and np.any(xs <= 0):
        raise InputError("x: values must be positive")
    return xs


def _emit(text, path):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def cmd_edges(opts, threads):
    p = _model_params(opts)
    sup = dens.support_edges(p)
    if opts["format"] == "json":
        text = json_text({"M": p.M, "y": p.y, "x_minus": sup.x_minus, "x_plus": sup.x_plus})
    else:
        text = csv_text(EDGES_HEADER, [(p.M, p.y, sup.x_minus, sup.x_plus)])
    _emit(text, opts["output"])


def cmd_density(opts, threads):
    p = _model_params(opts)
    sup = dens.support_edges(p)
    xs = _grid(opts, sup.x_minus, sup.x_plus)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EdgeProximityWarning)
        rho = dens.density_at(p, xs)
    rows = []
    for x, r in zip(xs, rho):
        if sup.x_minus < x < sup.x_plus:
            theta = dens.theta_of_x(p, float(x))
            rows.append((float(x), float(r), float(theta), dens.discriminant(p, theta) >= 0.0))
        else:
            rows.append((float(x), 0.0, float("nan"), False))
    if opts["format"] == "json":
        text = json_text({"M": p.M, "y": p.y, "rows": [dict(zip(DENSITY_HEADER, r)) for r in rows]})
    else:
        text = csv_text(DENSITY_HEADER, rows)
    _emit(text, opts["output"])


def _parse_complex(s):
    try:
        return complex(s.replace(" ", ""))
    except ValueError:
        raise InputError(f"z: cannot parse {s!r} as a complex number")


def cmd_stieltjes(opts, threads):
    _require(opts, "ratios")
    try:
        g = st.GeneralParams(tuple(opts["ratios"]))
    except DomainError as exc:
        raise InputError(f"ratios: {exc}")
    if opts.get("z") is not None:
        rows = []
        for s in opts["z"]:
            z = _parse_complex(s) if isinstance(s, str) else complex(s)
            if z.imag == 0:
                raise InputError("z: imaginary part must be nonzero")
            v = st.solve_G(g, z)
            rows.append((z.real, z.imag, v.G.real, v.G.imag, v.residual))
        header = STIELTJES_Z_HEADER
    else:
        xs = _grid(opts, g.upper_bound() / (opts["points"] or 1), g.upper_bound(), positive=True)
        rows = []
        for x in xs:
            d, res = st.density_with_residual(g, float(x))
            rows.append((float(x), d, res))
        header = STIELTJES_HEADER
    if opts["format"] == "json":
        text = json_text({"ratios": list(g.ratios), "rows": [dict(zip(header, r)) for r in rows]})
    else:
        text = csv_text(header, rows)
    _emit(text, opts["output"])


def _ratio_for(opts, nu, N):
    if opts.get("y") is not None:
        return float(opts["y"])
    if len(set(nu)) != 1:
        raise InputError("y: required when the nu_j differ")
    return N / (N + nu[0])


def cmd_sample(opts, threads):
    _require(opts, "N", "nu")
    try:
        cfg = mc.EnsembleConfig(opts["N"], tuple(opts["nu"]), opts["trials"], opts["seed"])
    except DomainError as exc:
        msg = str(exc)
        field = next((f for f in ("N", "nu", "trials", "seed") if msg.startswith(f)), "N")
        raise InputError(f"{field}: {exc}")
    kmax = opts["moments"]
    if not isinstance(kmax, int) or not 0 <= kmax <= 4:
        raise InputError(f"moments: must be an integer in [0, 4], got {kmax!r}")
    y = _ratio_for(opts, cfg.nu, cfg.N)
    try:
        params = dens.ModelParams(cfg.M, y)
    except DomainError as exc:
        raise InputError(f"y: {exc}")
    results = mc.run_ensemble(cfg, threads=threads)
    _emit(csv_text(SAMPLE_HEADER, sample_rows(results)), opts["output"])
    stats = {
        "N": cfg.N, "nu": list(cfg.nu), "M": cfg.M, "y": y, "trials": cfg.trials,
        "seed": cfg.seed, "pooled_count": int(sum(r.values.size for r in results)),
        "ks": mc.ks_distance(results, params),
        "moments": [mc.moment_check(results, params, k) for k in range(1, kmax + 1)],
        "resamples": int(sum(r.resamples for r in results)),
    }
    if opts["stats"] is None:
        sys.stderr.write(json_text(stats))
    else:
        _emit(json_text(stats), opts["stats"])


def _contour(opts):
    try:
        return kern.ContourConfig(c=opts["c"], T=opts["T"], panels=opts["panels"], tol=opts["tol"],
                                  precision=opts["precision"], bits=opts["bits"])
    except ContourConfigError as exc:
        field = str(exc).split(" ")[0].split("=")[0]
        raise InputError(f"{field}: {exc}")


def cmd_kernel(opts, threads):
    _require(opts, "N", "nu")
    try:
        model = kern.FiniteModel(opts["N"], tuple(opts["nu"]))
    except DomainError as exc:
        raise InputError(f"{'nu' if 'nu' in str(exc) else 'N'}: {exc}")
    cfg = _contour(opts)
    mode = opts["mode"]
    fmt = opts["format"] or ("csv" if mode == "diagonal" else "json")
    if mode == "diagonal":
        lo, hi = kern._bulk_range(model)
        xs = _grid(opts, lo, hi)
        vals = _parallel(lambda x: kern.kernel_log(model, x, x, cfg), list(map(float, xs)), threads)
        rows = [(e.x, e.y, e.value, e.abs_error_estimate) for e in vals]
        if fmt == "json":
            text = json_text({"N": model.N, "nu": list(model.nu),
                              "rows": [dict(zip(KERNEL_HEADER, r)) for r in rows]})
        else:
            text = csv_text(KERNEL_HEADER, rows)
        _emit(text, opts["output"])
        return
    if mode == "mass":
        mass, window = kern.total_mass(model, cfg)
        report = {"N": model.N, "nu": list(model.nu), "mass": mass,
                  "relative_error": abs(mass - model.N) / model.N, "window": list(window)}
    else:
        y = _ratio_for(opts, model.nu, model.N)
        try:
            params = dens.ModelParams(model.M, y)
        except DomainError as exc:
            raise InputError(f"y: {exc}")
        theta = float(opts["theta"])
        if not 0.0 < theta < math.pi:
            raise InputError("theta: must lie in (0, pi)")
        if not dens.is_physical(params, theta):
            raise InputError(f"theta: {theta!r} is not on a physical branch of the parametrization")
        if mode == "sine-check":
            report = kern.sine_limit_check(model, params, theta, tuple(opts["xi"]), cfg)
        else:
            report = kern.corollary_density_check(model, params, theta, cfg)
    if fmt == "csv":
        flat = [(k, v) for k, v in report.items() if not isinstance(v, (list, dict))]
        text = csv_text(("key", "value"), flat)
    else:
        text = json_text(report)
    _emit(text, opts["output"])


def _parallel(fn, items, threads):
    if not threads or threads <= 1 or len(items) <= 1:
        return [fn(v) for v in items]
    from concurrent.futures import ThreadPoolExecutor
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _selection(suite):
    if suite in acceptance.SUITES:
        return suite
    try:
        nums = tuple(int(v) for v in str(suite).split(","))
    except ValueError:
        raise InputError(f"suite: unknown suite {suite!r}")
    bad = [n for n in nums if n not in acceptance.CRITERIA]
    if bad:
        raise InputError(f"suite: no criterion numbered {bad[0]}")
    return nums


def cmd_verify(opts, threads):
    selection = _selection(opts["suite"])
    scale = opts["tolerance_scale"]
    if not (isinstance(scale, (int, float)) and scale > 0 and math.isfinite(scale)):
        raise InputError(f"tolerance_scale: must be a positive number, got {scale!r}")
    results = []
    for number in (acceptance.SUITES[selection] if isinstance(selection, str) else selection):
        res = acceptance.run_one(number, bool(opts["fast"]), float(scale), threads)
        results.append(res)
        if opts["format"] == "text":
            line = acceptance.format_result(res) + "\n"
            if opts["output"] is None:
                sys.stdout.write(line)
                sys.stdout.flush()
    if opts["format"] == "json":
        _emit(json_text([{"number": r.number, "name": r.name, "passed": r.passed,
                          "elapsed": r.elapsed, "budget": r.budget, "detail": r.detail}
                         for r in results]), opts["output"])
    elif opts["output"] is not None:
        _emit("".join(acceptance.format_result(r) + "\n" for r in results), opts["output"])
    return EXIT_OK if all(r.passed for r in results) else EXIT_ACCEPTANCE


COMMANDS = {
    "edges": cmd_edges, "density": cmd_density, "stieltjes": cmd_stieltjes,
    "sample": cmd_sample, "kernel": cmd_kernel, "verify": cmd_verify,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        threads = args.threads if args.threads is not None else mc.default_threads()
        if threads < 1:
            raise InputError(f"threads: must be a positive integer, got {threads}")
        opts = _options(args)
        code = COMMANDS[args.command](opts, threads)
        return EXIT_OK if code is None else code
    except InputError as exc:
        print(f"ginprod: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DomainError as exc:
        print(f"ginprod: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (BranchTrackingError, PrecisionLossError, ContourConfigError, ArithmeticError,
            np.linalg.LinAlgError) as exc:
        print(f"ginprod: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
