"""Command-line front end: ``hdwj <command> --config cfg.json --out result.csv``.

Exit status 0 on success, 1 on invalid input, 2 on numeric failure; errors
are written to stderr as one JSON object.
"""

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import __version__
from .config import (
    ConfigError,
    build_model,
    config_hash,
    load_config,
    optimizer_config,
    rng_spec,
)
from .indices import DomainRequired, SectorViolation, estimate_indices
from .kernels import UnsupportedError
from .paths import PathGrid, simulate_model
from .quadrature import IntegrabilityError, QuadratureError
from .selftest import results_to_dicts, run_selftest
from .symbol import symbol_batch
from .verify import check_lower_bound, check_upper_bound, empirical_symbol, scaling_diagnostic

COMMANDS = ("symbol", "indices", "simulate", "verify-bounds", "verify-scaling",
            "empirical-symbol", "selftest")
DEFAULT_FORMAT = {"indices": "json", "selftest": "json"}


class CommandError(Exception):
    def __init__(self, kind, message, path=None, status=1):
        super().__init__(message)
        self.kind = kind
        self.message = message
        self.path = path
        self.status = status


def _num(v):
    """Shortest round-trip decimal for floats; NaN/inf spelled out."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return "" if v is None else str(v)


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if np.isfinite(f) else None
    return obj


def _block(cfg, name):
    if name not in cfg:
        raise CommandError("validation", f"command needs a '{name}' block", f"$.{name}")
    return cfg[name]


# --- commands: each returns (result dict, header, rows) -----------------------------------

def cmd_symbol(cfg, model, threads):
    blk = _block(cfg, "symbol")
    xis = np.asarray(blk["xi"], dtype=np.float64)
    d = model.dim
    header = [f"x{i + 1}" for i in range(d)] + [f"xi{i + 1}" for i in range(d)] + ["re", "im"]
    rows = []
    for x in blk["x"]:
        vals = symbol_batch(model, x, xis, cfg["tolerance"])
        for xi, v in zip(xis, vals):
            rows.append(list(x) + xi.tolist() + [float(v.real), float(v.imag)])
    result = {"header": header, "rows": rows}
    return result, header, rows


def cmd_indices(cfg, model, threads):
    blk = _block(cfg, "indices")
    yd = blk["y_domain"]
    try:
        rep = estimate_indices(model, blk["x"], blk["R_origin"], blk["R_infinity"],
                               None if yd is None else (yd["lo"], yd["hi"]),
                               optimizer_config(cfg), blk["window"], cfg["tolerance"],
                               tuple(blk["which"]))
    except DomainRequired as exc:
        raise CommandError("validation", str(exc), "$.indices.y_domain") from None
    rows = [[k, v] for k, v in rep.indices().items()]
    return rep.to_dict(), ["index", "value"], rows


def cmd_simulate(cfg, model, threads):
    blk = _block(cfg, "simulate")
    grid = PathGrid(float(blk["T"]), int(blk["n_steps"]))
    steps = list(range(0, grid.n_steps + 1, blk["record_every"]))
    if steps[-1] != grid.n_steps:
        steps.append(grid.n_steps)
    ens = simulate_model(model, blk["x0"], grid, rng_spec(cfg, threads), blk["M"],
                         record_steps=steps)
    d = model.dim
    header = ["path", "t"] + [f"x{i + 1}" for i in range(d)] + ["running_max", "exploded"]
    rows = []
    for p in range(ens.M):
        for j, t in enumerate(ens.times):
            rows.append([p, float(t)] + ens.states[p, j].tolist()
                        + [float(ens.running_max[p, j]), bool(ens.exploded[p])])
    result = {"M": ens.M, "n_exploded": ens.n_exploded, "times": ens.times,
              "header": header, "rows": rows}
    return result, header, rows


def cmd_verify_bounds(cfg, model, threads):
    blk = _block(cfg, "verify_bounds")
    rng = rng_spec(cfg, threads)
    opt = optimizer_config(cfg)
    up = check_upper_bound(model, blk["x"], blk["t_grid"], blk["R_grid"], rng, blk["M"],
                           cfg=opt, tol=cfg["tolerance"], n_steps=blk["n_steps"])
    header = ["check", "t", "R", "p", "ci_low", "ci_high", "functional", "bound", "passed"]
    rows = []
    for i, t in enumerate(up.t_grid):
        for j, R in enumerate(up.R_grid):
            rows.append(["upper", t, R, up.p_hat[i, j], up.ci_low[i, j], up.ci_high[i, j],
                         up.H[j], up.bound[i, j], bool(up.passed[i, j])])
    result = {"upper": up.to_dict()}
    if blk["lower"]:
        try:
            lo = check_lower_bound(model, blk["x"], blk["lower_t_grid"] or blk["t_grid"],
                                   blk["lower_R_grid"], None, rng, blk["lower_M"], cfg=opt,
                                   tol=cfg["tolerance"], slope_tol=blk["slope_tol"])
        except SectorViolation as exc:
            raise CommandError("numeric", str(exc), "$.model", status=2) from None
        ok = lo.verdict == "bounded"
        for i, t in enumerate(lo.t_grid):
            for j, R in enumerate(lo.R_grid):
                p = lo.p_below[i, j]
                rows.append(["lower", t, R, p, None, None, lo.h[j], p * t * lo.h[j], ok])
        result["lower"] = lo.to_dict()
    return result, header, rows


def cmd_verify_scaling(cfg, model, threads):
    blk = _block(cfg, "verify_scaling")
    try:
        rep = scaling_diagnostic(model, blk["x"], blk["lam"], blk["direction"],
                                 rng_spec(cfg, threads), blk["M"], blk["levels"],
                                 blk["n_steps"], blk["factor"], blk["alpha"], blk["last"],
                                 blk["indices"], optimizer_config(cfg))
    except FloatingPointError:
        raise
    except ValueError as exc:
        raise CommandError("validation", str(exc), "$.verify_scaling.lam") from None
    header = ["level", "t", "median", "q90", "verdict"]
    rows = [[k, t, m, q, rep.verdict]
            for k, t, m, q in zip(blk["levels"], rep.t, rep.median, rep.q90)]
    return rep.to_dict(), header, rows


def cmd_empirical_symbol(cfg, model, threads):
    blk = _block(cfg, "empirical_symbol")
    t = sorted(blk["t"], reverse=True)
    rep = empirical_symbol(model, blk["x"], blk["xi"], t, blk["K"], rng_spec(cfg, threads),
                           blk["M"], blk["n_steps"], blk["target_se"])
    exact = complex(symbol_batch(model, blk["x"], [blk["xi"]], cfg["tolerance"])[0])
    header = ["t", "re", "im", "se_re", "se_im", "exit_fraction", "symbol_re", "symbol_im",
              "z_re", "z_im"]
    rows = []
    for k in range(len(rep.t)):
        zr = (rep.estimate_re[k] - exact.real) / rep.se_re[k] if rep.se_re[k] > 0 else None
        zi = (rep.estimate_im[k] - exact.imag) / rep.se_im[k] if rep.se_im[k] > 0 else None
        rows.append([rep.t[k], rep.estimate_re[k], rep.estimate_im[k], rep.se_re[k],
                     rep.se_im[k], rep.exit_fraction[k], exact.real, exact.imag, zr, zi])
    result = rep.to_dict()
    result["symbol"] = [exact.real, exact.imag]
    return result, header, rows


COMMAND_FN = {
    "symbol": cmd_symbol,
    "indices": cmd_indices,
    "simulate": cmd_simulate,
    "verify-bounds": cmd_verify_bounds,
    "verify-scaling": cmd_verify_scaling,
    "empirical-symbol": cmd_empirical_symbol,
}


# --- output -------------------------------------------------------------------------------

def render_csv(header, rows, chash):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(["config_hash", "version"] + list(header))
    for r in rows:
        w.writerow([chash, __version__] + [_num(v) for v in r])
    return buf.getvalue()


def render_json(command, result, chash, cfg=None):
    doc = {"command": command, "config_hash": chash, "version": __version__,
           "result": _clean(result)}
    if cfg is not None:
        doc["config"] = cfg
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
        return
    try:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise CommandError("io", f"cannot write output: {exc.strerror}", None) from None


def _format_for(command, out):
    if out is not None:
        if out.lower().endswith(".json"):
            return "json"
        if out.lower().endswith(".csv"):
            return "csv"
    return DEFAULT_FORMAT.get(command, "csv")


def _selftest(out):
    results = run_selftest()
    rows = results_to_dicts(results)
    fmt = _format_for("selftest", out)
    chash = "selftest"
    if fmt == "json":
        text = render_json("selftest", {"checks": rows,
                                        "passed": all(r.passed for r in results)}, chash)
    else:
        header = ["name", "tag", "passed", "value", "expected"]
        text = render_csv(header, [[r[h] for h in header] for r in rows], chash)
    _emit(text, out)
    return 0 if all(r.passed for r in results) else 2


def run(command, config_path=None, out=None, seed=None, threads=1):
    """Execute one command; returns the exit status."""
    try:
        if command not in COMMANDS:
            raise CommandError("validation", f"unknown command {command!r}", None)
        if threads < 1:
            raise CommandError("validation", "--threads must be >= 1", None)
        if seed is not None and not 0 <= seed < 2 ** 64:
            raise CommandError("validation", "--seed must be an unsigned 64-bit integer", None)
        if command == "selftest":
            return _selftest(out)
        if config_path is None:
            raise CommandError("validation", "--config is required", None)
        cfg = load_config(config_path, seed)
        model = build_model(cfg["model"])
        chash = config_hash(cfg)
        result, header, rows = COMMAND_FN[command](cfg, model, threads)
        if _format_for(command, out) == "json":
            text = render_json(command, result, chash, cfg)
        else:
            text = render_csv(header, rows, chash)
        _emit(text, out)
        return 0
    except ConfigError as exc:
        return _fail("validation", exc.message, exc.path, 1)
    except CommandError as exc:
        return _fail(exc.kind, exc.message, exc.path, exc.status)
    except UnsupportedError as exc:
        return _fail("unsupported", str(exc), "$.model", 1)
    except (QuadratureError, IntegrabilityError, SectorViolation, FloatingPointError,
            OverflowError, ArithmeticError) as exc:
        return _fail("numeric", f"{type(exc).__name__}: {exc}", None, 2)
    except ValueError as exc:
        return _fail("validation", str(exc), None, 1)


def _fail(kind, message, path, status):
    err = {"error": {"kind": kind, "message": message, "path": path, "status": status,
                     "version": __version__}}
    sys.stderr.write(json.dumps(err, sort_keys=True) + "\n")
    return status


def main(argv=None):
    ap = argparse.ArgumentParser(prog="hdwj", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="experiment configuration (JSON)")
    ap.add_argument("--out", help="output file; .json or .csv selects the format (default stdout)")
    ap.add_argument("--seed", type=int, help="master seed, overrides rng.seed")
    ap.add_argument("--threads", type=int, default=1,
                    help="worker threads for the kernels (results do not depend on it)")
    args = ap.parse_args(argv)
    return run(args.command, args.config, args.out, args.seed, args.threads)


if __name__ == "__main__":
    sys.exit(main())
