"""Experiment configuration: JSON schema validation, explicit defaults and model construction.

Expressions (alpha(x), Phi(x), drift(x), custom densities) are restricted
arithmetic over numpy functions, compiled from a whitelisted AST.
"""

import ast
import copy
import hashlib
import json
import math
from importlib import resources

import jsonschema
import numpy as np
from scipy import stats

from .grids import BallOptimizerConfig
from .kernels import CompoundPoisson, CustomDensity, NoJumps, SymmetricStable, VarianceGamma
from .rng import RngSpec
from .symbol import (
    DEFAULT_TOL,
    CogarchModel,
    CustomTripletModel,
    CutoffFunction,
    DeterministicFigureEightModel,
    LevyModel,
    LevyTriplet,
    SdeComposedModel,
    StableLikeModel,
    SumIndependentModel,
)


class ConfigError(ValueError):
    """Invalid configuration; ``path`` locates the offending field."""

    def __init__(self, message, path="$"):
        super().__init__(f"{path}: {message}")
        self.message = message
        self.path = path


def _path(parts):
    out = "$"
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def load_schema():
    text = resources.files("hdwj").joinpath("schema/config.schema.json").read_text()
    return json.loads(text)


# --- expressions -------------------------------------------------------------------------

_FUNCS = {
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "exp": np.exp, "log": np.log,
    "log1p": np.log1p, "expm1": np.expm1, "sqrt": np.sqrt, "abs": np.abs, "tanh": np.tanh,
    "arctan": np.arctan, "sinh": np.sinh, "cosh": np.cosh, "minimum": np.minimum,
    "maximum": np.maximum, "where": np.where, "sign": np.sign, "floor": np.floor,
}
_CONSTS = {"pi": math.pi, "e": math.e}
_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.Mod)
_CMPOPS = (ast.Lt, ast.LtE, ast.Gt, ast.GtE, ast.Eq, ast.NotEq)


class Expression:
    """Whitelisted numpy expression in one variable (``x`` or ``y``)."""

    def __init__(self, source, var, path="$"):
        self.source = source
        self.var = var
        if isinstance(source, (int, float)):
            self._code = None
            self._const = float(source)
            return
        try:
            tree = ast.parse(source, mode="eval")
        except SyntaxError as exc:
            raise ConfigError(f"cannot parse expression {source!r}: {exc.msg}", path) from None
        self._check(tree.body, path)
        self._code = compile(tree, "<expr>", "eval")
        self._const = None

    def _check(self, node, path):
        ok = True
        if isinstance(node, ast.Constant):
            ok = isinstance(node.value, (int, float)) and not isinstance(node.value, bool)
        elif isinstance(node, ast.Name):
            ok = node.id == self.var or node.id in _CONSTS
        elif isinstance(node, ast.BinOp):
            ok = isinstance(node.op, _BINOPS)
            self._check(node.left, path)
            self._check(node.right, path)
        elif isinstance(node, ast.UnaryOp):
            ok = isinstance(node.op, (ast.UAdd, ast.USub))
            self._check(node.operand, path)
        elif isinstance(node, ast.Compare):
            ok = all(isinstance(o, _CMPOPS) for o in node.ops)
            for n in [node.left, *node.comparators]:
                self._check(n, path)
        elif isinstance(node, ast.Call):
            ok = (isinstance(node.func, ast.Name) and node.func.id in _FUNCS
                  and not node.keywords)
            for a in node.args:
                self._check(a, path)
        elif isinstance(node, ast.Subscript):
            ok = (isinstance(node.value, ast.Name) and node.value.id == self.var
                  and isinstance(node.slice, ast.Constant) and isinstance(node.slice.value, int))
        else:
            ok = False
        if not ok:
            raise ConfigError(f"disallowed construct {ast.dump(node)[:60]} in expression "
                              f"{self.source!r}", path)

    def __call__(self, value):
        if self._code is None:
            return self._const
        ns = dict(_FUNCS)
        ns.update(_CONSTS)
        ns[self.var] = value
        return eval(self._code, {"__builtins__": {}}, ns)


def _expr(src, var, path):
    return Expression(src, var, path)


def _expr_matrix(rows, var, path, shape=None):
    width = len(rows[0])
    for i, r in enumerate(rows):
        if len(r) != width:
            raise ConfigError("ragged matrix", f"{path}[{i}]")
    if shape is not None and (len(rows), width) != shape:
        raise ConfigError(f"expected shape {shape}, got {(len(rows), width)}", path)
    return [[_expr(v, var, f"{path}[{i}][{j}]") for j, v in enumerate(r)]
            for i, r in enumerate(rows)]


def _eval_matrix(exprs, x):
    return np.array([[float(e(x)) for e in row] for row in exprs])


def _eval_matrix_batch(exprs, X):
    """Entries evaluated on the (M, d) state batch; result (M, rows, cols)."""
    xt = X.T
    m = X.shape[0]
    cols = [[np.broadcast_to(np.asarray(e(xt), dtype=np.float64), (m,)) for e in row]
            for row in exprs]
    return np.stack([np.stack(r, axis=-1) for r in cols], axis=1)


# --- defaults ----------------------------------------------------------------------------

DEFAULT_SEED = RngSpec().seed


def _fill(block, defaults):
    out = dict(defaults)
    out.update(block)
    return out


def _norm_cutoff(c, norm="euclidean"):
    return _fill(c or {}, {"radius": 1.0, "norm": norm})


def _norm_kernel(k):
    k = dict(k or {"type": "none"})
    if k["type"] == "stable":
        k.setdefault("scale", 1.0)
    elif k["type"] == "compound_poisson":
        k["distribution"] = _fill(k["distribution"], {"params": {}})
    elif k["type"] == "custom":
        k.setdefault("symmetric", True)
        k.setdefault("singularity", None)
    return k


def _norm_triplet(t):
    d = t["dim"]
    out = dict(t)
    out.setdefault("drift", [0.0] * d)
    out.setdefault("Q", [[0.0] * d for _ in range(d)])
    out["kernel"] = _norm_kernel(t.get("kernel"))
    out["cutoff"] = _norm_cutoff(t.get("cutoff"))
    return out


def _norm_model(m):
    fam = m["family"]
    out = dict(m)
    if fam == "levy":
        out = _norm_triplet(m)
        out["family"] = "levy"
    elif fam == "stable_like":
        out.setdefault("dim", 1)
        out["cutoff"] = _norm_cutoff(m.get("cutoff"))
    elif fam == "sde":
        out["driver"] = _norm_triplet(m["driver"])
        out.setdefault("bounded", False)
        out["cutoff"] = _norm_cutoff(m.get("cutoff"))
    elif fam == "cogarch":
        out["driver"] = _norm_triplet(m["driver"])
        out["cutoff"] = _norm_cutoff(m.get("cutoff"), "max")
    elif fam == "sum":
        out["components"] = [_norm_model(c) for c in m["components"]]
        out["cutoff"] = _norm_cutoff(m.get("cutoff"))
    elif fam == "custom":
        d = m["dim"]
        out.setdefault("drift", [0.0] * d)
        out.setdefault("Q", [[0.0] * d for _ in range(d)])
        out["kernel"] = _norm_kernel(m.get("kernel"))
        out.setdefault("bounded", False)
        out["cutoff"] = _norm_cutoff(m.get("cutoff"))
    return out


def model_dim(m):
    fam = m["family"]
    if fam in ("cogarch", "figure_eight"):
        return 2
    if fam == "sum":
        return sum(model_dim(c) for c in m["components"])
    return int(m.get("dim", 1))


def normalize(raw):
    """Resolved configuration with every default written out."""
    cfg = copy.deepcopy(raw)
    cfg["model"] = _norm_model(cfg["model"])
    d = model_dim(cfg["model"])
    zero = [0.0] * d
    cfg["rng"] = _fill(cfg.get("rng", {}), {"seed": DEFAULT_SEED})
    cfg.setdefault("tolerance", DEFAULT_TOL)
    o = BallOptimizerConfig()
    cfg["optimizer"] = _fill(cfg.get("optimizer", {}), {
        "n_directions": o.n_directions, "n_radial": o.n_radial, "n_y": o.n_y,
        "refine_passes": o.refine_passes, "shrink": o.shrink})
    if "symbol" in cfg:
        cfg["symbol"] = _fill(cfg["symbol"], {"x": [zero]})
    # every field of the indices block has a default, so the block itself is optional
    cfg["indices"] = _fill(cfg.get("indices", {}), {"x": zero, "which": ["origin", "infinity"],
                                                   "y_domain": None, "R_origin": None,
                                                   "R_infinity": None, "window": 6})
    if "simulate" in cfg:
        cfg["simulate"] = _fill(cfg["simulate"], {"x0": zero, "M": 100, "record_every": 1})
    if "verify_bounds" in cfg:
        cfg["verify_bounds"] = _fill(cfg["verify_bounds"], {
            "x": zero, "M": 100000, "n_steps": None, "lower": False, "lower_t_grid": None,
            "lower_R_grid": None, "lower_M": 10000, "slope_tol": 0.2})
    if "verify_scaling" in cfg:
        cfg["verify_scaling"] = _fill(cfg["verify_scaling"], {
            "x": zero, "direction": "zero", "M": 1000, "levels": list(range(2, 15)),
            "n_steps": 256, "factor": 4.0, "alpha": 0.01, "last": None, "indices": None})
    if "empirical_symbol" in cfg:
        cfg["empirical_symbol"] = _fill(cfg["empirical_symbol"], {
            "K": 1.0, "M": 10000, "n_steps": 100, "target_se": None})
    return cfg


def validate(raw):
    """Schema check; raises ConfigError carrying the path of the first offending field."""
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(raw), key=lambda e: (len(e.absolute_path),
                                                              list(map(str, e.absolute_path))))
    if errors:
        # prefer the most specific error
        e = max(errors, key=lambda e: len(e.absolute_path))
        raise ConfigError(e.message, _path(e.absolute_path))


def config_hash(cfg):
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def load_config(path, seed=None):
    """Read, validate and normalise a config file; ``seed`` overrides rng.seed."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg} (line {exc.lineno})") from None
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}") from None
    return parse_config(raw, seed)


def parse_config(raw, seed=None):
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    validate(raw)
    cfg = normalize(raw)
    if seed is not None:
        cfg["rng"]["seed"] = int(seed)
    check_dimensions(cfg)
    return cfg


def check_dimensions(cfg):
    d = model_dim(cfg["model"])
    blocks = {"symbol": ("x", "xi"), "indices": ("x",), "simulate": ("x0",),
              "verify_bounds": ("x",), "verify_scaling": ("x",), "empirical_symbol": ("x", "xi")}
    for blk, keys in blocks.items():
        if blk not in cfg:
            continue
        for k in keys:
            v = cfg[blk][k]
            pts = v if v and isinstance(v[0], list) else [v]
            for i, p in enumerate(pts):
                if len(p) != d:
                    where = f"$.{blk}.{k}" + (f"[{i}]" if pts is not v else "")
                    raise ConfigError(f"expected a point of dimension {d}, got {len(p)}", where)
    yd = cfg.get("indices", {}).get("y_domain")
    if yd is not None:
        for k in ("lo", "hi"):
            if len(yd[k]) != d:
                raise ConfigError(f"expected dimension {d}", f"$.indices.y_domain.{k}")
        if any(a > b for a, b in zip(yd["lo"], yd["hi"])):
            raise ConfigError("lo must not exceed hi", "$.indices.y_domain")


def optimizer_config(cfg):
    return BallOptimizerConfig(**cfg["optimizer"])


def rng_spec(cfg, threads=1):
    return RngSpec(int(cfg["rng"]["seed"]), int(threads))


# --- model construction --------------------------------------------------------------------

def build_cutoff(c):
    return CutoffFunction(float(c["radius"]), c["norm"])


def build_kernel(k, dim, path):
    t = k["type"]
    try:
        if t == "none":
            return NoJumps(dim)
        if t == "stable":
            return SymmetricStable(float(k["alpha"]), float(k["scale"]), dim)
        if dim != 1:
            raise ConfigError(f"kernel type {t!r} is one-dimensional", f"{path}.type")
        if t == "variance_gamma":
            return VarianceGamma(float(k["C"]))
        if t == "compound_poisson":
            dist = k["distribution"]
            law = getattr(stats, dist["name"], None)
            if not isinstance(law, stats.rv_continuous):
                raise ConfigError(f"unknown continuous distribution {dist['name']!r}",
                                  f"{path}.distribution.name")
            try:
                frozen = law(**dist["params"])
                frozen.pdf(0.0)
            except TypeError as exc:
                raise ConfigError(str(exc), f"{path}.distribution.params") from None
            return CompoundPoisson(float(k["intensity"]), frozen, spec=k)
        if t == "custom":
            f = _expr(k["density"], "y", f"{path}.density")
            return CustomDensity(f, dim, k["symmetric"], k["singularity"], spec=k)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc), path) from None
    raise ConfigError(f"unknown kernel type {t!r}", f"{path}.type")


def _vec(v, d, path):
    if len(v) != d:
        raise ConfigError(f"expected length {d}, got {len(v)}", path)
    return np.asarray(v, dtype=np.float64)


def _mat(m, d, path):
    a = np.asarray(m, dtype=np.float64) if all(len(r) == d for r in m) else None
    if a is None or a.shape != (d, d):
        raise ConfigError(f"expected a {d}x{d} matrix", path)
    return a


def build_triplet(t, path):
    d = int(t["dim"])
    ell = _vec(t["drift"], d, f"{path}.drift")
    Q = _mat(t["Q"], d, f"{path}.Q")
    kernel = build_kernel(t["kernel"], d, f"{path}.kernel")
    try:
        return LevyTriplet(ell, Q, kernel)
    except ValueError as exc:
        raise ConfigError(str(exc), f"{path}.Q") from None


def build_model(m, path="$.model"):
    """SymbolModel from a normalised model block."""
    fam = m["family"]
    try:
        if fam == "levy":
            return LevyModel(build_triplet(m, path), build_cutoff(m["cutoff"]))
        if fam == "stable_like":
            f = _expr(m["alpha"], "x", f"{path}.alpha")
            return StableLikeModel(f, m["alpha0"], m["alpha_inf"], m["dim"],
                                   build_cutoff(m["cutoff"]))
        if fam == "sde":
            driver = build_triplet(m["driver"], f"{path}.driver")
            d, n = int(m["dim"]), driver.dim
            exprs = _expr_matrix(m["Phi"], "x", f"{path}.Phi", (d, n))
            model = SdeComposedModel(driver, lambda x: _eval_matrix(exprs, x), d,
                                     build_cutoff(m["driver"]["cutoff"]),
                                     build_cutoff(m["cutoff"]), m["bounded"],
                                     lambda X: _eval_matrix_batch(exprs, X))
            return model
        if fam == "cogarch":
            if m["driver"]["dim"] != 1:
                raise ConfigError("COGARCH driver must be one-dimensional", f"{path}.driver.dim")
            driver = build_triplet(m["driver"], f"{path}.driver")
            return CogarchModel(driver, m["lambda"], m["delta"], m["beta"],
                                build_cutoff(m["driver"]["cutoff"]), build_cutoff(m["cutoff"]))
        if fam == "sum":
            comps = [build_model(c, f"{path}.components[{i}]")
                     for i, c in enumerate(m["components"])]
            return SumIndependentModel(comps, build_cutoff(m["cutoff"]))
        if fam == "custom":
            d = int(m["dim"])
            if len(m["drift"]) != d:
                raise ConfigError(f"expected length {d}", f"{path}.drift")
            drift = [_expr(v, "x", f"{path}.drift[{i}]") for i, v in enumerate(m["drift"])]
            Q = _expr_matrix(m["Q"], "x", f"{path}.Q", (d, d))
            kernel = build_kernel(m["kernel"], d, f"{path}.kernel")

            def triplet_fn(x):
                ell = np.array([float(e(x)) for e in drift])
                return LevyTriplet(ell, _eval_matrix(Q, x), kernel)

            return CustomTripletModel(triplet_fn, d, build_cutoff(m["cutoff"]), m["bounded"])
        if fam == "figure_eight":
            return DeterministicFigureEightModel()
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc), path) from None
    raise ConfigError(f"unknown family {fam!r}", f"{path}.family")
