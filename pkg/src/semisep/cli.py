"""Batch front end: parse a flat ``key=value`` config, sweep, write CSV.

Config format
-------------
One ``key = value`` pair per line; ``#`` starts a comment.  A key given more
than once, or a value with commas, becomes a list.  Numbers may be complex
(``2+1j``) and may use ``pi`` and ``e`` in simple arithmetic (``pi**2``).

Exit status is 0 when every row is within tolerance, 2 when any row is
flagged, and 1 on input errors.
"""
from __future__ import annotations

import argparse
import ast
import csv
import io
import itertools
import logging
import math
import operator
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .determinants import Tolerances, fredholm_det2, rel_diff
from .errors import SemisepError
from .kernelcore import Grid

log = logging.getLogger("semisep")

MODES = ("det", "jost-halfline", "transmission-line", "system2x2", "floquet", "wiener-hopf", "oracle-compare")
COLUMNS = (
    "mode", "z", "alpha", "tau", "theta",
    "det_a", "det_b", "det2_a", "det2_b",
    "closed_form", "route_discrepancy", "oracle_value", "flagged", "wall_time_ms",
)
KNOWN_KEYS = {
    "mode", "kernel", "potential", "depth", "support", "table", "amplitude", "omega",
    "alphas", "lambdas", "betas", "mus",
    "z", "z_list", "alpha", "alpha_list", "tau", "tau_list", "theta", "theta_list",
    "grid_n", "truncation", "epsilon", "tolerance_route", "tolerance_oracle", "output",
}
MIN_GRID_N = 16


class ConfigError(ValueError):
    """Invalid configuration; ``line`` points at the offending input line if known."""

    def __init__(self, message: str, line: Optional[int] = None, key: Optional[str] = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"field '{key}'")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


# ---------------------------------------------------------------- parsing

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNOPS = {ast.UAdd: operator.pos, ast.USub: operator.neg}
_NAMES = {"pi": math.pi, "e": math.e}


def _eval_node(node):
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float, complex)):
        return node.value
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval_node(node.left), _eval_node(node.right))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
        return _UNOPS[type(node.op)](_eval_node(node.operand))
    if isinstance(node, ast.Name) and node.id in _NAMES:
        return _NAMES[node.id]
    raise ValueError("not a number")


def parse_number(token: str) -> complex:
    """``"1.5"``, ``"2+1j"``, ``"-pi/3"``, ``"pi**2"`` to complex."""
    token = token.strip()
    try:
        return complex(token)
    except ValueError:
        pass
    try:
        return complex(_eval_node(ast.parse(token, mode="eval").body))
    except (SyntaxError, ValueError, TypeError, ZeroDivisionError):
        raise ValueError(f"cannot parse number {token!r}") from None


def parse_config_text(text: str) -> tuple[dict, dict]:
    """Return ``(values, lines)``: raw string lists per key and the line of first use."""
    values: dict[str, list[str]] = {}
    lines: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError("expected 'key = value'", lineno)
        key, value = (s.strip() for s in body.split("=", 1))
        if not key:
            raise ConfigError("empty key", lineno)
        if key not in KNOWN_KEYS:
            raise ConfigError("unknown key", lineno, key)
        if not value:
            raise ConfigError("empty value", lineno, key)
        values.setdefault(key, []).extend(v.strip() for v in value.split(",") if v.strip())
        lines.setdefault(key, lineno)
    return values, lines


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration for one batch run."""

    mode: str
    kernel: str = ""
    potential: str = "zero"
    depth: complex = 0j
    support: tuple = ()
    table: str = ""
    amplitude: float = 1.0
    omega: float = 1.0
    alphas: tuple = ()
    lambdas: tuple = ()
    betas: tuple = ()
    mus: tuple = ()
    z_list: tuple = ()
    alpha_list: tuple = (1.0 + 0j,)
    tau_list: tuple = ()
    theta_list: tuple = ()
    grid_n: int = 2000
    truncation: Optional[float] = None
    epsilon: float = 1e-6
    tolerances: Tolerances = field(default_factory=Tolerances)
    output: str = ""
    oracle: bool = False

    def points(self) -> list[dict]:
        """Sweep points in a fixed order: ``tau``, ``theta``, ``z``, ``alpha``."""
        axes = []
        for name, seq in (("tau", self.tau_list), ("theta", self.theta_list), ("z", self.z_list), ("alpha", self.alpha_list)):
            if seq:
                axes.append([(name, v) for v in seq])
        return [dict(combo) for combo in itertools.product(*axes)]


def _one(values, lines, key, conv, default=None, required=False):
    if key not in values:
        if required:
            raise ConfigError("missing required field", None, key)
        return default
    items = values[key]
    if len(items) != 1:
        raise ConfigError("expected a single value", lines[key], key)
    try:
        return conv(items[0])
    except ValueError as exc:
        raise ConfigError(str(exc), lines[key], key) from None


def _many(values, lines, keys, conv):
    out = []
    for key in keys:
        for item in values.get(key, []):
            try:
                out.append(conv(item))
            except ValueError as exc:
                raise ConfigError(str(exc), lines[key], key) from None
    return tuple(out)


def _real(token: str) -> float:
    v = parse_number(token)
    if v.imag != 0:
        raise ValueError(f"expected a real number, got {token!r}")
    return v.real


def build_config(values: dict, lines: dict) -> RunConfig:
    """Validate raw key/value lists into a :class:`RunConfig`."""
    mode = _one(values, lines, "mode", str, required=True)
    if mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}; choose from {', '.join(MODES)}", lines["mode"], "mode")
    cfg = RunConfig(
        mode=mode,
        kernel=_one(values, lines, "kernel", str, ""),
        potential=_one(values, lines, "potential", str, "zero"),
        depth=_one(values, lines, "depth", parse_number, 0j),
        support=_many(values, lines, ["support"], _real),
        table=_one(values, lines, "table", str, ""),
        amplitude=_one(values, lines, "amplitude", _real, 1.0),
        omega=_one(values, lines, "omega", _real, 1.0),
        alphas=_many(values, lines, ["alphas"], parse_number),
        lambdas=_many(values, lines, ["lambdas"], parse_number),
        betas=_many(values, lines, ["betas"], parse_number),
        mus=_many(values, lines, ["mus"], parse_number),
        z_list=_many(values, lines, ["z", "z_list"], parse_number),
        alpha_list=_many(values, lines, ["alpha", "alpha_list"], parse_number) or (1.0 + 0j,),
        tau_list=_many(values, lines, ["tau", "tau_list"], _real),
        theta_list=_many(values, lines, ["theta", "theta_list"], _real),
        grid_n=int(_one(values, lines, "grid_n", _real, 2000)),
        truncation=_one(values, lines, "truncation", _real, None),
        epsilon=_one(values, lines, "epsilon", _real, 1e-6),
        tolerances=Tolerances(
            route=_one(values, lines, "tolerance_route", _real, Tolerances.route),
            oracle=_one(values, lines, "tolerance_oracle", _real, Tolerances.oracle),
        ),
        output=_one(values, lines, "output", str, ""),
    )
    return validate(cfg, lines)


def _kernel_family(cfg: RunConfig) -> str:
    if cfg.mode in ("det", "oracle-compare"):
        return cfg.kernel or ("rational" if cfg.alphas or cfg.betas else "halfline")
    return {
        "jost-halfline": "halfline",
        "transmission-line": "line",
        "system2x2": "system",
        "floquet": "floquet",
        "wiener-hopf": "rational",
    }[cfg.mode]


def validate(cfg: RunConfig, lines: Optional[dict] = None) -> RunConfig:
    lines = lines or {}
    line = lambda key: lines.get(key)
    if cfg.grid_n < MIN_GRID_N:
        raise ConfigError(f"grid_n must be at least {MIN_GRID_N}", line("grid_n"), "grid_n")
    family = _kernel_family(cfg)
    if family not in ("rational", "halfline", "line", "system", "floquet"):
        raise ConfigError(f"unknown kernel {family!r}", line("kernel"), "kernel")
    if family == "rational":
        if len(cfg.alphas) != len(cfg.lambdas) or len(cfg.betas) != len(cfg.mus):
            raise ConfigError("alphas/lambdas and betas/mus must have equal lengths", line("alphas") or line("betas"), "alphas")
        if not cfg.tau_list:
            raise ConfigError("needs at least one tau", None, "tau")
        try:
            from .wienerhopf import RationalSymbolKernel

            RationalSymbolKernel(cfg.alphas, cfg.lambdas, cfg.betas, cfg.mus, cfg.tau_list[0])
        except ValueError as exc:
            raise ConfigError(str(exc), line("alphas") or line("betas")) from None
    else:
        if not cfg.z_list:
            raise ConfigError("needs at least one z", None, "z")
        if cfg.potential not in ("zero", "square-well", "table", "cosine"):
            raise ConfigError(f"unknown potential {cfg.potential!r}", line("potential"), "potential")
        if cfg.potential == "table" and not cfg.table:
            raise ConfigError("potential=table needs 'table = path'", line("potential"), "table")
        if cfg.support and len(cfg.support) != 2:
            raise ConfigError("support takes two numbers 'lo, hi'", line("support"), "support")
        if cfg.potential == "cosine" and family != "floquet":
            raise ConfigError("the cosine potential is periodic; use mode=floquet", line("potential"), "potential")
    if family == "floquet" and not cfg.theta_list:
        cfg = replace(cfg, theta_list=(math.pi / 2,))
    if family == "floquet" and any(a != 1 for a in cfg.alpha_list):
        raise ConfigError("mode=floquet does not take alpha", line("alpha") or line("alpha_list"), "alpha")
    if family != "floquet" and cfg.theta_list:
        raise ConfigError("theta only applies to mode=floquet", line("theta") or line("theta_list"), "theta")
    if cfg.table:
        try:
            load_table(cfg.table)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read table: {exc}", line("table"), "table") from None
    return cfg


def load_config(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return build_config(*parse_config_text(text))


def load_table(path: str) -> tuple[np.ndarray, np.ndarray]:
    """Two or three columns: ``x, Re V[, Im V]``."""
    data = np.loadtxt(path, ndmin=2, comments="#", delimiter=None)
    if data.shape[1] not in (2, 3) or data.shape[0] < 2:
        raise ValueError("expected at least two rows of 'x V' or 'x ReV ImV'")
    values = data[:, 1] + (1j * data[:, 2] if data.shape[1] == 3 else 0)
    return data[:, 0], values


# ---------------------------------------------------------------- evaluation

def _potential(cfg: RunConfig, side: str, scale: complex = 1.0):
    from .schrodinger import Potential

    default = (0.0, 1.0) if side == "half-line" else (-1.0, 1.0)
    lo, hi = cfg.support or default
    if cfg.potential == "table":
        xs, vals = load_table(cfg.table)
        return Potential.tabulated(xs, scale * vals, side)
    depth = cfg.depth if cfg.potential == "square-well" else 0j
    return Potential.square_well(scale * depth, lo, hi, side)


def _periodic(cfg: RunConfig):
    from .floquet import PeriodicPotential

    w, amp = cfg.omega, cfg.amplitude
    if cfg.potential == "cosine":
        return PeriodicPotential(lambda x: amp * np.cos(2 * np.pi * x / w), w)
    if cfg.potential == "square-well":
        lo, hi = cfg.support or (0.0, w)
        d = cfg.depth
        return PeriodicPotential(lambda x: np.where((x >= lo) & (x <= hi), d, 0.0), w)
    if cfg.potential == "table":
        xs, vals = load_table(cfg.table)
        return PeriodicPotential(lambda x: np.interp(x, xs, vals.real) + 1j * np.interp(x, xs, vals.imag), w)
    return PeriodicPotential(lambda x: np.zeros(np.shape(x)), w)


def _oracle(kern, grid: Grid, alpha: complex, kind: str) -> complex:
    from .nystrom import discretize, oracle_det, oracle_det2

    if grid.n > 4000:
        grid = Grid.trapezoid(grid.lo, grid.hi, 4000)
    disc = discretize(kern, grid)
    return oracle_det(disc, alpha) if kind == "det" else oracle_det2(disc, alpha)


def _spread(values) -> float:
    values = [v for v in values if v is not None]
    return max((rel_diff(a, b) for a in values for b in values), default=0.0)


def evaluate_point(cfg: RunConfig, point: dict) -> dict:
    """Compute one CSV row (as a dict of raw values)."""
    family = _kernel_family(cfg)
    want_oracle = cfg.oracle or cfg.mode == "oracle-compare"
    tol = cfg.tolerances
    alpha = complex(point.get("alpha", 1.0))
    row = {"mode": cfg.mode, **point}
    oracle_kind = "det"
    kern = grid = None
    start = time.perf_counter()

    if family == "rational":
        from . import wienerhopf as wh

        base = wh.RationalSymbolKernel(cfg.alphas, cfg.lambdas, cfg.betas, cfg.mus, point["tau"])
        k = wh.RationalSymbolKernel([alpha * a for a in base.alphas], base.lambdas, [alpha * b for b in base.betas], base.mus, base.tau)
        roots = wh.find_roots(k)
        closed = [wh.day_formula(k, roots, "a"), wh.day_formula(k, roots, "b"), wh.det2_via_G(k, roots)]
        kern, grid = wh.build_kernel(base), Grid.trapezoid(0.0, base.tau, cfg.grid_n)
        rep = fredholm_det2(kern, alpha, grid, tol)
        row.update(det_a=rep.det_a, det_b=rep.det_b, det2_a=rep.det2_a, det2_b=rep.det2_b, closed_form=closed[0])
        row["route_discrepancy"] = max(_spread(closed), rep.det2_discrepancy, rel_diff(closed[0], rep.det2_a))
        oracle_kind = "det2"

    elif family == "halfline":
        from .schrodinger import build_halfline_kernel, jost_function_halfline

        pot = _potential(cfg, "half-line", alpha)
        grid = pot.grid(cfg.grid_n, cfg.truncation)
        rep = jost_function_halfline(pot, point["z"], grid, tol)
        d = rep.determinant
        row.update(det_a=d.det_a, det_b=d.det_b, det2_a=d.det2_a, det2_b=d.det2_b, closed_form=rep.value)
        row["route_discrepancy"] = rep.route_discrepancy
        if want_oracle:
            kern = build_halfline_kernel(_potential(cfg, "half-line"), point["z"], grid)

    elif family == "line":
        from .schrodinger import build_line_kernel, jost_function_line

        z = complex(point["z"])
        if cfg.mode == "transmission-line" and z.imag == 0 and z.real > 0:
            z = complex(z.real, cfg.epsilon)
        pot = _potential(cfg, "full-line", alpha)
        grid = pot.grid(cfg.grid_n, cfg.truncation)
        rep = jost_function_line(pot, z, grid, tol)
        d = rep.determinant
        row.update(det_a=d.det_a, det_b=d.det_b, det2_a=d.det2_a, det2_b=d.det2_b, closed_form=rep.value)
        row["route_discrepancy"] = rep.route_discrepancy
        if want_oracle:
            kern = build_line_kernel(_potential(cfg, "full-line"), z, grid)

    elif family == "system":
        from .schrodinger import build_system_kernel, first_order_system_det2

        pot = _potential(cfg, "full-line", alpha)
        grid = pot.grid(cfg.grid_n, cfg.truncation)
        rep = first_order_system_det2(pot, point["z"], grid, tol)
        row.update(det2_a=rep.system.det2_a, det2_b=rep.system.det2_b, closed_form=rep.jost_side)
        row["route_discrepancy"] = rep.route_discrepancy
        oracle_kind = "det2"
        if want_oracle:
            kern = build_system_kernel(_potential(cfg, "full-line"), point["z"], grid)

    else:  # floquet
        from .floquet import FloquetParams, build_Ktheta_kernel, det_Ktheta

        pot = _periodic(cfg)
        params = FloquetParams(point["theta"], point["z"], pot.omega)
        grid = pot.grid(cfg.grid_n)
        rep = det_Ktheta(pot, params, grid, tol, ode_steps=max(cfg.grid_n, 2000))
        d = rep.det_route
        row.update(det_a=d.det_a, det_b=d.det_b, det2_a=d.det2_a, det2_b=d.det2_b, closed_form=rep.delta_monodromy)
        row["route_discrepancy"] = max(rep.route_discrepancy, rep.delta_discrepancy)
        if want_oracle:
            kern = build_Ktheta_kernel(pot, params)

    flagged = not (row["route_discrepancy"] <= tol.route)
    if want_oracle and kern is not None:
        orc = _oracle(kern, grid, alpha, oracle_kind)
        row["oracle_value"] = orc
        ref = row["det2_a"] if oracle_kind == "det2" else row["det_a"]
        flagged = flagged or not (rel_diff(ref, orc) <= tol.oracle)
    row["flagged"] = flagged
    row["wall_time_ms"] = (time.perf_counter() - start) * 1e3
    return row


def _safe_evaluate(args) -> dict:
    cfg, point = args
    try:
        return evaluate_point(cfg, point)
    except (SemisepError, ArithmeticError, np.linalg.LinAlgError) as exc:
        log.warning("point %s failed: %s", point, exc)
        return {"mode": cfg.mode, **point, "flagged": True, "error": str(exc)}


# ---------------------------------------------------------------- output

def format_value(value) -> str:
    """CSV text for one cell; complex numbers as ``re+imj`` with 17 significant digits."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return value
    if isinstance(value, (complex, np.complexfloating)):
        value = complex(value)
        return f"{value.real:.17g}{value.imag:+.17g}j"
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def write_csv(rows, stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in rows:
        cells = []
        for col in COLUMNS:
            v = row.get(col)
            if col == "wall_time_ms" and v is not None:
                cells.append(f"{v:.3f}")
            else:
                cells.append(format_value(v))
        writer.writerow(cells)


def run(cfg: RunConfig, jobs: int = 1) -> tuple[int, list[dict]]:
    """Evaluate every sweep point; rows come back in input order."""
    tasks = [(cfg, p) for p in cfg.points()]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_safe_evaluate, tasks))
    else:
        rows = [_safe_evaluate(t) for t in tasks]
    status = 2 if any(r["flagged"] for r in rows) else 0
    return status, rows


def _configure_logging() -> None:
    level = os.environ.get("SEMISEP_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="semisep", description="Fredholm determinants of semi-separable kernels, batch mode.")
    p.add_argument("--config", required=True, metavar="PATH", help="flat key=value configuration file")
    p.add_argument("--jobs", type=int, default=1, metavar="N", help="worker processes (default 1)")
    p.add_argument("--grid-n", type=int, metavar="N", help="override grid_n from the config")
    p.add_argument("--tolerance", type=float, metavar="X", help="override the route tolerance")
    p.add_argument("--oracle", action="store_true", help="also fill the dense Nystrom oracle column")
    p.add_argument("--output", metavar="PATH", help="CSV destination (default: config 'output' or stdout)")
    return p


def main(argv: Optional[list[str]] = None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.grid_n is not None:
            cfg = replace(cfg, grid_n=args.grid_n)
        if args.tolerance is not None:
            cfg = replace(cfg, tolerances=replace(cfg.tolerances, route=args.tolerance))
        if args.oracle:
            cfg = replace(cfg, oracle=True)
        cfg = validate(cfg)
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
    except ConfigError as exc:
        print(f"semisep: {args.config}: {exc}", file=sys.stderr)
        return 1
    status, rows = run(cfg, args.jobs)
    for r in rows:
        if "error" in r:
            print(f"semisep: point {({k: r[k] for k in ('z', 'alpha', 'tau', 'theta') if k in r})} failed: {r['error']}", file=sys.stderr)
    target = args.output or cfg.output
    if target:
        with open(target, "w", encoding="utf-8", newline="") as fh:
            write_csv(rows, fh)
    else:
        buf = io.StringIO()
        write_csv(rows, buf)
        sys.stdout.write(buf.getvalue())
    return status


if __name__ == "__main__":
    sys.exit(main())
