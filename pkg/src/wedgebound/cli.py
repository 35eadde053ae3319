"""Command-line interface: ``python -m wedgebound <command> [options]``.

Commands write into a run directory (``--out``, else ``$WEDGEBOUND_OUT``,
else ``./wedgebound-runs``) and keep ``manifest.json`` there up to date with
a SHA-256 digest of every file under the directory. Data files are
byte-deterministic for a given configuration; only the manifest carries
wall-clock timestamps (pinned by ``SOURCE_DATE_EPOCH`` when set).

Exit codes: 0 ok, 1 usage, 2 I/O, 3 computation, 4 check failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import dataclasses
import datetime as _dt
import fcntl
import hashlib
import io
import json
import logging
import math
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .checks import run_limit_checks
from .degeneracy import (SWEEP_COLUMNS, OrderingError, current_residual, pair_splitting_closed_form,
                         single_well_from_pair, splitting_eq2, sweep)
from .optimize import OptimizationResult, OptimizerConfig, optimize_state, state_energy
from .potential import HARTREE_EV, WedgeGeometry, potential_grid
from .trial import DEFAULT_RULE, TIGHT_RULE, default_extent, density_grid

log = logging.getLogger("wedgebound")

ENV_OUT = "WEDGEBOUND_OUT"
DEFAULT_OUT = "wedgebound-runs"
EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_COMPUTE, EXIT_CHECK = 0, 1, 2, 3, 4
STATE_NAMES = {"0": "ground", "1": "antisymmetric", "2": "excited",
               "ground": "ground", "antisymmetric": "antisymmetric", "excited": "excited"}
MANIFEST = "manifest.json"


class UsageError(Exception):
    pass


class ComputeError(Exception):
    pass


# ---------------------------------------------------------------------------
# configuration


def parse_grid(text: str) -> tuple[int, int, float | None]:
    """``nr:ntheta:rmax``; ``rmax`` may be ``auto`` where a command supports it."""
    parts = text.split(":") if text else []
    if len(parts) != 3:
        raise UsageError(f"grid spec must be nr:ntheta:rmax, got {text!r}")
    try:
        nr, nt = int(parts[0]), int(parts[1])
        rmax = None if parts[2] == "auto" else float(parts[2])
    except ValueError:
        raise UsageError(f"grid spec must be nr:ntheta:rmax, got {text!r}") from None
    if nr < 2 or nt < 2:
        raise UsageError("grid counts must be at least 2")
    if rmax is not None and not (rmax > 0 and math.isfinite(rmax)):
        raise UsageError("grid rmax must be a positive number")
    return nr, nt, rmax


def parse_alphas(text: str) -> tuple[float, ...]:
    """``start:stop:step`` (stop included when hit) or a comma-separated list."""
    try:
        if ":" in text:
            start, stop, step = (float(v) for v in text.split(":"))
            if not step > 0 or stop < start:
                raise UsageError(f"bad alpha range {text!r}")
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            vals = tuple(round(start + i * step, 12) for i in range(count))
        else:
            vals = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise UsageError(f"cannot parse alpha list {text!r}") from None
    if not vals:
        raise UsageError("empty alpha list")
    for a in vals:
        if not 0 < a <= 2 * math.pi:
            raise UsageError(f"opening angle {a!r} outside (0, 2pi]")
    return vals


@dataclass(frozen=True)
class RunConfig:
    units: str = "ev"
    seed: int = OptimizerConfig.seed
    restarts: int = OptimizerConfig.restarts
    max_iterations: int = OptimizerConfig.max_iterations
    tol_quad: float = 1e-10
    tol_opt: float = OptimizerConfig.objective_spread_tolerance
    grid: str | None = None
    alphas: str | None = None
    alpha: float | None = None
    state: str = "ground"
    out: str = ""
    workers: int = 1

    def __post_init__(self):
        if self.units not in ("au", "ev"):
            raise UsageError(f"units must be au or ev, got {self.units!r}")
        if self.restarts < 1 or self.max_iterations < 1 or self.workers < 1:
            raise UsageError("restarts, max_iterations and workers must be positive")
        if not (self.tol_quad > 0 and self.tol_opt > 0):
            raise UsageError("tolerances must be positive")
        if self.state not in STATE_NAMES:
            raise UsageError(f"unknown state {self.state!r}")
        if self.alpha is not None and not 0 < self.alpha <= 2 * math.pi:
            raise UsageError(f"opening angle {self.alpha!r} outside (0, 2pi]")
        if self.grid is not None:
            parse_grid(self.grid)
        if self.alphas is not None:
            parse_alphas(self.alphas)

    # -- derived -------------------------------------------------------
    @property
    def kind(self) -> str:
        return STATE_NAMES[self.state]

    @property
    def unit_scale(self) -> float:
        return HARTREE_EV if self.units == "ev" else 1.0

    def alpha_list(self) -> tuple[float, ...]:
        if self.alphas is not None:
            return parse_alphas(self.alphas)
        if self.alpha is not None:
            return (self.alpha,)
        raise UsageError("give --alpha or --alphas")

    def single_alpha(self) -> float:
        vals = self.alpha_list()
        if len(vals) != 1:
            raise UsageError("this command takes a single opening angle")
        return vals[0]

    def optimizer(self) -> OptimizerConfig:
        return OptimizerConfig(max_iterations=self.max_iterations, restarts=self.restarts,
                               seed=self.seed, objective_spread_tolerance=self.tol_opt)

    def final_rule(self):
        # angular-rule counterpart of the quadrature tolerance for final numbers
        return TIGHT_RULE if self.tol_quad <= 1e-10 else DEFAULT_RULE

    def echo(self) -> dict:
        return dataclasses.asdict(self)

    def result_hash(self) -> str:
        """Digest of everything that can change computed numbers."""
        d = {k: v for k, v in self.echo().items() if k not in ("out", "workers", "units")}
        d["version"] = __version__
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]


_CONFIG_KEYS = {f.name for f in dataclasses.fields(RunConfig)}
_INT_KEYS = {"seed", "restarts", "max_iterations", "workers"}
_FLOAT_KEYS = {"tol_quad", "tol_opt", "alpha"}


def read_config_file(path: str) -> dict:
    """Flat ``key = value`` file; ``[section]`` headers are allowed and ignored."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path!r}: {exc}") from None
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    cp.optionxform = str
    try:
        cp.read_string(text if text.lstrip().startswith("[") else "[run]\n" + text)
    except configparser.Error as exc:
        raise UsageError(f"config file {path!r}: {exc}") from None
    out = {}
    for sect in cp.sections():
        for key, val in cp.items(sect):
            k = key.strip().replace("-", "_")
            if k not in _CONFIG_KEYS:
                raise UsageError(f"unknown config key {key!r} in {path!r}")
            out[k] = _coerce(k, val.strip())
    return out


def _coerce(key, val):
    try:
        if key in _INT_KEYS:
            return int(val)
        if key in _FLOAT_KEYS:
            return float(val)
    except ValueError:
        raise UsageError(f"bad value {val!r} for {key}") from None
    return val


def build_config(ns: argparse.Namespace) -> RunConfig:
    values: dict = {}
    if getattr(ns, "config", None):
        values.update(read_config_file(ns.config))
    for key in _CONFIG_KEYS:
        v = getattr(ns, key, None)
        if v is not None:
            values[key] = v
    if not values.get("out"):
        values["out"] = os.environ.get(ENV_OUT) or DEFAULT_OUT
    return RunConfig(**values)


# ---------------------------------------------------------------------------
# run directory, manifest and cache


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = _dt.datetime.fromtimestamp(int(epoch), _dt.timezone.utc) if epoch else \
        _dt.datetime.now(_dt.timezone.utc)
    return t.strftime("%Y-%m-%dT%H:%M:%SZ")


def _json_clean(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k): _json_clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_clean(v) for v in obj]
    return obj


def dumps(obj) -> str:
    return json.dumps(_json_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


class RunDirectory:
    """Output root with an exclusive lock, file emission and manifest upkeep."""

    def __init__(self, root: str, command: str, config: RunConfig, argv: list[str]):
        self.root = Path(root)
        self.command = command
        self.config = config
        self.argv = argv
        self.written: list[str] = []
        self.extra: dict = {}
        self._fd = None

    def __enter__(self):
        self.root.mkdir(parents=True, exist_ok=True)
        if not os.access(self.root, os.W_OK):
            raise PermissionError(f"run directory {self.root} is not writable")
        self._fd = os.open(self.root, os.O_RDONLY)
        fcntl.flock(self._fd, fcntl.LOCK_EX)
        self.started = _timestamp()
        return self

    def __exit__(self, exc_type, exc, tb):
        try:
            self._write_manifest(ok=exc_type is None)
        finally:
            fcntl.flock(self._fd, fcntl.LOCK_UN)
            os.close(self._fd)

    def write_text(self, rel: str, text: str) -> Path:
        path = self.root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(path.name + ".tmp")
        with open(tmp, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
        if rel not in self.written:
            self.written.append(rel)
        return path

    def read_json(self, rel: str):
        path = self.root / rel
        if not path.exists():
            return None
        try:
            return json.loads(path.read_text())
        except (OSError, ValueError):
            return None

    def _write_manifest(self, ok: bool):
        path = self.root / MANIFEST
        try:
            man = json.loads(path.read_text()) if path.exists() else {}
        except ValueError:
            man = {}
        files = man.get("files", {})
        runs = man.get("runs", [])
        runs.append({
            "command": self.command,
            "argv": self.argv,
            "config": self.config.echo(),
            "config_hash": self.config.result_hash(),
            "started": self.started,
            "finished": _timestamp(),
            "status": "ok" if ok else "error",
            "outputs": sorted(self.written),
            "details": self.extra,
        })
        current = {}
        for p in sorted(self.root.rglob("*")):
            if not p.is_file() or p.name == MANIFEST or p.name.endswith(".tmp"):
                continue
            rel = p.relative_to(self.root).as_posix()
            prev = files.get(rel, {})
            entry = {"sha256": _sha256(p), "bytes": p.stat().st_size,
                     "command": prev.get("command", "unknown"),
                     "config_hash": prev.get("config_hash")}
            if rel in self.written:
                entry["command"] = self.command
                entry["config_hash"] = self.config.result_hash()
            current[rel] = entry
        man = {"tool": "wedgebound", "version": __version__, "files": current, "runs": runs}
        tmp = path.with_name(MANIFEST + ".tmp")
        tmp.write_text(dumps(man))
        os.replace(tmp, path)


class ResultCache:
    """Optimisation results keyed by (alpha, kind, config hash, seed, ground state).

    A hit is accepted only after one re-evaluation of the objective at the
    stored parameters reproduces the stored energy.
    """

    def __init__(self, run: RunDirectory, config: RunConfig):
        self.run = run
        self.config = config
        self.hits = 0
        self.misses = 0

    def _key(self, kind, alpha, ground):
        material = {"alpha": repr(float(alpha)), "kind": kind,
                    "config": self.config.result_hash(), "seed": self.config.seed,
                    "ground": ground.best_params.to_dict() if ground is not None else None}
        digest = hashlib.sha256(json.dumps(material, sort_keys=True).encode()).hexdigest()[:16]
        return f"cache/{kind}-{alpha:.6f}-{digest}.json", material

    def _valid(self, res: OptimizationResult) -> bool:
        try:
            e = state_energy(res.kind, res.best_params, res.alpha, res.ground_params,
                             self.config.final_rule()).total
        except Exception:
            return False
        return abs(e - res.best_energy.total) <= 1e-9 * abs(res.best_energy.total) + 1e-15

    def solve(self, kind, alpha, config: OptimizerConfig, ground=None) -> OptimizationResult:
        rel, material = self._key(kind, alpha, ground)
        stored = self.run.read_json(rel)
        if stored is not None and stored.get("key") == material:
            try:
                res = OptimizationResult.from_dict(stored["result"])
            except (KeyError, TypeError, ValueError):
                res = None
            if res is not None and self._valid(res):
                self.hits += 1
                return res
            log.warning("cache entry %s failed re-validation; recomputing", rel)
        self.misses += 1
        res = optimize_state(kind, alpha, config, ground=ground,
                             final_rule=self.config.final_rule())
        self.run.write_text(rel, dumps({"key": material, "result": res.to_dict()}))
        return res

    def chain(self, kind, alpha):
        """Result for ``kind``, computing the ground state first for the excited one."""
        cfg = self.config.optimizer()
        ground = self.solve("ground", alpha, cfg) if kind == "excited" else None
        return self.solve(kind, alpha, cfg, ground=ground)


# ---------------------------------------------------------------------------
# output helpers


def _csv_text(header, rows, preamble=()) -> str:
    buf = io.StringIO()
    for line in preamble:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(row)
    return buf.getvalue()


def _num(x) -> str:
    return repr(float(x)) if math.isfinite(x) else "nan"


def _tag(alpha: float) -> str:
    return f"{alpha:.6f}"


def _grid_files(run, stem, grid, value_name, scale, unit_label, extra_meta):
    header = ["r", "theta", "x", "y", value_name, "inside"]
    rows, cols = [], {h: [] for h in header}
    for r, th, x, y, v, ins in grid.rows():
        val = v * scale if ins else float("nan")
        row = [_num(r), _num(th), _num(x), _num(y), _num(val), "1" if ins else "0"]
        rows.append(row)
        for h, item in zip(header, (r, th, x, y, val, ins)):
            cols[h].append(item)
    pre = [f"alpha={grid.alpha!r} rad; r, x, y in bohr; theta in rad; "
           f"{value_name} in {unit_label}; exterior nodes hold nan and inside=0"]
    run.write_text(f"{stem}.csv", _csv_text(header, rows, pre))
    doc = {"alpha": grid.alpha, "units": {"length": "bohr", "angle": "rad",
                                          value_name: unit_label},
           "shape": [len(grid.r), len(grid.theta)], "columns": cols} | extra_meta
    run.write_text(f"{stem}.json", dumps(doc))


def _energy_summary(res: OptimizationResult) -> str:
    e = res.best_energy
    p = res.best_params
    lines = [
        f"state      {res.kind}",
        f"alpha      {res.alpha!r} rad",
        f"energy     {e.total!r} hartree = {e.total * HARTREE_EV!r} eV",
        f"kinetic    {e.kinetic!r} hartree",
        f"potential  {e.potential!r} hartree",
        f"virial     {e.virial_residual:.3e}",
        f"params     m={p.m!r} n={p.n!r} p={p.p!r} q={p.q!r}",
        f"boundary   {', '.join(k for k, v in res.boundary_active.items() if v) or 'none'}",
    ]
    if res.a is not None:
        lines.append(f"a          {res.a!r} bohr")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# commands


def cmd_potential(cfg: RunConfig, run: RunDirectory) -> int:
    nr, nt, rmax = parse_grid(cfg.grid or "64:64:40")
    if rmax is None:
        raise UsageError("potential needs an explicit rmax")
    unit = "eV" if cfg.units == "ev" else "hartree"
    for alpha in cfg.alpha_list():
        try:
            grid = potential_grid(WedgeGeometry(alpha), rmax, nr, nt, theta_span=2 * math.pi)
        except (ValueError, ArithmeticError) as exc:
            raise ComputeError(f"potential grid at alpha={alpha!r}: {exc}") from exc
        _grid_files(run, f"potential/alpha_{_tag(alpha)}", grid, "e_phi", cfg.unit_scale, unit, {})
    return EXIT_OK


def cmd_minimize(cfg: RunConfig, run: RunDirectory) -> int:
    alpha = cfg.single_alpha()
    cache = ResultCache(run, cfg)
    res = cache.chain(cfg.kind, alpha)
    doc = res.to_dict()
    stem = f"minimize/{res.kind}_alpha_{_tag(alpha)}"
    run.write_text(stem + ".json", dumps(doc))
    summary = _energy_summary(res)
    run.write_text(stem + ".txt", summary)
    run.extra["cache"] = {"hits": cache.hits, "misses": cache.misses}
    sys.stdout.write(summary)
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, run: RunDirectory) -> int:
    alphas = cfg.alpha_list()
    cache = ResultCache(run, cfg)
    try:
        records = sweep(alphas, cfg.optimizer(), solver=cache.solve)
    except OrderingError as exc:
        raise ComputeError(str(exc)) from exc
    run.write_text("sweep/sweep.csv", _csv_text(SWEEP_COLUMNS, [r.csv_row() for r in records]))
    run.write_text("sweep/sweep.json", dumps({
        "alphas": list(alphas), "records": [r.to_dict() for r in records],
        "config_hash": cfg.result_hash(), "seed": cfg.seed, "version": __version__}))
    run.extra.update(timings={repr(r.alpha): round(r.seconds, 3) for r in records},
                     cache={"hits": cache.hits, "misses": cache.misses},
                     seed=cfg.seed, config_hash=cfg.result_hash())
    ok = sum(r.ok for r in records)
    for r in records:
        sys.stdout.write(f"alpha={r.alpha:.6f}  E0={r.E0 * HARTREE_EV:.6f} eV  "
                         f"E1={r.E1 * HARTREE_EV:.6f} eV  E2={r.E2 * HARTREE_EV:.6f} eV  "
                         f"{r.status}\n")
    return EXIT_OK if ok else EXIT_COMPUTE


def cmd_density(cfg: RunConfig, run: RunDirectory) -> int:
    alpha = cfg.single_alpha()
    res = ResultCache(run, cfg).chain(cfg.kind, alpha)
    state = res.state()
    nr, nt, rmax = parse_grid(cfg.grid or "160:160:auto")
    if rmax is None:
        rmax = default_extent(state)
    grid, integral = density_grid(state, rmax, nr, nt)
    stem = f"density/{res.kind}_alpha_{_tag(alpha)}"
    meta = {"grid_integral": integral, "rmax": rmax, "state": state.to_dict()}
    _grid_files(run, stem, grid, "density", 1.0, "bohr^-2", meta)
    run.extra.update(grid_integral=integral, rmax=rmax)
    sys.stdout.write(f"{res.kind} alpha={alpha!r}: grid integral of |psi|^2 = {integral:.6f} "
                     f"(rmax={rmax:.4g} bohr)\n")
    if integral < 0.98:
        log.warning("the grid holds only %.3g of the norm; the state extends beyond rmax", integral)
    return EXIT_OK


def cmd_splitting(cfg: RunConfig, run: RunDirectory) -> int:
    cache = ResultCache(run, cfg)
    u = "eV" if cfg.units == "ev" else "au"
    sc = cfg.unit_scale
    header = ["alpha_rad", f"gap01_{u}", f"splitting_eq2_{u}", f"splitting_closed_form_{u}",
              "upper_mass", "lower_mass", f"current_integrated_{u}", f"current_volume_{u}",
              f"current_line_{u}", f"current_outer_{u}"]
    rows = []
    for alpha in cfg.alpha_list():
        g = cache.chain("ground", alpha)
        a = cache.chain("antisymmetric", alpha)
        psi_l = single_well_from_pair(g, a)
        split = splitting_eq2(psi_l)
        nr, nt, rmax = parse_grid(cfg.grid or "200:120:auto")
        if rmax is None:
            rmax = default_extent(g.state(), cap=200.0)
        cr = current_residual(psi_l, a.state(), g.best_energy.total, a.best_energy.total,
                              (nr, nt, rmax))
        gap = a.best_energy.total - g.best_energy.total
        rows.append([_num(alpha), _num(gap * sc), _num(split * sc),
                     _num(pair_splitting_closed_form(psi_l) * sc), _num(psi_l.upper_mass),
                     _num(psi_l.lower_mass), _num(cr.integrated * sc), _num(cr.volume_term * sc),
                     _num(cr.line_term * sc), _num(cr.outer_term * sc)])
    run.write_text("splitting/splitting.csv", _csv_text(header, rows))
    sys.stdout.write(_csv_text(header, rows))
    return EXIT_OK


def cmd_limits_check(cfg: RunConfig, run: RunDirectory, fault: str | None = None) -> int:
    results, artifacts = run_limit_checks(cfg.tol_quad, fault=fault)
    header = ["check", "value", "expected", "deviation", "tolerance", "margin", "verdict"]
    rows = [[r.name, _num(r.value), _num(r.expected), _num(r.deviation), _num(r.tolerance),
             _num(r.margin), "PASS" if r.passed else "FAIL"] for r in results]
    run.write_text("limits/limits_check.csv", _csv_text(header, rows))
    run.write_text("limits/limits_check.json", dumps([r.to_dict() for r in results]))
    if artifacts:
        run.write_text("limits/e0_formula_discrepancy.json", dumps(artifacts))
    width = max(len(r.name) for r in results)
    for r in results:
        sys.stdout.write(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<{width}}  "
                         f"dev={r.deviation:.3e}  tol={r.tolerance:.1e}  margin={r.margin:.3e}\n")
    failed = [r for r in results if not r.passed]
    if failed:
        for r in failed:
            sys.stderr.write(f"check failed: {r.name}: got {r.value!r}, expected {r.expected!r} "
                             f"(deviation {r.deviation:.3e} > tolerance {r.tolerance:.1e})\n")
        return EXIT_CHECK
    return EXIT_OK


COMMANDS = {
    "potential": cmd_potential,
    "minimize": cmd_minimize,
    "sweep": cmd_sweep,
    "density": cmd_density,
    "splitting": cmd_splitting,
    "limits-check": cmd_limits_check,
}


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _global_flags(p: argparse.ArgumentParser):
    S = argparse.SUPPRESS
    p.add_argument("--config", default=S, help="key=value configuration file")
    p.add_argument("--out", default=S, help=f"run directory (default ${ENV_OUT} or ./{DEFAULT_OUT})")
    p.add_argument("--units", choices=("au", "ev"), default=S, help="energy units of outputs")
    p.add_argument("--seed", type=int, default=S, help="seed for the random restarts")
    p.add_argument("--restarts", type=int, default=S, help="number of simplex restarts")
    p.add_argument("--tol-quad", dest="tol_quad", type=float, default=S,
                   help="relative quadrature tolerance")
    p.add_argument("--tol-opt", dest="tol_opt", type=float, default=S,
                   help="objective spread tolerance of the simplex (hartree)")
    p.add_argument("--grid", default=S, help="nr:ntheta:rmax")
    p.add_argument("--alphas", default=S, help="start:stop:step or a comma list (rad)")
    p.add_argument("--alpha", type=float, default=S, help="opening angle (rad)")
    p.add_argument("--state", default=S, help="0|1|2 or ground|antisymmetric|excited")
    p.add_argument("--workers", type=int, default=S, help=argparse.SUPPRESS)
    p.add_argument("-v", "--verbose", action="store_true", default=S)


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wedgebound",
                     description="Variational surface states of a charge in a conducting wedge.")
    parser.add_argument("--version", action="version", version=f"wedgebound {__version__}")
    _global_flags(parser)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    helps = {
        "potential": "image potential on a polar grid",
        "minimize": "optimise one level at one opening angle",
        "sweep": "optimise all three levels over a range of opening angles",
        "density": "probability density of an optimised state on a polar grid",
        "splitting": "pair splitting estimate and current-identity diagnostic",
        "limits-check": "run the battery of analytic limits and cross-checks",
    }
    for name, text in helps.items():
        sp = sub.add_parser(name, help=text)
        _global_flags(sp)
        if name == "limits-check":
            sp.add_argument("--inject-fault", dest="inject_fault", default=None,
                            help=argparse.SUPPRESS)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        ns = make_parser().parse_args(argv)
        if not ns.command:
            raise UsageError("a command is required: " + ", ".join(COMMANDS))
        logging.basicConfig(level=logging.INFO if getattr(ns, "verbose", False) else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        cfg = build_config(ns)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    func = COMMANDS[ns.command]
    try:
        with RunDirectory(cfg.out, ns.command, cfg, argv) as run:
            t0 = time.perf_counter()
            if ns.command == "limits-check":
                code = func(cfg, run, getattr(ns, "inject_fault", None))
            else:
                code = func(cfg, run)
            run.extra["seconds"] = round(time.perf_counter() - t0, 3)
        return code
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    except OSError as exc:
        sys.stderr.write(f"I/O error: {exc}\n")
        return EXIT_IO
    except Exception as exc:  # computation failures of any kind
        sys.stderr.write(f"computation failed: {type(exc).__name__}: {exc}\n")
        return EXIT_COMPUTE
