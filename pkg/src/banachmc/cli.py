"""Config-driven command line runner.

Usage::

    banachmc rates --config table1.ini --out table1.csv
    banachmc slmc --experiment slmc_bvp --seed 3 --out slmc.csv
    banachmc mlmc --out mlmc.csv --threads 4
    banachmc moment2 --experiment moment2_fa --out m2.csv
    banachmc injective-norm --out inj.csv

Configs are INI files with sections [experiment], [model], [sampling] and
[output]; see :func:`load_config`.  Every run writes a CSV with one header
row and a JSON sidecar (``<out>.json``) holding the echoed config, its hash
and fitted quantities.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import dataclasses
import hashlib
import io
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import experiments as ex
from .allocation import RateModel
from .errors import InvalidArgumentError
from .models import BvpModel, FaModel, fa_second_moment_admissible, fa_second_moment_q_hat
from .rademacher import conjugate

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "RunRecord",
    "SWEEP_COLUMNS",
    "RATE_COLUMNS",
    "INJECTIVE_COLUMNS",
    "load_config",
    "parse_config",
    "run",
    "emit_csv",
    "parse_csv",
    "plot_data",
    "main",
]

SWEEP_COLUMNS = ("eps", "level_L", "M_list", "err_measured", "err_bound", "cost_units",
                 "wall_seconds", "r_used", "case_label")
RATE_COLUMNS = ("param_p", "param_q", "M", "err", "fitted_rate", "theory_rate")
INJECTIVE_COLUMNS = ("index", "norm", "discrete_product", "seminorm_product", "rel_gap_discrete",
                     "rel_gap_seminorm", "iterations", "converged")
_COLUMNS = {"sweep": SWEEP_COLUMNS, "rates": RATE_COLUMNS, "injective": INJECTIVE_COLUMNS}

EXPERIMENTS = {
    "rates": ("rates_table1", "rates_table2", "rates_table3", "rates_table4"),
    "slmc": ("slmc_bvp", "slmc_fa"),
    "mlmc": ("mlmc_fa",),
    "moment2": ("moment2_bvp", "moment2_fa"),
    "injective-norm": ("injective_norm",),
}
_KIND = {name: ("rates" if name.startswith("rates") else "injective" if name == "injective_norm" else "sweep")
         for names in EXPERIMENTS.values() for name in names}

# replicate counts stated for the full-scale runs
_PAPER_K = {"rates_table1": 50, "rates_table2": 10000, "rates_table3": 10000, "rates_table4": 1000,
            "slmc_bvp": 30, "slmc_fa": 30}


class ConfigError(InvalidArgumentError):
    """Invalid configuration; ``field`` names the offending entry."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass
class ExperimentConfig:
    experiment: str
    p: Optional[float] = None
    q: Optional[float] = None
    q_tilde: Optional[float] = None
    eta: Optional[float] = None
    schedules: Tuple[str, ...] = ()
    M: Tuple[int, ...] = ()
    K: Optional[int] = None
    seed: int = 0
    eps: Tuple[float, ...] = ()
    r_conj: Optional[float] = None
    plan_only: bool = False
    n_h: int = 64
    ref_level: int = 8
    level_min: int = 4
    n_cells: int = 16
    count: int = 50
    restarts: int = 8
    deep_levels: Tuple[int, ...] = ()
    out: Optional[str] = None

    def echo(self) -> Dict[str, object]:
        d = dataclasses.asdict(self)
        d.pop("out")
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in d.items()}

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.echo(), sort_keys=True).encode()).hexdigest()[:16]


# --------------------------------------------------------------- config

_DEFAULT_EPS = {
    "slmc_bvp": tuple(2.0 ** -k for k in range(3, 8)),
    "slmc_fa": tuple(2.0 ** -k for k in range(2, 7)),
    "mlmc_fa": tuple(2.0 ** -k for k in range(2, 7)),
    "moment2_bvp": tuple(2.0 ** -k for k in range(2, 5)),
    "moment2_fa": tuple(2.0 ** -k for k in range(1, 5)),
}
_DEFAULT_K = {"rates_table1": 50, "rates_table2": 1000, "rates_table3": 1000, "rates_table4": 1000,
              "slmc_bvp": 30, "slmc_fa": 30, "mlmc_fa": 10, "moment2_bvp": 5, "moment2_fa": 5}
_DEFAULT_SCHEDULE = {"slmc_bvp": ("hilbert", "type_p", "dim_dep"), "slmc_fa": ("minkowski",),
                     "mlmc_fa": ("minkowski",), "moment2_fa": ("minkowski",),
                     "moment2_bvp": ("type_p",)}


def _floats(text: str) -> Tuple[float, ...]:
    return tuple(float(t) for t in text.replace(";", ",").split(",") if t.strip())


def _ints(text: str) -> Tuple[int, ...]:
    out = []
    for t in text.replace(";", ",").split(","):
        t = t.strip()
        if t:
            v = float(t)
            if v != int(v):
                raise ValueError(f"{t} is not an integer")
            out.append(int(v))
    return tuple(out)


def _get(cp, section, key, conv, default=None):
    if not cp.has_option(section, key):
        return default
    raw = cp.get(section, key).strip()
    if raw == "" or raw.lower() == "auto":
        return default
    try:
        return conv(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}", f"cannot parse {raw!r} ({exc})") from None


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def parse_config(text: str) -> ExperimentConfig:
    """Parse INI text into a validated config (defaults filled in)."""
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("config", str(exc)) from None
    name = _get(cp, "experiment", "name", str)
    if name is None:
        raise ConfigError("[experiment] name", "missing")
    cfg = ExperimentConfig(
        experiment=name,
        p=_get(cp, "model", "p", float),
        q=_get(cp, "model", "q", float),
        q_tilde=_get(cp, "model", "q_tilde", float),
        eta=_get(cp, "model", "eta", float),
        schedules=_get(cp, "sampling", "schedule",
                       lambda s: tuple(t.strip() for t in s.split(",") if t.strip()), ()),
        M=_get(cp, "sampling", "M", _ints, ()),
        K=_get(cp, "sampling", "K", int),
        seed=_get(cp, "sampling", "seed", int, 0),
        eps=_get(cp, "sampling", "eps", _floats, ()),
        r_conj=_get(cp, "sampling", "r_conj", float),
        plan_only=_get(cp, "sampling", "plan_only", _bool, False),
        n_h=_get(cp, "sampling", "n_h", int, 64),
        ref_level=_get(cp, "sampling", "ref_level", int, 8),
        level_min=_get(cp, "sampling", "level_min", int, 4),
        n_cells=_get(cp, "sampling", "n_cells", int, 16),
        count=_get(cp, "sampling", "count", int, 50),
        restarts=_get(cp, "sampling", "restarts", int, 8),
        deep_levels=_get(cp, "sampling", "deep_levels", _ints, ()),
        out=_get(cp, "output", "path", str),
    )
    return validate(cfg)


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from None


def validate(cfg: ExperimentConfig) -> ExperimentConfig:
    """Check ranges and fill experiment defaults; raises ConfigError naming the field."""
    name = cfg.experiment
    if name not in _KIND:
        raise ConfigError("[experiment] name", f"unknown experiment {name!r}")
    if cfg.K is None:
        cfg.K = _DEFAULT_K.get(name, 1)
    if cfg.K < 1:
        raise ConfigError("[sampling] K", "must be a positive integer")
    if cfg.seed < 0 or cfg.seed >= 2 ** 64:
        raise ConfigError("[sampling] seed", "must lie in [0, 2^64)")
    if cfg.M:
        if any(m < 1 for m in cfg.M) or any(b <= a for a, b in zip(cfg.M, cfg.M[1:])):
            raise ConfigError("[sampling] M", "must be increasing positive integers")
    if not cfg.eps and name in _DEFAULT_EPS:
        cfg.eps = _DEFAULT_EPS[name]
    if cfg.eps:
        e = cfg.eps
        if any(v <= 0 or v > 0.5 for v in e):
            raise ConfigError("[sampling] eps", "tolerances must lie in (0, 1/2]")
        if any(b >= a for a, b in zip(e, e[1:])):
            raise ConfigError("[sampling] eps", "tolerances must be decreasing")
    if not cfg.deep_levels and name in ("mlmc_fa", "moment2_fa"):
        cfg.deep_levels = tuple(range(30, 37))
    if any(l < cfg.level_min for l in cfg.deep_levels):
        raise ConfigError("[sampling] deep_levels", "levels must be at least level_min")
    if not cfg.schedules and name in _DEFAULT_SCHEDULE:
        cfg.schedules = _DEFAULT_SCHEDULE[name]
    for s in cfg.schedules:
        if s not in ex.SCHEDULES:
            raise ConfigError("[sampling] schedule", f"unknown label {s!r}")
    allowed = {"slmc_bvp": {"hilbert", "type_p", "dim_dep"}, "moment2_bvp": {"hilbert", "type_p", "dim_dep"},
               "slmc_fa": {"hilbert", "minkowski"}, "mlmc_fa": {"minkowski"},
               "moment2_fa": {"minkowski"}}.get(name)
    if allowed is not None and not set(cfg.schedules) <= allowed:
        raise ConfigError("[sampling] schedule",
                          f"{sorted(set(cfg.schedules) - allowed)} not consistent with {name}")
    try:
        _validate_model(cfg)
    except InvalidArgumentError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("[model]", str(exc)) from None
    return cfg


def _need(cfg, attr, default):
    if getattr(cfg, attr) is None:
        setattr(cfg, attr, default)


def _validate_model(cfg: ExperimentConfig):
    name = cfg.experiment
    if name == "rates_table1":
        if cfg.p is not None:
            BvpModel(cfg.p, cfg.eta)
    elif name in ("rates_table2", "rates_table3"):
        if (cfg.p is None) != (cfg.q is None):
            raise ConfigError("[model] p", "give both p and q, or neither for the whole table")
        if name == "rates_table3":
            _need(cfg, "eta", 1.1)
        if cfg.p is not None:
            FaModel(cfg.p, cfg.q, cfg.eta)
    elif name == "rates_table4":
        if (cfg.p is None) != (cfg.q is None):
            raise ConfigError("[model] p", "give both p and q, or neither for the whole table")
        if cfg.eta is not None and cfg.eta != 1.0:
            raise ConfigError("[model] eta", "the second moment uses eta = 1")
        if cfg.p is not None and not fa_second_moment_admissible(cfg.p, cfg.q):
            raise ConfigError("[model] q", f"(p, q) = ({cfg.p}, {cfg.q}) violates 1/(2q) + 1/p > 1")
    elif name in ("slmc_bvp", "moment2_bvp"):
        _need(cfg, "p", 1.5)
        BvpModel(cfg.p, cfg.eta)
    elif name in ("slmc_fa", "mlmc_fa"):
        _need(cfg, "p", 1.0)
        _need(cfg, "q", 1.5)
        _need(cfg, "eta", 1.1)
        FaModel(cfg.p, cfg.q, cfg.eta)
        if cfg.q_tilde is not None and cfg.q_tilde < cfg.q:
            raise ConfigError("[model] q_tilde", "must be at least q")
        if name == "mlmc_fa" and cfg.r_conj is not None:
            hi = conjugate(cfg.q)
            if not 1.0 < cfg.r_conj <= hi + 1e-12:
                raise ConfigError("[sampling] r_conj", f"must lie in (1, q'] = (1, {hi:g}]")
    elif name == "moment2_fa":
        _need(cfg, "p", 1.0)
        _need(cfg, "q", 1.5)
        if cfg.eta is not None and cfg.eta != 1.0:
            raise ConfigError("[model] eta", "the second moment uses eta = 1")
        if not fa_second_moment_admissible(cfg.p, cfg.q):
            raise ConfigError("[model] q", f"(p, q) = ({cfg.p}, {cfg.q}) violates 1/(2q) + 1/p > 1")
    elif name == "injective_norm":
        _need(cfg, "p", 1.5)
        if not 1.0 < cfg.p < math.inf:
            raise ConfigError("[model] p", "must exceed 1")
        if cfg.n_cells < 1 or cfg.count < 1:
            raise ConfigError("[sampling] n_cells", "n_cells and count must be positive")


# --------------------------------------------------------------- records

@dataclass
class RunRecord:
    """Rows of one run plus provenance; rows are dicts keyed by the CSV columns."""

    experiment: str
    kind: str
    rows: List[Dict[str, object]] = field(default_factory=list)
    config: Dict[str, object] = field(default_factory=dict)
    config_hash: str = ""
    fits: Dict[str, float] = field(default_factory=dict)

    @property
    def columns(self) -> Tuple[str, ...]:
        return _COLUMNS[self.kind]


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (tuple, list)):
        return ";".join(str(int(m)) for m in v)
    return str(v)


def emit_csv(record: RunRecord, path) -> None:
    """Header row then one row per record row; floats use repr so parsing is exact."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(record.columns)
    for row in record.rows:
        w.writerow([_fmt(row[c]) for c in record.columns])
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    except OSError as exc:
        raise InvalidArgumentError(f"cannot write {path}: {exc.strerror}") from None


_PARSERS = {
    "eps": float, "level_L": int, "M_list": lambda s: tuple(int(t) for t in s.split(";") if t),
    "err_measured": float, "err_bound": float, "cost_units": float, "wall_seconds": float,
    "r_used": float, "case_label": str,
    "param_p": float, "param_q": float, "M": int, "err": float, "fitted_rate": float,
    "theory_rate": float,
    "index": int, "norm": float, "discrete_product": float, "seminorm_product": float,
    "rel_gap_discrete": float, "rel_gap_seminorm": float, "iterations": int,
    "converged": lambda s: s == "true",
}


def parse_csv(path, experiment: str = "") -> RunRecord:
    """Inverse of :func:`emit_csv` (rows only; provenance lives in the sidecar)."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise InvalidArgumentError(f"{path} is empty")
    header = tuple(rows[0])
    kind = next((k for k, cols in _COLUMNS.items() if cols == header), None)
    if kind is None:
        raise InvalidArgumentError(f"unrecognized header in {path}: {header}")
    out = [{c: _PARSERS[c](v) for c, v in zip(header, r)} for r in rows[1:]]
    return RunRecord(experiment, kind, out)


def write_sidecar(record: RunRecord, path) -> None:
    payload = {"experiment": record.experiment, "config": record.config,
               "config_hash": record.config_hash, "fits": record.fits}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")


def plot_data(record: RunRecord) -> Dict[str, dict]:
    """Series for plotting, keyed by case label (sweeps) or (p, q) (rates).

    Sweeps give error against eps with the identity reference line and cost
    against eps with a reference line of slope ``fits['cost_exponent']``
    (when present) through the first point.  Rate records give error against
    M with the theoretical slope through the first point.
    """
    series: Dict[str, dict] = {}
    if record.kind == "sweep":
        for label in dict.fromkeys(r["case_label"] for r in record.rows):
            rows = [r for r in record.rows if r["case_label"] == label]
            eps = np.array([r["eps"] for r in rows])
            cost = np.array([r["cost_units"] for r in rows])
            s = {"x": eps, "error": np.array([r["err_measured"] for r in rows]),
                 "bound": np.array([r["err_bound"] for r in rows]), "reference": eps.copy(),
                 "cost": cost, "time": np.array([r["wall_seconds"] for r in rows])}
            xp = record.fits.get("cost_exponent")
            if xp is not None and len(rows):
                s["cost_reference"] = cost[0] * (eps / eps[0]) ** (-xp)
            series[label] = s
    elif record.kind == "rates":
        for key in dict.fromkeys((r["param_p"], r["param_q"]) for r in record.rows):
            rows = [r for r in record.rows if (r["param_p"], r["param_q"]) == key]
            M = np.array([r["M"] for r in rows], dtype=float)
            err = np.array([r["err"] for r in rows])
            th = rows[0]["theory_rate"]
            series[f"p={key[0]:g},q={key[1]:g}"] = {
                "x": M, "error": err, "reference": err[0] * (M / M[0]) ** (-th),
                "fitted_rate": rows[0]["fitted_rate"], "theory_rate": th}
    else:
        series["injective"] = {"x": np.array([r["index"] for r in record.rows]),
                               "gap": np.array([r["rel_gap_discrete"] for r in record.rows])}
    return series


# --------------------------------------------------------------- running

def _sweep_rows(res: ex.SweepResult) -> List[dict]:
    return [dataclasses.asdict(r) for r in res.rows]


def _rate_rows(st: ex.RateStudy) -> List[dict]:
    return [{"param_p": st.p, "param_q": st.q, "M": int(m), "err": float(e),
             "fitted_rate": st.fitted_rate, "theory_rate": st.theory_rate}
            for m, e in zip(st.M, st.errors)]


def run(cfg: ExperimentConfig, threads: int = 1, timing: bool = False) -> RunRecord:
    """Execute a validated config and return its record."""
    name = cfg.experiment
    rec = RunRecord(name, _KIND[name], config=cfg.echo(), config_hash=cfg.digest())
    kw = dict(K=cfg.K, seed=cfg.seed, threads=threads)
    if name == "rates_table1":
        ps = (cfg.p,) if cfg.p is not None else ex.TABLE1
        for p in ps:
            st = ex.bvp_rates(p, cfg.M or ex.TABLE_M, eta=cfg.eta, **kw)
            rec.rows += _rate_rows(st)
    elif name in ("rates_table2", "rates_table3"):
        pairs = ((cfg.p, cfg.q),) if cfg.p is not None else (ex.TABLE2 if name == "rates_table2" else ex.TABLE3)
        for p, q in pairs:
            st = ex.fa_rates(p, q, cfg.eta, cfg.M or ex.TABLE_M, label=name, **kw)
            rec.rows += _rate_rows(st)
    elif name == "rates_table4":
        pairs = ((cfg.p, cfg.q),) if cfg.p is not None else ex.TABLE4
        for p, q in pairs:
            st = ex.fa_moment2_rates(p, q, cfg.M or ex.TABLE4_M, n_h=cfg.n_h, **kw)
            rec.rows += _rate_rows(st)
    elif name == "slmc_bvp":
        fit = ex.bvp_bias_fit(cfg.p, cfg.eta)
        rec.fits.update(C_alpha=fit[0], alpha=fit[1])
        for s in cfg.schedules:
            res = ex.slmc_bvp_sweep(cfg.p, s, cfg.eps, eta=cfg.eta, fit=fit, timing=timing, **kw)
            rec.rows += _sweep_rows(res)
    elif name == "slmc_fa":
        fit = ex.fa_bias_fit(cfg.p, cfg.q, cfg.eta)
        rec.fits.update(C_alpha=fit[0], alpha=fit[1])
        for s in cfg.schedules:
            res = ex.slmc_fa_sweep(cfg.p, cfg.q, cfg.eps, cfg.eta, s, fit=fit, timing=timing, **kw)
            rec.rows += _sweep_rows(res)
    elif name == "mlmc_fa":
        res = ex.mlmc_fa_sweep(cfg.p, cfg.q, cfg.eps, cfg.eta, r_conj=cfg.r_conj, q_tilde=cfg.q_tilde,
                               level_min=cfg.level_min, plan_only=cfg.plan_only, timing=timing, **kw)
        rec.rows += _sweep_rows(res)
        rec.fits.update(C_alpha=res.C_alpha, alpha=res.alpha, cost_exponent=res.cost_exponent)
        _cost_fits(rec, res, cfg)
    elif name == "moment2_fa":
        fit = ex.fa_moment2_fit(cfg.p, cfg.q)
        res = ex.moment2_fa_sweep(cfg.p, cfg.q, cfg.eps, fit, r_conj=cfg.r_conj, level_min=cfg.level_min,
                                  plan_only=cfg.plan_only, timing=timing, **kw)
        rec.rows += _sweep_rows(res)
        rec.fits.update(C_alpha=fit.C_alpha, alpha=fit.alpha, b0=fit.b0, b1=fit.b1, C_beta=fit.C_beta,
                        cost_exponent=res.cost_exponent)
        _cost_fits(rec, res, cfg)
    elif name == "moment2_bvp":
        for s in cfg.schedules:
            res = ex.moment2_bvp_sweep(cfg.p, s, cfg.eps, eta=cfg.eta, ref_level=cfg.ref_level,
                                       restarts=cfg.restarts, timing=timing, **kw)
            rec.rows += _sweep_rows(res)
            rec.fits.update(C_alpha=res.C_alpha, alpha=res.alpha)
    elif name == "injective_norm":
        rec.rows = ex.injective_norm_check(cfg.p, cfg.n_cells, cfg.count, cfg.restarts, cfg.seed)
    return rec


def _cost_fits(rec: RunRecord, res: ex.SweepResult, cfg: ExperimentConfig):
    eps = [r.eps for r in res.rows]
    cost = [r.cost_units for r in res.rows]
    if len(eps) >= 2:
        rec.fits["cost_slope"] = ex.fit_cost_slope(eps, cost)
    if cfg.deep_levels:
        if cfg.experiment == "mlmc_fa":
            model = FaModel(cfg.p, cfg.q, cfg.eta)
            rate = ex.fa_rate_model(model, res.C_alpha, cfg.level_min)
            q_hat = model.q_hat if cfg.q_tilde is None else cfg.q_tilde
        else:
            fit = rec.fits
            rate = RateModel(alpha=fit["alpha"], gamma=2.0, C_alpha=fit["C_alpha"], b0=fit["b0"],
                             b1=fit["b1"], level_min=cfg.level_min)
            q_hat = fa_second_moment_q_hat(cfg.p, cfg.q)
        plans = ex.mlmc_cost_sweep(rate, cfg.q, q_hat, cfg.deep_levels, cfg.r_conj)
        rec.fits["deep_cost_slope"] = ex.fit_cost_slope([pl.eps for pl in plans],
                                                        [pl.predicted_cost for pl in plans])


# --------------------------------------------------------------- entry point

def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="banachmc", description="Monte Carlo experiments in L^p and W^{1,p}.")
    sub = ap.add_subparsers(dest="command", required=True)
    for cmd, names in EXPERIMENTS.items():
        sp = sub.add_parser(cmd, help=f"run one of: {', '.join(names)}")
        sp.add_argument("--config", help="INI config file")
        sp.add_argument("--experiment", choices=names, help="experiment when no config is given")
        sp.add_argument("--seed", type=int, help="base seed (overrides the config)")
        sp.add_argument("--out", help="CSV output path (overrides the config)")
        sp.add_argument("--threads", type=int, default=1, help="worker threads for replicates")
        sp.add_argument("--timing", action="store_true",
                        help="record wall-clock seconds (output is then not byte-reproducible)")
        sp.add_argument("--paper-scale", action="store_true",
                        help="use the full replicate counts; slow")
        if cmd == "rates":
            sp.add_argument("--table", type=int, choices=(1, 2, 3, 4), help="shorthand for rates_tableN")
        if cmd in ("mlmc", "moment2"):
            sp.add_argument("--plan-only", action="store_true", help="compute plans and costs only")
            sp.add_argument("--r-conj", type=float, help="fix r' instead of optimizing it")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.config:
            cfg = load_config(args.config)
            if cfg.experiment not in EXPERIMENTS[args.command]:
                raise ConfigError("[experiment] name",
                                  f"{cfg.experiment!r} does not belong to the {args.command} command")
        else:
            name = args.experiment
            if args.command == "rates" and getattr(args, "table", None):
                name = f"rates_table{args.table}"
            name = name or EXPERIMENTS[args.command][0]
            cfg = validate(ExperimentConfig(experiment=name))
        if args.seed is not None:
            if args.seed < 0 or args.seed >= 2 ** 64:
                raise ConfigError("--seed", "must lie in [0, 2^64)")
            cfg.seed = args.seed
        if getattr(args, "plan_only", False):
            cfg.plan_only = True
        if getattr(args, "r_conj", None) is not None:
            cfg.r_conj = args.r_conj
            validate(cfg)
        if args.paper_scale and cfg.experiment in _PAPER_K:
            cfg.K = _PAPER_K[cfg.experiment]
        if args.threads < 1:
            raise ConfigError("--threads", "must be at least 1")
        out = args.out or cfg.out or f"{cfg.experiment}.csv"
        rec = run(cfg, threads=args.threads, timing=args.timing)
        emit_csv(rec, out)
        write_sidecar(rec, out + ".json")
    except InvalidArgumentError as exc:
        print(f"banachmc: error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {len(rec.rows)} rows to {out}")
    for k, v in rec.fits.items():
        print(f"  {k} = {v:.6g}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
