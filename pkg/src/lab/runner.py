"""Experiment orchestration: image-dimension runs, condition checks and report persistence"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Union

import numpy as np

from src.lab.boxdim import (
    BoxCountCurve,
    DimensionEstimate,
    box_count,
    default_ladder,
    estimate_box_dimensions,
    predicted_image_dimension,
)
from src.lab.conditions import (
    MClassSpec,
    brownian_ball_probability,
    check_a1,
    check_ball_bounds,
    check_M_class,
    check_moment_bound,
    check_pruitt,
    check_self_similarity,
    delay_hitting_shape,
    estimate_hitting_probability,
    hitting_probability_bound,
    verify_ottaviani,
)
from src.lab.config import CHECK_NAMES, CheckBlock, ExperimentConfig, Fields
from src.lab.covering import CoverRow, covering_statistics
from src.lab.errors import ConfigError, PreconditionError
from src.lab.montecarlo import BOOTSTRAP_REPS, allowance, bootstrap_interval, ordered_map
from src.lab.paths import simulate
from src.lab.processes import BrownianMotion, ProcessSpec, StableLike, describe, is_space_homogeneous, symbol_of
from src.lab.reports import BoundCheckReport, aggregate, json_safe
from src.lab.rng import RngStream
from src.lab.symbols import GrowthConditionSpec, check_growth_condition
from src.lab.timesets import DyadicTimeSet, image_points, restrict_to_grid, set_summary
from src.settings import default_threads
from src.storage.path_store import DUMP_SUFFIX, write_path_dump
from src.storage.report_store import SCHEMA_VERSION, ReportStore, config_hash

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VIOLATIONS = 1
EXIT_CONFIG = 2


@dataclass
class DimensionRow:
    """Measured against predicted image dimension for one time set."""

    label: str
    n_cells: int
    analytic_dim: Optional[float]
    predicted: Optional[float]
    H: float
    dim: int
    regime_ok: bool
    measured: float
    ci_lo: float
    ci_hi: float
    iqr: float
    lower: float
    upper: float
    per_path: List[float]
    flags: List[str] = field(default_factory=list)
    passed: Optional[bool] = None

    def to_dict(self) -> Dict[str, Any]:
        return json_safe(self.__dict__)


@dataclass
class DimensionReport:
    name: str
    process: Dict[str, Any]
    H: Optional[float]
    seed: int
    tolerance: float
    config_sha256: str
    rows: List[DimensionRow] = field(default_factory=list)
    curves: Dict[str, List[BoxCountCurve]] = field(default_factory=dict)
    checks: List[BoundCheckReport] = field(default_factory=list)
    covering: List[CoverRow] = field(default_factory=list)
    sets: List[Dict[str, Any]] = field(default_factory=list)
    generated_at: str = ""

    @property
    def passed(self) -> bool:
        return all(r.passed is not False for r in self.rows) and all(c.passed for c in self.checks)

    @property
    def exit_code(self) -> int:
        return EXIT_OK if self.passed else EXIT_VIOLATIONS

    def to_dict(self) -> Dict[str, Any]:
        return json_safe({
            "schema": SCHEMA_VERSION,
            "name": self.name,
            "generated_at": self.generated_at,
            "config_sha256": self.config_sha256,
            "seed": self.seed,
            "process": self.process,
            "H": self.H,
            "tolerance": self.tolerance,
            "sets": self.sets,
            "dimensions": [r.to_dict() for r in self.rows],
            "checks": aggregate(self.checks),
            "covering": [c.to_dict() for c in self.covering],
            "passed": self.passed,
        })


# ---------------------------------------------------------------------------
# Dimension experiment
# ---------------------------------------------------------------------------

def _set_key(i: int, E: DyadicTimeSet) -> str:
    return f"{i:02d}-{E.label or 'set'}"


def _summarize_set(key: str, E: DyadicTimeSet, estimates: List[Optional[tuple]], H: float, d: int,
                   tolerance: float, stream: RngStream) -> DimensionRow:
    regime_ok = H * d >= 1.0
    predicted = predicted_image_dimension(E.analytic_dim, H, d) if E.analytic_dim is not None else None
    flags: List[str] = [] if regime_ok else ["regime:Hd<1"]
    measured_paths = [item for item in estimates if item is not None]
    if not measured_paths:
        return DimensionRow(key, E.n_cells, E.analytic_dim, predicted, H, d, regime_ok, math.nan, math.nan,
                            math.nan, math.nan, math.nan, math.nan, [], flags + ["empty-set"], None)

    central = np.array([est.central.slope for _, est in measured_paths])
    lower = np.array([est.lower.slope for _, est in measured_paths])
    upper = np.array([est.upper.slope for _, est in measured_paths])
    measured = float(np.median(central))
    if central.size >= 2:
        ci_lo, ci_hi = bootstrap_interval(central, np.median, stream.spawn("median", key).generator(),
                                          BOOTSTRAP_REPS)
    else:
        only: DimensionEstimate = measured_paths[0][1].central
        ci_lo, ci_hi = only.lower_ci, only.upper_ci
    ci_lo = measured if not math.isfinite(ci_lo) else min(ci_lo, measured)
    ci_hi = measured if not math.isfinite(ci_hi) else max(ci_hi, measured)
    q25, q75 = np.percentile(central, [25, 75])
    for _, est in measured_paths:
        for flag in est.central.flags:
            if flag not in flags:
                flags.append(flag)

    passed = None
    if predicted is not None:
        passed = abs(measured - predicted) <= tolerance and ci_lo - tolerance <= predicted <= ci_hi + tolerance
    return DimensionRow(key, E.n_cells, E.analytic_dim, predicted, H, d, regime_ok, measured, ci_lo, ci_hi,
                        float(q75 - q25), float(np.median(lower)), float(np.median(upper)),
                        central.tolist(), flags, passed)


def _ladder(config: ExperimentConfig, H: float) -> np.ndarray:
    if config.epsilon_ladder is not None:
        return np.asarray(config.epsilon_ladder)
    return default_ladder(config.T, config.n_steps, H)


def run_dimension_sets(config: ExperimentConfig, threads: int = 1,
                       dump_dir: Optional[Path] = None) -> DimensionReport:
    """Simulate ``n_paths`` paths and estimate the image dimension over every configured set."""
    spec = config.process
    H = config.index
    report = DimensionReport(name=config.name, process=describe(spec) if spec is not None else {}, H=H,
                             seed=config.seed, tolerance=config.tolerance, config_sha256=config_hash(config.raw),
                             sets=set_summary(list(config.sets)))
    if not config.sets:
        return report
    if H is None:
        raise ConfigError("no H given and the process family has no natural index", "H")
    d = spec.dim
    if H * d < 1.0:
        logger.warning(f"H*d = {H * d:.3g} < 1: the dimension formula is outside its proven regime")
    dt = config.T / config.n_steps
    ladder = _ladder(config, H)
    grids = []
    for s, E in enumerate(config.sets):
        try:
            grids.append(restrict_to_grid(E, dt, config.T))
        except PreconditionError as exc:
            raise ConfigError(str(exc), f"sets[{s}]") from exc
    try:
        config.window.window(len(ladder))
    except PreconditionError as exc:
        raise ConfigError(str(exc), "ladder") from exc
    stream = RngStream(config.seed).spawn("experiment", config.name)
    logger.info(f"experiment {config.name!r}: {config.n_paths} paths x {config.n_steps} steps, "
                f"{len(config.sets)} sets, ladder {ladder[0]:.3g}..{ladder[-1]:.3g}")

    def measure(p: int) -> List[Optional[tuple]]:
        path = simulate(spec, config.x0, config.T, config.n_steps, stream.spawn("path", p))
        if dump_dir is not None:
            write_path_dump(dump_dir / f"path_{p:05d}{DUMP_SUFFIX}", [path])
        out: List[Optional[tuple]] = []
        for s, idx in enumerate(grids):
            if idx.size == 0:
                out.append(None)
                continue
            curve = box_count(image_points(path, idx), ladder)
            est = estimate_box_dimensions(curve, config.window, rng=stream.spawn("bootstrap", p, s))
            out.append((curve, est))
        return out

    per_path = ordered_map(measure, range(config.n_paths), threads)
    for s, E in enumerate(config.sets):
        key = _set_key(s, E)
        items = [res[s] for res in per_path]
        row = _summarize_set(key, E, items, H, d, config.tolerance, stream)
        report.rows.append(row)
        report.curves[key] = [item[0] for item in items if item is not None]
        logger.info(f"{key}: predicted={row.predicted} measured={row.measured:.4f} "
                    f"[{row.ci_lo:.4f}, {row.ci_hi:.4f}] passed={row.passed}")
    return report


# ---------------------------------------------------------------------------
# Condition checks
# ---------------------------------------------------------------------------

def merge_reports(check: str, parts: Sequence[BoundCheckReport]) -> BoundCheckReport:
    """Concatenate per-point reports of one check into a single report."""
    grid, lhs, rhs, errs, violations, flags = [], [], [], [], [], []
    fitted: Dict[str, float] = {}
    for i, part in enumerate(parts):
        violations.extend(len(grid) + v for v in part.violations)
        grid.extend(part.grid)
        lhs.extend(part.lhs)
        rhs.extend(part.rhs)
        errs.extend(part.std_err)
        flags.extend(f for f in part.flags if f not in flags)
        fitted.update({f"{k}[{i}]": v for k, v in part.fitted_constants.items()})
    return BoundCheckReport(check=check, grid=grid, lhs=lhs, rhs=rhs, std_err=errs, violations=violations,
                            fitted_constants=fitted, flags=flags, spec=parts[0].spec if parts else {},
                            extra={"parts": [p.extra for p in parts]}, failed=any(p.failed for p in parts))


def _dyadic(lo: int, hi: int) -> List[float]:
    return [2.0 ** -k for k in range(lo, hi + 1)]


def _product(ts: Sequence[float], rs: Sequence[float]) -> List[tuple]:
    return list(itertools.product(ts, rs))


def _index(f: Fields, config: ExperimentConfig) -> float:
    H = f.number("H", config.index, lo=0.0, lo_open=True)
    if H is None:
        raise ConfigError("needs H (the process family has no natural index)", f.at("H"))
    return H


def _run_a1(spec, f, config, stream, threads):
    x = f.vector("x", spec.dim, config.x0)
    return check_a1(spec, _index(f, config), f.vector("gamma"), f.vector("t", None, _dyadic(4, 10)),
                    f.integer("n_mc", 2000, lo=2), stream, x=x, beta=f.number("beta", None, lo=0.0, lo_open=True),
                    n_steps=f.integer("n_steps", 64, lo=1), threads=threads)


def _ball_runner(name: str, default_t: List[float]):
    def run(spec, f, config, stream, threads):
        grid = _product(f.vector("t", None, default_t), f.vector("r", None, _dyadic(2, 4)))
        report = check_ball_bounds(spec, _index(f, config), f.number("eps", 0.05, lo=0.0),
                                   f.number("zeta", 0.05, lo=0.0), grid, f.integer("n_mc", 2000, lo=2), stream,
                                   x=f.vector("x", spec.dim, config.x0), r0=f.number("r0", None, lo=0.0, lo_open=True),
                                   slack=f.number("slack", 4.0, lo=1.0), n_steps=f.integer("n_steps", 256, lo=1),
                                   threads=threads)
        report.check = name
        return report
    return run


def _run_mclass(spec, f, config, stream, threads):
    mspec = MClassSpec(H=_index(f, config), beta=f.number("beta", lo=0.0, lo_open=True),
                       C=f.number("C", lo=0.0, lo_open=True), h0=f.number("h0", 1.0, lo=0.0, lo_open=True),
                       a0=f.number("a0", 1.0, lo=0.0, lo_open=True))
    return check_M_class(spec, mspec, f.rows("grid", 2), f.integer("n_mc", 2000, lo=2), stream,
                         x_grid=f.rows("x_grid", spec.dim, None), s_points=f.integer("s_points", 8, lo=1),
                         n_steps=f.integer("n_steps", 64, lo=1), threads=threads)


def _run_ottaviani(spec, f, config, stream, threads):
    x = f.vector("x", spec.dim, config.x0)
    n_mc, n_steps = f.integer("n_mc", 4000, lo=2), f.integer("n_steps", 64, lo=1)
    x_grid = f.rows("x_grid", spec.dim, None)
    parts = [verify_ottaviani(spec, x, h, a, n_mc, stream.spawn("pair", i), x_grid=x_grid, n_steps=n_steps,
                              threads=threads)
             for i, (h, a) in enumerate(f.rows("pairs", 2))]
    return merge_reports("ottaviani", parts)


def _run_pruitt(spec, f, config, stream, threads):
    grid = _product(f.vector("t", None, _dyadic(4, 10)), f.vector("r", None, _dyadic(1, 4)))
    return check_pruitt(spec, grid, f.integer("n_mc", 2000, lo=2), stream, x=f.vector("x", spec.dim, config.x0),
                        n_steps=f.integer("n_steps", 64, lo=1), threads=threads)


def _run_hitting(spec, f, config, stream, threads):
    """Monte Carlo hitting probabilities against the ratio bound, one cell per (t, r)."""
    T = f.number("T", 1.0, lo=0.0, lo_open=True)
    grid = _product(f.vector("t", None, [T / 16, T / 8, T / 4, T / 2]), f.vector("r", None, _dyadic(2, 5)))
    n_mc = f.integer("n_mc", 1000, lo=2)
    n_steps = f.integer("n_steps", 4096, lo=1)
    source_mc = f.integer("n_mc_source", 2000, lo=2)
    x = np.zeros(spec.dim) if config.x0 is None else np.asarray(config.x0)
    x = np.asarray(f.vector("x", spec.dim, tuple(x)))
    homogeneous = f.flag("homogeneous", is_space_homogeneous(spec))
    eps, zeta = f.number("eps", None, lo=0.0), f.number("zeta", None, lo=0.0)
    H = f.number("H", config.index, lo=0.0, lo_open=True)
    if isinstance(spec, BrownianMotion):
        sigma = spec.sigma
        ball_prob: Any = lambda s, y, c, r: brownian_ball_probability(s, y, c, r, sigma)
    else:
        ball_prob = spec

    cells, lhs, rhs, errs, violations, shapes = [], [], [], [], [], []
    for i, (t, r) in enumerate(grid):
        bound = hitting_probability_bound(ball_prob, x, r, t, T, homogeneous=homogeneous, n_mc=source_mc,
                                          rng=stream.spawn("bound", i))
        est = estimate_hitting_probability(spec, x, x, r, t, T, n_mc, stream.spawn("estimate", i), n_steps, threads)
        cells.append({"t": t, "r": r, "T": T})
        lhs.append(est.prob_hat)
        rhs.append(bound)
        errs.append(est.std_err)
        if est.prob_hat - allowance(est.std_err, n_mc) > bound:
            violations.append(i)
        if eps is not None and zeta is not None and H is not None:
            shapes.append(delay_hitting_shape(r, t, H, spec.dim, eps, zeta))
    extra = {"source": "closed-form" if isinstance(spec, BrownianMotion) else "monte-carlo"}
    if shapes:
        extra["delay_shape"] = shapes
    return BoundCheckReport(check="hitting", grid=cells, lhs=lhs, rhs=rhs, std_err=errs, violations=violations,
                            spec={**describe(spec), "homogeneous": homogeneous, "n_mc": n_mc, "n_steps": n_steps},
                            extra=extra)


def _run_moment(spec, f, config, stream, threads):
    if not isinstance(spec, StableLike):
        raise ConfigError("the moment check needs a stable_like process", f.at("process"))
    return check_moment_bound(spec.kernel, f.number("p", lo=0.0, lo_open=True), f.vector("T", None, _dyadic(0, 6)),
                              f.integer("n_mc", 2000, lo=2), stream, x=f.vector("x", spec.dim, config.x0),
                              n_steps=f.integer("n_steps", 64, lo=1), factor=f.number("factor", 5.0, lo=1.0),
                              threads=threads)


def _run_selfsim(spec, f, config, stream, threads):
    H = _index(f, config)
    t = f.number("t", 1.0, lo=0.0, lo_open=True)
    n_mc = f.integer("n_mc", 4000, lo=2)
    n_steps = f.integer("n_steps", 256, lo=1)
    parts = [check_self_similarity(spec, H, r, t, n_mc, stream.spawn("scale", i), n_steps, threads)
             for i, r in enumerate(f.vector("r", None, (0.5, 2.0)))]
    return merge_reports("selfsim", parts)


def _run_growth(spec, f, config, stream, threads):
    growth = GrowthConditionSpec(alpha=f.number("alpha", lo=0.0, hi=2.0, lo_open=True),
                                 zeta_prime=f.number("zeta_prime", lo=0.0, lo_open=True),
                                 K5=f.number("K5", lo=1.0), tau=f.number("tau", 1.0, lo=0.0, lo_open=True),
                                 global_lower=f.flag("global_lower"))
    d = spec.dim
    norms = [growth.tau * 2.0 ** k for k in range(7)]
    diagonal = np.ones(d) / math.sqrt(d)
    default_xi = [tuple(n * np.eye(d)[0]) for n in norms] + [tuple(n * diagonal) for n in norms]
    xi = f.rows("xi", d, default_xi)
    state = f.vector("x", d, config.x0)
    report = check_growth_condition(symbol_of(spec).exponent(state), growth, xi)
    report.spec = {**describe(spec), "x": None if state is None else list(state)}
    return report


CHECK_RUNNERS: Dict[str, Callable[..., BoundCheckReport]] = {
    "a1": _run_a1,
    "a2": _ball_runner("a2", [2.0 ** -8, 2.0 ** -6, 2.0 ** -4, 2.0 ** -2, 1.0]),
    "a3": _ball_runner("a3", [2.0 ** -4, 2.0 ** -2, 1.0, 2.0, 4.0]),
    "mclass": _run_mclass,
    "ottaviani": _run_ottaviani,
    "pruitt": _run_pruitt,
    "hitting": _run_hitting,
    "moment": _run_moment,
    "selfsim": _run_selfsim,
    "growth": _run_growth,
}


def run_check_block(block: CheckBlock, config: ExperimentConfig, index: int, threads: int = 1) -> BoundCheckReport:
    if block.check not in CHECK_RUNNERS:
        raise ConfigError(f"unknown check {block.check!r}; valid checks: {', '.join(CHECK_NAMES)}",
                          f"{block.location}.check")
    spec: Optional[ProcessSpec] = block.process or config.process
    if spec is None:
        raise ConfigError("no process for this check and no top-level process block", f"{block.location}.process")
    f = Fields(block.params, block.location)
    stream = RngStream(config.seed).spawn("check", index, block.check)
    try:
        report = CHECK_RUNNERS[block.check](spec, f, config, stream, threads)
    except PreconditionError as exc:
        raise ConfigError(str(exc), block.location) from exc
    f.reject_unknown()
    logger.info(f"check {block.check} ({block.location}): passed={report.passed} "
                f"violations={len(report.violations)}")
    return report


def run_checks(config: ExperimentConfig, threads: Optional[int] = None) -> List[BoundCheckReport]:
    """Run every block of ``config.checks`` in order."""
    threads = threads or config.threads or default_threads()
    return [run_check_block(block, config, i, threads) for i, block in enumerate(config.checks)]


# ---------------------------------------------------------------------------
# Whole experiments and persistence
# ---------------------------------------------------------------------------

def run_experiment(config: ExperimentConfig, threads: Optional[int] = None,
                   out_dir: Union[str, Path, None] = None) -> DimensionReport:
    """Dimension sets, then checks, then the covering study; writes artifacts when ``out_dir`` is given."""
    threads = threads or config.threads or default_threads()
    dump_dir = Path(out_dir) / "paths" if out_dir is not None and config.dump_paths else None
    report = run_dimension_sets(config, threads, dump_dir)
    report.checks = run_checks(config, threads)
    if config.covering is not None:
        if config.process is None:
            raise ConfigError("the covering study needs a process block", "covering")
        study = config.covering
        report.covering = covering_statistics(config.process, study.mode, study.ns, study.gamma, study.n_paths,
                                              RngStream(config.seed).spawn("covering"), study.n_steps, config.T,
                                              config.x0, study.box, threads)
    report.generated_at = datetime.now(timezone.utc).isoformat()
    logger.info(f"experiment {config.name!r} finished: passed={report.passed}")
    if out_dir is not None:
        write_report(report, out_dir, config.raw)
    return report


def write_report(report: DimensionReport, out_dir: Union[str, Path],
                 raw_config: Optional[Dict[str, Any]] = None) -> List[Path]:
    """report.json, curves/*.csv, checks/*.csv, covering.csv and manifest.json."""
    store = ReportStore(out_dir)
    store.write_json("report.json", report.to_dict())
    for key, curves in report.curves.items():
        rows = [{"path": p, **row} for p, curve in enumerate(curves) for row in curve.csv_rows()]
        store.write_csv(f"curves/{key}.csv", rows, ["path", "epsilon", "count"])
    for i, check in enumerate(report.checks):
        store.write_csv(f"checks/{i:02d}-{check.check}.csv", check.csv_rows())
    if report.covering:
        store.write_csv("covering.csv", [row.to_dict() for row in report.covering])
    dumps = Path(out_dir) / "paths"
    if dumps.is_dir():
        for dump in sorted(dumps.glob(f"*{DUMP_SUFFIX}")):
            store.track_external(dump)
    manifest = store.write_manifest(raw_config if raw_config is not None else {}, report.seed,
                                    {"name": report.name, "passed": report.passed})
    return store.written + [manifest]
