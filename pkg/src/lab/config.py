"""JSON experiment configuration: parsing, validation and process construction"""

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.lab.boxdim import WindowPolicy
from src.lab.errors import ConfigError, LabError
from src.lab.processes import (
    BrownianMotion,
    JumpDiffusion,
    ProcessSpec,
    StableLevy,
    StableLike,
    Subordinated,
    Subordinator,
    ZeroProcess,
    natural_index,
)
from src.lab.symbols import (
    StableSpectralSpec,
    constant_kernel,
    jump_diffusion_atoms,
    oscillating_kernel,
    uniform_jump_diffusion,
)
from src.lab.timesets import CantorSpec, DyadicTimeSet, build_cantor_set, full_interval, single_cell

logger = logging.getLogger(__name__)

CHECK_NAMES = ("a1", "a2", "a3", "mclass", "ottaviani", "pruitt", "hitting", "moment", "selfsim", "growth")
PROCESS_FAMILIES = ("brownian", "stable", "subordinator", "subordinated", "stable_like", "jump_diffusion", "zero")
SET_KINDS = ("interval", "cantor", "cell", "cells")

DEFAULT_TOLERANCE = 0.15


@dataclass(frozen=True)
class CheckBlock:
    """One entry of ``checks[]``; ``params`` holds the check-specific fields as given."""

    check: str
    process: Optional[ProcessSpec]
    params: Dict[str, Any]
    location: str


@dataclass(frozen=True)
class CoveringStudyConfig:
    mode: str = "image"
    ns: Tuple[int, ...] = (8, 9, 10, 11, 12)
    gamma: float = 0.45
    n_paths: int = 16
    n_steps: int = 2 ** 16
    box: float = 1.0


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    name: str
    process: Optional[ProcessSpec]
    process_raw: Dict[str, Any]
    H: Optional[float]
    sets: Tuple[DyadicTimeSet, ...]
    n_paths: int
    n_steps: int
    T: float
    seed: int
    epsilon_ladder: Optional[Tuple[float, ...]] = None
    window: WindowPolicy = field(default_factory=WindowPolicy)
    x0: Optional[Tuple[float, ...]] = None
    tolerance: float = DEFAULT_TOLERANCE
    checks: Tuple[CheckBlock, ...] = ()
    covering: Optional[CoveringStudyConfig] = None
    output_dir: Optional[str] = None
    threads: Optional[int] = None
    dump_paths: bool = False
    raw: Dict[str, Any] = field(default_factory=dict)

    @property
    def index(self) -> Optional[float]:
        """H from the config, else the family's natural index."""
        if self.H is not None:
            return self.H
        return natural_index(self.process) if self.process is not None else None


# ---------------------------------------------------------------------------
# Field readers
# ---------------------------------------------------------------------------

class Fields:
    """Typed access to one JSON object, with errors located by dotted path."""

    def __init__(self, data: Any, path: str):
        if not isinstance(data, dict):
            raise ConfigError("expected an object", path or "<root>")
        self.data = data
        self.path = path
        self.seen = set()

    def at(self, key: str) -> str:
        return f"{self.path}.{key}" if self.path else key

    def has(self, key: str) -> bool:
        self.seen.add(key)
        return key in self.data and self.data[key] is not None

    def raw(self, key: str, default: Any = None) -> Any:
        self.seen.add(key)
        return self.data.get(key, default)

    def flag(self, key: str, default: bool = False) -> bool:
        if not self.has(key):
            return default
        value = self.data[key]
        if not isinstance(value, bool):
            raise ConfigError(f"expected true or false, got {value!r}", self.at(key))
        return value

    def rows(self, key: str, width: Optional[int] = None, default: Any = ...) -> Optional[List[Tuple[float, ...]]]:
        """A list of equal-length number lists, such as grid pairs or direction vectors."""
        if not self.has(key):
            if default is ...:
                raise ConfigError("missing required field", self.at(key))
            return default
        value = self.data[key]
        if not isinstance(value, list) or not value:
            raise ConfigError("expected a nonempty list of number lists", self.at(key))
        out = []
        for i, row in enumerate(value):
            item = Fields({"row": row}, f"{self.at(key)}[{i}]")
            parsed = item.vector("row", width)
            out.append(parsed)
        return out

    def reject_unknown(self, ignore: Sequence[str] = ()) -> None:
        unknown = sorted(set(self.data) - self.seen - set(ignore))
        if unknown:
            raise ConfigError(f"unknown field(s): {', '.join(unknown)}", self.at(unknown[0]))

    def number(self, key: str, default: Any = ..., lo: Optional[float] = None, hi: Optional[float] = None,
               lo_open: bool = False) -> Optional[float]:
        if not self.has(key):
            if default is ...:
                raise ConfigError("missing required field", self.at(key))
            return default
        value = self.data[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            raise ConfigError(f"expected a finite number, got {value!r}", self.at(key))
        value = float(value)
        if lo is not None and (value < lo or (lo_open and value == lo)):
            raise ConfigError(f"must be {'>' if lo_open else '>='} {lo}, got {value}", self.at(key))
        if hi is not None and value > hi:
            raise ConfigError(f"must be <= {hi}, got {value}", self.at(key))
        return value

    def integer(self, key: str, default: Any = ..., lo: Optional[int] = None) -> Optional[int]:
        if not self.has(key):
            if default is ...:
                raise ConfigError("missing required field", self.at(key))
            return default
        value = self.data[key]
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"expected an integer, got {value!r}", self.at(key))
        if lo is not None and value < lo:
            raise ConfigError(f"must be >= {lo}, got {value}", self.at(key))
        return value

    def vector(self, key: str, dim: Optional[int] = None, default: Any = ...) -> Optional[Tuple[float, ...]]:
        if not self.has(key):
            if default is ...:
                raise ConfigError("missing required field", self.at(key))
            return default
        value = self.data[key]
        if not isinstance(value, list) or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
            raise ConfigError(f"expected a list of numbers, got {value!r}", self.at(key))
        if dim is not None and len(value) != dim:
            raise ConfigError(f"expected {dim} components, got {len(value)}", self.at(key))
        return tuple(float(v) for v in value)

    def text(self, key: str, default: Any = ..., choices: Optional[Sequence[str]] = None) -> Optional[str]:
        if not self.has(key):
            if default is ...:
                raise ConfigError("missing required field", self.at(key))
            return default
        value = self.data[key]
        if not isinstance(value, str):
            raise ConfigError(f"expected a string, got {value!r}", self.at(key))
        if choices is not None and value not in choices:
            raise ConfigError(f"unknown value {value!r}; valid: {', '.join(choices)}", self.at(key))
        return value

    def child(self, key: str) -> "Fields":
        self.seen.add(key)
        return Fields(self.data.get(key), self.at(key))

    def items(self, key: str) -> List[Tuple[Any, str]]:
        self.seen.add(key)
        value = self.data.get(key) or []
        if not isinstance(value, list):
            raise ConfigError("expected a list", self.at(key))
        return [(v, f"{self.at(key)}[{i}]") for i, v in enumerate(value)]


def _wrap(fn, *args, location: str):
    """Re-raise construction errors from the lab with the config location attached."""
    try:
        return fn(*args)
    except ConfigError:
        raise
    except LabError as exc:
        raise ConfigError(str(exc), location) from exc


# ---------------------------------------------------------------------------
# Processes
# ---------------------------------------------------------------------------

def _unit_rows(rows: Sequence[Sequence[float]], location: str) -> np.ndarray:
    arr = np.asarray(rows, dtype=float)
    norms = np.linalg.norm(arr, axis=1)
    if np.any(norms == 0):
        raise ConfigError("directions must be nonzero", location)
    return arr / norms[:, None]


def _atoms(spectral: Fields, dim: int) -> Tuple[np.ndarray, np.ndarray]:
    dirs, weights = [], []
    for item, loc in spectral.items("atoms"):
        atom = Fields(item, loc)
        dirs.append(atom.vector("direction", dim))
        weights.append(atom.number("weight", lo=0.0))
    if not dirs:
        raise ConfigError("needs at least one atom", spectral.at("atoms"))
    return _unit_rows(dirs, spectral.at("atoms")), np.asarray(weights)


def parse_process(data: Any, path: str = "process") -> ProcessSpec:
    """Build a ProcessSpec from its JSON block; directions are normalized to unit length."""
    f = Fields(data, path)
    family = f.text("family", choices=PROCESS_FAMILIES)
    if family == "brownian":
        return _wrap(BrownianMotion, f.integer("dim", 1, lo=1), f.number("sigma", 1.0, lo=0.0, lo_open=True),
                     location=path)
    if family == "subordinator":
        return _wrap(Subordinator, f.number("rho", lo=0.0, hi=1.0, lo_open=True), location=f.at("rho"))
    if family == "zero":
        return ZeroProcess(f.integer("dim", 1, lo=1))
    if family == "subordinated":
        base = parse_process(f.raw("base"), f.at("base"))
        return _wrap(Subordinated, base, f.number("rho", lo=0.0, hi=1.0, lo_open=True),
                     f.integer("refine", 4, lo=1), f.text("clock", "stable", choices=("stable", "identity")),
                     location=path)

    alpha = f.number("alpha", lo=0.0, hi=2.0, lo_open=True)
    dim = f.integer("dim", 1, lo=1)
    if family == "stable":
        spectral = f.child("spectral") if f.has("spectral") else Fields({"uniform": 1.0}, f.at("spectral"))
        shift = f.vector("shift", dim, None)
        if spectral.has("atoms"):
            dirs, weights = _atoms(spectral, dim)
            spec = _wrap(StableSpectralSpec, alpha, dim, dirs, weights, 0.0, shift, location=spectral.path)
        else:
            mass = spectral.number("uniform", lo=0.0, lo_open=True)
            spec = _wrap(StableSpectralSpec.uniform, alpha, dim, mass, shift, location=spectral.path)
        return StableLevy(spec)
    if family == "stable_like":
        kernel = f.child("kernel") if f.has("kernel") else Fields({"form": "constant"}, f.at("kernel"))
        form = kernel.text("form", choices=("constant", "oscillating"))
        if form == "constant":
            built = _wrap(constant_kernel, alpha, dim, kernel.number("value", 1.0, lo=0.0, lo_open=True),
                          location=kernel.path)
        else:
            built = _wrap(oscillating_kernel, alpha, dim, kernel.number("base", 1.0, lo=0.0, lo_open=True),
                          kernel.number("amplitude", 0.5, lo=0.0), location=kernel.path)
        return StableLike(built)

    # jump_diffusion
    spectral = f.child("spectral") if f.has("spectral") else Fields({"uniform": 1.0}, f.at("spectral"))
    drift = f.vector("drift", dim, None)
    oscillation = f.number("oscillation", 0.0, lo=0.0)
    reversion = f.number("reversion", 0.0, lo=0.0)
    if spectral.has("atoms"):
        dirs, weights = _atoms(spectral, dim)
        built = _wrap(jump_diffusion_atoms, alpha, dirs, weights, drift, oscillation, reversion, location=path)
    else:
        built = _wrap(uniform_jump_diffusion, alpha, dim, spectral.number("uniform", lo=0.0, lo_open=True),
                      drift, oscillation, reversion, location=path)
    if alpha <= 1.0 and (drift is not None and any(drift) or reversion != 0.0):
        raise ConfigError("drift must vanish for alpha <= 1", f.at("drift"))
    return JumpDiffusion(built)


# ---------------------------------------------------------------------------
# Time sets
# ---------------------------------------------------------------------------

def parse_time_set(data: Any, path: str) -> DyadicTimeSet:
    f = Fields(data, path)
    kind = f.text("kind", choices=SET_KINDS)
    label = f.text("label", "")
    if kind == "interval":
        return full_interval(label or "interval")
    if kind == "cantor":
        digits = f.vector("kept_digits", None, (0.0, 2.0))
        if any(d != int(d) for d in digits):
            raise ConfigError("kept digits must be integers", f.at("kept_digits"))
        spec = _wrap(CantorSpec, f.integer("base", 3, lo=2), tuple(int(d) for d in digits),
                     f.integer("depth", lo=1), location=path)
        return _wrap(build_cantor_set, spec, f.integer("cap", 2 ** 24, lo=1), label, location=path)
    if kind == "cell":
        return _wrap(single_cell, f.integer("level", lo=0), f.integer("index", 0, lo=0), f.integer("base", 2, lo=2),
                     label, location=path)
    cells = f.vector("cells")
    analytic = f.number("analytic_dim", None, lo=0.0, hi=1.0)
    return _wrap(DyadicTimeSet, f.integer("level", lo=0), np.asarray(cells, dtype=np.int64), analytic,
                 f.integer("base", 2, lo=2), label, location=path)


# ---------------------------------------------------------------------------
# Checks and covering
# ---------------------------------------------------------------------------

def parse_check(data: Any, path: str) -> CheckBlock:
    f = Fields(data, path)
    name = f.text("check")
    if name not in CHECK_NAMES:
        raise ConfigError(f"unknown check {name!r}; valid checks: {', '.join(CHECK_NAMES)}", f.at("check"))
    process = parse_process(f.raw("process"), f.at("process")) if f.has("process") else None
    params = {k: v for k, v in f.data.items() if k not in ("check", "process")}
    return CheckBlock(check=name, process=process, params=params, location=path)


def parse_covering(data: Any, path: str = "covering") -> CoveringStudyConfig:
    f = Fields(data, path)
    ns = f.vector("ns", None, (8.0, 9.0, 10.0, 11.0, 12.0))
    if not ns or any(n != int(n) or n < 0 for n in ns):
        raise ConfigError("ns must be a nonempty list of nonnegative integers", f.at("ns"))
    return CoveringStudyConfig(
        mode=f.text("mode", "image", choices=("image", "preimage")),
        ns=tuple(int(n) for n in ns),
        gamma=f.number("gamma", 0.45, lo=0.0, lo_open=True),
        n_paths=f.integer("n_paths", 16, lo=1),
        n_steps=f.integer("n_steps", 2 ** 16, lo=1),
        box=f.number("box", 1.0, lo=0.0, lo_open=True),
    )


# ---------------------------------------------------------------------------
# Documents
# ---------------------------------------------------------------------------

def parse_config(data: Any) -> ExperimentConfig:
    f = Fields(data, "")
    process = parse_process(f.raw("process"), "process") if f.has("process") else None
    dim = process.dim if process is not None else None
    if not f.has("seed"):
        raise ConfigError("missing required field; runs are never seeded from the clock", "seed")
    seed = f.integer("seed", lo=0)
    if seed >= 2 ** 64:
        raise ConfigError("seed must fit in 64 bits", "seed")

    ladder = None
    if f.has("ladder"):
        ladder = f.vector("ladder")
        if not ladder or any(e <= 0 for e in ladder) or any(b >= a for a, b in zip(ladder, ladder[1:])):
            raise ConfigError("ladder must be positive and strictly decreasing", "ladder")
        ratios = [a / b for a, b in zip(ladder, ladder[1:])]
        if any(abs(r - round(r)) > 1e-9 * r for r in ratios):
            raise ConfigError("ladder must be nested: consecutive ratios must be integers", "ladder")

    window = WindowPolicy()
    if f.has("window"):
        w = f.child("window")
        window = WindowPolicy(drop_coarse=w.integer("drop_coarse", 2, lo=0), drop_fine=w.integer("drop_fine", 2, lo=0),
                              min_points=w.integer("min_points", 4, lo=2))

    config = ExperimentConfig(
        name=f.text("name", "experiment"),
        process=process,
        process_raw=f.raw("process") or {},
        H=f.number("H", None, lo=0.0, lo_open=True),
        sets=tuple(parse_time_set(item, loc) for item, loc in f.items("sets")),
        n_paths=f.integer("n_paths", 8, lo=1),
        n_steps=f.integer("n_steps", 2 ** 20, lo=1),
        T=f.number("T", 1.0, lo=0.0, lo_open=True),
        seed=seed,
        epsilon_ladder=ladder,
        window=window,
        x0=f.vector("x0", dim, None),
        tolerance=f.number("tolerance", DEFAULT_TOLERANCE, lo=0.0, lo_open=True),
        checks=tuple(parse_check(item, loc) for item, loc in f.items("checks")),
        covering=parse_covering(f.raw("covering")) if f.has("covering") else None,
        output_dir=f.text("output_dir", None),
        threads=f.integer("threads", None, lo=1),
        dump_paths=f.flag("dump_paths"),
        raw=dict(f.data),
    )
    f.reject_unknown(ignore=("description",))
    if config.sets and config.process is None:
        raise ConfigError("sets[] need a process block", "process")
    logger.debug(f"parsed config {config.name!r}: {len(config.sets)} sets, {len(config.checks)} checks")
    return config


def loads_config(text: str, source: str = "<string>") -> ExperimentConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(exc.msg, f"{source}:{exc.lineno}:{exc.colno}") from exc
    return parse_config(data)


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from exc
    return loads_config(text, str(path))
