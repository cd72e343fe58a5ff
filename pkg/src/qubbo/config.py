"""Run-config parsing: strict JSON documents with field-path diagnostics.

The schema is four blocks -- ``space``, ``objective``, ``run``,
``solver`` -- all but ``space`` optional.  Unknown keys anywhere are
rejected so typos fail loudly instead of silently using defaults.
Relative paths (objective table, initial dataset) resolve against the
config file's directory.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from .dataset import Dataset
from .driver import RunConfig
from .exceptions import ConfigError
from .objectives import ObjectiveSpec
from .solvers import SolverConfig
from .space import DesignSpace

__all__ = ["load_run_config", "parse_run_config"]

_NUMBER = (int, float)


class _Block:
    """One mapping block, tracking which keys were consumed."""

    def __init__(self, doc: Any, path: str):
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: expected an object")
        self.doc = doc
        self.path = path
        self.used: set[str] = set()

    def take(self, key: str, types: tuple | type, default: Any = None,
             required: bool = False) -> Any:
        self.used.add(key)
        if key not in self.doc:
            if required:
                raise ConfigError(f"{self.path}.{key}: required field missing")
            return default
        value = self.doc[key]
        if value is None and not required:
            return default
        if not isinstance(value, types) or isinstance(value, bool) and types != bool:
            want = types.__name__ if isinstance(types, type) else \
                "/".join(t.__name__ for t in types)
            raise ConfigError(
                f"{self.path}.{key}: expected {want}, got {type(value).__name__}"
            )
        return value

    def finish(self) -> None:
        unknown = set(self.doc) - self.used
        if unknown:
            raise ConfigError(
                f"{self.path}: unknown keys {sorted(unknown)}"
            )


def _parse_space(doc: Any) -> DesignSpace:
    block = _Block(doc, "space")
    cards = block.take("cardinalities", list, required=True)
    names = block.take("names", list)
    block.finish()
    if not cards or not all(isinstance(k, int) and not isinstance(k, bool) for k in cards):
        raise ConfigError("space.cardinalities: expected a non-empty list of ints")
    if names is not None and (
        len(names) != len(cards) or not all(isinstance(n, str) for n in names)
    ):
        raise ConfigError("space.names: expected one string per site")
    try:
        return DesignSpace.from_cardinalities(cards, names)
    except ValueError as err:
        raise ConfigError(f"space: {err}") from None


def _parse_objective(doc: Any, base_dir: Path) -> ObjectiveSpec:
    block = _Block(doc if doc is not None else {}, "objective")
    kind = block.take("kind", str, default="synthetic_qubo")
    spec = ObjectiveSpec(
        kind=kind,
        orientation=block.take("orientation", str, default="minimize"),
        seed=block.take("seed", int, default=0),
        density=float(block.take("density", _NUMBER, default=1.0)),
        scale=float(block.take("scale", _NUMBER, default=1.0)),
        noise_sigma=float(block.take("noise_sigma", _NUMBER, default=0.0)),
        strength=float(block.take("strength", _NUMBER, default=2.0)),
        budget=block.take("budget", int),
        table=block.take("table", str),
    )
    block.finish()
    if spec.kind not in ("synthetic_qubo", "synthetic_deceptive", "tabular"):
        raise ConfigError(f"objective.kind: unknown kind {spec.kind!r}")
    if spec.orientation not in ("minimize", "maximize"):
        raise ConfigError(
            f"objective.orientation: expected minimize or maximize, got {spec.orientation!r}"
        )
    if spec.kind == "tabular":
        if spec.table is None:
            raise ConfigError("objective.table: required for the tabular kind")
        spec = ObjectiveSpec(**{**spec.__dict__, "table": str((base_dir / spec.table))})
    return spec


def _parse_solver(doc: Any) -> SolverConfig:
    block = _Block(doc if doc is not None else {}, "solver")
    cfg = SolverConfig(
        backend=block.take("backend", str, default="simulated_annealing"),
        reads=block.take("reads", int, default=300),
        sweeps=block.take("sweeps", int, default=1000),
        beta_start=block.take("beta_start", _NUMBER),
        beta_end=block.take("beta_end", _NUMBER),
    )
    block.finish()
    if cfg.backend not in ("simulated_annealing", "exhaustive"):
        raise ConfigError(
            f"solver.backend: expected simulated_annealing or exhaustive, got {cfg.backend!r}"
        )
    if cfg.beta_start is not None:
        cfg.beta_start = float(cfg.beta_start)
    if cfg.beta_end is not None:
        cfg.beta_end = float(cfg.beta_end)
    return cfg


def parse_run_config(doc: Any, base_dir: Path | str = ".") -> RunConfig:
    """Turn a parsed JSON document into a validated RunConfig."""
    base_dir = Path(base_dir)
    top = _Block(doc, "config")
    space = _parse_space(top.take("space", dict, required=True))
    objective_spec = _parse_objective(top.take("objective", dict), base_dir)
    solver = _parse_solver(top.take("solver", dict))
    run_doc = top.take("run", dict)
    top.finish()

    block = _Block(run_doc if run_doc is not None else {}, "run")
    grid = block.take("sigma2_grid", list, default=[0.0, 4e-3, 8e-3, 12e-3])
    if not all(isinstance(v, _NUMBER) and not isinstance(v, bool) for v in grid):
        raise ConfigError("run.sigma2_grid: expected a list of numbers")
    threshold = block.take("threshold", _NUMBER)
    initial_csv = block.take("initial_csv", str)
    cfg = RunConfig(
        space=space,
        objective=objective_spec.build(space),
        n_initial=block.take("n_initial", int, default=100),
        n_loops=block.take("n_loops", int, default=20),
        batch_size=block.take("batch_size", int, default=10),
        lam=float(block.take("lam", _NUMBER, default=1e-2)),
        sigma2_grid=tuple(float(v) for v in grid),
        solver=solver,
        master_seed=block.take("master_seed", int, default=0),
        threshold=None if threshold is None else float(threshold),
        include_baseline=block.take("include_baseline", bool, default=True),
    )
    block.finish()
    if initial_csv is not None:
        cfg.initial = Dataset.from_csv(base_dir / initial_csv, n_bits=space.total_bits)
    try:
        cfg.validate()
    except ValueError as err:
        raise ConfigError(f"run: {err}") from None
    return cfg


def load_run_config(path) -> tuple[RunConfig, dict]:
    """Read a config file; returns the RunConfig and the raw document echo."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path}: not valid JSON: {err}") from None
    return parse_run_config(doc, path.parent), doc
