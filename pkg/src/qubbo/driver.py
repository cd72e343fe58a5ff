"""The optimization loop: fit, sample, solve, screen, evaluate, append.

Each loop iteration
  (i)   fits the ridge posterior on everything evaluated so far,
  (ii)  draws one coefficient vector from the posterior (exactly the
        mean when sigma2 == 0),
  (iii) builds the penalized acquisition QUBO and solves it,
  (iv)  screens the sample pool down to feasible, never-evaluated
        states and keeps the top batch,
  (v)   evaluates the batch and appends it to the dataset.

Randomness discipline: every stream is derived from the master seed via
``SeedSequence(master, spawn_key=(w0, w1, loop, role))`` where (w0, w1)
are the IEEE-754 words of the run's sigma2 (sentinel words for the
baseline arm).  Streams therefore depend only on their own arm's value,
never on grid position, so adding or removing sweep arms cannot perturb
the others; the shared initial design uses a role no arm ever uses.
Identical config + master seed reproduces traces bit-for-bit (per
platform).
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .acquisition import build_acquisition
from .dataset import Dataset
from .exceptions import BudgetExceededError, DegenerateTargetError, SchemaError
from .objectives import Objective
from .solvers import SolverConfig, random_batch, select_batch, solve
from .space import DesignSpace
from .surrogate import QuboRidge

__all__ = [
    "RunConfig",
    "LoopRecord",
    "RunTrace",
    "run_bo",
    "run_baseline",
    "run_sweep",
    "write_trace",
    "read_trace",
    "dataset_from_trace",
    "arm_label",
]

logger = logging.getLogger(__name__)

TRACE_SCHEMA = 1

# spawn-key roles; INIT is reserved for the arm-independent initial design
_ROLE_INIT = 0
_ROLE_ALPHA = 1
_ROLE_SOLVE = 2
_ROLE_PROPOSE = 3
_BASELINE_WORDS = (0xFFFFFFFF, 0xFFFFFFFF)


@dataclass
class RunConfig:
    """Everything a sweep needs; single runs ignore the grid."""

    space: DesignSpace
    objective: Objective
    n_initial: int = 100
    n_loops: int = 20
    batch_size: int = 10
    lam: float = 1e-2
    sigma2_grid: tuple[float, ...] = (0.0, 4e-3, 8e-3, 12e-3)
    solver: SolverConfig = field(default_factory=SolverConfig)
    master_seed: int = 0
    threshold: float | None = None
    include_baseline: bool = True
    initial: Dataset | None = None

    def validate(self) -> None:
        if self.n_initial < 1:
            raise ValueError(f"n_initial must be >= 1, got {self.n_initial}")
        if self.n_loops < 1:
            raise ValueError(f"n_loops must be >= 1, got {self.n_loops}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if any(s < 0 for s in self.sigma2_grid):
            raise ValueError("sigma2 values must be >= 0")
        if self.objective.n_bits != self.space.total_bits:
            raise ValueError(
                f"objective expects {self.objective.n_bits} bits but the space "
                f"has {self.space.total_bits}"
            )


@dataclass
class LoopRecord:
    """One loop's worth of trace: what was proposed and what came back."""

    loop: int
    r2: float | None
    alpha_seed: int | None
    alpha_sha: str | None
    pool_size: int
    shortfall: bool
    proposals: list[list[int]]
    energies: list[float]
    y: list[float]
    best_so_far: float


@dataclass
class RunTrace:
    """Full record of one arm: header data plus per-loop records."""

    label: str
    sigma2: float | None
    master_seed: int
    lam: float
    orientation: str
    threshold: float | None
    names: tuple[str, ...]
    cardinalities: tuple[int, ...]
    solver: dict
    initial_bits: list[list[int]]
    initial_y: list[float]
    records: list[LoopRecord] = field(default_factory=list)
    aborted: bool = False
    solver_calls: int = 0
    n_evaluations: int = 0

    @property
    def n_bits(self) -> int:
        return len(self.initial_bits[0]) if self.initial_bits else 0

    def space(self) -> DesignSpace:
        return DesignSpace.from_cardinalities(self.cardinalities, self.names)


def _arm_words(sigma2: float | None) -> tuple[int, int]:
    if sigma2 is None:
        return _BASELINE_WORDS
    u = int(np.frombuffer(np.float64(sigma2).tobytes(), dtype=np.uint64)[0])
    return (u >> 32) & 0xFFFFFFFF, u & 0xFFFFFFFF


def _stream(master: int, sigma2: float | None, loop: int, role: int) -> np.random.SeedSequence:
    w0, w1 = _arm_words(sigma2)
    return np.random.SeedSequence(master, spawn_key=(w0, w1, loop, role))


def _seed_int(master: int, sigma2: float | None, loop: int, role: int) -> int:
    return int(_stream(master, sigma2, loop, role).generate_state(1)[0])


def arm_label(sigma2: float | None) -> str:
    return "baseline" if sigma2 is None else f"sigma2_{sigma2:g}"


def build_initial(cfg: RunConfig, objective: Objective) -> Dataset:
    """Arm-independent initial design: uniform feasible points, evaluated.

    The evaluation budget governs the adaptive phase only, so it is
    lifted while the seed design is evaluated (callers reset ``count``
    afterwards as well).
    """
    seed = _seed_int(cfg.master_seed, 0.0, 0, _ROLE_INIT)
    bits = random_batch(cfg.space, Dataset(cfg.space.total_bits), cfg.n_initial, seed)
    data = Dataset(cfg.space.total_bits)
    saved, objective.budget = objective.budget, None
    try:
        data.append(bits, objective.evaluate_batch(bits), loop=0)
    finally:
        objective.budget = saved
    return data


def _new_trace(cfg: RunConfig, sigma2: float | None, initial: Dataset) -> RunTrace:
    solver_echo = {
        "backend": cfg.solver.backend,
        "reads": cfg.solver.reads,
        "sweeps": cfg.solver.sweeps,
        "beta_start": cfg.solver.beta_start,
        "beta_end": cfg.solver.beta_end,
    }
    return RunTrace(
        label=arm_label(sigma2),
        sigma2=sigma2,
        master_seed=cfg.master_seed,
        lam=cfg.lam,
        orientation=cfg.objective.orientation,
        threshold=cfg.threshold,
        names=cfg.space.names,
        cardinalities=cfg.space.cardinalities,
        solver=solver_echo,
        initial_bits=[[int(b) for b in row] for row in initial.bits],
        initial_y=[float(v) for v in initial.y],
    )


def _fit_r2(model: QuboRidge, data: Dataset) -> float | None:
    model.fit(data.bits, data.y)
    try:
        return float(model.score(data.bits, data.y))
    except DegenerateTargetError:
        return None


def _check_accounting(trace: RunTrace, data: Dataset, space: DesignSpace,
                      n_before: int) -> None:
    # Invariants every run must satisfy; violations are always bugs.
    n_added = sum(len(r.y) for r in trace.records)
    assert len(data) == n_before + n_added, "dataset growth != proposals accepted"
    assert trace.n_evaluations == n_added, "objective evaluations != points appended"
    uniq = {row.tobytes() for row in data.bits}
    assert len(uniq) == len(data), "duplicate rows in dataset"
    assert bool(np.all(space.is_feasible(data.bits))), "infeasible point evaluated"


def run_bo(cfg: RunConfig, sigma2: float, initial: Dataset | None = None) -> RunTrace:
    """One optimization arm at a fixed posterior-sampling variance."""
    cfg.validate()
    space = cfg.space
    objective = cfg.objective.clone()
    if initial is None:
        initial = build_initial(cfg, objective)
        objective.count = 0  # count loop-phase evaluations only
    data = initial.copy()
    penalties = space.penalty_spec()
    model = QuboRidge(lam=cfg.lam, sigma2=sigma2)
    trace = _new_trace(cfg, sigma2, initial)
    n_before = len(data)

    for loop in range(1, cfg.n_loops + 1):
        r2 = _fit_r2(model, data)
        alpha_seed = _seed_int(cfg.master_seed, sigma2, loop, _ROLE_ALPHA)
        alpha = model.sample(np.random.default_rng(alpha_seed))
        problem = build_acquisition(alpha, penalties)
        pool = solve(problem, cfg.solver,
                     seed=_seed_int(cfg.master_seed, sigma2, loop, _ROLE_SOLVE))
        trace.solver_calls += 1
        batch, shortfall = select_batch(pool, space, data, cfg.batch_size)
        record = LoopRecord(
            loop=loop,
            r2=r2,
            alpha_seed=alpha_seed,
            alpha_sha=hashlib.sha256(alpha.tobytes()).hexdigest()[:16],
            pool_size=len(pool),
            shortfall=shortfall,
            proposals=[[int(b) for b in row] for row in batch],
            energies=[float(v) for v in problem.energy(batch)] if len(batch) else [],
            y=[],
            best_so_far=data.min_y(),
        )
        if len(batch):
            assert bool(np.all(space.is_feasible(batch))), "solver batch left the space"
            try:
                ys = objective.evaluate_batch(batch)
            except BudgetExceededError:
                logger.warning("%s: budget exhausted at loop %d", trace.label, loop)
                trace.aborted = True
                trace.records.append(record)
                break
            data.append(batch, ys, loop)
            trace.n_evaluations += len(ys)
            record.y = [float(v) for v in ys]
            record.best_so_far = data.min_y()
        trace.records.append(record)
        logger.info(
            "%s loop %02d: r2=%s pool=%d added=%d best=%g",
            trace.label, loop, "n/a" if r2 is None else f"{r2:.4f}",
            len(pool), len(record.y), record.best_so_far,
        )

    _check_accounting(trace, data, space, n_before)
    return trace


def run_baseline(cfg: RunConfig, initial: Dataset | None = None) -> RunTrace:
    """Random-proposal control arm: same accounting, no solver at all."""
    cfg.validate()
    space = cfg.space
    objective = cfg.objective.clone()
    if initial is None:
        initial = build_initial(cfg, objective)
        objective.count = 0
    data = initial.copy()
    model = QuboRidge(lam=cfg.lam, sigma2=0.0)
    trace = _new_trace(cfg, None, initial)
    n_before = len(data)

    for loop in range(1, cfg.n_loops + 1):
        r2 = _fit_r2(model, data)  # fitted for comparability, never sampled
        try:
            batch = random_batch(
                space, data, cfg.batch_size,
                seed=_seed_int(cfg.master_seed, None, loop, _ROLE_PROPOSE),
            )
            ys = objective.evaluate_batch(batch)
        except BudgetExceededError:
            logger.warning("baseline: budget exhausted at loop %d", loop)
            trace.aborted = True
            break
        data.append(batch, ys, loop)
        trace.n_evaluations += len(ys)
        trace.records.append(
            LoopRecord(
                loop=loop,
                r2=r2,
                alpha_seed=None,
                alpha_sha=None,
                pool_size=0,
                shortfall=False,
                proposals=[[int(b) for b in row] for row in batch],
                energies=[],
                y=[float(v) for v in ys],
                best_so_far=data.min_y(),
            )
        )

    assert trace.solver_calls == 0, "baseline must never call the solver"
    _check_accounting(trace, data, space, n_before)
    return trace


def run_sweep(cfg: RunConfig) -> list[RunTrace]:
    """All sigma2 arms plus the baseline, sharing one initial design."""
    cfg.validate()
    if cfg.initial is not None:
        initial = cfg.initial
        if initial.n_bits != cfg.space.total_bits:
            raise SchemaError(
                f"initial dataset has {initial.n_bits} bit columns, "
                f"space needs {cfg.space.total_bits}"
            )
        if not bool(np.all(cfg.space.is_feasible(initial.bits))):
            raise SchemaError("initial dataset contains infeasible rows")
    else:
        initial = build_initial(cfg, cfg.objective.clone())
    traces = [run_bo(cfg, s2, initial) for s2 in cfg.sigma2_grid]
    if cfg.include_baseline:
        traces.append(run_baseline(cfg, initial))
    return traces


def dataset_from_trace(trace: RunTrace) -> Dataset:
    """Rebuild the final evaluated dataset recorded in a trace."""
    data = Dataset(trace.n_bits)
    data.append(
        np.array(trace.initial_bits, dtype=np.uint8), trace.initial_y, loop=0
    )
    for rec in trace.records:
        if rec.proposals:
            data.append(np.array(rec.proposals, dtype=np.uint8), rec.y, loop=rec.loop)
    return data


# ----------------------------------------------------------------------
# trace persistence (JSON Lines: header record, loop records, footer)
# ----------------------------------------------------------------------


def write_trace(trace: RunTrace, path) -> None:
    path = Path(path)
    header = {
        "type": "run_header",
        "schema": TRACE_SCHEMA,
        "label": trace.label,
        "sigma2": trace.sigma2,
        "master_seed": trace.master_seed,
        "lam": trace.lam,
        "orientation": trace.orientation,
        "threshold": trace.threshold,
        "names": list(trace.names),
        "cardinalities": list(trace.cardinalities),
        "solver": trace.solver,
        "initial_bits": trace.initial_bits,
        "initial_y": trace.initial_y,
    }
    footer = {
        "type": "run_footer",
        "aborted": trace.aborted,
        "solver_calls": trace.solver_calls,
        "n_evaluations": trace.n_evaluations,
    }
    with path.open("w") as fh:
        fh.write(json.dumps(header) + "\n")
        for rec in trace.records:
            fh.write(json.dumps({"type": "loop", **asdict(rec)}) + "\n")
        fh.write(json.dumps(footer) + "\n")


def read_trace(path) -> RunTrace:
    path = Path(path)
    records = []
    header = None
    footer = None
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as err:
                raise SchemaError(f"{path}:{lineno}: {err}") from None
            kind = doc.get("type")
            if kind == "run_header":
                if doc.get("schema") != TRACE_SCHEMA:
                    raise SchemaError(
                        f"{path}: unsupported trace schema {doc.get('schema')!r}"
                    )
                header = doc
            elif kind == "loop":
                doc.pop("type")
                try:
                    records.append(LoopRecord(**doc))
                except TypeError as err:
                    raise SchemaError(f"{path}:{lineno}: bad loop record: {err}") from None
            elif kind == "run_footer":
                footer = doc
            else:
                raise SchemaError(f"{path}:{lineno}: unknown record type {kind!r}")
    if header is None:
        raise SchemaError(f"{path}: missing run_header record")
    trace = RunTrace(
        label=header["label"],
        sigma2=header["sigma2"],
        master_seed=header["master_seed"],
        lam=header["lam"],
        orientation=header["orientation"],
        threshold=header["threshold"],
        names=tuple(header["names"]),
        cardinalities=tuple(header["cardinalities"]),
        solver=header["solver"],
        initial_bits=header["initial_bits"],
        initial_y=header["initial_y"],
        records=records,
    )
    if footer is not None:
        trace.aborted = footer["aborted"]
        trace.solver_calls = footer["solver_calls"]
        trace.n_evaluations = footer["n_evaluations"]
    else:
        # interrupted run: recoverable up to the last complete loop
        trace.aborted = True
        trace.n_evaluations = sum(len(r.y) for r in records)
    return trace
