"""QUBO solvers and sample-pool handling.

Two built-in backends share one contract: ``solve`` returns a
:class:`SamplePool` of distinct states sorted by energy (ties broken
lexicographically by bit string), with energies recomputed from the
problem so pools are always re-evaluable.

* ``exhaustive`` enumerates every state (up to 30 variables) and keeps
  the best ``max(3000, 10 * reads)``; below that cap it returns the full
  ranking, which makes small-space runs exactly reproducible references.
* ``simulated_annealing`` runs ``reads`` independent single-flip
  Metropolis chains under a geometric inverse-temperature schedule, all
  chains stepped together as one vectorized array.

A third backend, ``external``, delegates to a user-supplied adapter
callable -- see :class:`FileExchangeAdapter` for a file-based one -- and
re-validates whatever comes back (dedupe, re-energize, sort, cap).
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .acquisition import QuboProblem
from .dataset import Dataset
from .exceptions import (
    ConfigError,
    DimensionMismatchError,
    InvalidScheduleError,
    ProblemTooLargeError,
    SchemaError,
    SpaceExhaustedError,
)
from .space import DesignSpace

__all__ = [
    "SamplePool",
    "SolverConfig",
    "solve",
    "select_batch",
    "random_batch",
    "write_pool_csv",
    "read_pool_csv",
    "FileExchangeAdapter",
]

logger = logging.getLogger(__name__)

_MAX_EXHAUSTIVE_VARS = 30
_ENUM_CHUNK = 1 << 18


@dataclass
class SamplePool:
    """Distinct candidate states ranked by energy.

    ``bits`` has shape (n_samples, n_vars); rows are unique, sorted by
    ``energies`` ascending with lexicographic bit order breaking ties.
    ``multiplicities`` counts how often each state was produced.
    """

    n_vars: int
    bits: np.ndarray
    energies: np.ndarray
    multiplicities: np.ndarray
    metadata: dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return self.bits.shape[0]


@dataclass
class SolverConfig:
    """Backend choice plus annealing knobs.

    ``beta_start``/``beta_end`` default to an automatic range derived
    from the problem's per-bit energy scale.  ``adapter`` is required by
    the ``external`` backend: a callable ``(problem, seed) -> SamplePool``.
    """

    backend: str = "simulated_annealing"
    reads: int = 300
    sweeps: int = 1000
    beta_start: float | None = None
    beta_end: float | None = None
    adapter: Callable[[QuboProblem, int], SamplePool] | None = None

    def pool_cap(self) -> int:
        return max(3000, 10 * self.reads)


def _lex_energy_order(bits: np.ndarray, energies: np.ndarray) -> np.ndarray:
    """Sort order: energy ascending, then bit string lexicographic."""
    keys = [bits[:, j] for j in range(bits.shape[1] - 1, -1, -1)]
    keys.append(energies)
    return np.lexsort(keys)

def _finalize_pool(
    problem: QuboProblem,
    bits: np.ndarray,
    multiplicities: np.ndarray,
    cap: int,
    metadata: dict[str, Any],
) -> SamplePool:
    """Merge duplicates, recompute energies, sort, truncate to cap."""
    bits = np.ascontiguousarray(np.atleast_2d(bits), dtype=np.uint8)
    uniq, inverse = np.unique(bits, axis=0, return_inverse=True)
    counts = np.zeros(len(uniq), dtype=np.int64)
    np.add.at(counts, inverse, multiplicities)
    energies = np.atleast_1d(np.asarray(problem.energy(uniq), dtype=np.float64))
    order = _lex_energy_order(uniq, energies)[:cap]
    return SamplePool(
        n_vars=problem.n_vars,
        bits=uniq[order],
        energies=energies[order],
        multiplicities=counts[order],
        metadata=metadata,
    )


def solve(problem: QuboProblem, config: SolverConfig, seed: int = 0) -> SamplePool:
    """Run the configured backend and return a validated sample pool."""
    if config.reads < 1:
        raise ConfigError(f"solver.reads must be >= 1, got {config.reads}")
    if config.backend == "exhaustive":
        return _solve_exhaustive(problem, config, seed)
    if config.backend == "simulated_annealing":
        return _solve_annealing(problem, config, seed)
    if config.backend == "external":
        if config.adapter is None:
            raise ConfigError("solver.backend 'external' requires an adapter")
        pool = config.adapter(problem, seed)
        metadata = dict(pool.metadata)
        metadata.setdefault("backend", "external")
        return _finalize_pool(
            problem, pool.bits, pool.multiplicities, config.pool_cap(), metadata
        )
    raise ConfigError(f"unknown solver.backend {config.backend!r}")


# ----------------------------------------------------------------------
# exhaustive enumeration
# ----------------------------------------------------------------------


def _states_to_bits(states: np.ndarray, n: int) -> np.ndarray:
    shifts = np.arange(n - 1, -1, -1, dtype=np.uint64)
    return ((states[:, None] >> shifts) & 1).astype(np.uint8)


def _solve_exhaustive(problem: QuboProblem, config: SolverConfig, seed: int) -> SamplePool:
    n = problem.n_vars
    if n > _MAX_EXHAUSTIVE_VARS:
        raise ProblemTooLargeError(
            f"exhaustive backend supports up to {_MAX_EXHAUSTIVE_VARS} variables, got {n}"
        )
    cap = config.pool_cap()
    total = 1 << n
    best_states = np.empty(0, dtype=np.uint64)
    best_energies = np.empty(0, dtype=np.float64)
    for start in range(0, total, _ENUM_CHUNK):
        states = np.arange(start, min(start + _ENUM_CHUNK, total), dtype=np.uint64)
        energies = np.asarray(problem.energy(_states_to_bits(states, n)))
        states = np.concatenate([best_states, states])
        energies = np.concatenate([best_energies, energies])
        if len(states) > cap:
            # np.argpartition alone is unstable under ties; order by
            # (energy, state) so the kept set is deterministic.  State
            # order equals lexicographic bit order by construction.
            order = np.lexsort((states, energies))[:cap]
        else:
            order = np.lexsort((states, energies))
        best_states, best_energies = states[order], energies[order]
    bits = _states_to_bits(best_states, n)
    return SamplePool(
        n_vars=n,
        bits=bits,
        energies=best_energies,
        multiplicities=np.ones(len(bits), dtype=np.int64),
        metadata={
            "backend": "exhaustive",
            "n_enumerated": total,
            "complete": total <= cap,
            "seed": seed,
        },
    )


# ----------------------------------------------------------------------
# simulated annealing
# ----------------------------------------------------------------------


def _auto_beta_range(linear: np.ndarray, qsym: np.ndarray) -> tuple[float, float]:
    # Per-bit bound on |dE| for a single flip; hot end accepts the worst
    # uphill move with prob ~1/2, cold end the gentlest with prob 1e-2.
    bounds = np.abs(linear) + np.abs(qsym).sum(axis=1)
    positive = bounds[bounds > 0]
    if positive.size == 0:
        return 1.0, 2.0
    beta_start = float(np.log(2.0) / positive.max())
    beta_end = float(np.log(100.0) / positive.min())
    if beta_end <= beta_start:
        beta_end = 2.0 * beta_start
    return beta_start, beta_end


def _solve_annealing(problem: QuboProblem, config: SolverConfig, seed: int) -> SamplePool:
    if config.sweeps < 1:
        raise InvalidScheduleError(f"sweeps must be >= 1, got {config.sweeps}")
    n = problem.n_vars
    linear = problem.linear
    qsym = problem.dense()
    np.fill_diagonal(qsym, 0.0)
    qsym = qsym + qsym.T

    if (config.beta_start is None) != (config.beta_end is None):
        raise InvalidScheduleError("give both beta_start and beta_end, or neither")
    if config.beta_start is None:
        beta_start, beta_end = _auto_beta_range(linear, qsym)
    else:
        beta_start, beta_end = float(config.beta_start), float(config.beta_end)
        if beta_start <= 0 or beta_end <= beta_start:
            raise InvalidScheduleError(
                f"need 0 < beta_start < beta_end, got ({beta_start}, {beta_end})"
            )
    betas = np.geomspace(beta_start, beta_end, config.sweeps)

    rng = np.random.default_rng(seed)
    reads = config.reads
    x = rng.integers(0, 2, size=(reads, n), dtype=np.int8)
    for beta in betas:
        for j in range(n):
            de = (1 - 2 * x[:, j]) * (linear[j] + x @ qsym[:, j])
            accept = rng.random(reads) < np.exp(-beta * np.maximum(de, 0.0))
            x[:, j] ^= accept
    pool = _finalize_pool(
        problem,
        x.astype(np.uint8),
        np.ones(reads, dtype=np.int64),
        config.pool_cap(),
        {
            "backend": "simulated_annealing",
            "reads": reads,
            "sweeps": config.sweeps,
            "beta_range": [beta_start, beta_end],
            "seed": seed,
        },
    )
    logger.debug(
        "annealed %d reads over %d sweeps: %d distinct states, best %g",
        reads, config.sweeps, len(pool), pool.energies[0],
    )
    return pool


# ----------------------------------------------------------------------
# batch selection
# ----------------------------------------------------------------------


def select_batch(
    pool: SamplePool, space: DesignSpace, data: Dataset, batch_size: int
) -> tuple[np.ndarray, bool]:
    """Top candidates after screening: feasible, unseen, distinct.

    Walks the pool in rank order and keeps vectors that decode to valid
    categories and are not already in the dataset.  Returns the kept bits
    (possibly fewer than ``batch_size``) and a shortfall flag.
    """
    if pool.n_vars != space.total_bits:
        raise DimensionMismatchError(
            f"pool width {pool.n_vars} != space bits {space.total_bits}"
        )
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    if len(pool) == 0:
        return np.empty((0, space.total_bits), dtype=np.uint8), True
    keep = space.is_feasible(pool.bits) & ~np.atleast_1d(data.contains(pool.bits))
    selected = pool.bits[keep][:batch_size]
    return selected.copy(), len(selected) < batch_size


def random_batch(
    space: DesignSpace, data: Dataset, batch_size: int, seed: int = 0
) -> np.ndarray:
    """Uniformly random feasible vectors, unseen and distinct.

    Raises
    ------
    SpaceExhaustedError
        If fewer than ``batch_size`` unseen feasible points remain.
    """
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    remaining = space.size - len(data)
    if remaining < batch_size:
        raise SpaceExhaustedError(
            f"requested {batch_size} new points but only {remaining} remain unseen"
        )
    rng = np.random.default_rng(seed)
    cards = np.array(space.cardinalities, dtype=np.int64)
    chosen: list[np.ndarray] = []
    chosen_keys: set[bytes] = set()
    for _ in range(200):
        m = max(4 * batch_size, 16)
        assigns = rng.integers(0, cards, size=(m, len(cards)))
        bits = space.encode(assigns)
        for row in bits[~np.atleast_1d(data.contains(bits))]:
            key = row.tobytes()
            if key in chosen_keys:
                continue
            chosen.append(row)
            chosen_keys.add(key)
            if len(chosen) == batch_size:
                return np.stack(chosen)
    # Rejection sampling stalled (nearly exhausted space): enumerate.
    logger.debug("rejection sampling stalled; enumerating remaining space")
    pool = []
    for start in range(0, space.size, _ENUM_CHUNK):
        idx = np.arange(start, min(start + _ENUM_CHUNK, space.size), dtype=np.int64)
        assigns = np.empty((len(idx), len(cards)), dtype=np.int64)
        rem = idx.copy()
        for s in range(len(cards) - 1, -1, -1):
            assigns[:, s] = rem % cards[s]
            rem //= cards[s]
        bits = space.encode(assigns)
        fresh = bits[~np.atleast_1d(data.contains(bits))]
        pool.extend(row for row in fresh if row.tobytes() not in chosen_keys)
    need = batch_size - len(chosen)
    pick = rng.choice(len(pool), size=need, replace=False)
    chosen.extend(pool[int(k)] for k in pick)
    return np.stack(chosen)


# ----------------------------------------------------------------------
# sample-pool CSV interchange
# ----------------------------------------------------------------------

_POOL_SCHEMA_LINE = "# qubbo sample-pool schema=1"


def write_pool_csv(pool: SamplePool, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(_POOL_SCHEMA_LINE + "\n")
        writer = csv.writer(fh)
        writer.writerow(
            [f"x{i + 1}" for i in range(pool.n_vars)] + ["energy", "multiplicity"]
        )
        for row, e, m in zip(pool.bits, pool.energies, pool.multiplicities):
            writer.writerow([int(b) for b in row] + [repr(float(e)), int(m)])


def read_pool_csv(path) -> SamplePool:
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    if not rows:
        raise SchemaError(f"{path}: empty sample pool")
    header = [h.strip() for h in rows[0]]
    if len(header) < 3 or header[-2:] != ["energy", "multiplicity"]:
        raise SchemaError(f"{path}: header must be x1..xN,energy,multiplicity")
    n = len(header) - 2
    bits, energies, mults = [], [], []
    for rec in rows[1:]:
        if len(rec) != n + 2:
            raise SchemaError(f"{path}: row has {len(rec)} fields, expected {n + 2}")
        try:
            bits.append([int(v) for v in rec[:n]])
            energies.append(float(rec[n]))
            mults.append(int(rec[n + 1]))
        except ValueError as err:
            raise SchemaError(f"{path}: {err}") from None
    arr = np.array(bits, dtype=np.uint8)
    if arr.size and not np.all((arr == 0) | (arr == 1)):
        raise SchemaError(f"{path}: bit values must be 0 or 1")
    return SamplePool(
        n_vars=n,
        bits=arr.reshape(len(bits), n),
        energies=np.array(energies, dtype=np.float64),
        multiplicities=np.array(mults, dtype=np.int64),
        metadata={"source": str(path)},
    )


@dataclass
class FileExchangeAdapter:
    """External-solver boundary through a shared directory.

    Calling the adapter writes the QUBO (text format) to
    ``exchange_dir/problem_name`` and expects an out-of-process solver to
    have produced ``exchange_dir/samples_name`` as a sample-pool CSV.
    ``solve`` re-validates whatever is read, so external energies may be
    stale or missing.
    """

    exchange_dir: Path
    problem_name: str = "problem.qubo"
    samples_name: str = "samples.csv"

    def __call__(self, problem: QuboProblem, seed: int) -> SamplePool:
        from .acquisition import write_qubo

        exchange = Path(self.exchange_dir)
        exchange.mkdir(parents=True, exist_ok=True)
        write_qubo(problem, exchange / self.problem_name)
        samples = exchange / self.samples_name
        if not samples.exists():
            raise FileNotFoundError(
                f"external solver response not found: {samples} "
                f"(problem written to {exchange / self.problem_name})"
            )
        return read_pool_csv(samples)
