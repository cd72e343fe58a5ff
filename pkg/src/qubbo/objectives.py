"""Black-box objectives the optimizer can be pointed at.

All objectives share one calling convention: ``evaluate_batch`` takes
feasible bit vectors and returns internal values that the driver always
*minimizes* -- a maximize orientation is folded into a sign flip here,
and the reporting layer restores the user's sign.  Evaluations are
counted against an optional budget.

Synthetic kinds:

* ``synthetic_qubo``  -- a planted random QUBO; the surrogate can
  represent it exactly, so convergence checks have a known target.
* ``synthetic_deceptive`` -- a planted QUBO plus a parity term on three
  bits of distinct sites.  Three-bit parity is orthogonal to every
  constant/linear/pairwise feature under the uniform measure, so the
  quadratic surrogate cannot express it and treats it as noise; finding
  the good parity cells requires actually exploring.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

import csv

import numpy as np

from .acquisition import QuboProblem
from .exceptions import (
    BudgetExceededError,
    DimensionMismatchError,
    InvalidDensityError,
    MissingEntryError,
    SchemaError,
)
from .space import DesignSpace

__all__ = [
    "Objective",
    "SyntheticQuboObjective",
    "DeceptiveQuboObjective",
    "TabularObjective",
    "ObjectiveSpec",
    "make_synthetic",
    "load_table",
]

_ORIENTATIONS = ("minimize", "maximize")


class Objective:
    """Base class: orientation/sign handling, counting, budget, noise."""

    def __init__(
        self,
        n_bits: int,
        orientation: str = "minimize",
        noise_sigma: float = 0.0,
        noise_seed: int = 0,
        budget: int | None = None,
    ):
        if orientation not in _ORIENTATIONS:
            raise ValueError(f"orientation must be one of {_ORIENTATIONS}, got {orientation!r}")
        if noise_sigma < 0:
            raise ValueError(f"noise_sigma must be >= 0, got {noise_sigma}")
        self.n_bits = n_bits
        self.orientation = orientation
        self.noise_sigma = noise_sigma
        self.noise_seed = noise_seed
        self.budget = budget
        self.count = 0
        self._sign = -1.0 if orientation == "maximize" else 1.0
        self._noise_rng = np.random.default_rng(noise_seed)

    def _raw(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def evaluate_batch(self, X) -> np.ndarray:
        """Internal (minimize-oriented) values for a batch of bit rows."""
        arr = np.atleast_2d(np.asarray(X, dtype=np.uint8))
        if arr.shape[1] != self.n_bits:
            raise DimensionMismatchError(
                f"expected bit vectors of length {self.n_bits}, got shape {arr.shape}"
            )
        m = arr.shape[0]
        if self.budget is not None and self.count + m > self.budget:
            raise BudgetExceededError(
                f"evaluating {m} points would exceed budget {self.budget} "
                f"(already used {self.count})"
            )
        vals = self._sign * np.asarray(self._raw(arr), dtype=np.float64)
        if self.noise_sigma > 0:
            vals = vals + self._noise_rng.normal(0.0, self.noise_sigma, size=m)
        self.count += m
        return vals

    def evaluate(self, x) -> float:
        return float(self.evaluate_batch(np.atleast_2d(np.asarray(x)))[0])

    def to_user(self, internal_y: np.ndarray | float):
        """Map internal values back to the user's orientation."""
        return self._sign * np.asarray(internal_y) if np.ndim(internal_y) else self._sign * internal_y

    def clone(self) -> "Objective":
        """Fresh copy: zero evaluation count, noise stream rewound."""
        raise NotImplementedError


class SyntheticQuboObjective(Objective):
    """Planted QUBO ground truth (exactly representable by the surrogate)."""

    def __init__(self, problem: QuboProblem, **kwargs: Any):
        super().__init__(n_bits=problem.n_vars, **kwargs)
        self.problem = problem

    def _raw(self, X: np.ndarray) -> np.ndarray:
        return np.atleast_1d(self.problem.energy(X))

    def clone(self) -> "SyntheticQuboObjective":
        return SyntheticQuboObjective(
            self.problem,
            orientation=self.orientation,
            noise_sigma=self.noise_sigma,
            noise_seed=self.noise_seed,
            budget=self.budget,
        )


class DeceptiveQuboObjective(SyntheticQuboObjective):
    """Planted QUBO plus a parity trap on three distinct-site bits.

    Even parity of the trap bits adds ``+strength * scale``; odd parity
    subtracts it.  The term is invisible to a quadratic fit, so a purely
    exploitative loop keeps mispricing half the space.
    """

    def __init__(self, problem: QuboProblem, trap_bits: tuple[int, int, int],
                 trap_weight: float, **kwargs: Any):
        super().__init__(problem, **kwargs)
        self.trap_bits = tuple(int(b) for b in trap_bits)
        self.trap_weight = float(trap_weight)

    def _raw(self, X: np.ndarray) -> np.ndarray:
        base = super()._raw(X)
        parity = X[:, list(self.trap_bits)].sum(axis=1) % 2
        return base + self.trap_weight * (1.0 - 2.0 * parity)

    def clone(self) -> "DeceptiveQuboObjective":
        return DeceptiveQuboObjective(
            self.problem,
            self.trap_bits,
            self.trap_weight,
            orientation=self.orientation,
            noise_sigma=self.noise_sigma,
            noise_seed=self.noise_seed,
            budget=self.budget,
        )


class TabularObjective(Objective):
    """Lookup objective backed by a table of assignment -> value."""

    def __init__(self, space: DesignSpace, table: dict[tuple[int, ...], float],
                 **kwargs: Any):
        super().__init__(n_bits=space.total_bits, **kwargs)
        self.space = space
        self.table = table
        self.complete = len(table) == space.size

    def _raw(self, X: np.ndarray) -> np.ndarray:
        codes = np.atleast_2d(self.space.decode(X))
        out = np.empty(len(codes))
        for k, code in enumerate(codes):
            key = tuple(int(c) for c in code)
            try:
                out[k] = self.table[key]
            except KeyError:
                raise MissingEntryError(f"no table entry for assignment {key}") from None
        return out

    def clone(self) -> "TabularObjective":
        return TabularObjective(
            self.space,
            self.table,
            orientation=self.orientation,
            noise_sigma=self.noise_sigma,
            noise_seed=self.noise_seed,
            budget=self.budget,
        )


def make_synthetic(
    space: DesignSpace,
    kind: str = "synthetic_qubo",
    seed: int = 0,
    density: float = 1.0,
    scale: float = 1.0,
    noise_sigma: float = 0.0,
    strength: float = 2.0,
    orientation: str = "minimize",
    budget: int | None = None,
) -> Objective:
    """Draw a planted objective over the bits of ``space``.

    ``density`` is the probability that each pair coupling is present;
    coefficients are N(0, scale^2).  ``strength`` (deceptive kind only)
    sets the parity-trap weight to ``strength * scale``.
    """
    if not 0.0 <= density <= 1.0:
        raise InvalidDensityError(f"density must be in [0, 1], got {density}")
    n = space.total_bits
    rng = np.random.default_rng(seed)
    linear = rng.normal(size=n) * scale
    quadratic = {}
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < density:
                quadratic[(i, j)] = float(rng.normal() * scale)
    problem = QuboProblem(n_vars=n, linear=linear, quadratic=quadratic, offset=0.0)
    common = dict(
        orientation=orientation, noise_sigma=noise_sigma, noise_seed=seed, budget=budget
    )
    if kind == "synthetic_qubo":
        return SyntheticQuboObjective(problem, **common)
    if kind == "synthetic_deceptive":
        multi_bit_sites = [s for s in range(len(space.sites)) if space.sites[s].n_bits > 0]
        if len(multi_bit_sites) >= 3:
            sites = rng.choice(multi_bit_sites, size=3, replace=False)
            trap = tuple(
                space.offsets[s] + int(rng.integers(0, space.sites[s].n_bits))
                for s in sites
            )
        elif n >= 3:
            trap = tuple(int(b) for b in rng.choice(n, size=3, replace=False))
        else:
            raise ValueError("the deceptive kind needs at least 3 bits")
        return DeceptiveQuboObjective(problem, trap, strength * scale, **common)
    raise ValueError(f"unknown synthetic kind {kind!r}")


def load_table(
    path,
    space: DesignSpace,
    orientation: str = "minimize",
    noise_sigma: float = 0.0,
    seed: int = 0,
    budget: int | None = None,
) -> TabularObjective:
    """Read a value table: header is the site names plus ``y``."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    if not rows:
        raise SchemaError(f"{path}: empty table")
    header = [h.strip() for h in rows[0]]
    expected = list(space.names) + ["y"]
    if header != expected:
        raise SchemaError(
            f"{path}: header must be {','.join(expected)}; got {','.join(header)}"
        )
    cards = space.cardinalities
    table: dict[tuple[int, ...], float] = {}
    for lineno, rec in enumerate(rows[1:], start=2):
        if len(rec) != len(expected):
            raise SchemaError(f"{path}:{lineno}: expected {len(expected)} fields")
        try:
            code = tuple(int(v) for v in rec[:-1])
            val = float(rec[-1])
        except ValueError as err:
            raise SchemaError(f"{path}:{lineno}: {err}") from None
        if any(not 0 <= c < k for c, k in zip(code, cards)):
            raise SchemaError(f"{path}:{lineno}: assignment {code} outside the space")
        if code in table:
            raise SchemaError(f"{path}:{lineno}: duplicate assignment {code}")
        table[code] = val
    return TabularObjective(
        space, table, orientation=orientation, noise_sigma=noise_sigma,
        noise_seed=seed, budget=budget,
    )


@dataclass
class ObjectiveSpec:
    """Declarative objective description, as it appears in run configs."""

    kind: str
    orientation: str = "minimize"
    seed: int = 0
    density: float = 1.0
    scale: float = 1.0
    noise_sigma: float = 0.0
    strength: float = 2.0
    budget: int | None = None
    table: str | None = None

    def build(self, space: DesignSpace) -> Objective:
        if self.kind == "tabular":
            if self.table is None:
                raise SchemaError("tabular objective requires a table path")
            return load_table(
                self.table, space,
                orientation=self.orientation, noise_sigma=self.noise_sigma,
                seed=self.seed, budget=self.budget,
            )
        return make_synthetic(
            space, kind=self.kind, seed=self.seed, density=self.density,
            scale=self.scale, noise_sigma=self.noise_sigma, strength=self.strength,
            orientation=self.orientation, budget=self.budget,
        )

    def with_budget(self, budget: int | None) -> "ObjectiveSpec":
        return replace(self, budget=budget)
