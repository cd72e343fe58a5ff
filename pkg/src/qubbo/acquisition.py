"""QUBO container, acquisition construction, and the text interchange format.

``build_acquisition`` turns one sampled coefficient vector into the QUBO
handed to a solver: the sampled constant/linear/pair terms verbatim,
except that every penalty pair's coefficient is overwritten with a large
positive constant C so that minima avoid the infeasible codes those
pairs block.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .exceptions import DimensionMismatchError, SchemaError
from .space import PenaltySpec
from .surrogate import FeatureMap, n_coefficients

__all__ = ["QuboProblem", "build_acquisition", "write_qubo", "read_qubo"]


@dataclass
class QuboProblem:
    """A QUBO: E(x) = offset + sum_i linear_i x_i + sum_{i<j} q_ij x_i x_j."""

    n_vars: int
    linear: np.ndarray
    quadratic: dict[tuple[int, int], float]
    offset: float = 0.0
    _qi: np.ndarray = field(init=False, repr=False)
    _qj: np.ndarray = field(init=False, repr=False)
    _qv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.linear = np.asarray(self.linear, dtype=np.float64)
        if self.linear.shape != (self.n_vars,):
            raise DimensionMismatchError(
                f"linear terms have shape {self.linear.shape}, expected ({self.n_vars},)"
            )
        for i, j in self.quadratic:
            if not (0 <= i < j < self.n_vars):
                raise DimensionMismatchError(
                    f"quadratic index ({i}, {j}) invalid for {self.n_vars} variables"
                )
        items = sorted(self.quadratic.items())
        self._qi = np.array([i for (i, _), _ in items], dtype=np.int64)
        self._qj = np.array([j for (_, j), _ in items], dtype=np.int64)
        self._qv = np.array([v for _, v in items], dtype=np.float64)

    def energy(self, x) -> float | np.ndarray:
        """Energy of one bit vector or a batch of rows."""
        arr = np.asarray(x)
        single = arr.ndim == 1
        arr = np.atleast_2d(arr)
        if arr.shape[1] != self.n_vars:
            raise DimensionMismatchError(
                f"expected vectors of length {self.n_vars}, got shape {np.asarray(x).shape}"
            )
        if not np.all((arr == 0) | (arr == 1)):
            raise ValueError("bit vectors must contain only 0 and 1")
        arr = arr.astype(np.float64, copy=False)
        vals = self.offset + arr @ self.linear
        if self._qv.size:
            vals = vals + (arr[:, self._qi] * arr[:, self._qj]) @ self._qv
        return float(vals[0]) if single else vals

    def dense(self) -> np.ndarray:
        """Upper-triangular matrix view: linear terms on the diagonal."""
        q = np.diag(self.linear).astype(np.float64)
        if self._qv.size:
            q[self._qi, self._qj] = self._qv
        return q


def build_acquisition(alpha, penalties: PenaltySpec) -> QuboProblem:
    """Assemble the solver-facing QUBO from sampled coefficients.

    The coefficient vector must have length 1 + N + N(N-1)/2 for
    N = ``penalties.n_bits``; its constant becomes the offset and its
    pair terms fill the quadratic map.  Each penalty pair's coefficient
    is then replaced by a shared constant C = 2 * max(alpha).  When that
    C would not dominate a pair's own sampled coefficient, C is lifted to
    max over the offending pairs of 2 * max(|pair coefficient|,
    |min(alpha)|) + 1, so the penalty always wins.
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    n = penalties.n_bits
    if alpha.shape != (n_coefficients(n),):
        raise DimensionMismatchError(
            f"expected {n_coefficients(n)} coefficients for {n} bits, got shape {alpha.shape}"
        )
    fm = FeatureMap(n)
    const, linear, pair_vals = fm.split(alpha)
    quadratic = {k: v for k, v in pair_vals.items() if v != 0.0}

    c = 2.0 * float(alpha.max())
    lift = [
        2.0 * max(abs(pair_vals[p]), abs(float(alpha.min()))) + 1.0
        for p in penalties.pairs
        if c <= pair_vals[p]
    ]
    if lift:
        c = max(lift)
    for p in penalties.pairs:
        quadratic[p] = c
    return QuboProblem(n_vars=n, linear=linear, quadratic=quadratic, offset=const)


# ----------------------------------------------------------------------
# text format: first line n_vars, then "i j value" triples (i == j rows
# are linear terms), then a trailing "offset <value>" line.
# ----------------------------------------------------------------------


def write_qubo(problem: QuboProblem, path) -> None:
    """Write a QUBO in the sparse text interchange format."""
    path = Path(path)
    lines = [str(problem.n_vars)]
    for i, v in enumerate(problem.linear):
        if v != 0.0:
            lines.append(f"{i} {i} {float(v)!r}")
    for (i, j), v in sorted(problem.quadratic.items()):
        if v != 0.0:
            lines.append(f"{i} {j} {float(v)!r}")
    lines.append(f"offset {float(problem.offset)!r}")
    path.write_text("\n".join(lines) + "\n")


def read_qubo(path) -> QuboProblem:
    """Parse the text format back into a QuboProblem."""
    path = Path(path)
    tokens: list[list[str]] = []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens.append([str(lineno)] + line.split())
    if not tokens:
        raise SchemaError(f"{path}: empty QUBO file")
    head = tokens[0]
    if len(head) != 2:
        raise SchemaError(f"{path}:{head[0]}: first line must be the variable count")
    try:
        n_vars = int(head[1])
    except ValueError:
        raise SchemaError(f"{path}:{head[0]}: bad variable count {head[1]!r}") from None
    linear = np.zeros(n_vars)
    quadratic: dict[tuple[int, int], float] = {}
    offset = 0.0
    for rec in tokens[1:]:
        lineno, fields = rec[0], rec[1:]
        if fields[0] == "offset":
            if len(fields) != 2:
                raise SchemaError(f"{path}:{lineno}: offset line needs one value")
            offset = _parse_float(path, lineno, fields[1])
            continue
        if len(fields) != 3:
            raise SchemaError(f"{path}:{lineno}: expected 'i j value'")
        try:
            i, j = int(fields[0]), int(fields[1])
        except ValueError:
            raise SchemaError(f"{path}:{lineno}: bad indices {fields[:2]}") from None
        v = _parse_float(path, lineno, fields[2])
        if i == j:
            if not 0 <= i < n_vars:
                raise SchemaError(f"{path}:{lineno}: index {i} out of range")
            linear[i] += v
        else:
            lo, hi = min(i, j), max(i, j)
            if not 0 <= lo < hi < n_vars:
                raise SchemaError(f"{path}:{lineno}: indices ({i}, {j}) out of range")
            quadratic[(lo, hi)] = quadratic.get((lo, hi), 0.0) + v
    return QuboProblem(n_vars=n_vars, linear=linear, quadratic=quadratic, offset=offset)


def _parse_float(path: Path, lineno: Any, token: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise SchemaError(f"{path}:{lineno}: bad value {token!r}") from None
