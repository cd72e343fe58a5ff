"""Evaluated-point storage with duplicate tracking and CSV persistence.

CSV schema: header ``x1,...,xN,y,loop`` where loop 0 marks initial rows
and loop t >= 1 the batch proposed at loop t.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .exceptions import DuplicateRowError, SchemaError

__all__ = ["Dataset", "read_dataset_rows"]


class Dataset:
    """Bit vectors with their evaluated targets, duplicate-free by construction."""

    def __init__(self, n_bits: int):
        self.n_bits = n_bits
        self.bits = np.empty((0, n_bits), dtype=np.uint8)
        self.y = np.empty(0, dtype=np.float64)
        self.loop = np.empty(0, dtype=np.int64)
        self._seen: set[bytes] = set()

    def __len__(self) -> int:
        return self.bits.shape[0]

    def _rowbytes(self, arr: np.ndarray) -> list[bytes]:
        return [np.ascontiguousarray(r, dtype=np.uint8).tobytes() for r in arr]

    def contains(self, bits) -> np.ndarray | bool:
        """Membership per row; scalar for a single vector."""
        arr = np.asarray(bits, dtype=np.uint8)
        single = arr.ndim == 1
        arr = np.atleast_2d(arr)
        out = np.array([b in self._seen for b in self._rowbytes(arr)])
        return bool(out[0]) if single else out

    def append(self, bits, y, loop: int) -> None:
        """Append a batch of rows, rejecting any duplicate (old or within the batch)."""
        arr = np.atleast_2d(np.asarray(bits, dtype=np.uint8))
        yv = np.atleast_1d(np.asarray(y, dtype=np.float64))
        if arr.shape[0] != yv.shape[0] or arr.shape[1] != self.n_bits:
            raise ValueError(
                f"append shapes {arr.shape} / {yv.shape} do not match n_bits={self.n_bits}"
            )
        keys = self._rowbytes(arr)
        batch_seen: set[bytes] = set()
        for k in keys:
            if k in self._seen or k in batch_seen:
                raise DuplicateRowError("bit vector already present in dataset")
            batch_seen.add(k)
        self.bits = np.vstack([self.bits, arr])
        self.y = np.concatenate([self.y, yv])
        self.loop = np.concatenate([self.loop, np.full(len(yv), loop, dtype=np.int64)])
        self._seen |= batch_seen

    def copy(self) -> "Dataset":
        out = Dataset(self.n_bits)
        out.bits = self.bits.copy()
        out.y = self.y.copy()
        out.loop = self.loop.copy()
        out._seen = set(self._seen)
        return out

    def min_y(self) -> float:
        if len(self) == 0:
            raise ValueError("empty dataset has no minimum")
        return float(self.y.min())

    # ------------------------------------------------------------------
    # persistence
    # ------------------------------------------------------------------

    def to_csv(self, path) -> None:
        path = Path(path)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"x{i + 1}" for i in range(self.n_bits)] + ["y", "loop"])
            for row, yv, lp in zip(self.bits, self.y, self.loop):
                writer.writerow([int(b) for b in row] + [repr(float(yv)), int(lp)])

    @classmethod
    def from_csv(cls, path, n_bits: int | None = None) -> "Dataset":
        header, rows = read_dataset_rows(path)
        width = len(header) - 2
        if n_bits is not None and width != n_bits:
            raise SchemaError(f"expected {n_bits} bit columns, found {width}")
        out = cls(width)
        for idx, (bits, yv, lp) in enumerate(rows):
            try:
                out.append(np.array([bits], dtype=np.uint8), [yv], lp)
            except DuplicateRowError as err:
                raise DuplicateRowError(f"row {idx + 2}: {err}") from None
        return out


def read_dataset_rows(path) -> tuple[list[str], list[tuple[list[int], float, int]]]:
    """Raw dataset reader used by loading and by validation.

    Returns the header and parsed rows without duplicate or feasibility
    checks, so a validator can report *all* problems instead of stopping
    at the first.  Raises SchemaError for structural problems (bad
    header, non-binary bits, non-numeric y).
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if len(header) < 3 or header[-2:] != ["y", "loop"]:
            raise SchemaError(
                f"{path}: header must be x1..xN,y,loop; got {','.join(header)}"
            )
        n = len(header) - 2
        expected = [f"x{i + 1}" for i in range(n)]
        if header[:n] != expected:
            raise SchemaError(f"{path}: bit columns must be named x1..x{n}")
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec or (len(rec) == 1 and not rec[0].strip()):
                continue
            if len(rec) != n + 2:
                raise SchemaError(f"{path}:{lineno}: expected {n + 2} fields, got {len(rec)}")
            try:
                bits = [int(v) for v in rec[:n]]
                yv = float(rec[n])
                lp = int(rec[n + 1])
            except ValueError as err:
                raise SchemaError(f"{path}:{lineno}: {err}") from None
            if any(b not in (0, 1) for b in bits):
                raise SchemaError(f"{path}:{lineno}: bit values must be 0 or 1")
            rows.append((bits, yv, lp))
    return header, rows
