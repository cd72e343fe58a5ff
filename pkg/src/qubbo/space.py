"""Categorical design spaces and their binary encoding.

A design space is an ordered list of sites, each taking one of ``k``
categories.  Every site is packed into ``ceil(log2(k))`` bits, most
significant bit first, and the site blocks are concatenated into one bit
vector.  When ``k`` is not a power of two some bit patterns decode to
codes ``>= k``; those vectors are infeasible, and :meth:`DesignSpace.penalty_spec`
derives the quadratic penalty pairs that exclude (most of) them inside a
QUBO, with the remainder listed for post-solve screening.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import CategoryOutOfRangeError, LengthMismatchError

__all__ = ["SiteSpec", "DesignSpace", "PenaltySpec", "SiteBinaryEncoder"]


@dataclass(frozen=True)
class SiteSpec:
    """One categorical site: a name and the number of categories."""

    name: str
    cardinality: int

    def __post_init__(self) -> None:
        if self.cardinality < 1:
            raise ValueError(
                f"site {self.name!r}: cardinality must be >= 1, got {self.cardinality}"
            )

    @property
    def n_bits(self) -> int:
        """Bits needed to encode this site (0 for a single-category site)."""
        return max(int(math.ceil(math.log2(self.cardinality))), 0) if self.cardinality > 1 else 0


@dataclass(frozen=True)
class PenaltySpec:
    """Penalty structure for the infeasible codes of a space.

    ``pairs`` lists global bit-index pairs ``(i, j)`` (``i < j``, both in
    the same site) such that any vector with both bits set decodes to an
    infeasible code no matter what the remaining bits are.  Setting a
    large positive coefficient on each pair therefore excludes those
    vectors from a QUBO minimum without touching any feasible vector.
    ``residual_codes[s]`` holds the infeasible codes of site ``s`` that no
    pair covers; they must be screened after solving.
    """

    n_bits: int
    pairs: tuple[tuple[int, int], ...]
    pair_sites: tuple[int, ...]
    residual_codes: tuple[tuple[int, ...], ...]


class DesignSpace:
    """An ordered collection of categorical sites with a fixed bit layout.

    Parameters
    ----------
    sites : sequence of SiteSpec
        The sites in order.  Each occupies a contiguous bit block.

    Attributes
    ----------
    total_bits : int
        Length of the concatenated bit vector.
    size : int
        Number of feasible assignments (product of cardinalities).
    offsets : tuple of int
        Starting bit index of each site's block.
    """

    def __init__(self, sites: Sequence[SiteSpec]):
        if len(sites) == 0:
            raise ValueError("a design space needs at least one site")
        self.sites = tuple(sites)
        offsets = []
        pos = 0
        for site in self.sites:
            offsets.append(pos)
            pos += site.n_bits
        self.offsets = tuple(offsets)
        self.total_bits = pos
        self.size = int(np.prod([s.cardinality for s in self.sites], dtype=object))

    @classmethod
    def from_cardinalities(
        cls, cardinalities: Sequence[int], names: Sequence[str] | None = None
    ) -> "DesignSpace":
        """Build a space from cardinalities, naming sites s1..sK by default."""
        if names is None:
            names = [f"s{i + 1}" for i in range(len(cardinalities))]
        if len(names) != len(cardinalities):
            raise LengthMismatchError(
                f"got {len(names)} names for {len(cardinalities)} cardinalities"
            )
        return cls([SiteSpec(n, int(k)) for n, k in zip(names, cardinalities)])

    @property
    def cardinalities(self) -> tuple[int, ...]:
        return tuple(s.cardinality for s in self.sites)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.sites)

    def __repr__(self) -> str:
        inner = ", ".join(f"{s.name}:{s.cardinality}" for s in self.sites)
        return f"DesignSpace({inner}; {self.total_bits} bits)"

    def __eq__(self, other: Any) -> bool:
        return isinstance(other, DesignSpace) and self.sites == other.sites

    # ------------------------------------------------------------------
    # encoding / decoding
    # ------------------------------------------------------------------

    def _as_assignment_array(self, assignments: Any) -> tuple[np.ndarray, bool]:
        arr = np.asarray(assignments)
        single = arr.ndim == 1
        if single:
            arr = arr[None, :]
        if arr.ndim != 2 or arr.shape[1] != len(self.sites):
            raise LengthMismatchError(
                f"expected {len(self.sites)} categories per assignment, "
                f"got shape {np.asarray(assignments).shape}"
            )
        if not np.issubdtype(arr.dtype, np.integer):
            if np.any(arr != np.floor(arr)):
                raise CategoryOutOfRangeError("category indices must be integers")
            arr = arr.astype(np.int64)
        return arr.astype(np.int64, copy=False), single

    def _as_bit_array(self, bits: Any) -> tuple[np.ndarray, bool]:
        arr = np.asarray(bits)
        single = arr.ndim == 1
        if single:
            arr = arr[None, :]
        if arr.ndim != 2 or arr.shape[1] != self.total_bits:
            raise LengthMismatchError(
                f"expected bit vectors of length {self.total_bits}, "
                f"got shape {np.asarray(bits).shape}"
            )
        if not np.all((arr == 0) | (arr == 1)):
            raise ValueError("bit vectors must contain only 0 and 1")
        return arr.astype(np.uint8, copy=False), single

    def encode(self, assignments: Any) -> np.ndarray:
        """Encode category assignments into bit vectors.

        Accepts a single assignment of shape ``(n_sites,)`` or a batch of
        shape ``(m, n_sites)`` and returns bits of shape ``(total_bits,)``
        or ``(m, total_bits)`` accordingly.
        """
        arr, single = self._as_assignment_array(assignments)
        cards = np.array(self.cardinalities)
        if np.any(arr < 0) or np.any(arr >= cards):
            bad = np.argwhere((arr < 0) | (arr >= cards))[0]
            raise CategoryOutOfRangeError(
                f"assignment {bad[0]}: site {self.sites[bad[1]].name!r} got "
                f"category {arr[tuple(bad)]} outside [0, {cards[bad[1]] - 1}]"
            )
        out = np.zeros((arr.shape[0], self.total_bits), dtype=np.uint8)
        for s, site in enumerate(self.sites):
            b = site.n_bits
            if b == 0:
                continue
            shifts = np.arange(b - 1, -1, -1)  # MSB first
            out[:, self.offsets[s] : self.offsets[s] + b] = (
                (arr[:, s : s + 1] >> shifts) & 1
            ).astype(np.uint8)
        return out[0] if single else out

    def codes(self, bits: Any) -> np.ndarray:
        """Per-site integer codes of bit vectors (may exceed cardinality - 1)."""
        arr, single = self._as_bit_array(bits)
        out = np.zeros((arr.shape[0], len(self.sites)), dtype=np.int64)
        for s, site in enumerate(self.sites):
            b = site.n_bits
            if b == 0:
                continue
            weights = 1 << np.arange(b - 1, -1, -1)
            out[:, s] = arr[:, self.offsets[s] : self.offsets[s] + b] @ weights
        return out[0] if single else out

    def decode(self, bits: Any) -> np.ndarray:
        """Decode bit vectors back to category assignments.

        Inverse of :meth:`encode` on feasible vectors.  Infeasible vectors
        decode to their raw codes (some ``>= cardinality``); call
        :meth:`is_feasible` to tell the two apart.
        """
        return self.codes(bits)

    def is_feasible(self, bits: Any) -> bool | np.ndarray:
        """Whether each bit vector decodes to valid categories at every site."""
        arr, single = self._as_bit_array(bits)
        ok = np.all(self.codes(arr) < np.array(self.cardinalities), axis=1)
        return bool(ok[0]) if single else ok

    # ------------------------------------------------------------------
    # penalty synthesis
    # ------------------------------------------------------------------

    def penalty_spec(self) -> PenaltySpec:
        """Derive quadratic penalty pairs and residual screening codes.

        Within a site of ``b`` bits, fixing bits ``i`` and ``j`` to one
        pins the code to at least ``2**(b-1-i) + 2**(b-1-j)`` (all other
        bits zero); every completion only adds to it.  The pair is a sound
        penalty exactly when that minimum already reaches the cardinality,
        i.e. the whole both-bits-set subcube is infeasible.  Infeasible
        codes with no sound pair covering them are reported per site as
        residual codes for post-solve screening.
        """
        pairs: list[tuple[int, int]] = []
        pair_sites: list[int] = []
        residuals: list[tuple[int, ...]] = []
        for s, site in enumerate(self.sites):
            b, k, off = site.n_bits, site.cardinality, self.offsets[s]
            local_pairs = []
            for i in range(b):
                for j in range(i + 1, b):
                    if (1 << (b - 1 - i)) + (1 << (b - 1 - j)) >= k:
                        local_pairs.append((i, j))
                        pairs.append((off + i, off + j))
                        pair_sites.append(s)
            uncovered = []
            for code in range(k, 1 << b):
                covered = any(
                    (code >> (b - 1 - i)) & 1 and (code >> (b - 1 - j)) & 1
                    for i, j in local_pairs
                )
                if not covered:
                    uncovered.append(code)
            residuals.append(tuple(uncovered))
        return PenaltySpec(
            n_bits=self.total_bits,
            pairs=tuple(pairs),
            pair_sites=tuple(pair_sites),
            residual_codes=tuple(residuals),
        )


class SiteBinaryEncoder(BaseEstimator, TransformerMixin):
    """Transformer mapping category assignments to concatenated binary codes.

    Each column of the input is one categorical site, taking values in
    ``0..k-1``; ``transform`` packs each into ``ceil(log2(k))`` bits (MSB
    first) and concatenates the blocks.  ``inverse_transform`` restores
    the assignments.

    Parameters
    ----------
    cardinalities : sequence of int, optional
        Number of categories per site.  Inferred from the fit data
        (``max + 1`` per column) when omitted.
    names : sequence of str, optional
        Site names; default ``s1..sK``.

    Attributes
    ----------
    space_ : DesignSpace
        The fitted space; exposes ``penalty_spec()``, ``is_feasible`` etc.
    n_bits_ : int
        Total width of the encoded vectors.

    Examples
    --------
    >>> enc = SiteBinaryEncoder(cardinalities=[6, 29, 64, 64]).fit()
    >>> enc.transform([[0, 2, 10, 63]])
    array([[0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 1, 0, 1, 0, 1, 1, 1, 1, 1, 1]],
          dtype=uint8)
    """

    def __init__(
        self,
        cardinalities: Sequence[int] | None = None,
        names: Sequence[str] | None = None,
    ):
        self.cardinalities = cardinalities
        self.names = names

    def fit(self, X: Any = None, y: Any = None) -> "SiteBinaryEncoder":
        if self.cardinalities is not None:
            cards = [int(k) for k in self.cardinalities]
        else:
            if X is None:
                raise ValueError("cardinalities not given; fit requires X to infer them")
            arr = check_array(X, dtype="numeric")
            cards = [int(c) + 1 for c in arr.max(axis=0)]
        self.space_ = DesignSpace.from_cardinalities(cards, self.names)
        self.n_bits_ = self.space_.total_bits
        self.n_features_in_ = len(cards)
        return self

    def transform(self, X: Any) -> np.ndarray:
        check_is_fitted(self, "space_")
        return self.space_.encode(np.atleast_2d(np.asarray(X)))

    def inverse_transform(self, X: Any) -> np.ndarray:
        check_is_fitted(self, "space_")
        return self.space_.decode(np.atleast_2d(np.asarray(X)))

    def get_feature_names_out(self, input_features: Any = None) -> np.ndarray:
        check_is_fitted(self, "space_")
        names = []
        for site in self.space_.sites:
            names.extend(f"{site.name}_b{i}" for i in range(site.n_bits))
        return np.asarray(names, dtype=object)
