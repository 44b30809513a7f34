"""Fock basis enumeration, ranking and amplitude containers.

States of ``n`` photons in ``m`` modes are ordered lexicographically
descending on the occupation vector, mode 0 most significant: ``(n,0,...,0)``
has rank 0 and ``(0,...,0,n)`` has rank ``size - 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations_with_replacement
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import DimensionMismatch, IndexOutOfRange

MAX_OCCUPATION = 255
_UINT64_MAX = 2**64 - 1
# rank tables are only materialised below this basis size
RANK_TABLE_LIMIT = 100_000


def basis_size(m: int, n: int) -> int:
    """Number of ways to place ``n`` indistinguishable photons in ``m`` modes.

    Raises:
        ValueError: if ``m < 1`` or ``n < 0``.
        OverflowError: if the count does not fit an unsigned 64-bit integer.
    """
    if m < 1 or n < 0:
        raise ValueError(f"need m >= 1 and n >= 0, got m={m}, n={n}")
    size = math.comb(m + n - 1, n)
    if size > _UINT64_MAX:
        raise OverflowError(f"Fock basis size C({m + n - 1},{n}) exceeds 64-bit range")
    return size


class FockState(tuple):
    """Occupation vector of a Fock basis state.

    Behaves as an immutable tuple of ints so it can be used as a dict key.
    The text form is ``[1,0,2]``.
    """

    def __new__(cls, occupations: Iterable[int]):
        occ = tuple(int(v) for v in occupations)
        if not occ:
            raise ValueError("a Fock state needs at least one mode")
        for v in occ:
            if v < 0:
                raise ValueError(f"negative occupation in {occ}")
            if v > MAX_OCCUPATION:
                raise ValueError(f"occupation {v} exceeds {MAX_OCCUPATION}")
        return super().__new__(cls, occ)

    @property
    def m(self) -> int:
        return len(self)

    def photon_count(self) -> int:
        return sum(self)

    def __str__(self) -> str:
        return "[" + ",".join(str(v) for v in self) + "]"

    def __repr__(self) -> str:
        return f"FockState({str(self)})"

    @classmethod
    def parse(cls, text: str | Sequence[int]) -> "FockState":
        """Parse ``"[1,0,2]"`` (or any int sequence) into a state."""
        if isinstance(text, str):
            body = text.strip()
            if not (body.startswith("[") and body.endswith("]")):
                raise ValueError(f"malformed Fock state {text!r}")
            body = body[1:-1].strip()
            if not body:
                raise ValueError("a Fock state needs at least one mode")
            return cls(int(tok) for tok in body.split(","))
        return cls(text)


class FockBasis:
    """The ``n``-photon, ``m``-mode Fock basis in canonical order.

    Immutable once built. ``states`` is materialised lazily as a
    ``(size, m)`` uint8 array.
    """

    def __init__(self, m: int, n: int):
        self.m = int(m)
        self.n = int(n)
        self.size = basis_size(self.m, self.n)
        self._states: np.ndarray | None = None
        self._table: dict[tuple, int] | None = None

    def __repr__(self) -> str:
        return f"FockBasis(m={self.m}, n={self.n}, size={self.size})"

    def __len__(self) -> int:
        return self.size

    def __eq__(self, other) -> bool:
        return isinstance(other, FockBasis) and (self.m, self.n) == (other.m, other.n)

    def __hash__(self) -> int:
        return hash((self.m, self.n))

    @property
    def states(self) -> np.ndarray:
        if self._states is None:
            self._states = _enumerate_array(self.m, self.n)
            self._states.setflags(write=False)
        return self._states

    def __iter__(self) -> Iterator[FockState]:
        return self.enumerate()

    def enumerate(self) -> Iterator[FockState]:
        for row in self.states:
            yield FockState(row)

    def _check(self, s: Sequence[int]) -> None:
        if len(s) != self.m:
            raise DimensionMismatch(f"state {tuple(s)} has {len(s)} modes, basis has {self.m}")
        if sum(s) != self.n:
            raise DimensionMismatch(f"state {tuple(s)} has {sum(s)} photons, basis has {self.n}")

    def rank(self, s: Sequence[int]) -> int:
        """Position of ``s`` in the canonical ordering."""
        self._check(s)
        if self._table is not None:
            return self._table[tuple(int(v) for v in s)]
        return _rank_formula(s)

    def unrank(self, i: int) -> FockState:
        i = int(i)
        if not 0 <= i < self.size:
            raise IndexOutOfRange(f"index {i} outside [0, {self.size})")
        occ = []
        remaining = self.n
        for mode in range(self.m - 1):
            free = self.m - mode - 1
            v = remaining
            while True:
                # number of states with this mode holding exactly v photons
                block = math.comb(remaining - v + free - 1, free - 1)
                if i < block:
                    break
                i -= block
                v -= 1
            occ.append(v)
            remaining -= v
        occ.append(remaining)
        return FockState(occ)

    def rank_table(self) -> dict[tuple, int]:
        """Dictionary ``state -> rank``; built once and kept for small bases."""
        if self._table is None:
            table = {tuple(int(v) for v in row): i for i, row in enumerate(self.states)}
            if self.size > RANK_TABLE_LIMIT:
                return table
            self._table = table
        return self._table

    def rank_many(self, states: np.ndarray) -> np.ndarray:
        """Vectorised rank of a ``(k, m)`` array of states (no validation)."""
        return rank_array(np.asarray(states), self.m, self.n)


def _rank_formula(s: Sequence[int]) -> int:
    m = len(s)
    remaining = sum(s)
    r = 0
    for mode in range(m - 1):
        v = int(s[mode])
        free = m - mode - 1
        # states sharing the prefix but holding more photons in this mode
        if remaining > v:
            r += math.comb(remaining - v - 1 + free, free)
        remaining -= v
    return r


def _binom_table(top: int) -> np.ndarray:
    table = np.zeros((top + 1, top + 1), dtype=np.int64)
    for a in range(top + 1):
        for b in range(a + 1):
            table[a, b] = math.comb(a, b)
    return table


def rank_array(states: np.ndarray, m: int, n: int) -> np.ndarray:
    """Ranks of many states at once, same formula as :meth:`FockBasis.rank`."""
    states = states.astype(np.int64, copy=False)
    if states.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    binom = _binom_table(n + m)
    remaining = np.full(states.shape[0], n, dtype=np.int64)
    ranks = np.zeros(states.shape[0], dtype=np.int64)
    for mode in range(m - 1):
        v = states[:, mode]
        free = m - mode - 1
        more = remaining > v
        top = np.where(more, remaining - v - 1 + free, 0)
        ranks += np.where(more, binom[top, free], 0)
        remaining = remaining - v
    return ranks


def _enumerate_array(m: int, n: int) -> np.ndarray:
    size = basis_size(m, n)
    out = np.zeros((size, m), dtype=np.uint8)
    if n == 0:
        return out
    # ascending mode tuples <-> descending occupation vectors
    flat = np.fromiter(
        (mode for combo in combinations_with_replacement(range(m), n) for mode in combo),
        dtype=np.int64,
        count=size * n,
    ).reshape(size, n)
    rows = np.repeat(np.arange(size), n)
    np.add.at(out, (rows, flat.ravel()), 1)
    return out


def enumerate_states(m: int, n: int) -> list[FockState]:
    return list(FockBasis(m, n).enumerate())


def photon_modes(s: Sequence[int]) -> list[int]:
    """Injection mode of each photon, nondecreasing: ``[2,0,1] -> [0,0,2]``."""
    return [mode for mode, v in enumerate(s) for _ in range(int(v))]


@dataclass
class AmplitudeVector:
    """Dense complex amplitudes over a Fock basis."""

    basis: FockBasis
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.shape != (self.basis.size,):
            raise DimensionMismatch(
                f"expected {self.basis.size} amplitudes, got shape {self.values.shape}"
            )

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def amplitude(self, s: Sequence[int]) -> complex:
        return complex(self.values[self.basis.rank(s)])

    def as_dict(self, tol: float = 0.0) -> dict[FockState, complex]:
        return {
            FockState(row): complex(v)
            for row, v in zip(self.basis.states, self.values)
            if abs(v) > tol
        }
