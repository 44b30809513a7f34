"""Brute-force reference amplitudes via matrix permanents.

Deliberately slow and independent of :mod:`photonq.slos`: it walks the
basis with its own recursive generator and computes each amplitude from a
permanent of a repeated-row/column submatrix.
"""

from __future__ import annotations

import cmath
import math
from typing import Iterator, Sequence

import numpy as np

from .errors import NonSquare, PhotonCountMismatch, TooLarge
from .fock import AmplitudeVector, FockBasis

MAX_PERMANENT_SIZE = 20
MAX_ORACLE_STATES = 100_000


def permanent(A) -> complex:
    """Permanent by Ryser's formula, visiting subsets in Gray-code order.

    Runs in ``O(2^k k)``; ``k`` is limited to 20.
    """
    A = np.asarray(A, dtype=np.complex128)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NonSquare(f"permanent needs a square matrix, got shape {A.shape}")
    k = A.shape[0]
    if k > MAX_PERMANENT_SIZE:
        raise TooLarge(f"{k}x{k} exceeds the {MAX_PERMANENT_SIZE}x{MAX_PERMANENT_SIZE} limit")
    if k == 0:
        return 1.0 + 0j
    cols = [A[:, j].tolist() for j in range(k)]
    row_sums = [0j] * k
    total = 0j
    in_set = [False] * k
    size = 0
    for g in range(1, 1 << k):
        # bit flipped between consecutive Gray codes g-1 and g
        j = (g & -g).bit_length() - 1
        col = cols[j]
        if in_set[j]:
            for i in range(k):
                row_sums[i] -= col[i]
            size -= 1
        else:
            for i in range(k):
                row_sums[i] += col[i]
            size += 1
        in_set[j] = not in_set[j]
        prod = 1 + 0j
        for v in row_sums:
            prod *= v
        total += -prod if size & 1 else prod
    return total * (-1) ** k


def _repeat_indices(occ: Sequence[int]) -> list[int]:
    idx = []
    for mode, count in enumerate(occ):
        idx.extend([mode] * int(count))
    return idx


def oracle_amplitude(U, s: Sequence[int], t: Sequence[int]) -> complex:
    """``<t| U |s>`` as ``Per(U[t, s]) / sqrt(prod s_i! prod t_j!)``."""
    if sum(s) != sum(t):
        raise PhotonCountMismatch(f"{tuple(s)} and {tuple(t)} carry different photon numbers")
    U = np.asarray(U, dtype=np.complex128)
    rows = _repeat_indices(t)
    cols = _repeat_indices(s)
    sub = U[np.ix_(rows, cols)]
    norm = 1.0
    for v in list(s) + list(t):
        norm *= math.factorial(int(v))
    return permanent(sub) / math.sqrt(norm)


def _descending_states(m: int, n: int) -> Iterator[tuple]:
    if m == 1:
        yield (n,)
        return
    for first in range(n, -1, -1):
        for rest in _descending_states(m - 1, n - first):
            yield (first,) + rest


def oracle_state(U, s: Sequence[int]) -> AmplitudeVector:
    """Every output amplitude of input ``s``, one permanent per basis state."""
    U = np.asarray(U, dtype=np.complex128)
    m = U.shape[0]
    n = int(sum(s))
    size = math.comb(m + n - 1, n)
    if size > MAX_ORACLE_STATES:
        raise TooLarge(f"{size} states exceed the oracle limit of {MAX_ORACLE_STATES}")
    values = [oracle_amplitude(U, s, t) for t in _descending_states(m, n)]
    return AmplitudeVector(FockBasis(m, n), np.array(values, dtype=np.complex128))


def haar_unitary(m: int, seed: int | np.random.Generator | None = None) -> np.ndarray:
    """Haar-distributed ``m x m`` unitary from the QR of a complex Ginibre matrix."""
    if m < 1:
        raise ValueError("m must be >= 1")
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    phases = np.array([cmath.exp(1j * cmath.phase(v)) for v in d])
    # fix the QR phase ambiguity so the distribution is exactly Haar
    return q * phases
