"""Amplitude encoding and the dual-rail qubit <-> Fock bridge.

Dual-rail convention: qubit 0 is the most significant bit of the
computational index; qubit ``i`` lives on modes ``(2i, 2i+1)`` and ``|0>``
puts the photon in the lower mode ``2i``.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, NotNormalized, NullProjection, TooLong, ZeroNorm
from .fock import AmplitudeVector, FockBasis

NORM_TOL = 1e-9
LEAKAGE_TOL = 1e-12


def amplitude_encode(x, basis: FockBasis) -> AmplitudeVector:
    """Place ``x / ||x||`` on the first ``len(x)`` basis states."""
    x = np.asarray(x, dtype=np.complex128).ravel()
    if x.shape[0] > basis.size:
        raise TooLong(f"{x.shape[0]} values do not fit a basis of {basis.size} states")
    norm = np.linalg.norm(x)
    if norm == 0:
        raise ZeroNorm("cannot encode a zero vector")
    values = np.zeros(basis.size, dtype=np.complex128)
    values[: x.shape[0]] = x / norm
    return AmplitudeVector(basis, values)


def dual_rail_indices(k: int) -> np.ndarray:
    """Rank in ``FockBasis(2k, k)`` of each computational basis state."""
    if k < 1:
        raise ValueError("need at least one qubit")
    basis = FockBasis(2 * k, k)
    out = np.empty(2**k, dtype=np.int64)
    for index in range(2**k):
        occ = [0] * (2 * k)
        for q in range(k):
            bit = (index >> (k - 1 - q)) & 1
            occ[2 * q + bit] = 1
        out[index] = basis.rank(occ)
    return out


def qubit_to_fock(q) -> AmplitudeVector:
    """Embed a normalised ``k``-qubit state into ``FockBasis(2k, k)``."""
    q = np.asarray(q, dtype=np.complex128).ravel()
    k = int(round(np.log2(q.shape[0]))) if q.shape[0] > 0 else 0
    if k < 1 or 2**k != q.shape[0]:
        raise DimensionMismatch(f"length {q.shape[0]} is not a power of two >= 2")
    if abs(np.linalg.norm(q) - 1) > NORM_TOL:
        raise NotNormalized(f"qubit state has norm {np.linalg.norm(q):.12g}")
    basis = FockBasis(2 * k, k)
    values = np.zeros(basis.size, dtype=np.complex128)
    values[dual_rail_indices(k)] = q
    return AmplitudeVector(basis, values)


def fock_to_qubit(a: AmplitudeVector) -> tuple[np.ndarray, float]:
    """Read back the dual-rail part of ``a``.

    Returns the renormalised qubit vector and the leaked probability
    outside the dual-rail subspace.
    """
    m, n = a.basis.m, a.basis.n
    if m % 2 or n != m // 2 or n < 1:
        raise DimensionMismatch(f"basis ({m} modes, {n} photons) is not dual-rail shaped")
    idx = dual_rail_indices(n)
    q = a.values[idx]
    outside = np.delete(a.values, idx)
    kept = float(np.vdot(q, q).real)
    # summed directly so a clean embedding reports exactly zero
    leakage = float(np.vdot(outside, outside).real)
    if kept == 0 or leakage >= 1 - LEAKAGE_TOL:
        raise NullProjection("no amplitude inside the dual-rail subspace")
    return q / np.sqrt(kept), leakage
