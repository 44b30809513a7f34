"""Strong linear-optical simulation over a precomputed transition graph.

The output state of an ``n``-photon input is built one photon at a time::

    a_k[t + e_j] += U[j, p_k] * sqrt(t_j + 1) * a_{k-1}[t]

where ``p_k`` is the injection mode of the k-th photon. Which ``(k-1)``
photon states feed which ``k`` photon states does not depend on ``U``, so
the edge lists are built once and reused for every forward pass; only the
coefficients ``U[j, p_k]`` change.

Complex gradients use the real-pair convention: a complex array ``G``
holds ``dL/dRe z`` in its real part and ``dL/dIm z`` in its imaginary part.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    MissingIntermediates,
    NonUnitaryInput,
    PhotonCountMismatch,
)
from .fock import AmplitudeVector, FockBasis, FockState, photon_modes

DEFAULT_MAX_STATES = 2**26
UNITARY_CHECK_TOL = 1e-8

_build_count = 0


def build_count() -> int:
    """Number of transition graphs built in this process."""
    return _build_count


@dataclass(frozen=True)
class Step:
    """Edges from the (k-1)-photon basis to the k-photon basis.

    Arrays are sorted by destination rank; ``starts`` marks the first edge
    of each destination and ``src_order`` reorders edges to
    (source, mode)-major order, where every source has exactly ``m`` edges.
    """

    src: np.ndarray
    dst: np.ndarray
    mode: np.ndarray
    factor: np.ndarray
    starts: np.ndarray
    src_order: np.ndarray
    n_src: int
    n_dst: int

    @property
    def n_edges(self) -> int:
        return self.src.shape[0]


@dataclass(frozen=True)
class SectorEdges:
    """Unitary- and input-independent edges for ``n`` photons in ``m`` modes."""

    m: int
    n: int
    bases: tuple
    steps: tuple


@dataclass(frozen=True)
class TransitionGraph:
    m: int
    input_state: FockState
    input_modes: tuple
    input_norm: float
    sector: SectorEdges = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.input_modes)

    @property
    def steps(self) -> tuple:
        return self.sector.steps

    @property
    def basis(self) -> FockBasis:
        return self.sector.bases[-1]

    def with_input(self, state: Sequence[int]) -> "TransitionGraph":
        """Graph for another input of the same photon number, sharing edges."""
        state = FockState(state)
        if state.m != self.m or state.photon_count() != self.n:
            raise PhotonCountMismatch(
                f"{state} is not in the ({self.m} modes, {self.n} photons) sector"
            )
        return _make_graph(self.sector, state)

    def to_csv(self) -> str:
        """Debug dump with one line per edge: step,src,dst,mode,factor."""
        buf = io.StringIO()
        buf.write("step,src,dst,mode,factor\n")
        for k, st in enumerate(self.steps, start=1):
            for s, d, j, f in zip(st.src, st.dst, st.mode, st.factor):
                buf.write(f"{k},{s},{d},{j},{f:.17g}\n")
        return buf.getvalue()


def _build_step(prev: FockBasis, nxt: FockBasis) -> Step:
    m = prev.m
    states = prev.states.astype(np.int64)
    n_src = prev.size
    src = np.repeat(np.arange(n_src, dtype=np.int64), m)
    mode = np.tile(np.arange(m, dtype=np.int64), n_src)
    dst_states = states[src].copy()
    dst_states[np.arange(src.shape[0]), mode] += 1
    factor = np.sqrt(states[src, mode] + 1.0)
    dst = nxt.rank_many(dst_states)
    order = np.lexsort((mode, src, dst))
    src_d, dst_d, mode_d, factor_d = src[order], dst[order], mode[order], factor[order]
    starts = np.flatnonzero(np.r_[True, dst_d[1:] != dst_d[:-1]])
    src_order = np.argsort(order, kind="stable")
    arrays = [src_d, dst_d, mode_d, factor_d, starts, src_order]
    for a in arrays:
        a.setflags(write=False)
    return Step(*arrays, n_src=n_src, n_dst=nxt.size)


def build_sector(m: int, n: int, max_states: int = DEFAULT_MAX_STATES) -> SectorEdges:
    """Enumerate bases and edges for every photon count up to ``n``."""
    global _build_count
    if n < 1:
        raise ValueError("need at least one photon")
    size = math.comb(m + n - 1, n)
    if size > max_states:
        raise OverflowError(f"{size} output states exceed the cap of {max_states}")
    bases = tuple(FockBasis(m, k) for k in range(n + 1))
    steps = tuple(_build_step(bases[k - 1], bases[k]) for k in range(1, n + 1))
    _build_count += 1
    return SectorEdges(m, n, bases, steps)


def _make_graph(sector: SectorEdges, state: FockState) -> TransitionGraph:
    norm = math.sqrt(math.prod(math.factorial(v) for v in state))
    return TransitionGraph(sector.m, state, tuple(photon_modes(state)), norm, sector)


def build_graph(m: int, input_state: Sequence[int], max_states: int = DEFAULT_MAX_STATES) -> TransitionGraph:
    """Transition graph for ``input_state`` in an ``m``-mode interferometer."""
    state = FockState(input_state)
    if state.m != m:
        raise DimensionMismatch(f"input {state} has {state.m} modes, expected {m}")
    n = state.photon_count()
    if n < 1:
        raise ValueError("input state must contain at least one photon")
    return _make_graph(build_sector(m, n, max_states), state)


def _check_unitary(U: np.ndarray, m: int, check: bool) -> np.ndarray:
    U = np.asarray(U, dtype=np.complex128)
    if U.shape[-2:] != (m, m):
        raise DimensionMismatch(f"expected ({m}, {m}) unitary, got {U.shape}")
    if check:
        eye = np.eye(m)
        dev = np.abs(np.conj(np.swapaxes(U, -1, -2)) @ U - eye).max()
        if dev > UNITARY_CHECK_TOL:
            raise NonUnitaryInput(f"U^H U deviates from identity by {dev:.2e}")
    return U


def _evolve(g: TransitionGraph, Ub: np.ndarray, keep_layers: bool):
    """Batched evolution; ``Ub`` has shape (B, m, m)."""
    B = Ub.shape[0]
    a = np.ones((B, 1), dtype=np.complex128)
    layers = [a] if keep_layers else None
    for st, p in zip(g.steps, g.input_modes):
        coef = Ub[:, st.mode, p] * st.factor
        vals = coef * a[:, st.src]
        a = np.add.reduceat(vals, st.starts, axis=1)
        if keep_layers:
            layers.append(a)
    return a / g.input_norm, layers


def forward_batch(g: TransitionGraph, U: np.ndarray, *, check_unitary: bool = True, keep_layers: bool = False):
    """Evolve under a stack of transfer matrices.

    Args:
        g: transition graph.
        U: array of shape ``(B, m, m)``.
        keep_layers: also return the per-step amplitude arrays needed by
            :func:`backward`.

    Returns:
        ``(B, size)`` amplitudes, or ``(amplitudes, layers)``.
    """
    U = _check_unitary(U, g.m, check_unitary)
    if U.ndim != 3:
        raise DimensionMismatch("forward_batch expects a (B, m, m) stack")
    out, layers = _evolve(g, U, keep_layers)
    return (out, layers) if keep_layers else out


def forward(g: TransitionGraph, U: np.ndarray, *, check_unitary: bool = True) -> AmplitudeVector:
    """Output state of the graph's input state under a single ``U``."""
    U = _check_unitary(U, g.m, check_unitary)
    if U.ndim != 2:
        raise DimensionMismatch("forward expects a single (m, m) matrix")
    out, _ = _evolve(g, U[None], False)
    return AmplitudeVector(g.basis, out[0])


def backward(g: TransitionGraph, U: np.ndarray, layers, loss_grad: np.ndarray) -> np.ndarray:
    """Gradient of a real loss with respect to the entries of ``U``.

    Args:
        U: ``(m, m)`` or ``(B, m, m)``, as passed to the forward call.
        layers: intermediates from ``forward_batch(..., keep_layers=True)``.
        loss_grad: real-pair gradient over the output amplitudes, shape
            ``(size,)`` or ``(B, size)``.

    Returns:
        Real-pair gradient with the shape of ``U``.
    """
    U = np.asarray(U, dtype=np.complex128)
    single = U.ndim == 2
    Ub = U[None] if single else U
    G = np.asarray(loss_grad, dtype=np.complex128)
    G = G[None] if G.ndim == 1 else G
    if layers is None or len(layers) != g.n + 1:
        raise MissingIntermediates("forward was not run with keep_layers=True")
    B = Ub.shape[0]
    if layers[0].shape[0] != B or G.shape != (B, g.basis.size):
        raise DimensionMismatch("batch shape of U, layers and loss_grad disagree")
    m = g.m
    grad_U = np.zeros((B, m, m), dtype=np.complex128)
    Ga = G / g.input_norm
    for k in range(g.n, 0, -1):
        st = g.steps[k - 1]
        p = g.input_modes[k - 1]
        a_prev = layers[k - 1]
        # edge quantities, reordered to (src, mode)-major layout
        Gd = Ga[:, st.dst][:, st.src_order].reshape(B, st.n_src, m)
        f = st.factor[st.src_order].reshape(st.n_src, m)
        weighted = Gd * f
        # dL/dU[:, j, p] = sum_src conj(a_prev[src]) * f * G[dst]
        grad_U[:, :, p] += np.einsum("bs,bsj->bj", a_prev.conj(), weighted)
        # dL/da_prev[src] = sum_j conj(U[j, p]) * f * G[dst]
        Ga = np.einsum("bj,bsj->bs", Ub[:, :, p].conj(), weighted)
    return grad_U[0] if single else grad_U


def amplitude_map(g: TransitionGraph, U: np.ndarray, inputs: Sequence[Sequence[int]], *, check_unitary: bool = True) -> np.ndarray:
    """Columns are output states for each listed input (same sector as ``g``)."""
    U = _check_unitary(U, g.m, check_unitary)
    cols = [forward_batch(g.with_input(s), U[None], check_unitary=False)[0] for s in inputs]
    return np.stack(cols, axis=1) if cols else np.zeros((g.basis.size, 0), dtype=np.complex128)
