"""Fidelity kernels ``k(x1, x2) = |<phi(x1)|phi(x2)>|^2`` with ``phi(x) = U(x)|s>``."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import slos
from .circuit import ParamCircuit, StaticUnitary, add_angle_encoding, compile_unitary
from .errors import InvalidSpec
from .fock import AmplitudeVector, FockState
from .oracle import haar_unitary


@dataclass(frozen=True)
class KernelSpec:
    """Feature map circuit, input state and fixed trainable values.

    ``theta`` is copied at construction so the kernel stays stationary.
    """

    circuit: ParamCircuit
    input_state: FockState
    theta: np.ndarray = field(default=None)
    cache_states: bool = True

    def __post_init__(self):
        object.__setattr__(self, "input_state", FockState(self.input_state))
        if self.circuit.input_feature_count < 1:
            raise InvalidSpec("a kernel feature map needs at least one input feature")
        if self.input_state.m != self.circuit.m:
            raise InvalidSpec("input state and circuit disagree on the mode count")
        theta = self.circuit.initial_theta() if self.theta is None else self.theta
        theta = np.array(theta, dtype=float)
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)


def _overlap(a: np.ndarray, b: np.ndarray) -> float:
    return float(abs(np.vdot(a, b)) ** 2)


class FidelityKernel:
    """Callable kernel: ``kernel(X)`` or ``kernel(X1, X2)`` returns a Gram matrix."""

    def __init__(self, spec: KernelSpec):
        self.spec = spec
        self.graph = slos.build_graph(spec.circuit.m, spec.input_state)

    @classmethod
    def simple(cls, input_size: int, n_modes: int, n_photons: int, seed=None) -> "FidelityKernel":
        """Haar interferometer, angle encoding on the first modes, Haar interferometer.

        Photons are injected one per mode from mode 0 (wrapping round when
        ``n_photons > n_modes``).
        """
        if input_size > n_modes:
            raise InvalidSpec("input_size cannot exceed n_modes")
        rng = np.random.default_rng(seed)
        c = ParamCircuit(n_modes, (StaticUnitary(0, haar_unitary(n_modes, rng)),))
        c = add_angle_encoding(c, range(input_size))
        c = c.add(StaticUnitary(0, haar_unitary(n_modes, rng)))
        state = np.bincount(np.arange(n_photons) % n_modes, minlength=n_modes)
        return cls(KernelSpec(c, FockState(state)))

    def feature_state(self, x) -> AmplitudeVector:
        U = compile_unitary(self.spec.circuit, self.spec.theta, x)
        return slos.forward(self.graph, U, check_unitary=False)

    def feature_states(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.stack([self.feature_state(x).values for x in X])

    def fidelity(self, x1, x2) -> float:
        return _overlap(self.feature_state(x1).values, self.feature_state(x2).values)

    def gram(self, X1, X2=None) -> np.ndarray:
        X1 = np.atleast_2d(np.asarray(X1, dtype=float))
        if X1.shape[0] == 0:
            raise ValueError("empty batch")
        if X2 is None:
            return self._gram_symmetric(X1)
        X2 = np.atleast_2d(np.asarray(X2, dtype=float))
        if X2.shape[0] == 0:
            raise ValueError("empty batch")
        if self.spec.cache_states:
            S1, S2 = self.feature_states(X1), self.feature_states(X2)
            state1, state2 = (lambda i: S1[i]), (lambda j: S2[j])
        else:
            state1 = lambda i: self.feature_state(X1[i]).values  # noqa: E731
            state2 = lambda j: self.feature_state(X2[j]).values  # noqa: E731
        G = np.empty((X1.shape[0], X2.shape[0]))
        for i in range(X1.shape[0]):
            a = state1(i)
            for j in range(X2.shape[0]):
                G[i, j] = _overlap(a, state2(j))
        return G

    def _gram_symmetric(self, X: np.ndarray) -> np.ndarray:
        n = X.shape[0]
        if self.spec.cache_states:
            S = self.feature_states(X)
            state = lambda i: S[i]  # noqa: E731
        else:
            state = lambda i: self.feature_state(X[i]).values  # noqa: E731
        G = np.eye(n)
        for i in range(n):
            a = state(i)
            for j in range(i + 1, n):
                G[i, j] = G[j, i] = _overlap(a, state(j))
        return G

    __call__ = gram


def fidelity(kernel: FidelityKernel, x1, x2) -> float:
    return kernel.fidelity(x1, x2)


def gram(kernel: FidelityKernel, X1, X2=None) -> np.ndarray:
    return kernel.gram(X1, X2)


def gram_to_csv(G: np.ndarray) -> str:
    return "".join(",".join(f"{v:.17g}" for v in row) + "\n" for row in np.atleast_2d(G))
