"""The differentiable quantum layer.

A :class:`QuantumLayer` maps a batch of feature vectors to a batch of real
output vectors::

    x --compile--> U(theta, x) --SLOS--> amplitudes --space--> --readout--> y

and back-propagates ``dL/dy`` to the trainable phases and to the inputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from . import slos
from .circuit import (
    ParamCircuit,
    compile_batch,
    compile_batch_with_derivatives,
    compile_unitary,
    compile_with_derivatives,
)
from .errors import ArityMismatch, BatchRowError, DimensionMismatch, InvalidSpec, StaleIntermediates
from .fock import FockBasis, FockState
from .measurement import (
    ComputationSpace,
    Detector,
    MeasurementStrategy,
    grouping,
    unbunched_indices,
    validate_partial,
)


@dataclass(frozen=True)
class AmplitudeInput:
    """Marks a layer whose rows are input amplitude vectors over ``n_photons``."""

    n_photons: int


@dataclass(frozen=True)
class LayerSpec:
    circuit: ParamCircuit
    input_state: Union[FockState, AmplitudeInput]
    strategy: MeasurementStrategy = MeasurementStrategy.probabilities()
    detector: Detector = Detector.PNR
    space: ComputationSpace = ComputationSpace.FOCK

    def __post_init__(self):
        if not isinstance(self.input_state, AmplitudeInput):
            state = FockState(self.input_state)
            object.__setattr__(self, "input_state", state)
            if state.m != self.circuit.m:
                raise InvalidSpec(f"input state {state} does not match {self.circuit.m} modes")
        elif self.circuit.input_feature_count:
            raise InvalidSpec("amplitude-encoded layers cannot also take phase features")
        if self.n < 1:
            raise InvalidSpec("the layer needs at least one photon")
        if self.space is ComputationSpace.UNBUNCHED and self.n > self.m:
            raise InvalidSpec(f"unbunched space needs n <= m, got n={self.n}, m={self.m}")
        if self.strategy.kind == "amplitudes" and self.detector is not Detector.PNR:
            raise InvalidSpec("amplitude output is taken before detection; use the PNR detector")
        if self.strategy.kind == "partial":
            try:
                validate_partial(self.strategy.measured_modes, self.m)
            except ValueError as exc:
                raise InvalidSpec(str(exc)) from exc

    @property
    def m(self) -> int:
        return self.circuit.m

    @property
    def n(self) -> int:
        if isinstance(self.input_state, AmplitudeInput):
            return self.input_state.n_photons
        return self.input_state.photon_count()

    @property
    def amplitude_input(self) -> bool:
        return isinstance(self.input_state, AmplitudeInput)

    def to_dict(self) -> dict:
        state = (
            {"amplitude": self.input_state.n_photons}
            if self.amplitude_input
            else str(self.input_state)
        )
        return {
            "circuit": self.circuit.to_dict(),
            "input_state": state,
            "strategy": self.strategy.to_json_value(),
            "detector": self.detector.value,
            "space": self.space.value,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LayerSpec":
        try:
            circuit = ParamCircuit.from_dict(data["circuit"])
            raw = data["input_state"]
            if isinstance(raw, dict):
                state = AmplitudeInput(int(raw["amplitude"]))
            else:
                state = FockState.parse(raw)
            return cls(
                circuit,
                state,
                MeasurementStrategy.from_json_value(data.get("strategy", "probabilities")),
                Detector(data.get("detector", "pnr")),
                ComputationSpace(data.get("space", "fock")),
            )
        except InvalidSpec:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidSpec(f"bad layer description: {exc}") from exc

    def to_json(self, indent: int | None = None) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_json(cls, text: str) -> "LayerSpec":
        return cls.from_dict(json.loads(text))


class _Readout:
    """Space projection plus strategy/detector map, with its adjoint."""

    def __init__(self, spec: LayerSpec):
        basis = FockBasis(spec.m, spec.n)
        self.size = basis.size
        if spec.space is ComputationSpace.UNBUNCHED:
            self.keep = unbunched_indices(basis)
        else:
            self.keep = None
        states = basis.states if self.keep is None else basis.states[self.keep]
        self.states = states
        self.kind = spec.strategy.kind
        threshold = spec.detector is Detector.THRESHOLD
        self.index = None
        self.weights = None
        if self.kind == "amplitudes":
            self.keys = [FockState(s) for s in states]
            self.dim = 2 * len(states)
        elif self.kind == "per_mode_expectation":
            w = (states > 0) if threshold else states
            self.weights = w.astype(float)
            self.keys = [f"mode{i}" for i in range(spec.m)]
            self.dim = spec.m
        elif self.kind == "probabilities" and not threshold:
            self.keys = [FockState(s) for s in states]
            self.dim = len(states)
        else:
            modes = spec.strategy.measured_modes if self.kind == "partial" else None
            self.keys, self.index = grouping(states, modes, threshold)
            self.dim = len(self.keys)

    def forward(self, amps: np.ndarray):
        """``amps`` is (B, size); returns outputs and a cache for the adjoint."""
        cache = {}
        if self.keep is not None:
            sub = amps[:, self.keep]
            r = np.sqrt(np.sum(np.abs(sub) ** 2, axis=1))
            bad = np.flatnonzero(r < 1e-150)
            if bad.size:
                raise BatchRowError(int(bad[0]), ValueError("no weight on unbunched outcomes"))
            b = sub / r[:, None]
            cache.update(sub=sub, r=r)
        else:
            b = amps
        cache["b"] = b
        if self.kind == "amplitudes":
            return np.concatenate([b.real, b.imag], axis=1), cache
        p = np.abs(b) ** 2
        if self.weights is not None:
            return p @ self.weights, cache
        if self.index is None:
            return p, cache
        out = np.zeros((p.shape[0], self.dim))
        for row in range(p.shape[0]):
            out[row] = np.bincount(self.index, weights=p[row], minlength=self.dim)
        return out, cache

    def backward(self, upstream: np.ndarray, cache) -> np.ndarray:
        """Real-pair gradient over the full amplitude vector."""
        b = cache["b"]
        if self.kind == "amplitudes":
            k = b.shape[1]
            Gb = upstream[:, :k] + 1j * upstream[:, k:]
        else:
            if self.weights is not None:
                Gp = upstream @ self.weights.T
            elif self.index is None:
                Gp = upstream
            else:
                Gp = upstream[:, self.index]
            Gb = 2.0 * b * Gp
        if self.keep is None:
            return Gb
        sub, r = cache["sub"], cache["r"]
        c = np.sum((Gb.conj() * sub).real, axis=1)
        Gsub = Gb / r[:, None] - (c / r**3)[:, None] * sub
        Ga = np.zeros((b.shape[0], self.size), dtype=np.complex128)
        Ga[:, self.keep] = Gsub
        return Ga


def output_dim(spec: LayerSpec) -> int:
    """Length of one output row, without running the circuit."""
    return _Readout(spec).dim


class QuantumLayer:
    """Layer state: a spec, current trainable values and the cached graph."""

    def __init__(self, spec: LayerSpec, theta: Sequence[float] | None = None):
        self.spec = spec
        self.theta = spec.circuit.initial_theta() if theta is None else np.array(theta, dtype=float)
        if self.theta.shape != (spec.circuit.n_trainable,):
            raise ArityMismatch(f"expected {spec.circuit.n_trainable} trainable values")
        self._readout = _Readout(spec)
        if spec.amplitude_input:
            seed = [spec.n] + [0] * (spec.m - 1)
            self.graph = slos.build_graph(spec.m, seed)
        else:
            self.graph = slos.build_graph(spec.m, spec.input_state)
        self._cache = None

    @property
    def output_dim(self) -> int:
        return self._readout.dim

    @property
    def output_keys(self) -> list:
        return list(self._readout.keys)

    @property
    def n_features(self) -> int:
        if self.spec.amplitude_input:
            return self.graph.basis.size
        return self.spec.circuit.input_feature_count

    def set_input_state(self, state: Sequence[int]) -> None:
        """Swap the Fock input; the graph is only rebuilt if the photon number changes."""
        state = FockState(state)
        spec = LayerSpec(self.spec.circuit, state, self.spec.strategy, self.spec.detector, self.spec.space)
        if state.photon_count() == self.graph.n and state.m == self.graph.m:
            self.graph = self.graph.with_input(state)
        else:
            self.graph = slos.build_graph(spec.m, state)
            self._readout = _Readout(spec)
        self.spec = spec
        self._cache = None

    def _rows(self, X) -> np.ndarray:
        if self.spec.amplitude_input:
            X = np.atleast_2d(np.asarray(X, dtype=np.complex128))
            size = self.graph.basis.size
            if X.shape[1] > size:
                raise DimensionMismatch(f"rows of length {X.shape[1]} exceed basis size {size}")
            if X.shape[1] < size:
                X = np.pad(X, ((0, 0), (0, size - X.shape[1])))
            return X
        if X is None:
            return np.zeros((1, 0))
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :] if self.n_features else X.reshape(-1, 0)
        if X.shape[1] != self.spec.circuit.input_feature_count:
            raise ArityMismatch(
                f"rows have {X.shape[1]} features, circuit expects {self.spec.circuit.input_feature_count}"
            )
        return X

    def _compile(self, X: np.ndarray, with_grad: bool):
        circuit = self.spec.circuit
        if with_grad:
            Us, dth, dxs = compile_batch_with_derivatives(circuit, self.theta, X)
        else:
            Us, dth, dxs = compile_batch(circuit, self.theta, X), None, None
        bad = np.flatnonzero(~np.isfinite(Us).all(axis=(1, 2)))
        if bad.size:
            raise BatchRowError(int(bad[0]), ValueError("non-finite feature value"))
        return Us, dth, dxs

    def forward(self, X=None, training: bool = False) -> np.ndarray:
        """Outputs for a batch; ``training`` retains what :meth:`backward` needs."""
        X = self._rows(X)
        if self.spec.amplitude_input:
            amps, cache = self._forward_amplitude_input(X, training)
        else:
            Us, dth, dxs = self._compile(X, training)
            res = slos.forward_batch(self.graph, Us, check_unitary=False, keep_layers=training)
            amps, layers = res if training else (res, None)
            cache = {"Us": Us, "dth": dth, "dxs": dxs, "layers": layers}
        out, rcache = self._readout.forward(amps)
        if training:
            cache.update(theta=self.theta.copy(), X=X.copy(), readout=rcache)
            self._cache = cache
        return out

    __call__ = forward

    def _forward_amplitude_input(self, X: np.ndarray, training: bool):
        """Evolve every basis state in the rows' support and superpose.

        Costs one SLOS pass per distinct occupied input state, so dense
        amplitude rows are much slower than a single Fock input.
        """
        U = compile_unitary(self.spec.circuit, self.theta, ())
        support = np.flatnonzero(np.any(X != 0, axis=0))
        states = self.graph.basis.states
        cols, layer_sets, graphs = [], [], []
        for s in support:
            g = self.graph.with_input(states[s])
            res = slos.forward_batch(g, U[None], check_unitary=False, keep_layers=training)
            if training:
                col, layers = res
                layer_sets.append(layers)
                graphs.append(g)
            else:
                col = res
            cols.append(col[0])
        T = np.stack(cols, axis=1) if cols else np.zeros((self.graph.basis.size, 0), complex)
        amps = X[:, support] @ T.T
        cache = {"U": U, "T": T, "support": support, "layers": layer_sets, "graphs": graphs}
        return amps, cache

    def backward(self, X, upstream) -> tuple[np.ndarray, np.ndarray]:
        """Gradients of ``L`` given ``upstream = dL/doutput``.

        Returns ``(dL/dtheta, dL/dX)``; theta gradients are summed over rows.
        For amplitude-input layers ``dL/dX`` is complex in the real-pair
        convention.
        """
        cache = self._cache
        X = self._rows(X)
        if cache is None:
            raise StaleIntermediates("no retained forward pass; call forward(..., training=True)")
        if not np.array_equal(cache["theta"], self.theta) or not (
            cache["X"].shape == X.shape and np.array_equal(cache["X"], X)
        ):
            raise StaleIntermediates("theta or X changed since the retained forward pass")
        upstream = np.atleast_2d(np.asarray(upstream, dtype=float))
        if upstream.shape != (X.shape[0], self.output_dim):
            raise DimensionMismatch(f"upstream has shape {upstream.shape}, expected {(X.shape[0], self.output_dim)}")
        Ga = self._readout.backward(upstream, cache["readout"])
        if self.spec.amplitude_input:
            return self._backward_amplitude_input(X, Ga, cache)
        GU = slos.backward(self.graph, cache["Us"], cache["layers"], Ga)
        # dL/dp = Re sum conj(dL/dU) * dU/dp
        per_row = np.einsum("bij,btij->bt", GU.conj(), cache["dth"]).real
        grad_theta = np.zeros(self.theta.shape[0])
        for row in range(per_row.shape[0]):
            grad_theta += per_row[row]
        grad_x = np.einsum("bij,bfij->bf", GU.conj(), cache["dxs"]).real
        return grad_theta, grad_x

    def _backward_amplitude_input(self, X, Ga, cache):
        T, support, U = cache["T"], cache["support"], cache["U"]
        grad_X = np.zeros_like(X)
        grad_X[:, support] = Ga @ T.conj()
        GT = Ga.T @ X[:, support].conj()
        GU = np.zeros_like(U)
        for j, (g, layers) in enumerate(zip(cache["graphs"], cache["layers"])):
            GU += slos.backward(g, U[None], layers, GT[:, j][None])[0]
        _, dth, _ = compile_with_derivatives(self.spec.circuit, self.theta, ())
        grad_theta = np.einsum("ij,tij->t", GU.conj(), dth).real
        return grad_theta, grad_X


def forward(layer: QuantumLayer, X=None, training: bool = False) -> np.ndarray:
    return layer.forward(X, training)


def backward(layer: QuantumLayer, X, upstream):
    return layer.backward(X, upstream)
