"""Parameterised linear-optical circuits.

A circuit is an ordered list of components applied left to right. Compiling
it yields the ``m x m`` transfer matrix ``U = M_last @ ... @ M_first`` and,
on request, the exact derivative of ``U`` with respect to every trainable
parameter and input feature.

Beam splitter convention::

    BS(theta) = [[cos(theta/2),   i sin(theta/2)],
                 [i sin(theta/2), cos(theta/2)]]

Phase shifter on mode ``k`` multiplies entry ``(k, k)`` by ``exp(i phi)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import (
    ArityMismatch,
    DuplicateMode,
    InvalidSpec,
    ModeOutOfRange,
    UnknownParameter,
)

UNITARY_TOL = 1e-10


@dataclass(frozen=True)
class Trainable:
    name: str
    init: float = 0.0


@dataclass(frozen=True)
class InputFeature:
    name: str
    feature_index: int
    scale: float = 1.0

    def __post_init__(self):
        if self.feature_index < 0:
            raise ValueError("feature_index must be >= 0")


@dataclass(frozen=True)
class Fixed:
    value: float


ParamSource = Union[Trainable, InputFeature, Fixed]


@dataclass(frozen=True)
class PhaseShifter:
    mode: int
    phase: ParamSource


@dataclass(frozen=True)
class BeamSplitter:
    """Beam splitter on the adjacent pair ``(mode, mode + 1)``."""

    mode: int
    theta: ParamSource

    @property
    def modes(self) -> tuple[int, int]:
        return (self.mode, self.mode + 1)


@dataclass(frozen=True, eq=False)
class StaticUnitary:
    first_mode: int
    matrix: np.ndarray

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=np.complex128)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"static unitary must be square, got {mat.shape}")
        err = np.max(np.abs(mat.conj().T @ mat - np.eye(mat.shape[0])))
        if err > UNITARY_TOL:
            raise ValueError(f"static matrix is not unitary (deviation {err:.2e})")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


Component = Union[PhaseShifter, BeamSplitter, StaticUnitary]


def _source(c: Component) -> ParamSource | None:
    if isinstance(c, PhaseShifter):
        return c.phase
    if isinstance(c, BeamSplitter):
        return c.theta
    return None


def _modes(c: Component) -> list[int]:
    if isinstance(c, PhaseShifter):
        return [c.mode]
    if isinstance(c, BeamSplitter):
        return [c.mode, c.mode + 1]
    return list(range(c.first_mode, c.first_mode + c.size))


@dataclass(frozen=True)
class ParamCircuit:
    """Immutable ordered component list over ``m`` modes.

    Builder methods return new circuits.
    """

    m: int
    components: tuple = ()
    trainable_names: tuple = field(init=False)
    input_feature_count: int = field(init=False)

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("a circuit needs at least one mode")
        comps = tuple(self.components)
        object.__setattr__(self, "components", comps)
        names: list[str] = []
        seen: dict[str, ParamSource] = {}
        n_features = 0
        for c in comps:
            for mode in _modes(c):
                if not 0 <= mode < self.m:
                    raise ModeOutOfRange(f"{c!r} touches mode {mode} outside [0, {self.m})")
            src = _source(c)
            if isinstance(src, (Trainable, InputFeature)):
                if src.name in seen and seen[src.name] != src:
                    raise ValueError(f"parameter name {src.name!r} bound twice with different sources")
                if src.name not in seen:
                    seen[src.name] = src
                    if isinstance(src, Trainable):
                        names.append(src.name)
            if isinstance(src, InputFeature):
                n_features = max(n_features, src.feature_index + 1)
        object.__setattr__(self, "trainable_names", tuple(names))
        object.__setattr__(self, "input_feature_count", n_features)

    @property
    def n_trainable(self) -> int:
        return len(self.trainable_names)

    def initial_theta(self) -> np.ndarray:
        inits = {}
        for c in self.components:
            src = _source(c)
            if isinstance(src, Trainable):
                inits.setdefault(src.name, src.init)
        return np.array([inits[n] for n in self.trainable_names], dtype=float)

    def random_theta(self, rng: np.random.Generator | int | None = None) -> np.ndarray:
        rng = np.random.default_rng(rng)
        return rng.uniform(0.0, 2 * np.pi, size=self.n_trainable)

    def with_init(self, theta: Sequence[float]) -> "ParamCircuit":
        """Copy of the circuit whose trainable ``init`` values are ``theta``."""
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.n_trainable,):
            raise ArityMismatch(f"expected {self.n_trainable} values, got {theta.shape}")
        lookup = dict(zip(self.trainable_names, theta))
        comps = []
        for c in self.components:
            src = _source(c)
            if isinstance(src, Trainable):
                new = Trainable(src.name, float(lookup[src.name]))
                c = PhaseShifter(c.mode, new) if isinstance(c, PhaseShifter) else BeamSplitter(c.mode, new)
            comps.append(c)
        return ParamCircuit(self.m, tuple(comps))

    def then(self, other: "ParamCircuit") -> "ParamCircuit":
        """Circuit applying ``self`` first, then ``other``."""
        if other.m != self.m:
            raise ValueError(f"mode counts differ: {self.m} vs {other.m}")
        return ParamCircuit(self.m, self.components + other.components)

    def add(self, *components: Component) -> "ParamCircuit":
        return ParamCircuit(self.m, self.components + tuple(components))

    def add_angle_encoding(self, modes: Sequence[int], name_prefix: str = "x", scale: float = 1.0):
        return add_angle_encoding(self, modes, name_prefix, scale)

    # serialisation -----------------------------------------------------
    def to_dict(self) -> dict:
        return {"modes": self.m, "components": [_component_to_dict(c) for c in self.components]}

    def to_json(self, indent: int | None = None) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_dict(cls, data: dict) -> "ParamCircuit":
        try:
            m = int(data["modes"])
            comps = tuple(_component_from_dict(c) for c in data.get("components", []))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, (ModeOutOfRange,)):
                raise
            raise InvalidSpec(f"bad circuit description: {exc}") from exc
        return cls(m, comps)

    @classmethod
    def from_json(cls, text: str) -> "ParamCircuit":
        return cls.from_dict(json.loads(text))


def _source_to_dict(src: ParamSource) -> dict:
    if isinstance(src, Trainable):
        return {"kind": "trainable", "name": src.name, "init": src.init}
    if isinstance(src, InputFeature):
        return {"kind": "input", "name": src.name, "index": src.feature_index, "scale": src.scale}
    return {"kind": "fixed", "value": src.value}


def _source_from_dict(d: dict) -> ParamSource:
    kind = d["kind"]
    if kind == "trainable":
        return Trainable(str(d["name"]), float(d.get("init", 0.0)))
    if kind == "input":
        index = int(d["index"])
        return InputFeature(str(d.get("name", f"x{index}")), index, float(d.get("scale", 1.0)))
    if kind == "fixed":
        return Fixed(float(d["value"]))
    raise ValueError(f"unknown parameter kind {kind!r}")


def _component_to_dict(c: Component) -> dict:
    if isinstance(c, PhaseShifter):
        return {"type": "ps", "modes": [c.mode], "param": _source_to_dict(c.phase)}
    if isinstance(c, BeamSplitter):
        return {"type": "bs", "modes": [c.mode, c.mode + 1], "param": _source_to_dict(c.theta)}
    return {
        "type": "static",
        "modes": _modes(c),
        "matrix": [[[float(z.real), float(z.imag)] for z in row] for row in c.matrix],
    }


def _component_from_dict(d: dict) -> Component:
    kind = d["type"]
    modes = [int(v) for v in d["modes"]]
    if kind == "ps":
        if len(modes) != 1:
            raise ValueError("phase shifter takes one mode")
        return PhaseShifter(modes[0], _source_from_dict(d["param"]))
    if kind == "bs":
        if len(modes) != 2 or modes[1] != modes[0] + 1:
            raise ValueError(f"beam splitter needs adjacent modes, got {modes}")
        return BeamSplitter(modes[0], _source_from_dict(d["param"]))
    if kind == "static":
        mat = np.array([[complex(re, im) for re, im in row] for row in d["matrix"]])
        if modes != list(range(modes[0], modes[0] + mat.shape[0])):
            raise ValueError("static unitary modes must be contiguous and match matrix size")
        return StaticUnitary(modes[0], mat)
    raise ValueError(f"unknown component type {kind!r}")


# compilation ------------------------------------------------------------

def _check_arity(c: ParamCircuit, theta, X) -> tuple[np.ndarray, np.ndarray]:
    theta = np.asarray(theta, dtype=float).ravel()
    X = np.asarray([] if X is None else X, dtype=float)
    if X.ndim < 2:
        X = X.reshape(1, -1)
    if theta.shape[0] != c.n_trainable:
        raise ArityMismatch(f"expected {c.n_trainable} trainable values, got {theta.shape[0]}")
    if X.shape[1] < c.input_feature_count:
        raise ArityMismatch(f"expected at least {c.input_feature_count} features, got {X.shape[1]}")
    return theta, X


def _values(src: ParamSource | None, params: dict[str, float], X: np.ndarray) -> np.ndarray | None:
    """Bound value of ``src`` for every row of ``X``."""
    if src is None:
        return None
    if isinstance(src, Trainable):
        return np.full(X.shape[0], params[src.name])
    if isinstance(src, InputFeature):
        return src.scale * X[:, src.feature_index]
    return np.full(X.shape[0], src.value)


def _local(c: Component, value: np.ndarray | None, B: int):
    """Per-row local block and its derivative wrt the bound value.

    Returns ``(slice, block, dblock)`` with blocks of shape ``(B, k, k)``.
    """
    if isinstance(c, PhaseShifter):
        e = np.exp(1j * value)[:, None, None]
        return slice(c.mode, c.mode + 1), e, 1j * e
    if isinstance(c, BeamSplitter):
        co, si = np.cos(value / 2), np.sin(value / 2)
        block = np.empty((B, 2, 2), dtype=np.complex128)
        block[:, 0, 0] = block[:, 1, 1] = co
        block[:, 0, 1] = block[:, 1, 0] = 1j * si
        dblock = np.empty((B, 2, 2), dtype=np.complex128)
        dblock[:, 0, 0] = dblock[:, 1, 1] = -0.5 * si
        dblock[:, 0, 1] = dblock[:, 1, 0] = 0.5j * co
        return slice(c.mode, c.mode + 2), block, dblock
    return slice(c.first_mode, c.first_mode + c.size), np.broadcast_to(c.matrix, (B,) + c.matrix.shape), None


def _apply_left(block: np.ndarray, sl: slice, mats: np.ndarray) -> np.ndarray:
    """``B @ mats`` for a stack, where ``B`` is ``block`` embedded on ``sl``."""
    out = mats.copy()
    out[:, sl, :] = block @ mats[:, sl, :]
    return out


def compile_batch(c: ParamCircuit, theta, X) -> np.ndarray:
    """Stack of transfer matrices, one per row of ``X``: shape ``(B, m, m)``."""
    theta, X = _check_arity(c, theta, X)
    params = dict(zip(c.trainable_names, theta))
    B = X.shape[0]
    U = np.broadcast_to(np.eye(c.m, dtype=np.complex128), (B, c.m, c.m)).copy()
    for comp in c.components:
        sl, block, _ = _local(comp, _values(_source(comp), params, X), B)
        U = _apply_left(block, sl, U)
    return U


def compile_unitary(c: ParamCircuit, theta=(), x=()) -> np.ndarray:
    """Transfer matrix of ``c`` for trainable values ``theta`` and features ``x``."""
    return compile_batch(c, theta, np.asarray(x, dtype=float).reshape(1, -1))[0]


def compile_batch_with_derivatives(c: ParamCircuit, theta, X):
    """Batched unitaries plus exact derivatives.

    Returns:
        ``(U, dtheta, dx)`` with shapes ``(B, m, m)``, ``(B, T, m, m)`` and
        ``(B, F, m, m)`` where ``F = c.input_feature_count``.
    """
    theta, X = _check_arity(c, theta, X)
    params = dict(zip(c.trainable_names, theta))
    t_index = {name: i for i, name in enumerate(c.trainable_names)}
    m, B = c.m, X.shape[0]
    locals_ = [
        (_source(comp),) + _local(comp, _values(_source(comp), params, X), B)
        for comp in c.components
    ]
    # prefix[k] = M_{k-1} ... M_0 ; suffix runs M_last ... M_{k+1}
    prefix = [np.broadcast_to(np.eye(m, dtype=np.complex128), (B, m, m)).copy()]
    for _, sl, block, _ in locals_:
        prefix.append(_apply_left(block, sl, prefix[-1]))
    U = prefix[-1]
    dtheta = np.zeros((B, len(t_index), m, m), dtype=np.complex128)
    dx = np.zeros((B, c.input_feature_count, m, m), dtype=np.complex128)
    suffix = np.broadcast_to(np.eye(m, dtype=np.complex128), (B, m, m)).copy()
    for k in range(len(locals_) - 1, -1, -1):
        src, sl, block, dblock = locals_[k]
        if isinstance(src, (Trainable, InputFeature)):
            term = suffix[:, :, sl] @ (dblock @ prefix[k][:, sl, :])
            if isinstance(src, Trainable):
                dtheta[:, t_index[src.name]] += term
            else:
                dx[:, src.feature_index] += src.scale * term
        suffix = suffix.copy()
        suffix[:, :, sl] = suffix[:, :, sl] @ block
    return U, dtheta, dx


def compile_with_derivatives(c: ParamCircuit, theta=(), x=()):
    """Single-row version of :func:`compile_batch_with_derivatives`."""
    U, dth, dx = compile_batch_with_derivatives(c, theta, np.asarray(x, dtype=float).reshape(1, -1))
    return U[0], dth[0], dx[0]


def compile_unitary_derivative(c: ParamCircuit, theta=(), x=(), wrt: str | int = "") -> np.ndarray:
    """``dU/dp`` for a trainable name or an integer feature index.

    A trainable name that appears in no component raises
    :class:`UnknownParameter`; a feature index not bound anywhere gives zeros.
    """
    U, dtheta, dx = compile_with_derivatives(c, theta, x)
    if isinstance(wrt, str):
        if wrt not in c.trainable_names:
            raise UnknownParameter(wrt)
        return dtheta[c.trainable_names.index(wrt)]
    wrt = int(wrt)
    if wrt < 0:
        raise UnknownParameter(wrt)
    if wrt >= dx.shape[0]:
        return np.zeros_like(U)
    return dx[wrt]


# builders -----------------------------------------------------------------

def universal_mesh(m: int, name_prefix: str = "W", rng=None) -> ParamCircuit:
    """Rectangular (brick-wall) mesh of ``m`` columns.

    Every beam splitter is preceded by a trainable phase on its upper mode,
    and a final column of ``m`` trainable phases closes the mesh, giving
    ``m(m-1) + m`` trainable parameters. Initial values are drawn uniformly
    from ``[0, 2 pi)`` with ``rng``.
    """
    if m < 2:
        raise ValueError("a mesh needs at least two modes")
    rng = np.random.default_rng(rng)
    comps: list[Component] = []
    k = 0

    def fresh(kind: str) -> Trainable:
        nonlocal k
        t = Trainable(f"{name_prefix}_{kind}{k}", float(rng.uniform(0, 2 * np.pi)))
        k += 1
        return t

    for layer in range(m):
        for top in range(layer % 2, m - 1, 2):
            comps.append(PhaseShifter(top, fresh("phi")))
            comps.append(BeamSplitter(top, fresh("theta")))
    for mode in range(m):
        comps.append(PhaseShifter(mode, fresh("out")))
    return ParamCircuit(m, tuple(comps))


def add_angle_encoding(c: ParamCircuit, modes: Sequence[int], name_prefix: str = "x", scale: float = 1.0) -> ParamCircuit:
    """Append one feature-bound phase shifter per mode.

    Features are numbered from the circuit's current ``input_feature_count``.
    """
    modes = [int(v) for v in modes]
    if len(set(modes)) != len(modes):
        raise DuplicateMode(f"duplicate modes in {modes}")
    for mode in modes:
        if not 0 <= mode < c.m:
            raise ModeOutOfRange(f"mode {mode} outside [0, {c.m})")
    start = c.input_feature_count
    comps = [
        PhaseShifter(mode, InputFeature(f"{name_prefix}{start + i}", start + i, scale))
        for i, mode in enumerate(modes)
    ]
    return c.add(*comps)


def sandwich(m: int, encoded_modes: Sequence[int], rng=None, scale: float = 1.0) -> ParamCircuit:
    """``W2 . S(x) . W1``: two trainable meshes around an angle-encoding layer."""
    rng = np.random.default_rng(rng)
    first = universal_mesh(m, "W1", rng)
    enc = add_angle_encoding(ParamCircuit(m), encoded_modes, "x", scale)
    second = universal_mesh(m, "W2", rng)
    return first.then(enc).then(second)


def unitary_distance(U: np.ndarray, V: np.ndarray) -> float:
    """Phase-insensitive distance ``sqrt(1 - |tr(V^H U)| / m)``.

    Equals ``min_a ||U - e^{ia} V||_F / sqrt(2m)`` for unitaries.
    """
    m = U.shape[0]
    overlap = abs(np.trace(V.conj().T @ U)) / m
    return float(np.sqrt(max(0.0, 1.0 - overlap)))
