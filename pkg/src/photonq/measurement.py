"""Turning amplitude vectors into classical outputs.

Keyed distributions are plain dicts whose insertion order is the canonical
order: lexicographically descending on the key tuple.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidModes, NullProjection
from .fock import AmplitudeVector, FockBasis, FockState

NULL_PROJECTION_TOL = 1e-300


class Detector(enum.Enum):
    PNR = "pnr"
    THRESHOLD = "threshold"


class ComputationSpace(enum.Enum):
    FOCK = "fock"
    UNBUNCHED = "unbunched"


@dataclass(frozen=True)
class MeasurementStrategy:
    """What the layer reports.

    ``kind`` is one of ``"probabilities"``, ``"per_mode_expectation"``,
    ``"amplitudes"`` or ``"partial"``; ``measured_modes`` is only used by
    ``"partial"``.
    """

    kind: str
    measured_modes: tuple = ()

    KINDS = ("probabilities", "per_mode_expectation", "amplitudes", "partial")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown strategy {self.kind!r}")
        modes = tuple(int(v) for v in self.measured_modes)
        if self.kind == "partial":
            if not modes:
                raise InvalidModes("partial measurement needs at least one mode")
            if len(set(modes)) != len(modes):
                raise InvalidModes(f"duplicate modes in {modes}")
            modes = tuple(sorted(modes))
        elif modes:
            raise ValueError("measured_modes only applies to partial measurement")
        object.__setattr__(self, "measured_modes", modes)

    @classmethod
    def probabilities(cls):
        return cls("probabilities")

    @classmethod
    def per_mode_expectation(cls):
        return cls("per_mode_expectation")

    @classmethod
    def amplitudes(cls):
        return cls("amplitudes")

    @classmethod
    def partial(cls, modes: Sequence[int]):
        return cls("partial", tuple(modes))

    def to_json_value(self):
        if self.kind == "partial":
            return {"partial": list(self.measured_modes)}
        return self.kind

    @classmethod
    def from_json_value(cls, value) -> "MeasurementStrategy":
        if isinstance(value, dict):
            return cls.partial(value["partial"])
        return cls(str(value))


def validate_partial(modes: Sequence[int], m: int, allow_all: bool = False) -> tuple[int, ...]:
    modes = tuple(sorted(int(v) for v in modes))
    if not modes:
        raise InvalidModes("no modes given")
    if len(set(modes)) != len(modes):
        raise InvalidModes(f"duplicate modes in {modes}")
    if modes[0] < 0 or modes[-1] >= m:
        raise InvalidModes(f"modes {modes} outside [0, {m})")
    if len(modes) == m and not allow_all:
        raise InvalidModes("partial measurement must leave at least one mode unmeasured")
    return modes


# grouping -----------------------------------------------------------------

def grouping(states: np.ndarray, modes: Sequence[int] | None = None, threshold: bool = False):
    """Map each basis state to an output key.

    Keys are occupations restricted to ``modes`` (all modes when ``None``),
    binarised when ``threshold``. Returns ``(keys, index)`` with ``keys`` in
    descending order and ``index[i]`` the key position of state ``i``.
    """
    states = np.asarray(states)
    sub = states if modes is None else states[:, list(modes)]
    if threshold:
        sub = (sub > 0).astype(states.dtype)
    keys, index = np.unique(sub, axis=0, return_inverse=True)
    # np.unique sorts ascending; flip to descending order
    keys = keys[::-1]
    index = (len(keys) - 1) - index.ravel()
    return [FockState(k) for k in keys], index


def _regroup(p: np.ndarray, keys, index) -> dict[FockState, float]:
    sums = np.bincount(index, weights=p, minlength=len(keys))
    return {k: float(v) for k, v in zip(keys, sums)}


def probabilities(a: AmplitudeVector | np.ndarray) -> np.ndarray:
    values = a.values if isinstance(a, AmplitudeVector) else np.asarray(a)
    return np.abs(values) ** 2


def apply_detector(p: np.ndarray, basis: FockBasis, detector: Detector) -> dict[FockState, float]:
    """PNR keeps Fock keys; threshold coarse-grains into click patterns."""
    p = np.asarray(p, dtype=float)
    if detector is Detector.PNR:
        return {FockState(s): float(v) for s, v in zip(basis.states, p)}
    keys, index = grouping(basis.states, threshold=True)
    return _regroup(p, keys, index)


def per_mode_expectation(p: np.ndarray, basis: FockBasis) -> np.ndarray:
    """Mean photon number in each mode."""
    return np.asarray(p, dtype=float) @ basis.states.astype(float)


def marginal(p: np.ndarray, basis: FockBasis, measured_modes: Sequence[int]) -> dict[FockState, float]:
    """Distribution of occupations on ``measured_modes`` only.

    Measuring every mode is allowed here and just re-keys ``p``.
    """
    modes = validate_partial(measured_modes, basis.m, allow_all=True)
    keys, index = grouping(basis.states, modes)
    return _regroup(np.asarray(p, dtype=float), keys, index)


def unbunched_indices(basis: FockBasis) -> np.ndarray:
    return np.flatnonzero((basis.states <= 1).all(axis=1))


def project_unbunched(a: AmplitudeVector) -> tuple[AmplitudeVector, float]:
    """Keep states with at most one photon per mode, renormalised.

    Returns the projected state over ``FockBasis(m, n)`` restricted to the
    unbunched states (as an :class:`UnbunchedVector`) and the success
    probability.
    """
    basis = a.basis
    if basis.n > basis.m:
        raise ValueError(f"no unbunched states with {basis.n} photons in {basis.m} modes")
    idx = unbunched_indices(basis)
    kept = a.values[idx]
    success = float(np.vdot(kept, kept).real)
    if success < NULL_PROJECTION_TOL:
        raise NullProjection("state has no weight on unbunched outcomes")
    return UnbunchedVector(basis, idx, kept / np.sqrt(success)), success


@dataclass
class UnbunchedVector:
    """Amplitudes on the unbunched subset of a Fock basis."""

    basis: FockBasis
    indices: np.ndarray
    values: np.ndarray

    @property
    def states(self) -> np.ndarray:
        return self.basis.states[self.indices]

    def as_dict(self) -> dict[FockState, complex]:
        return {FockState(s): complex(v) for s, v in zip(self.states, self.values)}


def distribution_to_json(dist: dict) -> str:
    """``{"[0,1,1]": 0.25, ...}`` with 17 significant digits."""
    body = ", ".join(f'"{FockState(k)}": {float(v):.17g}' for k, v in dist.items())
    return "{" + body + "}"
