"""Adam, losses and class groupings for small training loops."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BadGrouping, LengthMismatch

PROB_FLOOR = 1e-12


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, size: int, **hyper) -> "AdamState":
        return cls(np.zeros(size), np.zeros(size), **hyper)

    def to_json(self) -> str:
        # repr round-trips floats exactly, so resumed runs are bit-identical
        return json.dumps({
            "m": [repr(float(v)) for v in self.m],
            "v": [repr(float(v)) for v in self.v],
            "step": self.step,
            "lr": repr(self.lr), "beta1": repr(self.beta1),
            "beta2": repr(self.beta2), "eps": repr(self.eps),
        })

    @classmethod
    def from_json(cls, text: str) -> "AdamState":
        d = json.loads(text)
        return cls(
            np.array([float(v) for v in d["m"]]),
            np.array([float(v) for v in d["v"]]),
            int(d["step"]),
            float(d["lr"]), float(d["beta1"]), float(d["beta2"]), float(d["eps"]),
        )


def adam_step(params: np.ndarray, grads: np.ndarray, state: AdamState) -> tuple[np.ndarray, AdamState]:
    """One bias-corrected Adam update. Returns new params and a new state."""
    params = np.asarray(params, dtype=float)
    grads = np.asarray(grads, dtype=float)
    if params.shape != grads.shape or params.shape != state.m.shape:
        raise LengthMismatch(f"shapes differ: params {params.shape}, grads {grads.shape}, state {state.m.shape}")
    t = state.step + 1
    m = state.beta1 * state.m + (1 - state.beta1) * grads
    v = state.beta2 * state.v + (1 - state.beta2) * grads**2
    m_hat = m / (1 - state.beta1**t)
    v_hat = v / (1 - state.beta2**t)
    new = params - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return new, AdamState(m, v, t, state.lr, state.beta1, state.beta2, state.eps)


class Adam:
    """Stateful wrapper holding several named parameter arrays."""

    def __init__(self, sizes: dict[str, int], lr: float = 0.01, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.states = {k: AdamState.zeros(n, lr=lr, beta1=beta1, beta2=beta2, eps=eps) for k, n in sizes.items()}

    def step(self, name: str, params: np.ndarray, grads: np.ndarray) -> np.ndarray:
        new, self.states[name] = adam_step(params, grads, self.states[name])
        return new


def mse_loss(pred, target) -> tuple[float, np.ndarray]:
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape:
        raise LengthMismatch(f"pred {pred.shape} vs target {target.shape}")
    diff = pred - target
    return float(np.mean(diff**2)), 2.0 * diff / diff.size


def _check_groups(groups: np.ndarray, size: int) -> np.ndarray:
    groups = np.asarray(groups)
    if groups.shape != (size,) or groups.dtype.kind not in "iu" or (groups < 0).any():
        raise BadGrouping("grouping must assign a non-negative class index to every output")
    return groups


def cross_entropy_from_probs(probs, label: int, groups) -> tuple[float, np.ndarray]:
    """``-log`` of the probability mass in the labelled class.

    Args:
        probs: output distribution of one sample.
        label: class index.
        groups: ``groups[i]`` is the class that output ``i`` votes for.
    """
    probs = np.asarray(probs, dtype=float)
    groups = _check_groups(groups, probs.shape[0])
    if label not in set(groups.tolist()):
        raise BadGrouping(f"no output is assigned to class {label}")
    mask = groups == label
    mass = probs[mask].sum()
    clamped = max(mass, PROB_FLOOR)
    grad = np.zeros_like(probs)
    if mass >= PROB_FLOOR:
        grad[mask] = -1.0 / mass
    return float(-np.log(clamped)), grad


def batch_cross_entropy(P: np.ndarray, labels: Sequence[int], groups) -> tuple[float, np.ndarray]:
    """Mean of :func:`cross_entropy_from_probs` over rows, with its gradient."""
    P = np.atleast_2d(np.asarray(P, dtype=float))
    labels = np.asarray(labels)
    if labels.shape[0] != P.shape[0]:
        raise LengthMismatch("one label per row required")
    total = 0.0
    grad = np.zeros_like(P)
    for i in range(P.shape[0]):
        loss, g = cross_entropy_from_probs(P[i], int(labels[i]), groups)
        total += loss
        grad[i] = g
    return total / P.shape[0], grad / P.shape[0]


def class_masses(P: np.ndarray, groups, n_classes: int) -> np.ndarray:
    groups = _check_groups(groups, np.atleast_2d(P).shape[1])
    return np.stack([np.atleast_2d(P)[:, groups == c].sum(axis=1) for c in range(n_classes)], axis=1)


def parity_grouping(size: int) -> np.ndarray:
    """Two-class grouping by output index parity: even -> class 0, odd -> 1."""
    return np.arange(size, dtype=np.int64) % 2


def grouping_from_map(mapping: Sequence[int], size: int) -> np.ndarray:
    """Validate an explicit ``output index -> class`` map."""
    return _check_groups(np.asarray(mapping, dtype=np.int64), size)


def leading_mode_grouping(states: np.ndarray) -> np.ndarray:
    """Class = parity of the first occupied mode of each output state."""
    states = np.asarray(states)
    return (np.argmax(states > 0, axis=1) % 2).astype(np.int64)
