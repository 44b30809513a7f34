"""Desk-scale experiments: Fourier-series fitting, moons classification,
SLOS-vs-permanent verification and graph-reuse benchmarking.

Each function returns plain dicts/arrays; :mod:`photonq.cli` only formats.
"""

from __future__ import annotations

import itertools
import math
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Sequence

import numpy as np

from . import slos
from .circuit import sandwich
from .fock import FockState
from .layer import LayerSpec, QuantumLayer
from .measurement import MeasurementStrategy
from .oracle import haar_unitary, oracle_state
from .train import Adam, batch_cross_entropy, class_masses, grouping_from_map, leading_mode_grouping, parity_grouping

FOURIER_GRID = 64
VERIFY_TOL = 1e-10


def spread_photons(n: int, m: int) -> FockState:
    """``n`` photons placed one per mode from mode 0, wrapping round."""
    return FockState(np.bincount(np.arange(n) % m, minlength=m))


# Fourier fitting ------------------------------------------------------------

def random_fourier_coefficients(degree: int, rng) -> np.ndarray:
    """Coefficients ``c_{-d..d}`` of a real trigonometric polynomial."""
    rng = np.random.default_rng(rng)
    pos = (rng.standard_normal(degree) + 1j * rng.standard_normal(degree)) / 4
    c0 = rng.standard_normal() / 4
    return np.concatenate([np.conj(pos[::-1]), [c0], pos])


def fourier_series(coeffs: Sequence[complex], x: np.ndarray) -> np.ndarray:
    """``g(x) = sum_k c_k exp(-i k x)`` for ``k = -d..d``; real part returned."""
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    d = (len(coeffs) - 1) // 2
    ks = np.arange(-d, d + 1)
    return (np.exp(-1j * np.outer(x, ks)) @ coeffs).real


def fourier_grid(points: int = FOURIER_GRID) -> np.ndarray:
    return 2 * np.pi * np.arange(points) / points


def trig_projection_error(y: np.ndarray, x: np.ndarray, degree: int) -> float:
    """Mean squared residual of the least-squares degree-``degree`` trig fit."""
    cols = [np.ones_like(x)]
    for k in range(1, degree + 1):
        cols += [np.cos(k * x), np.sin(k * x)]
    A = np.stack(cols, axis=1)
    w, *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(np.mean((A @ w - y) ** 2))


def fourier_layer(n_photons: int, seed=None, m: int = 3) -> QuantumLayer:
    """Trainable mesh, one phase encoding ``x`` on mode 0, trainable mesh."""
    circuit = sandwich(m, [0], np.random.default_rng(seed))
    return QuantumLayer(LayerSpec(circuit, spread_photons(n_photons, m)))


def _readout_fit(P: np.ndarray, y: np.ndarray):
    A = np.hstack([P, np.ones((P.shape[0], 1))])
    w, *_ = np.linalg.lstsq(A, y, rcond=None)
    return A @ w, w


def fit_fourier(coeffs, n_photons: int, steps: int = 2000, lr: float = 0.05, seed: int = 0, points: int = FOURIER_GRID) -> dict:
    """Fit ``g`` with a linear readout of the layer's output distribution.

    At every step the readout (weights + bias) is the least-squares optimum
    for the current circuit; Adam updates the circuit phases along the
    gradient of that optimal loss.
    """
    if not 1 <= n_photons <= 6:
        raise ValueError("n_photons must lie in [1, 6]")
    x = fourier_grid(points)
    y = fourier_series(coeffs, x)
    layer = fourier_layer(n_photons, seed)
    X = x[:, None]
    opt = Adam({"theta": layer.theta.size}, lr=lr)
    history = []
    best = (math.inf, layer.theta.copy())
    for _ in range(steps):
        P = layer.forward(X, training=True)
        fit, w = _readout_fit(P, y)
        resid = fit - y
        loss = float(np.mean(resid**2))
        history.append(loss)
        if loss < best[0]:
            best = (loss, layer.theta.copy())
        # optimal readout => envelope theorem, dL/dP = 2 r w^T / N
        upstream = 2.0 * np.outer(resid, w[:-1]) / len(y)
        g_theta, _ = layer.backward(X, upstream)
        layer.theta = opt.step("theta", layer.theta, g_theta)
    layer.theta = best[1]
    fit, w = _readout_fit(layer.forward(X), y)
    return {
        "x": x,
        "target": y,
        "fit": fit,
        "mse": float(np.mean((fit - y) ** 2)),
        "history": history,
        "theta": layer.theta,
        "readout": w,
        "input_state": str(layer.spec.input_state),
    }


# moons ------------------------------------------------------------------------

def make_moons(samples: int, noise: float, rng) -> tuple[np.ndarray, np.ndarray]:
    """Two interleaved half circles with isotropic Gaussian noise."""
    rng = np.random.default_rng(rng)
    n0 = samples // 2
    n1 = samples - n0
    t0 = rng.uniform(0, np.pi, n0)
    t1 = rng.uniform(0, np.pi, n1)
    a = np.stack([np.cos(t0), np.sin(t0)], axis=1)
    b = np.stack([1 - np.cos(t1), 0.5 - np.sin(t1)], axis=1)
    X = np.vstack([a, b]) + noise * rng.standard_normal((samples, 2))
    y = np.r_[np.zeros(n0, dtype=int), np.ones(n1, dtype=int)]
    order = rng.permutation(samples)
    return X[order], y[order]


class PhaseScaler:
    """Affine map of each feature onto ``[0, pi]`` using fitted min/max."""

    def fit(self, X):
        self.lo = X.min(axis=0)
        self.span = np.where(X.max(axis=0) > self.lo, X.max(axis=0) - self.lo, 1.0)
        return self

    def transform(self, X):
        return np.pi * (X - self.lo) / self.span


def moons_layer(seed=None, encoding_scale: float = 1.5) -> QuantumLayer:
    circuit = sandwich(3, [0, 1], np.random.default_rng(seed), scale=encoding_scale)
    return QuantumLayer(LayerSpec(circuit, FockState([1, 1, 1]), MeasurementStrategy.probabilities()))


def _moons_groups(groups, layer: QuantumLayer) -> np.ndarray:
    if isinstance(groups, str):
        if groups == "parity":
            return parity_grouping(layer.output_dim)
        if groups == "leading_mode":
            return leading_mode_grouping(np.array(layer.output_keys))
        raise ValueError(f"unknown grouping {groups!r}")
    return grouping_from_map(groups, layer.output_dim)


def classify_moons(samples: int = 200, noise: float = 0.1, epochs: int = 200, lr: float = 0.1, seed: int = 42,
                   test_fraction: float = 0.25, grid: int = 100, encoding_scale: float = 1.5,
                   groups: Sequence[int] | str = "parity") -> dict:
    """Full-batch training of the 3-mode ``[1,1,1]`` layer on moons.

    Features are mapped onto ``[0, pi]`` and enter the phases multiplied by
    ``encoding_scale``. The class of each output is ``groups[i]``, by
    default the parity of the output index (``"parity"``). ``"leading_mode"``
    uses the parity of each state's first occupied mode instead, and a
    sequence is taken as an explicit map. The loss is the negative log of
    the labelled class mass.
    """
    rng = np.random.default_rng(seed)
    X, y = make_moons(samples, noise, rng)
    n_test = int(round(samples * test_fraction))
    Xtr, ytr, Xte, yte = X[n_test:], y[n_test:], X[:n_test], y[:n_test]
    scaler = PhaseScaler().fit(Xtr)
    layer = moons_layer(rng, encoding_scale)
    groups = _moons_groups(groups, layer)
    opt = Adam({"theta": layer.theta.size}, lr=lr)
    Ztr = scaler.transform(Xtr)
    losses = []
    for _ in range(epochs):
        P = layer.forward(Ztr, training=True)
        loss, grad = batch_cross_entropy(P, ytr, groups)
        losses.append(loss)
        g_theta, _ = layer.backward(Ztr, grad)
        layer.theta = opt.step("theta", layer.theta, g_theta)

    def predict(Z):
        return class_masses(layer.forward(Z), groups, 2).argmax(axis=1)

    train_acc = float(np.mean(predict(Ztr) == ytr))
    test_acc = float(np.mean(predict(scaler.transform(Xte)) == yte))
    lo, hi = X.min(axis=0) - 0.5, X.max(axis=0) + 0.5
    gx, gy = np.meshgrid(np.linspace(lo[0], hi[0], grid), np.linspace(lo[1], hi[1], grid))
    pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
    zs = np.clip(scaler.transform(pts), -np.pi, 2 * np.pi)
    prob1 = class_masses(layer.forward(zs), groups, 2)[:, 1]
    return {
        "train_accuracy": train_acc,
        "test_accuracy": test_acc,
        "final_loss": losses[-1],
        "losses": losses,
        "grid_points": pts,
        "grid_prob_class1": prob1,
        "X": X,
        "y": y,
        "theta": layer.theta,
        "groups": groups,
    }


# verification -----------------------------------------------------------------

def _verify_pair(m: int, n: int, trials: int, seed: int, perturb: float) -> float:
    rng = np.random.default_rng([seed, m, n])
    if n == 0:
        return 0.0
    graph = None
    worst = 0.0
    for _ in range(trials):
        U = haar_unitary(m, rng)
        state = FockState(np.bincount(rng.integers(0, m, n), minlength=m))
        graph = slos.build_graph(m, state) if graph is None else graph.with_input(state)
        U_slos = U + perturb * np.ones_like(U) if perturb else U
        fast = slos.forward(graph, U_slos, check_unitary=not perturb).values
        ref = oracle_state(U, state).values
        worst = max(worst, float(np.abs(fast - ref).max()))
    return worst


def verify(max_m: int = 5, max_n: int = 4, trials: int = 50, seed: int = 0, threads: int = 1, perturb: float = 0.0) -> dict:
    """SLOS against the permanent oracle for every ``m <= max_m``, ``n <= max_n``."""
    pairs = list(itertools.product(range(1, max_m + 1), range(0, max_n + 1)))
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        devs = list(pool.map(lambda mn: _verify_pair(mn[0], mn[1], trials, seed, perturb), pairs))
    per_pair = {f"{m},{n}": d for (m, n), d in zip(pairs, devs)}
    worst = max(devs, default=0.0)
    return {"max_deviation": worst, "tolerance": VERIFY_TOL, "passed": worst <= VERIFY_TOL, "pairs": per_pair}


# benchmark ----------------------------------------------------------------------

def bench(m: int, n: int, batch: int = 1, repeats: int = 10, seed: int = 0) -> dict:
    """Time one graph build and ``repeats`` forward passes with fresh unitaries."""
    rng = np.random.default_rng(seed)
    state = spread_photons(n, m)
    Us = [np.stack([haar_unitary(m, rng) for _ in range(batch)]) for _ in range(repeats)]
    before = slos.build_count()
    t0 = time.perf_counter()
    graph = slos.build_graph(m, state)
    t1 = time.perf_counter()
    times = []
    for U in Us:
        s = time.perf_counter()
        slos.forward_batch(graph, U, check_unitary=False)
        times.append(time.perf_counter() - s)
    builds = slos.build_count() - before
    times = np.array(times)
    return {
        "m": m,
        "n": n,
        "batch": batch,
        "repeats": repeats,
        "basis_size": graph.basis.size,
        "build_count": builds,
        "build_time_s": t1 - t0,
        "first_call_s": (t1 - t0) + float(times[0]),
        "forward_time_s": float(times[1:].mean()) if repeats > 1 else float(times[0]),
        "forward_time_var_s2": float(times[1:].var()) if repeats > 1 else 0.0,
        "forward_times_s": times.tolist(),
    }
