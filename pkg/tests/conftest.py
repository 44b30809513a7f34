"""Shared test helpers: brute-force references that share no code with photonq."""

import itertools
import math
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def all_states(m, n):
    """Every occupation tuple of n photons in m modes, descending lexicographic order."""
    return sorted((t for t in itertools.product(range(n + 1), repeat=m) if sum(t) == n), reverse=True)


def naive_permanent(A):
    A = np.asarray(A)
    k = A.shape[0]
    return sum(math.prod(A[i, p[i]] for i in range(k)) for p in itertools.permutations(range(k))) if k else 1.0


def naive_amplitude(U, s, t):
    cols = [j for j, c in enumerate(s) for _ in range(c)]
    rows = [i for i, c in enumerate(t) for _ in range(c)]
    norm = math.sqrt(math.prod(math.factorial(c) for c in s) * math.prod(math.factorial(c) for c in t))
    return naive_permanent(np.asarray(U)[np.ix_(rows, cols)]) / norm


def naive_state(U, s):
    n = sum(s)
    return np.array([naive_amplitude(U, s, t) for t in all_states(len(s), n)])


def random_unitary(m, rng):
    z = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def central_diff(f, x, h):
    """Gradient of scalar f at real vector x by central differences."""
    x = np.array(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e.flat[i] = h
        g.flat[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def fd_ok(fd, an, rel=1e-5, floor=1e-9):
    return np.all(np.abs(fd - an) <= np.maximum(rel * np.abs(fd), floor))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


STRATEGY_KINDS = ("probabilities", "per_mode_expectation", "amplitudes", "partial")


def layer_combinations():
    """Every valid (strategy kind, detector, space) triple."""
    out = []
    for kind in STRATEGY_KINDS:
        for det in ("pnr", "threshold"):
            for space in ("fock", "unbunched"):
                if kind == "amplitudes" and det == "threshold":
                    continue
                out.append((kind, det, space))
    return out


def random_layer_spec(rng, kind, det, space, amplitude_input=False):
    from photonq.circuit import ParamCircuit, add_angle_encoding, universal_mesh
    from photonq.fock import FockState
    from photonq.layer import AmplitudeInput, LayerSpec
    from photonq.measurement import ComputationSpace, Detector, MeasurementStrategy

    m = int(rng.integers(3, 5))
    n = int(rng.integers(1, m + 1)) if space == "unbunched" else int(rng.integers(1, 4))
    w1 = universal_mesh(m, "A", rng)
    if amplitude_input:
        circuit = w1
        state = AmplitudeInput(n)
    else:
        k = int(rng.integers(1, m + 1))
        enc = add_angle_encoding(ParamCircuit(m), sorted(rng.choice(m, k, replace=False).tolist()),
                                 scale=float(rng.uniform(0.5, 2)))
        circuit = w1.then(enc).then(universal_mesh(m, "B", rng))
        occ = [1] * n + [0] * (m - n) if space == "unbunched" else np.bincount(rng.integers(0, m, n), minlength=m)
        state = FockState(occ)
    if kind == "partial":
        strategy = MeasurementStrategy.partial(sorted(rng.choice(m, int(rng.integers(1, m)), replace=False).tolist()))
    else:
        strategy = MeasurementStrategy(kind)
    return LayerSpec(circuit, state, strategy, Detector(det), ComputationSpace(space))


def layer_gradient_errors(layer, X, rng, h=1e-5):
    """Analytic vs central-difference gradients of L = sum(w * outputs).

    Returns ``(worst ratio |fd - an| / max(1e-5 |fd|, 1e-9), n_checked)``.
    """
    out = layer.forward(X)
    w = rng.standard_normal(out.shape)
    layer.forward(X, training=True)
    g_theta, g_x = layer.backward(X, w)
    theta0 = layer.theta.copy()

    def loss_theta(t):
        layer.theta = t
        return float(np.sum(w * layer.forward(X)))

    fd_theta = central_diff(loss_theta, theta0, h)
    layer.theta = theta0
    X = np.asarray(X)
    if np.iscomplexobj(X):
        def loss_re(v):
            return float(np.sum(w * layer.forward(v.reshape(X.shape) + 1j * X.imag)))

        def loss_im(v):
            return float(np.sum(w * layer.forward(X.real + 1j * v.reshape(X.shape))))

        fd_x = central_diff(loss_re, X.real.ravel(), h) + 1j * central_diff(loss_im, X.imag.ravel(), h)
        pairs = [(fd_x.real, g_x.real.ravel()), (fd_x.imag, g_x.imag.ravel())]
    else:
        fd_x = central_diff(lambda v: float(np.sum(w * layer.forward(v.reshape(X.shape)))), X.ravel(), h)
        pairs = [(fd_x, g_x.ravel())]
    pairs.append((fd_theta, g_theta))
    worst, count = 0.0, 0
    for fd, an in pairs:
        ratio = np.abs(fd - an) / np.maximum(1e-5 * np.abs(fd), 1e-9)
        worst = max(worst, float(ratio.max(initial=0.0)))
        count += fd.size
    return worst, count


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number])
