import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from photonq import slos
from photonq.errors import InvalidModes, NullProjection
from photonq.fock import AmplitudeVector, FockBasis
from photonq.measurement import (
    Detector,
    MeasurementStrategy,
    apply_detector,
    distribution_to_json,
    marginal,
    per_mode_expectation,
    probabilities,
    project_unbunched,
)

from conftest import random_unitary

S = 1 / np.sqrt(2)
BALANCED = np.array([[S, 1j * S], [1j * S, S]])


@pytest.fixture
def hom():
    return slos.forward(slos.build_graph(2, [1, 1]), BALANCED)


def test_probabilities_examples(hom):
    b = FockBasis(3, 1)
    np.testing.assert_array_equal(probabilities(AmplitudeVector(b, np.array([0, 1, 0j]))), [0, 1, 0])
    np.testing.assert_allclose(probabilities(hom), [0.5, 0, 0.5], atol=1e-15)
    rng = np.random.default_rng(0)
    v = rng.standard_normal(20) + 1j * rng.standard_normal(20)
    assert probabilities(v / np.linalg.norm(v)).sum() == pytest.approx(1, abs=1e-12)


def test_threshold_hom(hom):
    q = apply_detector(probabilities(hom), hom.basis, Detector.THRESHOLD)
    assert {str(k): v for k, v in q.items()} == pytest.approx({"[1,1]": 0.0, "[1,0]": 0.5, "[0,1]": 0.5})
    assert list(map(str, q)) == ["[1,1]", "[1,0]", "[0,1]"]


def test_pnr_is_identity(hom):
    p = probabilities(hom)
    q = apply_detector(p, hom.basis, Detector.PNR)
    assert list(q.values()) == list(p)
    assert list(q.keys()) == list(hom.basis)


def test_per_mode_examples(hom):
    g = slos.build_graph(3, [1, 1, 1])
    a = slos.forward(g, np.eye(3))
    np.testing.assert_allclose(per_mode_expectation(probabilities(a), a.basis), [1, 1, 1])
    np.testing.assert_allclose(per_mode_expectation(probabilities(hom), hom.basis), [1, 1])


def test_marginal_hom(hom):
    d = marginal(probabilities(hom), hom.basis, [0])
    assert {str(k): v for k, v in d.items()} == pytest.approx({"[2]": 0.5, "[1]": 0.0, "[0]": 0.5})


def test_marginal_all_modes_rekeys(rng):
    a = slos.forward(slos.build_graph(3, [1, 0, 2]), random_unitary(3, rng))
    p = probabilities(a)
    d = marginal(p, a.basis, [0, 1, 2])
    assert list(d.keys()) == list(a.basis)
    assert list(d.values()) == list(p)


def test_partial_validation():
    with pytest.raises(InvalidModes):
        marginal(np.ones(3) / 3, FockBasis(2, 2), [2])
    with pytest.raises(InvalidModes):
        MeasurementStrategy.partial([])
    with pytest.raises(InvalidModes):
        MeasurementStrategy.partial([1, 1])
    assert MeasurementStrategy.partial([2, 0]).measured_modes == (0, 2)


def _reachable_clicks(m, n):
    return sum(math.comb(m, c) for c in range(1, min(m, n) + 1))


@pytest.mark.parametrize("m", range(1, 5))
@pytest.mark.parametrize("n", range(1, 4))
def test_regrouping_is_exact(m, n):
    """Threshold and partial outputs equal a hand-rolled regrouping of PNR."""
    rng = np.random.default_rng([m, n])
    basis = FockBasis(m, n)
    for _ in range(20):
        v = rng.standard_normal(basis.size) + 1j * rng.standard_normal(basis.size)
        p = probabilities(v / np.linalg.norm(v))
        clicks = {}
        for t, pt in zip(basis, p):
            key = tuple(int(x > 0) for x in t)
            clicks[key] = clicks.get(key, 0.0) + pt
        q = apply_detector(p, basis, Detector.THRESHOLD)
        assert len(q) == _reachable_clicks(m, n) <= 2**m
        for k, v_ in q.items():
            assert v_ == pytest.approx(clicks[tuple(k)], abs=1e-15)
        assert list(q) == sorted(q, reverse=True)
        for size in range(1, m):
            modes = sorted(rng.choice(m, size, replace=False).tolist())
            ref = {}
            for t, pt in zip(basis, p):
                key = tuple(t[i] for i in modes)
                ref[key] = ref.get(key, 0.0) + pt
            d = marginal(p, basis, modes)
            assert {tuple(k): v_ for k, v_ in d.items()} == pytest.approx(ref, abs=1e-15)
            assert sum(d.values()) == pytest.approx(p.sum(), abs=1e-14)


def test_unbunched_examples(hom):
    with pytest.raises(NullProjection):
        project_unbunched(hom)
    a = slos.forward(slos.build_graph(4, [1, 1, 0, 0]), np.eye(4))
    proj, success = project_unbunched(a)
    assert success == pytest.approx(1)
    d = proj.as_dict()
    assert len(d) == 6
    assert d[(1, 1, 0, 0)] == pytest.approx(1)


@settings(max_examples=25)
@given(st.integers(2, 5), st.integers(0, 2**32 - 1))
def test_unbunched_renormalised(m, seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, m + 1))
    s = [1] * n + [0] * (m - n)
    a = slos.forward(slos.build_graph(m, s), random_unitary(m, rng))
    proj, success = project_unbunched(a)
    assert np.linalg.norm(proj.values) == pytest.approx(1, abs=1e-12)
    assert len(proj.values) == math.comb(m, n)
    assert 0 < success <= 1 + 1e-12


def test_distribution_json():
    text = distribution_to_json({(0, 1, 1): 0.25, (1, 1, 0): 0.1})
    assert json.loads(text) == {"[0,1,1]": 0.25, "[1,1,0]": 0.1}
    assert "0.10000000000000001" in text


def test_strategy_json_round_trip():
    for s in (MeasurementStrategy.probabilities(), MeasurementStrategy.per_mode_expectation(),
              MeasurementStrategy.amplitudes(), MeasurementStrategy.partial([0, 2])):
        assert MeasurementStrategy.from_json_value(json.loads(json.dumps(s.to_json_value()))) == s
