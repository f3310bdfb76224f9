import math

import numpy as np
import pytest

import pathsample as ps


def reference():
    return ps.reference_network(), ps.reference_inputs()


def test_network_roundtrip(tmp_path):
    net = ps.Network([np.array([[1.0, -2.0], [-3.0, 4.0]]), np.array([[1.0, 1.0]])], "relu")
    assert net.dims == [2, 2, 1]
    assert net.forward(np.array([[1.0, 0.0], [0.0, 1.0]]))[:, 0].tolist() == [1.0, 4.0]
    ps.save_model(net, tmp_path / "m")
    back = ps.load_model(tmp_path / "m")
    assert np.array_equal(back.layers[0], net.layers[0])
    assert back.activation == net.activation


def test_reference_measures():
    net, x = reference()
    assert ps.variation(net, x, 1.0)["value"] == pytest.approx(10.0)
    assert ps.variation(net, x, 2.0)["value"] == pytest.approx(8.16497, rel=1e-5)
    assert ps.path_complexity(net, x, 1.0) == pytest.approx(1.19219, rel=1e-5)
    assert ps.variation_bounds(net, x, 1.0) == pytest.approx((10.0, 10.0))
    assert ps.path_norm(net, 2.0)["value"] == pytest.approx(math.sqrt(30.0))
    caps = ps.capacities(net, x)
    assert caps["prod_l1_inf"]["value"] == pytest.approx(14.0)


def test_sampling_is_deterministic():
    net, x = reference()
    a = ps.sample_paths(net, x, draws=500, seed=4, streams=2)
    b = ps.sample_paths(net, x, draws=500, seed=4, streams=2, threads=2)
    assert a == b
    assert a["draws"] == 500
    assert sum(row[-1] for row in a["pairs"] if row[0] == 1) == 500


def test_compression_converges():
    net, x = reference()
    rec = ps.compress(net, x, draws=200000, seed=1)
    assert rec.forward(np.array([[1.0, 0.0]]))[0, 0] == pytest.approx(1.0, abs=0.1)
    err = ps.mc_error(net, x, q=1.0, draws=100, resamples=50, seed=2)
    assert err["mean"] + 3 * err["se"] <= ps.error_bound(10.0, 1.19219, 2, 100)


def test_bounds_and_margins():
    b = ps.generalization_bound(10.0, 1.19219, 2, 2, 10000, 1.0)
    assert b["value"] == pytest.approx(202.618804384918, rel=1e-6)
    p = ps.generalization_bound(10.0, 1.19219, 2, 2, 10000, 1.0, mode="posthoc")
    assert p["j"] == (7, 10, 2)
    rng = np.random.default_rng(0)
    w = [rng.normal(size=(5, 3)), rng.normal(size=(3, 5))]
    net = ps.Network(w)
    x = rng.normal(size=(20, 3))
    y = net.forward(x).argmax(axis=1).tolist()
    m = ps.normalized_margins(net, x, y, bins=8)
    assert sum(m["counts"]) == 20
    assert min(ps.margins(net, x, y)) >= 0
    rows = ps.sweep(net, x, y, draws=[100, 10000], rounds=3, seed=5)
    assert [r["M"] for r in rows] == [100, 10000]


def test_errors_are_raised():
    net, x = reference()
    with pytest.raises(ps.PathSampleError):
        ps.Network([np.ones((2, 2))], "relu")
    with pytest.raises(ps.PathSampleError):
        ps.Network([np.ones((1, 1)), np.ones((1, 1))], "sigmoid")
    with pytest.raises(ps.PathSampleError):
        ps.generalization_bound(10.0, 1.0, 2, 2, 100, 1.0, delta=2.0)


def test_verify_suite():
    out = ps.verify("cardinality", 7)
    assert out["cardinality"]["passed"]
