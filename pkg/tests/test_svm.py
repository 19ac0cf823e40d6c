import math
import warnings

import numpy as np
import pytest
from oracles import central_grad, close

from kdx import svm, toydata
from kdx.errors import DimensionMismatch, SingleClassInput
from kdx.kernels import KernelSpec

E_HALF = math.exp(-0.5)


@pytest.fixture(scope="module")
def moons_model():
    ds = toydata.generate(toydata.ToySpec("two_moons", n=120, noise=0.1, seed=3))
    return ds, svm.train(ds.X, ds.y, KernelSpec.rbf(2.0), C=10.0)


def test_separable_pair():
    m = svm.train([[-1.0], [1.0]], [-1, 1], KernelSpec.linear(), C=10.0)
    assert m.decision([-1.0]) < 0 < m.decision([1.0])
    assert m.predict([-1.0]) == -1 and m.predict([1.0]) == 1


def test_xor_is_shattered():
    X = np.array([[0, 0], [1, 1], [0, 1], [1, 0]], dtype=float)
    y = np.array([1, 1, -1, -1])
    m = svm.train(X, y, KernelSpec.rbf(2.0), C=10.0)
    np.testing.assert_array_equal(m.predict(X), y)


def test_contradictory_duplicates_saturate():
    m = svm.train([[0.0], [0.0]], [1, -1], KernelSpec.rbf(1.0), C=1.0)
    assert np.all(np.isfinite(m.sv_coef)) and math.isfinite(m.bias)
    assert np.any(np.isclose(np.abs(m.sv_coef), 1.0))


def test_single_class_rejected():
    with pytest.raises(SingleClassInput):
        svm.train([[0.0], [1.0]], [1, 1], KernelSpec.linear())
    with pytest.raises(ValueError):
        svm.train([[0.0], [1.0]], [0, 1], KernelSpec.linear())


def test_model_invariants(moons_model):
    ds, m = moons_model
    alpha = np.abs(m.sv_coef)
    assert np.all(alpha > 0) and np.all(alpha <= m.C + 1e-12)
    assert abs(m.sv_coef.sum()) <= 1e-6
    assert m.converged
    assert m.max_kkt_violation <= 1e-3 + 1e-9
    assert np.mean(m.predict(ds.X) == ds.y) >= 0.95


def test_tie_maps_to_positive():
    # f(x) = x - 1
    m = svm.SvmModel(np.ones((1, 1)), np.array([1.0]), -1.0, KernelSpec.linear(), 1.0)
    assert m.decision([1.0]) == 0.0
    assert m.predict([1.0]) == 1
    np.testing.assert_array_equal(m.predict([[1.0], [0.5]]), [1, -1])


def test_far_point_decision_tends_to_bias(moons_model):
    _, m = moons_model
    assert m.decision([1e3, 1e3]) == pytest.approx(m.bias, abs=1e-12)


def test_single_sv_smooth_gradient_example():
    m = svm.SvmModel(np.zeros((1, 2)), np.array([1.0]), 0.0, KernelSpec.rbf(0.5), 1.0)
    sg = m.smooth_decision_gradient([1.0, 0.0])
    assert sg.decision == pytest.approx(E_HALF)
    np.testing.assert_allclose(sg.kernel_grad, [-E_HALF, 0.0], rtol=1e-14)
    assert sg.mask_term == pytest.approx(1 - math.tanh(E_HALF) ** 2)


def test_smooth_gradient_limits():
    m = svm.SvmModel(np.ones((1, 1)), np.array([1.0]), -1.0, KernelSpec.linear(), 1.0)
    sg = m.smooth_decision_gradient([1.0])
    assert sg.decision == 0.0 and sg.mask_term == 1.0
    np.testing.assert_array_equal(sg.full_grad, sg.kernel_grad)
    deep = m.smooth_decision_gradient([100.0])
    assert deep.mask_term < 1e-12 and np.all(np.abs(deep.full_grad) < 1e-10)


@pytest.mark.parametrize("name, gamma", [("two_moons", 2.0), ("circles", 2.0), ("ellipsoids", 1.0)])
def test_smooth_gradient_oracle(name, gamma):
    ds = toydata.generate(toydata.ToySpec(name, n=80, noise=0.1, seed=1))
    m = svm.train(ds.X, ds.y, KernelSpec.rbf(gamma), C=5.0)
    lo, hi = ds.X.min(axis=0), ds.X.max(axis=0)
    for x in np.random.default_rng(0).uniform(lo, hi, (200, 2)):
        sg = m.smooth_decision_gradient(x)
        np.testing.assert_array_equal(sg.full_grad, sg.mask_term * sg.kernel_grad)
        assert close(sg.full_grad, central_grad(lambda z: math.tanh(m.decision(z)), x))


def test_label_flip_negates_decision():
    ds = toydata.generate(toydata.ToySpec("two_moons", n=80, noise=0.15, seed=5))
    a = svm.train(ds.X, ds.y, KernelSpec.rbf(1.5), C=3.0, seed=7)
    b = svm.train(ds.X, -ds.y, KernelSpec.rbf(1.5), C=3.0, seed=7)
    Q = np.random.default_rng(1).uniform(-1.5, 2.5, (100, 2))
    np.testing.assert_allclose(b.decision(Q), -a.decision(Q), atol=1e-8)


def test_deterministic_under_seed():
    ds = toydata.generate(toydata.ToySpec("circles", n=60, noise=0.1, seed=2))
    a = svm.train(ds.X, ds.y, KernelSpec.rbf(2.0), seed=4)
    b = svm.train(ds.X, ds.y, KernelSpec.rbf(2.0), seed=4)
    np.testing.assert_array_equal(a.sv_coef, b.sv_coef)
    assert a.bias == b.bias


def test_update_cap_warns():
    ds = toydata.generate(toydata.ToySpec("two_moons", n=60, noise=0.3, seed=0))
    with pytest.warns(svm.ConvergenceWarning):
        m = svm.train(ds.X, ds.y, KernelSpec.rbf(1.0), C=100.0, max_passes=3)
    assert not m.converged


def test_dimension_mismatch(moons_model):
    _, m = moons_model
    with pytest.raises(DimensionMismatch):
        m.decision([1.0, 2.0, 3.0])


def test_json_round_trip(moons_model):
    ds, m = moons_model
    back = svm.SvmModel.from_dict(m.to_dict())
    np.testing.assert_array_equal(back.decision(ds.X), m.decision(ds.X))


def test_grid_search_small():
    ds = toydata.generate(toydata.ToySpec("circles", n=60, noise=0.05, seed=0))
    with warnings.catch_warnings():
        warnings.simplefilter("error", svm.ConvergenceWarning)
        C, gamma, acc = svm.grid_search(ds.X, ds.y, [1.0, 10.0], [0.01, 2.0], folds=3)
    assert gamma == 2.0 and acc >= 0.9
