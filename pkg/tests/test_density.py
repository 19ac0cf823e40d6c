import numpy as np
import pytest
from scipy.integrate import trapezoid
from oracles import central_grad, central_jacobian, close

from kdx import density
from kdx.errors import DimensionMismatch, InvalidRank
from kdx.kernels import KernelSpec


def blob(n=40, seed=0, d=2):
    return np.random.default_rng(seed).standard_normal((n, d))


def test_single_sample():
    m = density.fit_density([[0.0, 0.0]], KernelSpec.rbf(0.5))
    np.testing.assert_array_equal(m.weights, [1.0])
    np.testing.assert_array_equal(m.density_gradient([0.0, 0.0]), [0.0, 0.0])
    np.testing.assert_allclose(m.density_hessian([0.0, 0.0]), -np.eye(2))


def test_duplicate_points():
    m = density.fit_density([[1.0], [1.0]], KernelSpec.rbf(1.0))
    assert m.density_at([1.0]) == pytest.approx(1.0)


def test_zero_weights_give_zero_density():
    m = density.DensityModel(blob(5), KernelSpec.rbf(1.0), np.zeros(5), "keca", 1)
    assert m.density_at([0.3, 0.2]) == 0.0


def test_default_kernel_is_median_heuristic_rbf():
    m = density.fit_density(blob())
    assert m.kernel.family == "rbf" and m.kernel.gamma > 0


@pytest.mark.parametrize("mode", ["keca", "entropy_keca"])
def test_full_rank_reduces_to_parzen(mode):
    X = blob(30)
    spec = KernelSpec.rbf(0.4)
    parzen = density.fit_density(X, spec)
    full = density.fit_density(X, spec, mode, rank=30)
    Q = blob(50, seed=1) * 1.5
    np.testing.assert_allclose(full.density_at(Q), parzen.density_at(Q), atol=1e-10, rtol=0)


def test_rank_validation():
    for r in (None, 0, 11, 2.5):
        with pytest.raises(InvalidRank):
            density.fit_density(blob(10), KernelSpec.rbf(1.0), "keca", r)
    with pytest.raises(ValueError):
        density.fit_density(blob(10), KernelSpec.rbf(1.0), "histogram")


def test_keca_keeps_leading_eigenvectors():
    X = blob(20)
    spec = KernelSpec.rbf(0.5)
    from kdx.kernels import gram
    from kdx.numerics import sym_eig
    lam, E = sym_eig(gram(spec, X))
    m = density.fit_density(X, spec, "keca", rank=3)
    np.testing.assert_allclose(m.weights, E[:, :3] @ E[:, :3].T @ np.ones(20) / 20, atol=1e-14)


def test_entropy_scores_permutation_invariant():
    X = blob(25)
    spec = KernelSpec.rbf(0.5)
    perm = np.random.default_rng(4).permutation(25)
    a = density.fit_density(X, spec, "entropy_keca", rank=4)
    b = density.fit_density(X[perm], spec, "entropy_keca", rank=4)
    np.testing.assert_allclose(b.weights, a.weights[perm], atol=1e-12)
    from kdx.kernels import gram
    from kdx.numerics import sym_eig
    s1 = np.sort(density.entropy_scores(*sym_eig(gram(spec, X))))
    s2 = np.sort(density.entropy_scores(*sym_eig(gram(spec, X[perm]))))
    np.testing.assert_allclose(s1, s2, atol=1e-10)


@pytest.mark.parametrize("mode, rank", [("parzen", None), ("keca", 5), ("entropy_keca", 5)])
def test_derivative_oracles(mode, rank):
    m = density.fit_density(blob(40), KernelSpec.rbf(0.5), mode, rank)
    for x in np.random.default_rng(2).uniform(-2.5, 2.5, (200, 2)):
        assert close(m.density_gradient(x), central_grad(m.density_at, x))
        Hs = m.density_hessian(x)
        np.testing.assert_array_equal(Hs, Hs.T)
        assert close(Hs, central_jacobian(m.density_gradient, x))


def test_dimension_mismatch():
    m = density.fit_density(blob(5), KernelSpec.rbf(1.0))
    with pytest.raises(DimensionMismatch):
        m.density_at([1.0, 2.0, 3.0])


def test_normalizing_constant_integrates_to_one():
    m = density.fit_density([[0.0]], KernelSpec.rbf(0.7))
    grid = np.linspace(-15, 15, 30001)
    p = m.density_at(grid[:, None]) * density.normalizing_constant(m.kernel, 1)
    assert trapezoid(p, grid) == pytest.approx(1.0, rel=1e-8)
    with pytest.raises(ValueError):
        density.normalizing_constant(KernelSpec.linear(), 1)


def test_json_round_trip():
    m = density.fit_density(blob(10), KernelSpec.rbf(0.5), "keca", 3)
    back = density.DensityModel.from_dict(m.to_dict())
    np.testing.assert_array_equal(back.density_at(blob(4, 9)), m.density_at(blob(4, 9)))
    assert (back.mode, back.rank) == ("keca", 3)


class TestRidge:
    def test_mode_scores_zero_and_is_selected(self):
        m = density.fit_density([[0.0, 0.0]], KernelSpec.rbf(0.5))
        res = density.ridge_scores(m, [[0.0, 0.0], [1.0, 0.5], [0.3, -2.0]])
        assert res.scores[0] == 0.0
        assert 0 in res.selected

    def test_elongated_gaussian(self):
        rng = np.random.default_rng(0)
        sigma = 0.1
        X = np.column_stack([rng.uniform(-3, 3, 300), sigma * rng.standard_normal(300)])
        m = density.fit_density(X, KernelSpec.rbf(2.0))
        res = density.ridge_scores(m, X, r_ridge=1)
        assert res.selected.size > 0
        assert np.mean(np.abs(X[res.selected, 1]) <= 2 * sigma) >= 0.9

    def test_scale_invariance(self):
        X = blob(30)
        m = density.fit_density(X, KernelSpec.rbf(0.5))
        scaled = density.DensityModel(m.X_train, m.kernel, 7.0 * m.weights)
        np.testing.assert_allclose(density.ridge_scores(scaled, X).scores,
                                   density.ridge_scores(m, X).scores, rtol=1e-9, atol=1e-12)

    def test_threshold_options(self):
        X = blob(50)
        m = density.fit_density(X, KernelSpec.rbf(0.5))
        res = density.ridge_scores(m, X, quantile=0.2)
        assert res.threshold == pytest.approx(np.quantile(res.scores, 0.2))
        assert set(res.selected) == set(np.flatnonzero(res.scores <= res.threshold))
        assert np.all(res.scores >= 0) and np.all(res.scores <= 1 + 1e-12)
        tol = density.ridge_scores(m, X, tol=0.5)
        assert tol.threshold == 0.5 and tol.quantile is None

    def test_conventions_are_complementary_in_2d(self):
        X = blob(30)
        m = density.fit_density(X, KernelSpec.rbf(0.5))
        t = density.ridge_scores(m, X, convention="trailing").scores
        lead = density.ridge_scores(m, X, convention="leading").scores
        np.testing.assert_allclose(t**2 + lead**2, 1.0, atol=1e-8)

    def test_r_ridge_validation(self):
        m = density.fit_density(blob(5), KernelSpec.rbf(1.0))
        with pytest.raises(InvalidRank):
            density.ridge_scores(m, blob(5), r_ridge=3)
        with pytest.raises(InvalidRank):
            density.ridge_scores(m, blob(5), r_ridge=0)
