import numpy as np
import pytest
from oracles import central_grad, close

from kdx import hsic, toydata
from kdx.errors import SampleCountMismatch, StepCollapse
from kdx.kernels import KernelSpec

LIN = hsic.HsicConfig(KernelSpec.linear(), KernelSpec.linear())


def unit(a):
    return [1.0, 0.0], [a, np.sqrt(1 - a * a)]


def sinusoid(n=100, seed=0, noise=0.1):
    d = toydata.generate(toydata.ToySpec("sinusoid_pair", n=n, noise=noise, seed=seed))
    return d.X, d.y[:, None]


@pytest.mark.parametrize("a, b", [(0.0, 0.0), (0.3, -0.5), (0.9, 0.2)])
def test_two_sample_closed_form(a, b):
    X = np.array(unit(a))
    Y = np.array(unit(b))
    assert hsic.hsic(X, Y, LIN) == pytest.approx((1 - a) * (1 - b) / 4, abs=1e-12)


def test_constant_y_gives_zero():
    X = np.random.default_rng(0).standard_normal((20, 2))
    Y = np.full((20, 1), 3.0)
    assert hsic.hsic(X, Y) == 0.0
    f = hsic.hsic_grad(X, Y)
    assert np.max(np.abs(f.grad_x)) <= 1e-15


def test_self_dependence_is_frobenius_norm():
    X = np.random.default_rng(1).standard_normal((15, 2))
    cfg = hsic.HsicConfig(KernelSpec.rbf(0.5), KernelSpec.rbf(0.5))
    K = hsic.kern.gram(cfg.kernel_x, X)
    H = hsic.centering_matrix(15)
    expected = np.sum((H @ K @ H) ** 2) / 15**2
    assert hsic.hsic(X, X, cfg) == pytest.approx(expected, rel=1e-12)
    assert expected > 0


def test_errors():
    with pytest.raises(SampleCountMismatch):
        hsic.hsic(np.zeros((5, 1)), np.zeros((4, 1)))
    with pytest.raises(SampleCountMismatch):
        hsic.hsic(np.zeros((1, 1)), np.zeros((1, 1)))
    with pytest.raises(ValueError):
        hsic.HsicConfig(KernelSpec.tanh(), None)


def test_symmetry_and_permutation_invariance():
    rng = np.random.default_rng(2)
    X, Y = rng.standard_normal((25, 2)), rng.standard_normal((25, 3))
    kx, ky = KernelSpec.rbf(0.4), KernelSpec.poly(0.5, 1.0, 2)
    h = hsic.hsic(X, Y, hsic.HsicConfig(kx, ky))
    assert hsic.hsic(Y, X, hsic.HsicConfig(ky, kx)) == pytest.approx(h, abs=1e-12)
    p = rng.permutation(25)
    assert hsic.hsic(X[p], Y[p], hsic.HsicConfig(kx, ky)) == pytest.approx(h, abs=1e-12)


def test_rbf_translation_invariance():
    rng = np.random.default_rng(3)
    X, Y = rng.standard_normal((20, 2)), rng.standard_normal((20, 1))
    cfg = hsic.HsicConfig(KernelSpec.rbf(0.7), KernelSpec.rbf(1.3))
    shifted = X + np.array([5.0, -2.0])
    assert hsic.hsic(shifted, Y, cfg) == pytest.approx(hsic.hsic(X, Y, cfg), abs=1e-10)
    a, b = hsic.hsic_grad(X, Y, cfg), hsic.hsic_grad(shifted, Y, cfg)
    np.testing.assert_allclose(b.grad_x, a.grad_x, atol=1e-10)
    np.testing.assert_allclose(b.grad_y, a.grad_y, atol=1e-10)


def _fd_field(X, Y, cfg):
    gx = np.empty_like(X)
    gy = np.empty_like(Y)
    for i in range(X.shape[0]):
        def fx(row, i=i):
            Z = X.copy()
            Z[i] = row
            return hsic.hsic(Z, Y, cfg)

        def fy(row, i=i):
            Z = Y.copy()
            Z[i] = row
            return hsic.hsic(X, Z, cfg)

        gx[i] = central_grad(fx, X[i])
        gy[i] = central_grad(fy, Y[i])
    return gx, gy


@pytest.mark.parametrize("kx, ky", [
    (KernelSpec.rbf(0.5), KernelSpec.rbf(1.0)),
    (KernelSpec.ard([0.7, 1.2, 2.0]), KernelSpec.poly(0.5, 1.0, 2)),
    (KernelSpec.linear(), KernelSpec.rbf(0.3)),
])
def test_gradient_field_oracle(kx, ky):
    rng = np.random.default_rng(4)
    X = rng.standard_normal((30, 3))
    Y = np.column_stack([np.sin(X[:, 0]) + 0.1 * rng.standard_normal(30), rng.standard_normal(30)])
    cfg = hsic.HsicConfig(kx, ky)
    f = hsic.hsic_grad(X, Y, cfg)
    gx, gy = _fd_field(X, Y, cfg)
    # the field is O(1e-3); compare with an absolute floor a few orders below it
    assert close(f.grad_x, gx, abs_=1e-10)
    assert close(f.grad_y, gy, abs_=1e-10)
    np.testing.assert_allclose(f.magnitude, np.sqrt(np.sum(f.grad_x**2, 1) + np.sum(f.grad_y**2, 1)))


def test_two_sample_gradient_through_closed_form():
    # with unit vectors a = cos(theta), so dHSIC/dtheta = -(1 - b)/4 * da/dtheta
    b = 0.2
    Y = np.array(unit(b))

    def h(theta):
        return hsic.hsic(np.array([[1.0, 0.0], [np.cos(theta), np.sin(theta)]]), Y, LIN)

    theta = 1.1
    X = np.array([[1.0, 0.0], [np.cos(theta), np.sin(theta)]])
    g = hsic.hsic_grad(X, Y, LIN).grad_x[1]
    tangent = np.array([-np.sin(theta), np.cos(theta)])
    expected = (1 - b) / 4 * np.sin(theta)
    assert g @ tangent == pytest.approx(expected, rel=1e-10)
    assert (h(theta + 1e-5) - h(theta - 1e-5)) / 2e-5 == pytest.approx(expected, rel=1e-6)


def test_rbf_closed_form_matches_general():
    X, Y = sinusoid(40, seed=5)
    cfg = hsic.HsicConfig().resolve(X, Y)
    gx, gy = hsic.hsic_grad_rbf(X, Y, cfg)
    f = hsic.hsic_grad(X, Y, cfg)
    np.testing.assert_allclose(gx, f.grad_x, atol=1e-10, rtol=0)
    np.testing.assert_allclose(gy, f.grad_y, atol=1e-10, rtol=0)
    with pytest.raises(ValueError):
        hsic.hsic_grad_rbf(X, Y, LIN)


def test_dependent_field_dominates_independent():
    dep, ind = [], []
    for seed in range(10):
        X, Y = sinusoid(100, seed=seed)
        Yi = Y[np.random.default_rng(100 + seed).permutation(100)]
        cfg = hsic.HsicConfig().resolve(X, Y)
        dep.append(hsic.hsic_grad(X, Y, cfg).magnitude.mean())
        ind.append(hsic.hsic_grad(X, Yi, cfg).magnitude.mean())
    assert np.mean(dep) >= 5 * np.mean(ind)


class TestPermutation:
    def test_strong_dependence(self):
        x = np.random.default_rng(0).standard_normal((100, 1))
        assert hsic.permutation_pvalue(x, x, n_perm=199, seed=0) <= 0.05

    def test_independent_fixture(self):
        rng = np.random.default_rng(7)
        p = hsic.permutation_pvalue(rng.standard_normal((100, 1)), rng.standard_normal((100, 1)), n_perm=199)
        assert p > 0.05

    def test_minimum_permutations(self):
        X, Y = sinusoid(20)
        p = hsic.permutation_pvalue(X, Y, n_perm=19)
        assert 1 / 20 <= p <= 1
        with pytest.raises(ValueError):
            hsic.permutation_pvalue(X, Y, n_perm=18)

    def test_thread_count_does_not_change_result(self, monkeypatch):
        X, Y = sinusoid(50, noise=1.0)
        serial = hsic.permutation_pvalue(X, Y, n_perm=99, seed=3, threads=1)
        assert hsic.permutation_pvalue(X, Y, n_perm=99, seed=3, threads=4) == serial
        monkeypatch.setenv("KDX_THREADS", "3")
        assert hsic.permutation_pvalue(X, Y, n_perm=99, seed=3) == serial


class TestUnfold:
    @pytest.mark.parametrize("direction", ["maximize", "minimize"])
    def test_monotone(self, direction):
        X, Y = sinusoid(60, seed=1)
        traj = hsic.unfold(X, Y, direction=direction, iters=100)
        h = np.array(traj.hsic)
        assert len(h) == len(traj.X) == len(traj.steps)
        diffs = np.diff(h)
        assert np.all(diffs >= 0) if direction == "maximize" else np.all(diffs <= 0)
        assert (h[-1] > h[0]) if direction == "maximize" else (h[-1] < h[0])

    def test_kernels_frozen_from_initial_data(self):
        X, Y = sinusoid(40)
        traj = hsic.unfold(X, Y, iters=5)
        assert traj.config == hsic.HsicConfig().resolve(X, Y)
        # recorded values are consistent with the frozen config
        assert traj.hsic[-1] == pytest.approx(hsic.hsic(traj.X[-1], traj.Y[-1], traj.config))

    def test_stationary_start(self):
        # constant Y: zero gradient, nothing moves
        X = np.linspace(-1, 1, 10)[:, None]
        Y = np.ones((10, 1))
        traj = hsic.unfold(X, Y, iters=3)
        assert all(v == 0.0 for v in traj.hsic)
        np.testing.assert_array_equal(traj.X[-1], X)

    def test_step_collapse(self, monkeypatch):
        X, Y = sinusoid(20)
        # a gradient pointing the wrong way can never be accepted
        real = hsic._grad_resolved
        monkeypatch.setattr(hsic, "_grad_resolved", lambda *a: tuple(-g for g in real(*a)))
        with pytest.raises(StepCollapse):
            hsic.unfold(X, Y, iters=2, step=1.0)

    def test_argument_validation(self):
        X, Y = sinusoid(10)
        with pytest.raises(ValueError):
            hsic.unfold(X, Y, direction="sideways")
        with pytest.raises(ValueError):
            hsic.unfold(X, Y, step=-1.0)
        with pytest.raises(ValueError):
            hsic.unfold(X, Y, iters=0)
