import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bestrank import (
    DivergenceError,
    EstimatorConfig,
    FactorPair,
    InputError,
    build_sketch,
    init_factors,
    naive_estimate,
    objective_gradient,
    objective_value,
    pgd_estimate,
    project_feasible,
    sample_sketch,
)
from bestrank.estimators import GRAD_TOL, MAX_ITERS, SampledObjective
from tests.conftest import full_sketch


def dense_objective(A, P, mask, x, y):
    """Reference objective evaluated with dense arrays."""
    R = np.where(mask, (A - x @ y.T) ** 2 / np.where(mask, P, 1.0), 0.0)
    G = x.T @ x - y.T @ y
    return 0.5 * R.sum() + 0.125 * np.sum(G * G)


def fd_gradient(fun, x, y, h):
    gx, gy = np.zeros_like(x), np.zeros_like(y)
    for M, G in ((x, gx), (y, gy)):
        for idx in np.ndindex(M.shape):
            old = M[idx]
            M[idx] = old + h
            up = fun(x, y)
            M[idx] = old - h
            down = fun(x, y)
            M[idx] = old
            G[idx] = (up - down) / (2 * h)
    return gx, gy


def random_instance(rng, d1=6, d2=5, r=2, frac=0.6):
    A = rng.standard_normal((d1, d2))
    s = sample_sketch(A, "rowcol", int(rng.integers(2**32)), fraction=frac)
    F = FactorPair(rng.standard_normal((d1, r)), rng.standard_normal((d2, r)))
    return A, s, F


class TestNaive:
    def test_full_observation(self):
        np.testing.assert_allclose(naive_estimate(full_sketch(np.diag([3.0, 2.0, 1.0])), 2), np.diag([3.0, 2.0, 0.0]))

    def test_empty(self):
        s = build_sketch(np.eye(3), np.full((3, 3), 0.5), np.zeros((3, 3), bool), "entry", 1.0, 0)
        np.testing.assert_array_equal(naive_estimate(s, 2), np.zeros((3, 3)))

    def test_rank_checked(self):
        with pytest.raises(InputError):
            naive_estimate(full_sketch(np.eye(3)), 4)


class TestObjective:
    def test_scalar_cases(self):
        s = full_sketch([[2.0]])
        assert objective_value(s, FactorPair(np.array([[1.0]]), np.array([[2.0]]))) == pytest.approx(9 / 8)
        s0 = full_sketch([[0.0]])
        one = FactorPair(np.array([[1.0]]), np.array([[1.0]]))
        assert objective_value(s0, one) == pytest.approx(0.5)
        g = objective_gradient(s0, one)
        assert (g.x[0, 0], g.y[0, 0]) == (1.0, 1.0)

    def test_exact_balanced_factors(self, rng):
        u, _ = np.linalg.qr(rng.standard_normal((7, 3)))
        v, _ = np.linalg.qr(rng.standard_normal((6, 3)))
        root = np.sqrt([3.0, 2.0, 1.0])
        F = FactorPair(u * root, v * root)
        s = full_sketch(F.product())
        assert objective_value(s, F) == pytest.approx(0.0, abs=1e-24)
        g = objective_gradient(s, F)
        assert np.abs(g.x).max() < 1e-12 and np.abs(g.y).max() < 1e-12

    def test_matches_dense(self, rng):
        A, s, F = random_instance(rng)
        mask = np.zeros(A.shape, bool)
        mask[s.rows, s.cols] = True
        P = np.ones_like(A)
        P[s.rows, s.cols] = s.probs
        assert objective_value(s, F) == pytest.approx(dense_objective(A, P, mask, F.x, F.y), rel=1e-12)

    def test_gradient_finite_difference(self, rng):
        A, s, F = random_instance(rng)
        obj = SampledObjective(s)
        h = 1e-6 * max(np.abs(F.stacked()).max(), 1.0)
        fx, fy = fd_gradient(obj.value, F.x.copy(), F.y.copy(), h)
        g = objective_gradient(s, F)
        num, ana = np.concatenate([fx.ravel(), fy.ravel()]), np.concatenate([g.x.ravel(), g.y.ravel()])
        assert np.linalg.norm(ana - num) <= 1e-5 * np.linalg.norm(num)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_nonnegative(self, seed):
        rng = np.random.default_rng(seed)
        _, s, F = random_instance(rng, 4, 4, 2, 0.5)
        assert objective_value(s, F) >= 0.0


class TestProjection:
    def make(self, A):
        return full_sketch(A)

    def test_interior_unchanged(self, rng):
        A = rng.uniform(1, 2, size=(4, 3))
        F = FactorPair(rng.uniform(-0.1, 0.1, (4, 2)), rng.uniform(-0.1, 0.1, (3, 2)))
        G = project_feasible(F, self.make(A), 1.0)
        np.testing.assert_array_equal(G.x, F.x)
        np.testing.assert_array_equal(G.y, F.y)

    def test_rescale(self):
        s = self.make([[2.0, 0.0]])
        G = project_feasible(FactorPair(np.array([[3.0, 4.0]]), np.zeros((2, 2))), s, 1.0)
        np.testing.assert_allclose(G.x, [[1.2, 1.6]])

    def test_zero_row_fixed(self):
        s = self.make([[0.0, 0.0], [1.0, 1.0]])
        G = project_feasible(FactorPair(np.zeros((2, 1)), np.zeros((2, 1))), s, 0.5)
        np.testing.assert_array_equal(G.x, 0.0)

    def test_negative_beta(self):
        with pytest.raises(InputError):
            project_feasible(FactorPair(np.zeros((1, 1)), np.zeros((1, 1))), self.make([[1.0]]), -1.0)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0.05, 5))
    def test_feasible_idempotent_nonexpansive(self, seed, beta):
        rng = np.random.default_rng(seed)
        A = rng.standard_normal((5, 4)) * rng.uniform(0, 3, size=(5, 1))
        s = self.make(A)
        F = FactorPair(3 * rng.standard_normal((5, 2)), 3 * rng.standard_normal((4, 2)))
        H = FactorPair(3 * rng.standard_normal((5, 2)), 3 * rng.standard_normal((4, 2)))
        PF, PH = project_feasible(F, s, beta), project_feasible(H, s, beta)
        assert np.all(np.linalg.norm(PF.x, axis=1) <= np.linalg.norm(A, axis=1) / beta * (1 + 1e-12))
        assert np.all(np.linalg.norm(PF.y, axis=1) <= np.linalg.norm(A, axis=0) / beta * (1 + 1e-12))
        again = project_feasible(PF, s, beta)
        np.testing.assert_array_equal(again.x, PF.x)
        np.testing.assert_array_equal(again.y, PF.y)
        assert np.linalg.norm(PF.stacked() - PH.stacked()) <= np.linalg.norm(F.stacked() - H.stacked()) + 1e-12


class TestInit:
    def test_one_entry(self):
        (x, y), beta = init_factors(full_sketch([[2.0, 0.0], [0.0, 0.0]]), 1, beta=1e-6)
        np.testing.assert_allclose(x, [[np.sqrt(2)], [0.0]])
        np.testing.assert_allclose(y, [[np.sqrt(2)], [0.0]])
        assert beta == 1e-6

    def test_zero_sketch(self):
        s = build_sketch(np.zeros((3, 3)), np.ones((3, 3)), np.ones((3, 3), bool), "entry", 1.0, 0)
        (x, y), _ = init_factors(s, 2)
        assert not x.any() and not y.any()

    def test_auto_beta(self, rng):
        s = sample_sketch(rng.standard_normal((8, 6)), "rowcol", 1, fraction=0.5)
        _, beta = init_factors(s, 3)
        sigma = np.linalg.svd(s.to_dense(), compute_uv=False)
        assert beta == pytest.approx(np.sqrt(sigma[2] / 2))


class TestConfig:
    @pytest.mark.parametrize("kw", [dict(beta=0.0), dict(beta="big"), dict(step_size=-1.0), dict(shrink=1.0),
                                    dict(armijo_c1=0.0), dict(max_iters=0), dict(grad_tol=0.0)])
    def test_rejects(self, kw):
        with pytest.raises(InputError):
            EstimatorConfig(rank=2, **kw)


class TestPgd:
    def test_zero_sketch(self):
        s = build_sketch(np.zeros((4, 4)), np.ones((4, 4)), np.ones((4, 4), bool), "entry", 1.0, 0)
        res = pgd_estimate(s, EstimatorConfig(rank=2))
        assert res.trace.iterations == 0 and res.trace.reason == GRAD_TOL
        assert not res.estimate.any()

    def test_exact_recovery_full_observation(self, rng):
        A = rng.standard_normal((50, 3)) @ rng.standard_normal((3, 50))
        res = pgd_estimate(full_sketch(A), EstimatorConfig(rank=5, max_iters=100))
        assert np.linalg.norm(res.estimate - A) <= 1e-6 * np.linalg.norm(A)

    def test_fixed_point(self, rng):
        u, _ = np.linalg.qr(rng.standard_normal((6, 2)))
        v, _ = np.linalg.qr(rng.standard_normal((5, 2)))
        F = FactorPair(u * [2.0, 1.0], v * [2.0, 1.0])
        s = full_sketch(F.product())
        for eta in (1e-3, 0.1, 1.0):
            res = pgd_estimate(s, EstimatorConfig(rank=2, step_size=eta, max_iters=3))
            np.testing.assert_allclose(res.estimate, F.product(), atol=1e-12)

    def test_monotone_objective(self, rng):
        A = rng.standard_normal((30, 20))
        s = sample_sketch(A, "rowcol", 5, fraction=0.4)
        trace = pgd_estimate(s, EstimatorConfig(rank=3, max_iters=30)).trace
        assert np.all(np.diff(trace.objective) <= 0)
        assert len(trace.objective) == len(trace.grad_inf) == trace.iterations + 1
        assert trace.reason in (GRAD_TOL, MAX_ITERS)

    def test_iterates_feasible(self, rng):
        A = rng.standard_normal((20, 15))
        s = sample_sketch(A, "rowcol", 6, fraction=0.5)
        res = pgd_estimate(s, EstimatorConfig(rank=3, max_iters=10))
        cap_x = s.row_norms / res.trace.beta
        assert np.all(np.linalg.norm(res.factors.x, axis=1) <= cap_x * (1 + 1e-12))

    def test_divergence(self, rng):
        A = rng.standard_normal((8, 6))
        s = sample_sketch(A, "rowcol", 1, fraction=0.5)
        with pytest.raises(DivergenceError) as info:
            pgd_estimate(s, EstimatorConfig(rank=2, beta=1e-200, step_size=1e3, max_iters=50))
        assert info.value.iteration >= 1

    def test_deterministic(self, rng):
        s = sample_sketch(rng.standard_normal((15, 12)), "rowcol", 2, fraction=0.5)
        a = pgd_estimate(s, EstimatorConfig(rank=2, max_iters=5))
        b = pgd_estimate(s, EstimatorConfig(rank=2, max_iters=5))
        np.testing.assert_array_equal(a.estimate, b.estimate)
