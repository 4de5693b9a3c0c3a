import numpy as np
import pytest

from chaoscast.regress import (
    FRACTION_GRID,
    LARS_CV,
    OLS,
    RegressError,
    UNIFORM_SHRINK,
    LinearModel,
    fit_lars_cv,
    fit_ols,
    lars_path,
    pearson,
    predict,
)


def _random_design(n, k, seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, k))
    beta = rng.standard_normal(k)
    y = 2.0 + X @ beta + 0.3 * rng.standard_normal(n)
    return X, y


def normal_equations_oracle(X, y):
    """Independent solve of the least-squares problem via the augmented
    normal equations."""
    A = np.column_stack([np.ones(len(y)), X])
    coef = np.linalg.solve(A.T @ A, A.T @ y)
    return coef[0], coef[1:]


class TestOls:
    def test_exact_single_column(self):
        y = np.arange(10.0)
        model = fit_ols(y[:, None], y)
        assert model.coefficients == pytest.approx([1.0], abs=1e-12)
        assert model.intercept == pytest.approx(0.0, abs=1e-12)
        assert model.fit_corr == pytest.approx(1.0)

    def test_constant_target(self):
        X = np.random.default_rng(0).standard_normal((20, 3))
        model = fit_ols(X, np.full(20, 7.0))
        np.testing.assert_allclose(model.coefficients, 0.0, atol=1e-12)
        assert model.intercept == pytest.approx(7.0)
        assert np.isnan(model.fit_corr)

    def test_matches_normal_equations_oracle(self):
        X, y = _random_design(50, 5, seed=1)
        model = fit_ols(X, y)
        b0, b = normal_equations_oracle(X, y)
        np.testing.assert_allclose(model.coefficients, b, atol=1e-10)
        assert model.intercept == pytest.approx(b0, abs=1e-10)

    def test_residual_orthogonality(self):
        X, y = _random_design(40, 6, seed=2)
        model = fit_ols(X, y)
        resid = y - predict(model, X)
        scale = np.linalg.norm(y)
        assert abs(resid.sum()) <= 1e-8 * scale
        assert np.all(np.abs(X.T @ resid) <= 1e-8 * scale * np.linalg.norm(X, axis=0))

    def test_zero_column_gets_zero_weight(self):
        X, y = _random_design(30, 4, seed=3)
        Xz = np.column_stack([X, np.zeros(30)])
        m1, m2 = fit_ols(X, y), fit_ols(Xz, y)
        np.testing.assert_allclose(predict(m1, X), predict(m2, Xz), atol=1e-10)
        assert m2.coefficients[-1] == pytest.approx(0.0, abs=1e-12)

    def test_rank_deficient_minimum_norm(self):
        rng = np.random.default_rng(4)
        X = rng.standard_normal((20, 3))
        Xd = np.column_stack([X, X[:, 0]])  # duplicated column
        y = X @ [1.0, 2.0, 3.0]
        model = fit_ols(Xd, y)
        np.testing.assert_allclose(predict(model, Xd), y, atol=1e-8)

    def test_dimension_mismatch(self):
        with pytest.raises(RegressError):
            fit_ols(np.ones((5, 2)), np.ones(4))


class TestPredict:
    def test_constant_model(self):
        model = LinearModel(0, 3.0, np.zeros(2), OLS, fit_corr=float("nan"))
        np.testing.assert_array_equal(predict(model, np.ones((4, 2))), 3.0)

    def test_hand_case(self):
        model = LinearModel(0, 1.0, np.array([2.0, -1.0]), OLS, fit_corr=1.0)
        assert predict(model, np.array([[3.0, 4.0]]))[0] == pytest.approx(3.0)

    def test_refit_consistency(self):
        y = np.arange(12.0)
        model = fit_ols(y[:, None], y)
        np.testing.assert_allclose(predict(model, y[:, None]), y, atol=1e-10)

    def test_shrink_factor_applied(self):
        model = LinearModel(0, 0.0, np.array([2.0]), UNIFORM_SHRINK,
                            fit_corr=1.0, shrink_factor=0.5)
        assert predict(model, np.array([[3.0]]))[0] == pytest.approx(3.0)

    def test_dimension_mismatch(self):
        model = LinearModel(0, 0.0, np.array([1.0]), OLS, fit_corr=1.0)
        with pytest.raises(RegressError):
            predict(model, np.ones((2, 2)))


def _destandardized_equiangular_check(X, y, path):
    """All active variables keep equal |correlation| with the residual at
    every breakpoint, measured on the standardized design."""
    Xc = X - X.mean(axis=0)
    norms = np.linalg.norm(Xc, axis=0)
    Xs = Xc / np.where(norms > 0, norms, 1.0)
    yc = y - y.mean()
    for active, beta in path[1:]:
        resid = yc - Xc @ beta
        corrs = np.abs(Xs.T @ resid)
        c_active = corrs[active]
        assert np.max(c_active) - np.min(c_active) <= 1e-8 * max(1.0, np.max(c_active))
        inactive = [j for j in range(X.shape[1]) if j not in active]
        if inactive:
            assert np.max(corrs[inactive]) <= np.max(c_active) + 1e-8


class TestLarsPath:
    def test_orthonormal_entry_order_and_steps(self):
        # On an orthonormal design the path enters variables by |corr| and the
        # coefficient magnitudes follow the soft-threshold ladder.
        rng = np.random.default_rng(5)
        n, k = 64, 5
        # orthonormal columns that are also zero-mean, so the path's internal
        # standardization leaves them untouched
        Q, _ = np.linalg.qr(
            np.column_stack([np.ones(n), rng.standard_normal((n, k))])
        )
        Q = Q[:, 1:]
        target_corr = np.array([5.0, -4.0, 3.0, -2.0, 1.0])
        y = Q @ target_corr
        path = lars_path(Q, y)
        entry_order = []
        for active, _ in path[1:]:
            for j in active:
                if j not in entry_order:
                    entry_order.append(j)
        assert entry_order == [0, 1, 2, 3, 4]
        # closed form for the orthogonal design: after step m the active
        # coefficients are sign(c_j) * (|c_j| - |c_(m+1)|)
        abs_c = np.abs(target_corr)
        for m, (active, beta) in enumerate(path[1:-1], start=1):
            thresh = abs_c[m]  # next entrant's correlation
            for j in active:
                expected = np.sign(target_corr[j]) * (abs_c[j] - thresh)
                assert beta[j] == pytest.approx(expected, abs=1e-8)

    def test_single_column_is_ols(self):
        X, y = _random_design(30, 1, seed=6)
        path = lars_path(X, y)
        ols = fit_ols(X, y)
        np.testing.assert_allclose(path[-1][1], ols.coefficients, atol=1e-8)

    def test_endpoint_equals_ols(self):
        for seed in range(5):
            X, y = _random_design(40, 6, seed=seed)
            path = lars_path(X, y)
            ols = fit_ols(X, y)
            np.testing.assert_allclose(path[-1][1], ols.coefficients, atol=1e-8)

    def test_equiangularity_random_designs(self):
        for seed in range(10):
            X, y = _random_design(50, 8, seed=100 + seed)
            _destandardized_equiangular_check(X, y, lars_path(X, y))

    def test_zero_variance_column_excluded_with_warning(self):
        X, y = _random_design(30, 3, seed=8)
        Xz = np.column_stack([X, np.full(30, 2.0)])
        with pytest.warns(UserWarning, match="zero-variance"):
            path = lars_path(Xz, y)
        assert all(beta[-1] == 0.0 for _, beta in path)


class TestLarsCv:
    def test_planted_signal_recovery(self):
        rng = np.random.default_rng(9)
        n, k = 200, 20
        X = rng.standard_normal((n, k))
        y = 3.0 * X[:, 2] - 2.0 * X[:, 11] + 0.1 * rng.standard_normal(n)
        model = fit_lars_cv(X, y, folds=10, seed=0)
        active = set(np.flatnonzero(model.coefficients != 0.0))
        assert {2, 11} <= active

    def test_pure_noise_takes_uniform_shrink_fallback(self):
        hits = 0
        for seed in range(5):
            rng = np.random.default_rng(200 + seed)
            X = rng.standard_normal((60, 10))
            y = rng.standard_normal(60)  # independent of X
            model = fit_lars_cv(X, y, folds=10, seed=seed)
            if model.method == UNIFORM_SHRINK:
                hits += 1
                assert model.shrink_factor in np.round(np.linspace(0.1, 1.0, 10), 10)
        assert hits >= 1

    def test_leave_one_out_exact_fit_selects_endpoint(self):
        # tiny exactly-fittable system: zero CV error only at the full path
        rng = np.random.default_rng(10)
        X = rng.standard_normal((8, 2))
        y = X @ [1.0, -2.0]
        model = fit_lars_cv(X, y, folds=4, seed=0)
        np.testing.assert_allclose(model.coefficients, [1.0, -2.0], atol=1e-8)

    def test_deterministic(self):
        X, y = _random_design(60, 8, seed=11)
        m1 = fit_lars_cv(X, y, folds=10, seed=3)
        m2 = fit_lars_cv(X, y, folds=10, seed=3)
        np.testing.assert_array_equal(m1.coefficients, m2.coefficients)
        assert m1.method == m2.method
        assert m1.shrink_factor == m2.shrink_factor

    def test_too_few_rows(self):
        with pytest.raises(RegressError):
            fit_lars_cv(np.ones((10, 2)), np.ones(10), folds=10)


def test_fraction_grid_shape():
    assert FRACTION_GRID[0] == 0.0 and FRACTION_GRID[-1] == 1.0
    assert len(FRACTION_GRID) == 21


def test_pearson_basic():
    a = np.array([1.0, 2.0, 3.0])
    assert pearson(a, 2 * a + 1) == pytest.approx(1.0)
    assert pearson(a, -a) == pytest.approx(-1.0)
    assert np.isnan(pearson(a, np.ones(3)))
