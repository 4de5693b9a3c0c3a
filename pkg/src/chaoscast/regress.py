"""Per-delay-map linear response fitting.

Three fitting routes share one :class:`LinearModel` container:

* plain least squares with intercept (minimum-norm on rank-deficient designs),
* the least-angle path, entering one variable at a time and advancing
  equiangularly, whose endpoint reproduces least squares,
* least-angle with contiguous-block cross validation over a fraction grid,
  falling back to uniformly shrunken least squares when CV picks the empty
  model.

All fits are pure functions, safe to run in parallel across maps.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

OLS = "OLS"
LARS_CV = "LARS_CV"
UNIFORM_SHRINK = "UNIFORM_SHRINK"

# CV grids: 21 path fractions, 10 shrink factors.
FRACTION_GRID = np.linspace(0.0, 1.0, 21)
SHRINK_GRID = np.linspace(0.1, 1.0, 10)


class RegressError(ValueError):
    """Raised for dimension mismatches or infeasible fits."""


@dataclass(frozen=True)
class LinearModel:
    map_id: int
    intercept: float
    coefficients: np.ndarray
    method: str
    fit_corr: float  # NaN when the fit-window target has zero variance
    shrink_factor: float = 1.0

    def __post_init__(self):
        coefs = np.asarray(self.coefficients, dtype=np.float64)
        coefs.setflags(write=False)
        object.__setattr__(self, "coefficients", coefs)


def pearson(a: np.ndarray, b: np.ndarray) -> float:
    """Pearson correlation; NaN when either side has zero variance."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    da = a - a.mean()
    db = b - b.mean()
    denom = math.sqrt(float(da @ da) * float(db @ db))
    if denom == 0.0:
        return float("nan")
    return float(da @ db) / denom


def _check_xy(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.shape[0] != y.shape[0]:
        raise RegressError(f"{X.shape[0]} rows of X vs {y.shape[0]} targets")
    return X, y


def fit_ols(X: np.ndarray, y: np.ndarray, map_id: int = -1) -> LinearModel:
    """Least squares with intercept; minimum-norm solution when rank deficient."""
    X, y = _check_xy(X, y)
    if X.shape[0] < 2:
        raise RegressError("need at least 2 rows to fit")
    xm = X.mean(axis=0)
    ym = y.mean()
    coefs, *_ = np.linalg.lstsq(X - xm, y - ym, rcond=None)
    intercept = ym - float(xm @ coefs)
    fitted = intercept + X @ coefs
    return LinearModel(map_id, intercept, coefs, OLS, fit_corr=pearson(fitted, y))


def predict(model: LinearModel, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.coefficients.shape[0]:
        raise RegressError(
            f"{X.shape[1]} design columns vs {model.coefficients.shape[0]} coefficients"
        )
    return model.intercept + X @ (model.coefficients * model.shrink_factor)


def _standardize(X: np.ndarray):
    """Zero-mean, unit-norm columns; zero-variance columns are dropped."""
    xm = X.mean(axis=0)
    Xc = X - xm
    norms = np.linalg.norm(Xc, axis=0)
    keep = np.flatnonzero(norms > 0)
    if keep.size < X.shape[1]:
        warnings.warn(
            f"excluding {X.shape[1] - keep.size} zero-variance column(s) from path",
            stacklevel=3,
        )
    Xs = Xc[:, keep] / norms[keep]
    return Xs, xm, norms, keep


def lars_path(X: np.ndarray, y: np.ndarray) -> list[tuple[list[int], np.ndarray]]:
    """Least-angle path on internally standardized columns.

    Returns the breakpoints as (active column indices, coefficient vector in
    the original column basis, without intercept).  The first breakpoint is
    the empty model; the last equals the least-squares fit on all usable
    columns.
    """
    X, y = _check_xy(X, y)
    Xs, _, norms, keep = _standardize(X)
    yc = y - y.mean()
    n, p = Xs.shape
    max_active = min(n - 1, p)

    beta = np.zeros(p)
    active: list[int] = []
    inactive = list(range(p))
    path = [([], np.zeros(X.shape[1]))]

    resid = yc.copy()
    for _ in range(max_active):
        c = Xs.T @ resid
        if not active:
            j = int(np.argmax(np.abs(c[inactive])))
            active.append(inactive.pop(j))
        C = float(np.max(np.abs(c[active])))
        if C <= 1e-14:
            break
        s = np.sign(c[active])
        Xa = Xs[:, active] * s
        G = Xa.T @ Xa
        ones = np.ones(len(active))
        Ginv1 = np.linalg.solve(G, ones)
        A = 1.0 / math.sqrt(float(ones @ Ginv1))
        w = A * Ginv1
        u = Xa @ w  # equiangular direction, unit norm
        a = Xs.T @ u

        if inactive:
            gammas = []
            for j in inactive:
                for g in ((C - c[j]) / (A - a[j]), (C + c[j]) / (A + a[j])):
                    if np.isfinite(g) and g > 1e-14:
                        gammas.append((g, j))
            if gammas:
                gamma, j_next = min(gammas, key=lambda t: t[0])
                gamma = min(gamma, C / A)
            else:
                gamma, j_next = C / A, None
        else:
            gamma, j_next = C / A, None

        beta[active] += gamma * (s * w)
        resid = yc - Xs @ beta
        # record breakpoint in original column scaling
        full = np.zeros(X.shape[1])
        full[keep] = beta / norms[keep]
        path.append((list(keep[active]), full))
        if j_next is None or gamma >= C / A - 1e-14:
            break
        inactive.remove(j_next)
        active.append(j_next)
    return path


def _interp_path(path, fraction: float) -> np.ndarray:
    """Coefficients at a fraction of the endpoint's L1 arc length."""
    l1 = np.array([np.abs(b).sum() for _, b in path])
    total = l1[-1]
    if total == 0:
        return path[-1][1].copy()
    target = fraction * total
    i = int(np.searchsorted(l1, target))
    if i == 0:
        return path[0][1].copy()
    if i >= len(path):
        return path[-1][1].copy()
    lo, hi = l1[i - 1], l1[i]
    w = 0.0 if hi == lo else (target - lo) / (hi - lo)
    return (1 - w) * path[i - 1][1] + w * path[i][1]


def _block_folds(n: int, folds: int) -> list[np.ndarray]:
    """Contiguous time blocks (serial dependence makes random folds leak)."""
    edges = np.linspace(0, n, folds + 1).astype(int)
    return [np.arange(edges[i], edges[i + 1]) for i in range(folds)]


def fit_lars_cv(
    X: np.ndarray, y: np.ndarray, folds: int = 10, seed: int = 0, map_id: int = -1
) -> LinearModel:
    """Least-angle fit with the path fraction chosen by blocked CV.

    When CV selects the empty model, falls back to least squares uniformly
    shrunken by a factor chosen from ``SHRINK_GRID`` by the same CV.  The
    ``seed`` only disambiguates exact CV-score ties, keeping the fit
    deterministic under (inputs, folds, seed).
    """
    X, y = _check_xy(X, y)
    n = X.shape[0]
    if n < 2 * folds:
        raise RegressError(f"{n} rows is too few for {folds} CV folds")
    fold_idx = _block_folds(n, folds)

    frac_err = np.zeros(len(FRACTION_GRID))
    shrink_err = np.zeros(len(SHRINK_GRID))
    for test in fold_idx:
        train = np.setdiff1d(np.arange(n), test)
        Xtr, ytr = X[train], y[train]
        path = lars_path(Xtr, ytr)
        xm, ym = Xtr.mean(axis=0), ytr.mean()
        for i, f in enumerate(FRACTION_GRID):
            b = _interp_path(path, f)
            pred = ym + (X[test] - xm) @ b
            frac_err[i] += float(np.sum((y[test] - pred) ** 2))
        ols_tr = fit_ols(Xtr, ytr)
        for i, c in enumerate(SHRINK_GRID):
            pred = ols_tr.intercept + X[test] @ (ols_tr.coefficients * c)
            shrink_err[i] += float(np.sum((y[test] - pred) ** 2))

    best_frac = float(FRACTION_GRID[int(np.argmin(frac_err))])
    full_path = lars_path(X, y)
    beta = _interp_path(full_path, best_frac)
    if np.any(beta != 0.0):
        intercept = float(y.mean() - X.mean(axis=0) @ beta)
        fitted = intercept + X @ beta
        return LinearModel(map_id, intercept, beta, LARS_CV, fit_corr=pearson(fitted, y))

    # empty active set: uniformly shrunken least squares
    shrink = float(SHRINK_GRID[int(np.argmin(shrink_err))])
    ols = fit_ols(X, y, map_id=map_id)
    fitted = ols.intercept + X @ (ols.coefficients * shrink)
    return LinearModel(
        map_id,
        ols.intercept,
        ols.coefficients,
        UNIFORM_SHRINK,
        fit_corr=pearson(fitted, y),
        shrink_factor=shrink,
    )


def save_models_csv(models: list[LinearModel], path) -> None:
    """(map_id, method, intercept, shrink_factor, fit_corr, coef_1..coef_k)."""
    import csv

    k = max((m.coefficients.shape[0] for m in models), default=0)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["map_id", "method", "intercept", "shrink_factor", "fit_corr"]
            + [f"coef_{i + 1}" for i in range(k)]
        )
        for m in models:
            writer.writerow(
                [m.map_id, m.method, repr(m.intercept), repr(m.shrink_factor),
                 repr(m.fit_corr)]
                + [repr(float(c)) for c in m.coefficients]
            )
