"""Ordinary least squares with intercept, the residual source for invariance testing."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["OlsFit", "ols"]

# R-diagonal entries below this fraction of the largest one count as zero.
_RANK_TOL = 1e-10


@dataclass
class OlsFit:
    subset: tuple[str, ...]
    intercept: float
    coefficients: np.ndarray
    residuals: np.ndarray
    rank_deficient: bool

    def fitted(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        return self.intercept + X @ self.coefficients


def ols(X, y, names: tuple[str, ...] | None = None) -> OlsFit:
    """Least-squares fit of ``y`` on columns of ``X`` plus an intercept.

    Solved through a QR decomposition of the design matrix.  A rank-deficient
    design (detected on the R diagonal) falls back to the minimum-norm
    solution and is flagged.  ``X`` may have zero columns, which yields the
    intercept-only model.
    """
    y = np.asarray(y, dtype=float).ravel()
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.size == 0:
        X = X.reshape(len(y), 0)
    n, k = X.shape
    if n != len(y):
        raise ValueError(f"X has {n} rows but y has {len(y)}")
    if n <= k + 1:
        raise ValueError(f"underdetermined system: {n} rows for {k} covariates plus intercept")
    if names is None:
        names = tuple(f"x{i}" for i in range(k))
    if len(names) != k:
        raise ValueError("names must match the number of columns")

    design = np.column_stack([np.ones(n), X])
    q, r = np.linalg.qr(design, mode="reduced")
    diag = np.abs(np.diag(r))
    rank_deficient = bool(np.any(diag < _RANK_TOL * diag.max()))
    if rank_deficient:
        beta, *_ = np.linalg.lstsq(design, y, rcond=_RANK_TOL)
    else:
        beta = np.linalg.solve(r, q.T @ y)
    residuals = y - design @ beta
    return OlsFit(
        subset=tuple(names),
        intercept=float(beta[0]),
        coefficients=beta[1:],
        residuals=residuals,
        rank_deficient=rank_deficient,
    )
