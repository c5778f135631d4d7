"""L2-regularized logistic regression for finished-vs-running propensity scores."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ._checks import as_matrix, as_row

PS_FLOOR = 1e-6


def _sigmoid(u):
    return 0.5 * (1.0 + np.tanh(0.5 * u))


@dataclass(frozen=True)
class PropensityModel:
    weights: np.ndarray
    bias: float
    shift: np.ndarray
    scale: np.ndarray
    n_iter: int = 0
    converged: bool = False

    @property
    def n_features(self) -> int:
        return self.weights.shape[0]

    def predict(self, X) -> np.ndarray:
        X = as_matrix(X, self.n_features)
        u = ((X - self.shift) / self.scale) @ self.weights + self.bias
        return np.clip(_sigmoid(u), PS_FLOOR, 1.0 - PS_FLOOR)

    def to_json(self) -> str:
        """Debug dump; not a stable format."""
        return json.dumps(
            {
                "weights": self.weights.tolist(),
                "bias": self.bias,
                "shift": self.shift.tolist(),
                "scale": self.scale.tolist(),
            }
        )


def _loss_and_grad(theta, Z, y, sw, l2):
    u = Z @ theta[:-1] + theta[-1]
    # log(1 + exp(u)) - y*u, computed stably
    loss = np.sum(sw * (np.logaddexp(0.0, u) - y * u)) + 0.5 * l2 * theta[:-1] @ theta[:-1]
    resid = sw * (_sigmoid(u) - y)
    grad = np.empty_like(theta)
    grad[:-1] = Z.T @ resid + l2 * theta[:-1]
    grad[-1] = resid.sum()
    return loss, grad


def fit_logistic(
    X_fin,
    X_run,
    l2: float = 1e-4,
    max_iter: int = 500,
    tol: float = 1e-6,
    balanced: bool = True,
    history: list | None = None,
) -> PropensityModel:
    """Fit P(finished | x) with finished rows labelled 1 and running rows 0.

    Features are standardized internally. With ``balanced`` each class carries
    equal total weight, so a small finished set is not swamped by the running
    set. The objective is the weighted mean log-loss plus ``l2/2 * |w|^2``,
    minimized by gradient descent with Armijo backtracking; the loss never
    increases between iterations. Pass a list as ``history`` to record it.
    """
    X_fin = as_matrix(X_fin)
    X_run = as_matrix(X_run, X_fin.shape[1])
    if X_fin.shape[0] == 0 or X_run.shape[0] == 0:
        raise ValueError("both finished and running sets must be non-empty")
    if l2 < 0:
        raise ValueError("l2 must be >= 0")

    X = np.vstack([X_fin, X_run])
    y = np.concatenate([np.ones(X_fin.shape[0]), np.zeros(X_run.shape[0])])
    n_fin, n_run = X_fin.shape[0], X_run.shape[0]
    if balanced:
        sw = np.where(y == 1.0, 0.5 / n_fin, 0.5 / n_run)
    else:
        sw = np.full(y.shape[0], 1.0 / y.shape[0])

    shift = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale < 1e-12] = 1.0
    Z = (X - shift) / scale

    theta = np.zeros(X.shape[1] + 1)
    loss, grad = _loss_and_grad(theta, Z, y, sw, l2)
    step = 1.0
    converged = False
    it = 0
    if history is not None:
        history.append(loss)
    for it in range(1, max_iter + 1):
        gnorm2 = grad @ grad
        if np.sqrt(gnorm2) < tol:
            converged = True
            break
        while True:
            cand = theta - step * grad
            c_loss, c_grad = _loss_and_grad(cand, Z, y, sw, l2)
            if c_loss <= loss - 0.5 * step * gnorm2 or step < 1e-12:
                break
            step *= 0.5
        if c_loss > loss:  # step underflowed without progress
            break
        theta, loss, grad = cand, c_loss, c_grad
        if history is not None:
            history.append(loss)
        step = min(step * 2.0, 64.0)
    return PropensityModel(theta[:-1].copy(), float(theta[-1]), shift, scale, it, converged)


def estimate_ps(model: PropensityModel, x) -> float:
    return float(model.predict(as_row(x, model.n_features))[0])
