"""Test problems driven by the simulator.

Both problems expose the same surface: exact loss and gradient, a noisy
per-worker stochastic gradient drawn from an explicit stream, and a
smoothness constant.  The quadratic has a known optimum; the logistic
regression works on a synthetic two-blob dataset and additionally offers
the label-flipped gradient used by the corresponding attack.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from .rng import RngStream
from .vectors import as_vector, gaussian_vector


@dataclass(frozen=True)
class QuadraticSpec:
    dim: int
    sigma: float
    theta_star: Optional[Tuple[float, ...]] = None

    name: str = "quadratic"


@dataclass(frozen=True)
class LogisticSpec:
    dim: int
    mu: float
    n_per_class: int
    batch: int
    reg: float
    data_seed: int

    name: str = "logistic"


ProblemSpec = Union[QuadraticSpec, LogisticSpec]


class Quadratic:
    """Q(theta) = 0.5 * ||theta - theta_star||^2 with isotropic gradient
    noise of total variance sigma^2."""

    def __init__(self, dim: int, sigma: float, theta_star=None):
        if dim < 1:
            raise ValueError(f"dim must be >= 1, got {dim}")
        if sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {sigma}")
        self.dim = dim
        self.sigma = float(sigma)
        self.theta_star = (
            np.zeros(dim) if theta_star is None else as_vector(theta_star)
        )
        if self.theta_star.size != dim:
            raise ValueError("theta_star dimension does not match dim")
        self.smoothness = 1.0
        self.qstar = 0.0
        self.qstar_estimated = False
        self.classification = False

    def loss(self, theta: np.ndarray) -> float:
        diff = theta - self.theta_star
        return 0.5 * float(diff @ diff)

    def true_gradient(self, theta: np.ndarray) -> np.ndarray:
        return theta - self.theta_star

    def stochastic_gradient(self, theta: np.ndarray, rng: RngStream) -> np.ndarray:
        noise = gaussian_vector(rng, self.dim, self.sigma**2)
        return self.true_gradient(theta) + noise


class Logistic:
    """Binary logistic regression with L2 regularization.

    The synthetic dataset is two Gaussian blobs with identity covariance
    and means +/- mu along the first coordinate, n_per_class points each.
    Stochastic gradients use minibatches sampled without replacement.
    """

    def __init__(self, X: np.ndarray, y: np.ndarray, batch: int, reg: float):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.size:
            raise ValueError("X must be (N, d) and y must be (N,)")
        if not 1 <= batch <= X.shape[0]:
            raise ValueError(f"batch must be in [1, N], got {batch}")
        if reg < 0:
            raise ValueError(f"reg must be >= 0, got {reg}")
        self.X = X
        self.y = y
        self.batch = int(batch)
        self.reg = float(reg)
        self.dim = X.shape[1]
        n = X.shape[0]
        gram_top = float(np.linalg.eigvalsh(X.T @ X)[-1])
        self.smoothness = gram_top / (4.0 * n) + reg
        self.qstar = None
        self.qstar_estimated = False
        self.classification = True

    @classmethod
    def blobs(
        cls,
        dim: int,
        mu: float,
        n_per_class: int,
        batch: int,
        reg: float,
        data_seed: int,
    ) -> "Logistic":
        if dim < 1 or n_per_class < 1:
            raise ValueError("dim and n_per_class must be >= 1")
        rng = RngStream(data_seed, 0)
        g = rng.generator
        center = np.zeros(dim)
        center[0] = mu
        X_pos = g.standard_normal((n_per_class, dim)) + center
        X_neg = g.standard_normal((n_per_class, dim)) - center
        X = np.concatenate([X_pos, X_neg])
        y = np.concatenate([np.ones(n_per_class), np.zeros(n_per_class)])
        return cls(X, y, batch, reg)

    def _data_loss(self, theta: np.ndarray, X: np.ndarray, y: np.ndarray) -> float:
        margins = (2.0 * y - 1.0) * (X @ theta)
        return float(np.logaddexp(0.0, -margins).mean())

    def loss(self, theta: np.ndarray) -> float:
        return self._data_loss(theta, self.X, self.y) + 0.5 * self.reg * float(
            theta @ theta
        )

    def _data_gradient(self, theta: np.ndarray, X: np.ndarray, y: np.ndarray):
        p = 1.0 / (1.0 + np.exp(-(X @ theta)))
        return X.T @ (p - y) / X.shape[0]

    def true_gradient(self, theta: np.ndarray) -> np.ndarray:
        return self._data_gradient(theta, self.X, self.y) + self.reg * theta

    def _minibatch(self, rng: RngStream):
        idx = rng.generator.choice(self.X.shape[0], size=self.batch, replace=False)
        return self.X[idx], self.y[idx]

    def stochastic_gradient(self, theta: np.ndarray, rng: RngStream) -> np.ndarray:
        Xb, yb = self._minibatch(rng)
        return self._data_gradient(theta, Xb, yb) + self.reg * theta

    def flipped_gradient(self, theta: np.ndarray, rng: RngStream) -> np.ndarray:
        """Stochastic gradient computed on labels relabelled l -> K-1-l."""
        Xb, yb = self._minibatch(rng)
        return self._data_gradient(theta, Xb, 1.0 - yb) + self.reg * theta

    def accuracy(self, theta: np.ndarray) -> float:
        return float(((self.X @ theta > 0) == (self.y > 0.5)).mean())

    def estimate_qstar(self, iters: int = 5000) -> float:
        """Lower-estimate the optimal loss by full-batch gradient descent,
        minus a small safety margin.  Marks the problem accordingly."""
        theta = np.zeros(self.dim)
        lr = 1.0 / self.smoothness
        for _ in range(iters):
            theta -= lr * self.true_gradient(theta)
        value = self.loss(theta)
        self.qstar = value - 1e-9 * (1.0 + abs(value))
        self.qstar_estimated = True
        return self.qstar


Problem = Union[Quadratic, Logistic]


def build_problem(spec: ProblemSpec) -> Problem:
    if isinstance(spec, QuadraticSpec):
        return Quadratic(spec.dim, spec.sigma, spec.theta_star)
    if isinstance(spec, LogisticSpec):
        return Logistic.blobs(
            spec.dim, spec.mu, spec.n_per_class, spec.batch, spec.reg, spec.data_seed
        )
    raise TypeError(f"unknown problem spec {spec!r}")


def estimate_sigma(
    problem: Problem, theta: np.ndarray, rng: RngStream, samples: int = 1000
) -> float:
    """Monte Carlo estimate of the stochastic-gradient noise level
    sqrt(E ||g - grad Q||^2) at a given point."""
    exact = problem.true_gradient(theta)
    total = 0.0
    for k in range(samples):
        g = problem.stochastic_gradient(theta, rng.split(k))
        diff = g - exact
        total += float(diff @ diff)
    return float(np.sqrt(total / samples))
