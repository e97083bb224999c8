"""Closed-form convergence-analysis quantities.

Given the problem constants (initial suboptimality, initial gradient
norm, smoothness L, noise level sigma) and a certified resilience
coefficient lambda, this module computes the prescribed step size,
momentum coefficient, minimum horizon and the finite-time bound on the
average squared gradient norm, together with the per-step bounds on
momentum spread, aggregate drift and momentum deviation used to check a
simulated run against the analysis.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil, sqrt


@dataclass(frozen=True)
class TheoremInputs:
    n: int
    f: int
    lam: float
    smoothness: float
    sigma: float
    q1: float            # loss at the initial point
    qstar: float         # optimal loss (possibly an estimate)
    grad1_sq: float      # squared gradient norm at the initial point
    qstar_estimated: bool = False

    def __post_init__(self) -> None:
        if self.f < 0 or 2 * self.f >= self.n:
            raise ValueError(f"need 0 <= f < n/2, got n={self.n}, f={self.f}")
        if self.lam < 0 or self.smoothness <= 0 or self.sigma <= 0:
            raise ValueError("need lam >= 0, smoothness > 0, sigma > 0")
        if self.q1 < self.qstar:
            raise ValueError("initial loss is below the reported optimum")


@dataclass(frozen=True)
class TheoremParams:
    gamma: float
    beta: float
    t_min: int
    a_o: float
    a_1: float
    a_2: float
    bound: float
    qstar_estimated: bool


def _constants(inputs: TheoremInputs):
    L = inputs.smoothness
    a_o = 4.0 * (2.0 * (inputs.q1 - inputs.qstar) + inputs.grad1_sq / (8.0 * L))
    a_1 = 6912.0 * L
    a_2 = 288.0 * L
    return a_o, a_1, a_2


def minimum_horizon(inputs: TheoremInputs) -> int:
    L = inputs.smoothness
    a_o, _, _ = _constants(inputs)
    if inputs.f == 0 and inputs.lam == 0.0:
        # The horizon condition is vacuous when the drift term vanishes.
        return 1
    raw = a_o * L / (12.0 * inputs.sigma**2 * inputs.lam**2 * (inputs.n - inputs.f))
    return max(1, ceil(raw))


def bound_at(inputs: TheoremInputs, T: int) -> float:
    """Finite-time bound on the average squared gradient norm after T
    steps with the prescribed step size and momentum."""
    nf = inputs.n - inputs.f
    a_o, a_1, a_2 = _constants(inputs)
    denom = a_1 * inputs.lam**2 * nf**2 + a_2
    first = 2.0 * sqrt(
        (a_1 * inputs.lam**2 * nf + a_2 / nf) * a_o * inputs.sigma**2 / T
    )
    second = (a_2 * inputs.sigma / nf) * sqrt(a_o * nf / denom) * T ** (-1.5)
    return first + second


def theorem_params(inputs: TheoremInputs, T: int) -> TheoremParams:
    """Prescribed (gamma, beta) and the bound for a horizon of T steps.

    T must be at least ``minimum_horizon(inputs)`` so that the momentum
    coefficient is well defined.
    """
    t_min = minimum_horizon(inputs)
    if T < t_min:
        raise ValueError(f"T={T} is below the minimum horizon {t_min}")
    nf = inputs.n - inputs.f
    L = inputs.smoothness
    a_o, a_1, a_2 = _constants(inputs)
    denom = a_1 * inputs.lam**2 * nf**2 + a_2
    gamma = sqrt(a_o * nf / denom) / (inputs.sigma * sqrt(T))
    inside = 1.0 - 24.0 * gamma * L
    if inside < 0:
        raise ValueError(
            f"momentum coefficient undefined: 24*gamma*L = {24 * gamma * L} > 1"
        )
    beta = sqrt(inside)
    return TheoremParams(
        gamma=gamma,
        beta=beta,
        t_min=t_min,
        a_o=a_o,
        a_1=a_1,
        a_2=a_2,
        bound=bound_at(inputs, T),
        qstar_estimated=inputs.qstar_estimated,
    )


def momentum_spread_bound(
    sigma: float, beta: float, n: int, f: int, t: int
) -> float:
    """Upper bound on E ||m_t^(i) - mean honest momentum||^2 at step t
    (steps counted from 1)."""
    if t < 1:
        raise ValueError(f"steps are counted from 1, got t={t}")
    nf = n - f
    transient = 2.0 * sigma**2 * (1.0 - beta) ** 2 * beta ** (2 * (t - 1))
    stationary = 2.0 * ((1.0 - beta) / (1.0 + beta)) * (1.0 + 1.0 / nf) * sigma**2
    return transient + stationary


def drift_bound(
    sigma: float, lam: float, beta: float, n: int, f: int, t: int
) -> float:
    """Upper bound on E ||R_t - mean honest momentum||^2 at step t for a
    rule certified with coefficient lam."""
    if t < 1:
        raise ValueError(f"steps are counted from 1, got t={t}")
    nf = n - f
    transient = 8.0 * sigma**2 * lam**2 * nf * (1.0 - beta) ** 2 * beta ** (2 * (t - 1))
    stationary = (
        8.0 * ((1.0 - beta) / (1.0 + beta)) * (nf + 1.0) * lam**2 * sigma**2
    )
    return transient + stationary


@dataclass(frozen=True)
class DeviationRecursionCoeffs:
    """Coefficients of the one-step recursion bounding the momentum
    deviation: E||dev_t||^2 <= beta^2 * zeta * E||dev_{t-1}||^2
    + grad_coeff * beta^2 * E||grad Q(theta_{t-1})||^2
    + noise_coeff * (1-beta)^2 * sigma^2 / (n-f)
    + drift_coeff * beta^2 * E||drift_{t-1}||^2."""

    zeta: float
    grad_coeff: float
    noise_coeff: float
    drift_coeff: float


def deviation_recursion_coeffs(gamma: float, L: float) -> DeviationRecursionCoeffs:
    zeta = (1.0 + gamma * L) * (1.0 + 4.0 * gamma * L)
    return DeviationRecursionCoeffs(
        zeta=zeta,
        grad_coeff=4.0 * gamma * L * (1.0 + gamma * L),
        noise_coeff=1.0,
        drift_coeff=2.0 * gamma * L * (1.0 + gamma * L),
    )


@dataclass(frozen=True)
class GrowthCoeffs:
    """Coefficients of the per-step loss growth bound:
    E[2Q(theta_{t+1}) - 2Q(theta_t)] <= -grad_coeff * E||grad Q||^2
    + dev_coeff * E||dev_t||^2 + drift_coeff * E||drift_t||^2."""

    grad_coeff: float
    dev_coeff: float
    drift_coeff: float


def growth_coeffs(gamma: float, L: float) -> GrowthCoeffs:
    return GrowthCoeffs(
        grad_coeff=gamma * (1.0 - 4.0 * gamma * L),
        dev_coeff=2.0 * gamma * (1.0 + 2.0 * gamma * L),
        drift_coeff=2.0 * gamma * (1.0 + gamma * L),
    )


def lyapunov_weight(L: float) -> float:
    """Weight of the squared deviation in the per-step potential
    2 Q(theta_t) + weight * ||dev_t||^2."""
    return 1.0 / (8.0 * L)


def epsilon_order(sigma: float, lam: float, n: int, f: int, T: int) -> float:
    """Order of the achievable resilience accuracy (constants dropped)."""
    nf = n - f
    return sqrt(sigma**2 / T * (1.0 / nf + lam**2 * nf))


def kappa(lam: float, n: int, f: int) -> float:
    """Slowdown factor relative to the attack-free rate: the certified
    coefficient's contribution lambda^2 (n - f) to the rate."""
    return lam**2 * (n - f)
