"""Deterministic simulator for distributed momentum SGD under attack.

One run: n workers (the last f adversarial by default) each hold a
momentum vector; every step the honest workers update their momentum with
a fresh stochastic gradient, adversarial workers submit vectors per the
configured attack, the server aggregates all n submissions with the
configured rule and takes a gradient step.  Every random draw comes from
a stream derived from the run seed, so a configuration determines its
trajectory bit for bit.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

import numpy as np

from .aggregation import NoCertifiedCoefficient, Rule, aggregate, lambda_of
from .attacks import Attack, AttackContext, attack_vector
from .problems import (
    Logistic,
    Problem,
    ProblemSpec,
    build_problem,
    estimate_sigma,
)
from .rng import RngStream
from .theory import TheoremInputs, TheoremParams, lyapunov_weight, theorem_params
from .vectors import as_vector

CSV_FIELDS = ("step", "loss", "grad_sq", "drift_sq", "dev_sq", "lyapunov", "r_norm")

# Stream ids carved out of the run seed.
_STREAM_WORKERS = 1
_STREAM_SERVER = 2
_STREAM_SIGMA = 3

THEOREM = "theorem"

SIGMA_ESTIMATE_SAMPLES = 500


class SimulationError(ValueError):
    """Inconsistent run configuration."""


@dataclass(frozen=True)
class RunConfig:
    n: int
    f: int
    steps: int
    rule: Rule
    problem: ProblemSpec
    seed: int
    gamma: Union[float, str] = THEOREM
    beta: Union[float, str] = THEOREM
    attack: Optional[Attack] = None
    theta1: Optional[Tuple[float, ...]] = None
    byzantine_indices: Optional[Tuple[int, ...]] = None

    def __post_init__(self) -> None:
        if self.n < 1:
            raise SimulationError(f"need n >= 1, got n={self.n}")
        if not 0 <= self.f < self.n:
            raise SimulationError(f"need 0 <= f < n, got n={self.n}, f={self.f}")
        if self.steps < 1:
            raise SimulationError(f"need steps >= 1, got {self.steps}")
        for name, value in (("gamma", self.gamma), ("beta", self.beta)):
            if isinstance(value, str):
                if value != THEOREM:
                    raise SimulationError(f"{name} must be a number or {THEOREM!r}")
            elif name == "beta" and not 0.0 <= value < 1.0:
                raise SimulationError(f"beta must be in [0, 1), got {value}")
            elif name == "gamma" and value <= 0:
                raise SimulationError(f"gamma must be positive, got {value}")
        if self.attack is not None and self.f == 0:
            raise SimulationError("an attack requires f >= 1")
        if self.byzantine_indices is not None:
            idx = tuple(self.byzantine_indices)
            if len(idx) != self.f or len(set(idx)) != self.f:
                raise SimulationError("byzantine_indices must be f distinct indices")
            if any(not 0 <= i < self.n for i in idx):
                raise SimulationError("byzantine_indices out of range")

    def byzantine(self) -> Tuple[int, ...]:
        if self.byzantine_indices is not None:
            return tuple(sorted(self.byzantine_indices))
        return tuple(range(self.n - self.f, self.n))


@dataclass
class StepMetrics:
    step: int
    loss: float
    grad_sq: float
    drift_sq: float
    dev_sq: float
    lyapunov: float
    r_norm: float
    accuracy: Optional[float] = None


@dataclass
class RunResult:
    config: RunConfig
    metrics: List[StepMetrics]
    gamma: float
    beta: float
    theta_hat: np.ndarray
    theta_hat_step: int
    theta_final: np.ndarray
    avg_grad_sq: float
    diverged: bool = False
    diverged_at: Optional[int] = None
    final_accuracy: Optional[float] = None
    theory: Optional[TheoremParams] = None
    sigma_used: Optional[float] = None


def _resolve_parameters(
    config: RunConfig, problem: Problem, theta1: np.ndarray, base: RngStream
):
    """Fill in (gamma, beta) from the convergence analysis when asked."""
    wants_theorem = config.gamma == THEOREM or config.beta == THEOREM
    if not wants_theorem:
        return float(config.gamma), float(config.beta), None, None
    if config.gamma != config.beta:
        raise SimulationError("gamma and beta must both be numeric or both 'theorem'")
    try:
        lam = lambda_of(config.rule, config.n, config.f, problem.dim).value
    except NoCertifiedCoefficient as exc:
        raise SimulationError(
            f"theorem mode needs a certified rule, not {config.rule.name!r}"
        ) from exc
    if isinstance(problem, Logistic):
        sigma = estimate_sigma(
            problem, theta1, base.split(_STREAM_SIGMA), SIGMA_ESTIMATE_SAMPLES
        )
        if problem.qstar is None:
            problem.estimate_qstar()
    else:
        sigma = problem.sigma
    if sigma <= 0:
        raise SimulationError("theorem mode requires a positive noise level")
    grad1 = problem.true_gradient(theta1)
    inputs = TheoremInputs(
        n=config.n,
        f=config.f,
        lam=lam,
        smoothness=problem.smoothness,
        sigma=sigma,
        q1=problem.loss(theta1),
        qstar=problem.qstar,
        grad1_sq=float(grad1 @ grad1),
        qstar_estimated=problem.qstar_estimated,
    )
    params = theorem_params(inputs, config.steps)
    return params.gamma, params.beta, params, sigma


def run(config: RunConfig) -> RunResult:
    problem = build_problem(config.problem)
    d = problem.dim

    attack = config.attack
    if attack is not None and attack.name == "label_flip" and not problem.classification:
        raise SimulationError("label_flip requires a classification problem")

    theta = (
        np.zeros(d) if config.theta1 is None else as_vector(config.theta1).copy()
    )
    if theta.size != d:
        raise SimulationError("theta1 dimension does not match the problem")

    base = RngStream(config.seed)
    gamma, beta, theory, sigma_used = _resolve_parameters(config, problem, theta, base)

    byz = set(config.byzantine())
    honest = [i for i in range(config.n) if i not in byz]
    if not honest:
        raise SimulationError("at least one honest worker is required")
    workers = base.split(_STREAM_WORKERS)
    worker_streams = [workers.split(i) for i in range(config.n)]

    # The output iterate is drawn uniformly from the T visited iterates.
    server = base.split(_STREAM_SERVER)
    hat_step = int(server.generator.integers(1, config.steps + 1))

    momentums = np.zeros((config.n, d))
    prev_aggregate = np.zeros(d)
    L = problem.smoothness
    z = lyapunov_weight(L)

    metrics: List[StepMetrics] = []
    theta_hat = theta.copy()
    diverged = False
    diverged_at = None
    grad_sq_sum = 0.0

    for t in range(1, config.steps + 1):
        if t == hat_step:
            theta_hat = theta.copy()

        # Honest momentum updates.
        for i in honest:
            g = problem.stochastic_gradient(theta, worker_streams[i].split(t))
            momentums[i] = beta * momentums[i] + (1.0 - beta) * g

        # Adversarial submissions.
        if attack is None:
            for i in sorted(byz):
                g = problem.stochastic_gradient(theta, worker_streams[i].split(t))
                momentums[i] = beta * momentums[i] + (1.0 - beta) * g
        elif attack.name in ("empire", "little"):
            ctx = AttackContext(honest_momentums=momentums[honest], step=t)
            vec = attack_vector(attack, ctx)
            for i in byz:
                momentums[i] = vec
        elif attack.name == "sign_flip":
            for i in sorted(byz):
                g = problem.stochastic_gradient(theta, worker_streams[i].split(t))
                momentums[i] = beta * momentums[i] + (1.0 - beta) * (-g)
        elif attack.name == "label_flip":
            for i in sorted(byz):
                g = problem.flipped_gradient(theta, worker_streams[i].split(t))
                momentums[i] = beta * momentums[i] + (1.0 - beta) * g

        R = aggregate(config.rule, momentums, config.f, v0=prev_aggregate)
        prev_aggregate = R

        grad = problem.true_gradient(theta)
        grad_sq = float(grad @ grad)
        grad_sq_sum += grad_sq
        loss = problem.loss(theta)
        m_bar = momentums[honest].mean(axis=0)
        drift = R - m_bar
        dev = m_bar - grad
        accuracy = problem.accuracy(theta) if problem.classification else None
        metrics.append(
            StepMetrics(
                step=t,
                loss=loss,
                grad_sq=grad_sq,
                drift_sq=float(drift @ drift),
                dev_sq=float(dev @ dev),
                lyapunov=2.0 * loss + z * float(dev @ dev),
                r_norm=float(np.linalg.norm(R)),
                accuracy=accuracy,
            )
        )

        theta = theta - gamma * R
        if not (np.all(np.isfinite(R)) and np.all(np.isfinite(theta))):
            diverged = True
            diverged_at = t
            break

    final_accuracy = problem.accuracy(theta) if problem.classification else None
    steps_done = len(metrics)
    return RunResult(
        config=config,
        metrics=metrics,
        gamma=gamma,
        beta=beta,
        theta_hat=theta_hat,
        theta_hat_step=hat_step,
        theta_final=theta,
        avg_grad_sq=grad_sq_sum / max(steps_done, 1),
        diverged=diverged,
        diverged_at=diverged_at,
        final_accuracy=final_accuracy,
        theory=theory,
        sigma_used=sigma_used,
    )


def metrics_to_csv(metrics: List[StepMetrics]) -> str:
    """Serialize per-step metrics; floats use shortest round-trip form so
    equal trajectories produce identical bytes.  Classification runs get
    an extra trailing accuracy column."""
    with_accuracy = bool(metrics) and metrics[0].accuracy is not None
    fields = CSV_FIELDS + ("accuracy",) if with_accuracy else CSV_FIELDS
    out = io.StringIO()
    out.write(",".join(fields) + "\n")
    for m in metrics:
        row = [
            str(m.step),
            repr(m.loss),
            repr(m.grad_sq),
            repr(m.drift_sq),
            repr(m.dev_sq),
            repr(m.lyapunov),
            repr(m.r_norm),
        ]
        if with_accuracy:
            row.append(repr(m.accuracy))
        out.write(",".join(row) + "\n")
    return out.getvalue()
