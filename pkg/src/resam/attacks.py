"""Adversarial worker behaviours.

Two collusion attacks craft a single vector from the honest momentums
(``empire`` rescales their average, ``little`` hides a shift inside their
coordinate-wise spread); the other two corrupt each adversarial worker's
own gradient stream (sign negation, label flipping) and are applied
inside the simulator's per-worker momentum update.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .vectors import as_matrix

ATTACK_NAMES = ("empire", "little", "sign_flip", "label_flip")

DEFAULT_ZETA = {"empire": 1.1, "little": 1.0}

# Attacks that read the honest momentums and submit one common vector.
OMNISCIENT_ATTACKS = ("empire", "little")


@dataclass(frozen=True)
class Attack:
    """Attack identifier with its strength parameter.

    ``zeta`` is only meaningful for empire and little.  ``little_sign``
    picks the direction of the little shift along the coordinate-wise
    standard deviation (the default pushes below the mean).
    """

    name: str
    zeta: Optional[float] = None
    little_sign: float = -1.0

    def __post_init__(self) -> None:
        if self.name not in ATTACK_NAMES:
            raise ValueError(f"unknown attack {self.name!r}")
        if self.name in OMNISCIENT_ATTACKS:
            if self.zeta is None:
                object.__setattr__(self, "zeta", DEFAULT_ZETA[self.name])
        elif self.zeta is not None:
            raise ValueError(f"attack {self.name!r} does not take zeta")
        if abs(self.little_sign) != 1.0:
            raise ValueError("little_sign must be +1 or -1")

    def label(self) -> str:
        return self.name


@dataclass
class AttackContext:
    """What an omniscient adversary observes at one step."""

    honest_momentums: np.ndarray
    step: int


def attack_vector(attack: Attack, ctx: AttackContext) -> np.ndarray:
    """The common vector submitted by all colluding workers this step.

    Only defined for the omniscient attacks; the per-worker corruptions
    have no single attack vector.
    """
    if attack.name not in OMNISCIENT_ATTACKS:
        raise ValueError(f"attack {attack.name!r} has no collusion vector")
    ms = as_matrix(ctx.honest_momentums)
    avg = ms.mean(axis=0)
    if attack.name == "empire":
        return (1.0 - attack.zeta) * avg
    # little: stay within the honest spread, shifted by zeta standard
    # deviations per coordinate (population convention).
    std = ms.std(axis=0)
    return avg + attack.little_sign * attack.zeta * std


def honest_gradient_negation(gradient: np.ndarray) -> np.ndarray:
    return -np.asarray(gradient, dtype=np.float64)
