"""Simulated users answering pairwise explanation queries.

A user carries hidden positive weights over the step features and follows a
Bradley-Terry-style response rule with indifference: the closer two steps are
in hidden utility, the likelier the user is to express no preference.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Sequence

INDIFFERENT = "indifferent"
FIRST = "first"
SECOND = "second"


@dataclass
class OracleUser:
    w_star: tuple[float, ...]
    beta: float = 1.0
    mislabel_rate: float = 0.10
    rng: random.Random = field(default_factory=random.Random, repr=False)

    def utility(self, phi: Sequence[float]) -> float:
        return sum(w * x for w, x in zip(self.w_star, phi))


def sample_oracle(
    seed: int, p: int = 12, beta: float = 1.0, mislabel_rate: float = 0.10
) -> OracleUser:
    """Hidden weights 10^j with j uniform on [-2, 2], one draw per feature."""
    rng = random.Random(seed)
    w = tuple(10.0 ** rng.uniform(-2.0, 2.0) for _ in range(p))
    return OracleUser(w_star=w, beta=beta, mislabel_rate=mislabel_rate, rng=rng)


def respond(user: OracleUser, phi1: Sequence[float], phi2: Sequence[float]) -> str:
    """Label a pair of raw feature vectors.

    Indifferent with probability e^(-beta * |utility gap|); otherwise the
    lower-utility step is preferred, with a mislabel_rate chance of flipping.
    """
    f1 = user.utility(phi1)
    f2 = user.utility(phi2)
    if user.rng.random() < math.exp(-user.beta * abs(f2 - f1)):
        return INDIFFERENT
    preferred = FIRST if f1 < f2 else SECOND
    if user.rng.random() < user.mislabel_rate:
        preferred = SECOND if preferred == FIRST else FIRST
    return preferred
