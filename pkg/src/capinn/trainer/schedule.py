"""Learning-rate schedule shared by every optimizer in an A/B comparison."""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class LrSchedule:
    """Linear warmup to ``peak`` over ``warmup_frac`` of the iterations, then
    exponential decay reaching ``floor_frac * peak`` at the last iteration.
    """

    peak: float = 1e-3
    warmup_frac: float = 0.05
    floor_frac: float = 0.01

    def __post_init__(self):
        if not self.peak > 0.0:
            raise ValueError("peak learning rate must be > 0")
        if not 0.0 <= self.warmup_frac < 1.0:
            raise ValueError("warmup_frac must be in [0, 1)")
        if not 0.0 < self.floor_frac <= 1.0:
            raise ValueError("floor_frac must be in (0, 1]")

    def __call__(self, k: int, total: int) -> float:
        """Learning rate at iteration ``k`` (1-based) of ``total``."""
        warm = int(math.ceil(self.warmup_frac * total))
        if k <= warm:
            return self.peak * k / warm
        rest = total - warm
        if rest <= 1:
            return self.peak
        return self.peak * self.floor_frac ** ((k - warm - 1) / (rest - 1))
