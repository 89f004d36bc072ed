from __future__ import annotations

import math
from dataclasses import asdict, dataclass


@dataclass
class SolverConfig:
    beta: float = 0.125
    gamma: float | None = None  # None: beta / (2^10 n^5)
    max_iters: int | None = None  # None: 10 n^2 ceil(log(1/term_tol))
    term_tol: float = 1e-11
    pivot_tol: float = 1e-11
    diagnostics: bool = False
    fast_lifting: bool = True

    def gamma_for(self, n: int) -> float:
        if self.gamma is not None:
            return self.gamma
        return self.beta / (2 ** 10 * n ** 5)

    def iteration_cap(self, n: int) -> int:
        if self.max_iters is not None:
            return self.max_iters
        return 10 * n * n * math.ceil(math.log(1.0 / self.term_tol))

    def as_dict(self) -> dict:
        return asdict(self)
