"""Concrete small constants for the approximation pipeline.

``xi`` drives the speed-up and shortening margins; it equals
``min(eps, 1) / (20 (L + 1))``, which leaves room for the final error chain
``(L + eps) 2 xi + xi + 6 L xi <= eps``.  ``eps_tilde`` is the largest power
of two meeting the four inequalities in :func:`eps_tilde_constraints`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import BudgetError

DEFAULT_GRID_STEP = 2.0**-11
DEFAULT_SLACK = 1e-6


def eps_tilde_constraints(L: float, eps: float, et: float) -> dict[str, bool]:
    """The four inequalities ``eps_tilde`` must satisfy, by name."""
    target = 1.0 / (L + eps)
    return {
        "below_fifth": et < eps / 5.0,
        "angle": math.cos(et) / (L + et) >= target,
        "far_pairs": et < 1.0 and 1.0 / L - 4.0 * L * et / (1.0 - et) >= target,
        "cell_pairs": 1.0 / L - 18.0 * L * et >= target,
    }


def dyadic_eps_tilde(L: float, eps: float) -> float:
    for k in range(1, 1100):
        et = 2.0**-k
        if all(eps_tilde_constraints(L, eps, et).values()):
            return et
    raise BudgetError(f"no dyadic eps_tilde for L={L}, eps={eps}")


@dataclass(frozen=True)
class ConstantBudget:
    """Constants of one approximation run; validated on construction.

    ``N`` is the number of bad intervals and ``ell`` the strip length used by
    the speed-up; before stage 1 they hold the placeholders ``1`` and
    ``xi / 4``.
    """

    L: float
    eps: float
    xi: float
    eps_tilde: float
    N: int
    ell: float
    delta: float
    grid_step: float = DEFAULT_GRID_STEP
    slack: float = DEFAULT_SLACK

    def __post_init__(self):
        for name in ("xi", "eps_tilde", "ell", "delta", "grid_step"):
            if not getattr(self, name) > 0:
                raise BudgetError(f"{name} must be positive")
        if self.N < 1:
            raise BudgetError("N must be at least 1")
        broken = [k for k, ok in self.constraints().items() if not ok]
        if broken:
            raise BudgetError(f"budget violates {', '.join(broken)}")

    def constraints(self) -> dict[str, bool]:
        """The defining inequalities, evaluated."""
        return {
            "strips": 2.0 * self.ell * self.N < self.xi,
            "eps_tilde": self.eps_tilde < self.eps / 5.0,
            "delta": self.delta <= self.eps**2 * self.eps_tilde / (12.0 * self.L),
            "positive": min(self.xi, self.eps_tilde, self.ell, self.delta) > 0,
        }

    def with_strips(self, n_bad: int, ell: float) -> "ConstantBudget":
        return replace(self, N=max(1, n_bad), ell=ell)


def choose_constants(L: float, eps: float, grid_step: float = DEFAULT_GRID_STEP) -> ConstantBudget:
    if not (L > 1 and eps > 0):
        raise BudgetError("choose_constants needs L > 1 and eps > 0")
    xi = min(eps, 1.0) / (20.0 * (L + 1.0))
    et = dyadic_eps_tilde(L, eps)
    delta = eps**2 * et / (12.0 * L)
    return ConstantBudget(L, eps, xi, et, 1, xi / 4.0, delta, grid_step)
