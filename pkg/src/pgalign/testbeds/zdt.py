"""ZDT-1 as a pair of domain objectives living entirely in the shared block.

    f1(x) = x_1
    g(x)  = 1 + 9 / (n - 1) * sum_{i >= 2} x_i
    f2(x) = g * (1 - sqrt(f1 / g)) = g - sqrt(f1 * g)

The Pareto set is ``x_1 in [0, 1]`` with every other coordinate zero.
"""

from __future__ import annotations

import numpy as np

from pgalign.objective import DomainObjective
from pgalign.params import ParamLayout

N_VARS = 30
X1_FLOOR = 1e-6  # df2/dx1 is unbounded at x1 = 0


def zdt1_layout(n: int = N_VARS) -> ParamLayout:
    return ParamLayout(n, (), 0)


class _ZDT1Objective(DomainObjective):
    def __init__(self, n: int, owner, project: bool):
        super().__init__(zdt1_layout(n), owner)
        self.n = n
        self.project = project

    def _point(self, x: np.ndarray) -> np.ndarray:
        if self.project:
            x = np.clip(x, 0.0, 1.0)
            x[0] = max(x[0], X1_FLOOR)
        elif not np.all((x >= 0) & (x <= 1)):
            raise ValueError("ZDT-1 is only defined on the unit box")
        return x


class ZDT1F1(_ZDT1Objective):
    def loss_and_grads(self, shared, specific, batch=None):
        x = self._point(shared)
        g = np.zeros(self.n)
        g[0] = 1.0
        return float(x[0]), g, np.zeros(0)


class ZDT1F2(_ZDT1Objective):
    def loss_and_grads(self, shared, specific, batch=None):
        x = self._point(shared)
        if x[0] <= 0:
            raise ValueError("the f2 gradient is unbounded at x1 = 0")
        c = 9.0 / (self.n - 1)
        g_val = 1.0 + c * x[1:].sum()
        root = np.sqrt(x[0] * g_val)
        grad = np.empty(self.n)
        grad[0] = -0.5 * g_val / root
        grad[1:] = c * (1.0 - 0.5 * x[0] / root)
        return float(g_val - root), grad, np.zeros(0)


def zdt1_objectives(n: int = N_VARS, project: bool = False) -> tuple[ZDT1F1, ZDT1F2]:
    """``(f1, f2)`` owned by the empty source block and the empty target block.

    With ``project=True`` both objectives evaluate at the projection of the
    point onto ``[X1_FLOOR, 1] x [0, 1]^(n-1)`` instead of rejecting it; the
    optimizer's shifted evaluation points may leave the box.
    """
    if n < 2:
        raise ValueError("ZDT-1 needs at least two variables")
    return ZDT1F1(n, 0, project), ZDT1F2(n, "target", project)


def zdt1_values(x) -> tuple[float, float]:
    x = np.asarray(x, dtype=np.float64)
    c = 9.0 / (x.size - 1)
    g_val = 1.0 + c * x[1:].sum()
    return float(x[0]), float(g_val - np.sqrt(x[0] * g_val))
