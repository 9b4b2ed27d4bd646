"""Differentiable objective contract and finite-difference gradient checks."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Protocol, runtime_checkable

import numpy as np

from pgalign.params import GradSlices, ParamLayout, ParamVector, Owner

FD_STEP = 1e-5


@runtime_checkable
class ObjectiveFn(Protocol):
    """Anything exposing ``value`` and ``gradient`` over a flat float64 point."""

    dim: int

    def value(self, point: np.ndarray) -> float: ...

    def gradient(self, point: np.ndarray) -> np.ndarray: ...


class NonFiniteValueError(FloatingPointError):
    def __init__(self, coordinate: int, value: float):
        super().__init__(f"non-finite objective value {value!r} while perturbing coordinate {coordinate}")
        self.coordinate = coordinate


def fd_gradient(obj: ObjectiveFn, point, step: float = FD_STEP) -> np.ndarray:
    """Central-difference gradient of ``obj.value`` at ``point``."""
    if not step > 0:
        raise ValueError(f"step must be positive, got {step}")
    x0 = np.asarray(point, dtype=np.float64)
    if not np.all(np.isfinite(x0)):
        raise ValueError("point must be finite")
    grad = np.zeros(x0.size)
    x = x0.copy()
    for k in range(x0.size):
        x[k] = x0[k] + step
        f_plus = obj.value(x)
        x[k] = x0[k] - step
        f_minus = obj.value(x)
        x[k] = x0[k]
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise NonFiniteValueError(k, f_plus if not np.isfinite(f_plus) else f_minus)
        grad[k] = (f_plus - f_minus) / (2 * step)
    return grad


@dataclass(frozen=True)
class GradCheckReport:
    ok: bool
    worst_index: int  # -1 when there are no coordinates
    worst_error: float
    analytic: np.ndarray
    numeric: np.ndarray

    def __bool__(self) -> bool:
        return self.ok


def check_gradient(
    obj: ObjectiveFn,
    point,
    rel_tol: float = 1e-5,
    abs_tol: float = 1e-7,
    step: float = FD_STEP,
) -> GradCheckReport:
    """Compare ``obj.gradient`` against central differences coordinate-wise.

    A coordinate passes when ``|analytic - fd| <= abs_tol + rel_tol * |fd|``.
    The report's ``worst_error`` is the largest absolute discrepancy.
    """
    if rel_tol <= 0 or abs_tol <= 0:
        raise ValueError("tolerances must be positive")
    x = np.asarray(point, dtype=np.float64)
    analytic = np.asarray(obj.gradient(x), dtype=np.float64)
    numeric = fd_gradient(obj, x, step)
    if analytic.shape != numeric.shape:
        raise ValueError(f"gradient has shape {analytic.shape}, expected {numeric.shape}")
    if numeric.size == 0:
        return GradCheckReport(True, -1, 0.0, analytic, numeric)
    err = np.abs(analytic - numeric)
    worst = int(np.argmax(err))
    ok = bool(np.all(err <= abs_tol + rel_tol * np.abs(numeric)))
    return GradCheckReport(ok, worst, float(err[worst]), analytic, numeric)


class DomainObjective:
    """A loss of one domain, depending on the shared block and the owner's block.

    Subclasses implement :meth:`loss_and_grads` on the two block sub-vectors.
    ``batch`` is an opaque handle forwarded untouched, so that a base gradient
    and a shifted gradient inside one optimizer step can see the same data.
    """

    def __init__(self, layout: ParamLayout, owner: Owner):
        layout.check_owner(owner)
        self.layout = layout
        self.owner = owner

    @property
    def dim(self) -> int:
        return self.layout.total_dim

    def loss_and_grads(
        self, shared: np.ndarray, specific: np.ndarray, batch: Any = None
    ) -> tuple[float, np.ndarray, np.ndarray]:
        raise NotImplementedError

    def evaluate(self, p: ParamVector, batch: Any = None) -> tuple[float, GradSlices]:
        if p.layout != self.layout:
            raise ValueError("parameter layout does not match objective layout")
        loss, g_sh, g_spec = self.loss_and_grads(p.block("shared"), p.block(self.owner), batch)
        return float(loss), GradSlices(self.layout, np.asarray(g_sh, float), np.asarray(g_spec, float), self.owner)

    # full-space view, so every domain objective is also an ObjectiveFn
    def value(self, point, batch: Any = None) -> float:
        return self.evaluate(ParamVector(self.layout, point), batch)[0]

    def gradient(self, point, batch: Any = None) -> np.ndarray:
        return self.evaluate(ParamVector(self.layout, point), batch)[1].embed_full()


class QuadraticObjective(DomainObjective):
    """``0.5 * (z - c)^T A (z - c)`` where ``z`` stacks the shared and owner blocks."""

    def __init__(self, layout: ParamLayout, owner: Owner, center, hessian=None):
        super().__init__(layout, owner)
        n = layout.shared_dim + layout.block_dim(owner)
        self.center = np.asarray(center, dtype=np.float64).reshape(n)
        self.hessian = np.eye(n) if hessian is None else np.asarray(hessian, dtype=np.float64).reshape(n, n)

    def loss_and_grads(self, shared, specific, batch=None):
        r = np.concatenate([shared, specific]) - self.center
        hr = self.hessian @ r
        # symmetrize so an asymmetric A still yields the true gradient
        g = 0.5 * (hr + self.hessian.T @ r)
        k = shared.size
        return 0.5 * float(r @ hr), g[:k], g[k:]


class CountingObjective(DomainObjective):
    """Forwards to another domain objective and counts gradient evaluations."""

    def __init__(self, inner: DomainObjective):
        super().__init__(inner.layout, inner.owner)
        self.inner = inner
        self.calls = 0

    def loss_and_grads(self, shared, specific, batch=None):
        self.calls += 1
        return self.inner.loss_and_grads(shared, specific, batch)
