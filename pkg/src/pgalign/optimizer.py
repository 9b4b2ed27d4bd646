"""Gradient-aligned, norm-penalized updates over a partitioned parameter vector.

Every objective's gradient is re-evaluated at a shifted point:

* the shared block moves against the other objectives' shared gradients,
  scaled by ``1 / (||g_other|| * ||g_self||)``; to first order this lowers the
  loss by ``rho_ga`` times the cosine similarity, so descending the shifted
  loss raises the similarity without forming a Hessian;
* both the shared and the owner's block move along their own unit gradient,
  which to first order adds ``rho_gn`` times the gradient norms to the loss.

With both radii at zero the step reduces exactly to plain scalarized SGD
(:func:`erm_step`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, NamedTuple, Optional, Sequence

import numpy as np

from pgalign.diagnostics import bound_increment
from pgalign.objective import DomainObjective
from pgalign.params import GradSlices, ParamVector

SCHEDULES = ("constant", "cosine")
SHIFT_CAP_FACTOR = 10.0


class StepAborted(RuntimeError):
    """A step produced a non-finite loss or gradient."""


@dataclass(frozen=True)
class PGAConfig:
    rho_ga: float = 0.5
    rho_gn: float = 0.01
    lam: float = 1.0
    eta0: float = 0.01
    total_iters: int = 2000
    tau: float = 0.4
    eps_guard: float = 1e-12
    schedule: str = "cosine"

    def __post_init__(self):
        for name in ("rho_ga", "rho_gn", "lam"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ValueError(f"{name} must be a nonnegative real, got {value!r}")
        if not (math.isfinite(self.eta0) and self.eta0 > 0):
            raise ValueError(f"eta0 must be positive, got {self.eta0!r}")
        if int(self.total_iters) != self.total_iters or self.total_iters < 1:
            raise ValueError(f"total_iters must be a positive integer, got {self.total_iters!r}")
        if not 0 <= self.tau <= 1:
            raise ValueError(f"tau must lie in [0, 1], got {self.tau!r}")
        if not 0 < self.eps_guard <= 1e-8:
            raise ValueError(f"eps_guard must lie in (0, 1e-8], got {self.eps_guard!r}")
        if self.schedule not in SCHEDULES:
            raise ValueError(f"schedule must be one of {SCHEDULES}, got {self.schedule!r}")


class DomainObjectives(NamedTuple):
    sources: Sequence[DomainObjective]
    target: DomainObjective

    @property
    def n_sources(self) -> int:
        return len(self.sources)


@dataclass
class DomainGrads:
    """Losses and gradients of every domain objective at one point."""

    source_losses: list[float]
    sources: list[GradSlices]
    target_loss: float
    target: GradSlices


@dataclass
class StepReport:
    source_losses: list[float]
    target_loss: float
    cos_sims: list[float]
    shared_dots: list[float]
    gnorm_sh_src: list[float]
    gnorm_spec_src: list[float]
    gnorm_sh_tgt: float
    gnorm_tgt: float
    eta: float
    bound_increment: float = field(default=0.0)


def lr_at(cfg: PGAConfig, t: int) -> float:
    if not 0 <= t < cfg.total_iters:
        raise ValueError(f"iteration {t} outside [0, {cfg.total_iters})")
    if cfg.schedule == "constant":
        return cfg.eta0
    return cfg.eta0 * 0.5 * (1.0 + math.cos(math.pi * t / cfg.total_iters))


def cos_sim(u, v, eps_guard: float = 1e-12) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"shape mismatch {u.shape} vs {v.shape}")
    denom = max(float(np.linalg.norm(u) * np.linalg.norm(v)), eps_guard)
    return min(1.0, max(-1.0, float(u @ v) / denom))


def align_vector(g_num, g_self, rho_ga: float, eps_guard: float = 1e-12) -> np.ndarray:
    """``rho_ga * g_num / (||g_num|| * ||g_self||)`` with a guarded denominator."""
    g_num = np.asarray(g_num, dtype=np.float64)
    g_self = np.asarray(g_self, dtype=np.float64)
    if g_num.shape != g_self.shape:
        raise ValueError(f"shape mismatch {g_num.shape} vs {g_self.shape}")
    denom = max(float(np.linalg.norm(g_num) * np.linalg.norm(g_self)), eps_guard)
    return rho_ga * g_num / denom


def norm_ascent(g, rho_gn: float, eps_guard: float = 1e-12) -> np.ndarray:
    g = np.asarray(g, dtype=np.float64)
    return rho_gn * g / max(float(np.linalg.norm(g)), eps_guard)


def _batch(batches: Optional[Sequence[Any]], k: int) -> Any:
    return None if batches is None else batches[k]


def _evaluate(obj: DomainObjective, p: ParamVector, batch: Any, where: str) -> tuple[float, GradSlices]:
    loss, g = obj.evaluate(p, batch)
    if not math.isfinite(loss) or not g.is_finite():
        raise StepAborted(f"non-finite loss or gradient for objective {obj.owner!r} at {where} point")
    return loss, g


def base_gradients(p: ParamVector, objectives: DomainObjectives, batches=None) -> DomainGrads:
    """Losses and gradient slices of all objectives at the unperturbed ``p``."""
    if p.layout != objectives.target.layout or any(o.layout != p.layout for o in objectives.sources):
        raise ValueError("objective layouts do not match the parameter layout")
    n = objectives.n_sources
    src = [_evaluate(obj, p, _batch(batches, i), "base") for i, obj in enumerate(objectives.sources)]
    tgt_loss, tgt = _evaluate(objectives.target, p, _batch(batches, n), "base")
    return DomainGrads([s[0] for s in src], [s[1] for s in src], tgt_loss, tgt)


def _capped(shift_sh: np.ndarray, shift_spec: np.ndarray, p: ParamVector, cfg: PGAConfig):
    cap = SHIFT_CAP_FACTOR * max(cfg.rho_ga, cfg.rho_gn) * (1.0 + p.norm())
    norm = math.sqrt(float(shift_sh @ shift_sh + shift_spec @ shift_spec))
    if norm > cap:
        scale = cap / norm
        return shift_sh * scale, shift_spec * scale
    return shift_sh, shift_spec


def _shifted_gradient(obj, p, own: GradSlices, shift_sh, cfg, batch) -> GradSlices:
    shift_spec = norm_ascent(own.g_specific, cfg.rho_gn, cfg.eps_guard)
    shift_sh, shift_spec = _capped(shift_sh, shift_spec, p, cfg)
    values = p.values.copy()
    values[: p.layout.shared_dim] += shift_sh
    start, stop = p.layout.span(obj.owner)
    values[start:stop] += shift_spec
    if not np.all(np.isfinite(values)):
        raise StepAborted(f"shifted point for objective {obj.owner!r} is not finite; rho too large?")
    loss, g = obj.evaluate(ParamVector(p.layout, values), batch)
    if not math.isfinite(loss) or not g.is_finite():
        raise StepAborted(f"non-finite loss at shifted point for objective {obj.owner!r}; rho too large?")
    return g


def pga_target_gradient(
    p: ParamVector, objectives: DomainObjectives, base: DomainGrads, cfg: PGAConfig, batches=None
) -> GradSlices:
    """Target gradient at the point aligned with every source and pushed uphill."""
    g_sh_t = base.target.g_shared
    shift = norm_ascent(g_sh_t, cfg.rho_gn, cfg.eps_guard)
    for g_src in base.sources:
        shift = shift - align_vector(g_src.g_shared, g_sh_t, cfg.rho_ga, cfg.eps_guard)
    return _shifted_gradient(
        objectives.target, p, base.target, shift, cfg, _batch(batches, objectives.n_sources)
    )


def pga_source_gradient(
    p: ParamVector, objectives: DomainObjectives, base: DomainGrads, i: int, cfg: PGAConfig, batches=None
) -> GradSlices:
    """Source ``i`` gradient at the point aligned with the target and pushed uphill."""
    g_sh_i = base.sources[i].g_shared
    shift = norm_ascent(g_sh_i, cfg.rho_gn, cfg.eps_guard) - align_vector(
        base.target.g_shared, g_sh_i, cfg.rho_ga, cfg.eps_guard
    )
    return _shifted_gradient(objectives.sources[i], p, base.sources[i], shift, cfg, _batch(batches, i))


def make_report(base: DomainGrads, eta: float, eps_guard: float = 1e-12) -> StepReport:
    g_t = base.target
    dots = [float(g.g_shared @ g_t.g_shared) for g in base.sources]
    report = StepReport(
        source_losses=list(base.source_losses),
        target_loss=base.target_loss,
        cos_sims=[cos_sim(g.g_shared, g_t.g_shared, eps_guard) for g in base.sources],
        shared_dots=dots,
        gnorm_sh_src=[float(np.linalg.norm(g.g_shared)) for g in base.sources],
        gnorm_spec_src=[float(np.linalg.norm(g.g_specific)) for g in base.sources],
        gnorm_sh_tgt=float(np.linalg.norm(g_t.g_shared)),
        gnorm_tgt=float(np.linalg.norm(g_t.g_specific)),
        eta=eta,
    )
    report.bound_increment = bound_increment(report, eta).increment
    if not math.isfinite(report.bound_increment):
        raise StepAborted(f"bound increment overflowed at eta={eta!r}; learning rate too large?")
    return report


def apply_update(
    p: ParamVector, sources: Sequence[GradSlices], target: GradSlices, lam: float, eta: float
) -> ParamVector:
    """Shared block takes ``g_sh,T + lam * sum_i g_sh,i``; each specific block its own gradient."""
    g_sh = target.g_shared.copy()
    if sources:
        g_sh += lam * np.sum([g.g_shared for g in sources], axis=0)
    step = np.zeros(p.layout.total_dim)
    step[: p.layout.shared_dim] = g_sh
    for g in [*sources, target]:
        start, stop = p.layout.span(g.owner)
        step[start:stop] = g.g_specific
    return ParamVector(p.layout, p.values - eta * step)


def erm_step(p: ParamVector, objectives: DomainObjectives, cfg: PGAConfig, t: int, batches=None):
    eta = lr_at(cfg, t)
    base = base_gradients(p, objectives, batches)
    return apply_update(p, base.sources, base.target, cfg.lam, eta), make_report(base, eta, cfg.eps_guard)


def pga_step(p: ParamVector, objectives: DomainObjectives, cfg: PGAConfig, t: int, batches=None):
    """One full multi-source step: 2 * (N + 1) gradient evaluations."""
    eta = lr_at(cfg, t)
    base = base_gradients(p, objectives, batches)
    tgt = pga_target_gradient(p, objectives, base, cfg, batches)
    src = [pga_source_gradient(p, objectives, base, i, cfg, batches) for i in range(objectives.n_sources)]
    return apply_update(p, src, tgt, cfg.lam, eta), make_report(base, eta, cfg.eps_guard)
