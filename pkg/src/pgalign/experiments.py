"""Single-seed runs of the two testbeds under ERM, alignment-only or PGA."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from pgalign.diagnostics import TrainTrace, similarity_profile, zdt1_convergence
from pgalign.optimizer import DomainObjectives, PGAConfig, erm_step, pga_step
from pgalign.params import ParamVector
from pgalign.testbeds.spurious import (
    CEObjective,
    SharedSpecificClassifier,
    SpuriousConfig,
    accuracy,
    avg_inference,
    gen_spurious,
    pseudo_label,
    target_objective,
    train_anchor,
)
from pgalign.testbeds.zdt import zdt1_layout, zdt1_objectives, zdt1_values

METHODS = ("erm", "align_only", "pga")


def method_config(cfg: PGAConfig, method: str) -> PGAConfig:
    """Alignment-only drops the norm penalty; ERM drops both perturbations."""
    if method == "pga":
        return cfg
    if method == "align_only":
        return replace(cfg, rho_gn=0.0)
    if method == "erm":
        return replace(cfg, rho_ga=0.0, rho_gn=0.0)
    raise ValueError(f"unknown method {method!r}")


def _step_fn(cfg: PGAConfig):
    # a zero-radius PGA step is plain ERM; use the cheaper form
    return erm_step if cfg.rho_ga == 0 and cfg.rho_gn == 0 else pga_step


@dataclass(frozen=True)
class ZDT1Settings:
    n_vars: int = 30


@dataclass
class SeedResult:
    seed: int
    trace: TrainTrace
    params: ParamVector
    metrics: dict


def run_zdt1_seed(cfg: PGAConfig, settings: ZDT1Settings, seed: int) -> SeedResult:
    rng = np.random.default_rng(seed)
    p = ParamVector(zdt1_layout(settings.n_vars), rng.uniform(0.0, 1.0, settings.n_vars))
    f1, f2 = zdt1_objectives(settings.n_vars, project=True)
    objectives = DomainObjectives([f1], f2)
    step = _step_fn(cfg)
    trace = TrainTrace(n_sources=1)
    for t in range(cfg.total_iters):
        p, report = step(p, objectives, cfg, t)
        p = ParamVector(p.layout, np.clip(p.values, 0.0, 1.0))
        trace.append(report)
    x = p.values
    v1, v2 = zdt1_values(x)
    prof = similarity_profile(trace)
    metrics = {
        "f1": v1,
        "f2": v2,
        "convergence": zdt1_convergence(x),
        "x1": float(x[0]),
        "sim_rise": float(prof.rise),
        "sim_fall": float(prof.fall),
        "sim_peak_iter": float(prof.peak_iter),
        "bound_cum": trace.bound_cumulative,
    }
    return SeedResult(seed, trace, p, metrics)


@dataclass(frozen=True)
class SpuriousSettings:
    p_src: float = 0.9
    p_tgt: float = 0.1
    C: float = 3.0
    noise_dim: int = 298
    n_samples: int = 2000
    batch_size: int = 128  # 0 means full batch
    anchor_iters: int = 20
    anchor_eta: float = 0.1
    init_scale: float = 0.01
    refresh_pseudo: bool = False


@dataclass
class SpuriousData:
    source: object
    validation: object
    target: object
    test: object


def make_spurious_data(settings: SpuriousSettings, rng: np.random.Generator) -> SpuriousData:
    def draw(p):
        cfg = SpuriousConfig(p=p, C=settings.C, noise_dim=settings.noise_dim, n_samples=settings.n_samples)
        return gen_spurious(cfg, rng)

    # target labels are kept only to score pseudo-labels, never for training
    return SpuriousData(draw(settings.p_src), draw(settings.p_src), draw(settings.p_tgt), draw(settings.p_tgt))


def run_spurious_seed(cfg: PGAConfig, settings: SpuriousSettings, seed: int) -> SeedResult:
    rng = np.random.default_rng(seed)
    data = make_spurious_data(settings, rng)
    model = SharedSpecificClassifier(settings.noise_dim + 2, n_classes=2, n_sources=1)
    p = model.init_params(rng, settings.init_scale)

    anchor = train_anchor(data.source, settings.anchor_iters, settings.anchor_eta)
    unlabeled = data.target.unlabeled()
    pseudo = pseudo_label(anchor, unlabeled, cfg.tau)
    pseudo_acc = float(np.mean(pseudo.label == data.target.labels))
    source = CEObjective(model, data.source.features, data.source.labels, 0)
    objectives = DomainObjectives([source], target_objective(model, unlabeled, pseudo))

    n = settings.n_samples
    steps_per_epoch = max(1, n // settings.batch_size) if settings.batch_size else 1
    step = _step_fn(cfg)
    trace = TrainTrace(n_sources=1)
    for t in range(cfg.total_iters):
        batches = None
        if settings.batch_size:
            batches = [rng.choice(n, settings.batch_size, replace=False) for _ in range(2)]
        p, report = step(p, objectives, cfg, t, batches)
        trace.append(report)
        if settings.refresh_pseudo and (t + 1) % steps_per_epoch == 0:
            pseudo = pseudo_label(lambda x, p=p: avg_inference(model, p, x), unlabeled, cfg.tau)
            objectives = DomainObjectives([source], target_objective(model, unlabeled, pseudo))

    prof = similarity_profile(trace)
    metrics = {
        "id_acc": accuracy(avg_inference(model, p, data.validation.features), data.validation.labels),
        "ood_acc": accuracy(avg_inference(model, p, data.test.features), data.test.labels),
        "anchor_ood_acc": anchor.accuracy(data.test),
        "pseudo_acc": pseudo_acc,
        "sim_rise": float(prof.rise),
        "sim_fall": float(prof.fall),
        "sim_peak": float(prof.smoothed[prof.peak_iter]),
        "sim_peak_iter": float(prof.peak_iter),
        "bound_cum": trace.bound_cumulative,
    }
    return SeedResult(seed, trace, p, metrics)
