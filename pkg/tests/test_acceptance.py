"""Acceptance criteria A1-A9.

Each check returns ``(passed, detail)`` and prints one ``PASS``/``FAIL`` line.
Run directly with ``python3 tests/test_acceptance.py`` or through pytest.
"""

from __future__ import annotations

import functools
import sys
import time

import numpy as np
import pytest

from pgalign.cli import EXPERIMENT_DEFAULTS
from pgalign.diagnostics import bound_increment, bound_increment_full, similarity_profile
from pgalign.experiments import SpuriousSettings, ZDT1Settings, method_config, run_spurious_seed, run_zdt1_seed
from pgalign.gradcheck import shipped_objectives
from pgalign.objective import CountingObjective, check_gradient
from pgalign.optimizer import (
    DomainObjectives,
    PGAConfig,
    StepReport,
    align_vector,
    base_gradients,
    cos_sim,
    erm_step,
    pga_step,
)
from pgalign.params import GradSlices, ParamLayout, ParamVector, block_perturb
from pgalign.testbeds.spurious import CEObjective, SharedSpecificClassifier

SEEDS = range(10)


def _report(name, ok, detail):
    line = f"{name} {'PASS' if ok else 'FAIL'}: {detail}"
    print(line, flush=True)
    return ok, detail


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


@functools.lru_cache(maxsize=None)
def zdt1_runs():
    cfg = PGAConfig(**EXPERIMENT_DEFAULTS["zdt1"])
    return _timed(lambda: [run_zdt1_seed(cfg, ZDT1Settings(), s) for s in SEEDS])


@functools.lru_cache(maxsize=None)
def spurious_runs(method, rho_ga=0.5):
    cfg = method_config(PGAConfig(**EXPERIMENT_DEFAULTS["spurious"], rho_ga=rho_ga), method)
    return _timed(lambda: [run_spurious_seed(cfg, SpuriousSettings(), s) for s in SEEDS])


def _ce_problem(rng, n_sources=1, n=60, n_features=8, n_classes=2):
    model = SharedSpecificClassifier(n_features, n_classes, n_sources)
    sources = [
        CEObjective(model, rng.standard_normal((n, n_features)), rng.integers(0, n_classes, n), i)
        for i in range(n_sources)
    ]
    target = CEObjective(model, rng.standard_normal((n, n_features)), rng.integers(0, n_classes, n), "target")
    return DomainObjectives(sources, target)


# ---------------------------------------------------------------------------------

def check_a1():
    runs, secs = zdt1_runs()
    good = sum(r.metrics["convergence"] < 0.1 and 0.0 <= r.metrics["x1"] <= 1.0 for r in runs)
    worst = max(r.metrics["convergence"] for r in runs)
    ok = good >= 9 and secs < 10.0
    return _report("A1", ok, f"ZDT-1 converged on {good}/10 seeds (worst g-1={worst:.3g}), {secs:.2f}s (limit 10s)")


def check_a2():
    results = {m: spurious_runs(m) for m in ("erm", "align_only", "pga")}
    secs = sum(t for _, t in results.values())
    acc = {m: float(np.mean([r.metrics["ood_acc"] for r in runs])) for m, (runs, _) in results.items()}
    gap = acc["pga"] - acc["erm"]
    ok = acc["pga"] >= acc["align_only"] >= acc["erm"] and gap >= 0.05 and secs < 60.0
    return _report(
        "A2",
        ok,
        f"OOD acc erm={acc['erm']:.4f} align_only={acc['align_only']:.4f} pga={acc['pga']:.4f} "
        f"gap={100 * gap:.1f}pp (need >=5), {secs:.1f}s (limit 60s)",
    )


def check_a3():
    parts, ok = [], True
    peaks = {}
    for rho in (0.1, 0.5, 0.0):
        runs, _ = spurious_runs("pga", rho)
        profiles = [similarity_profile(r.trace) for r in runs]
        peaks[rho] = float(np.mean([p.smoothed[p.peak_iter] for p in profiles]))
        if rho > 0:
            shaped = sum(p.rise and p.fall for p in profiles)
            ok &= shaped == len(profiles)
            parts.append(f"rho_ga={rho}: rise&fall {shaped}/{len(profiles)}")
    ok &= peaks[0.0] < peaks[0.5]
    parts.append(f"mean smoothed peak rho_ga=0: {peaks[0.0]:.3f} < rho_ga=0.5: {peaks[0.5]:.3f}")
    return _report("A3", ok, "; ".join(parts))


def _alignment_residual(objs, p, rho):
    base = base_gradients(p, objs)
    g_s, g_t = base.sources[0].g_shared, base.target.g_shared
    shifted = block_perturb(p, "shared", -rho * align_vector(g_s, g_t, 1.0))
    quotient = (base.target_loss - objs.target.evaluate(shifted)[0]) / rho
    return abs(quotient - cos_sim(g_s, g_t))


def check_a4():
    rng = np.random.default_rng(2024)
    objs = _ce_problem(rng)
    worst_res, worst_ratio = 0.0, 0.0
    for _ in range(20):
        p = ParamVector(objs.target.layout, rng.standard_normal(objs.target.dim))
        r1 = _alignment_residual(objs, p, 1e-4)
        r2 = _alignment_residual(objs, p, 5e-5)
        worst_res = max(worst_res, r1)
        worst_ratio = max(worst_ratio, r2 / r1)
    ok = worst_res <= 1e-3 and worst_ratio <= 0.6
    return _report("A4", ok, f"max |quotient-cos| at 1e-4 = {worst_res:.2e} (<=1e-3); max residual ratio = {worst_ratio:.3f} (<=0.6)")


def check_a5():
    rng = np.random.default_rng(5)
    objs = _ce_problem(rng, n_sources=2, n=200)
    cfg = PGAConfig(rho_ga=0.0, rho_gn=0.0, eta0=0.1, total_iters=500)
    p = q = ParamVector(objs.target.layout, rng.standard_normal(objs.target.dim) * 0.01)
    first_diff = None
    for t in range(cfg.total_iters):
        batches = [rng.choice(200, 32, replace=False) for _ in range(3)]
        p, _ = pga_step(p, objs, cfg, t, batches)
        q, _ = erm_step(q, objs, cfg, t, batches)
        if first_diff is None and not np.array_equal(p.values, q.values):
            first_diff = t
    ok = first_diff is None
    return _report("A5", ok, "500 steps bit-identical" if ok else f"trajectories diverge at step {first_diff}")


def check_a6():
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(1000):
        layout = ParamLayout(int(rng.integers(0, 20)), (int(rng.integers(0, 20)),), int(rng.integers(0, 20)))
        u = GradSlices(layout, rng.standard_normal(layout.shared_dim), rng.standard_normal(layout.source_dims[0]), 0)
        v = GradSlices(layout, rng.standard_normal(layout.shared_dim), rng.standard_normal(layout.target_dim), "target")
        fu, fv = u.embed_full(), v.embed_full()
        d = fu - fv
        worst = max(worst, abs(d @ d - (fu @ fu + fv @ fv - 2 * (u.g_shared @ v.g_shared))))
    ok = worst <= 1e-10
    return _report("A6", ok, f"max identity error over 1000 draws = {worst:.2e} (<=1e-10)")


def check_a7():
    def sweep():
        rng = np.random.default_rng(0)
        failures = {}
        for name, obj, sample in shipped_objectives(rng):
            failures[name] = sum(not check_gradient(obj, sample(), rel_tol=1e-5).ok for _ in range(100))
        return failures

    failures, secs = _timed(sweep)
    ok = not any(failures.values()) and secs < 5.0
    return _report("A7", ok, f"{len(failures)} objectives x 100 points, failures={sum(failures.values())}, {secs:.2f}s (limit 5s)")


def check_a8():
    report = StepReport(
        source_losses=[0.0], target_loss=0.0, cos_sims=[0.0], shared_dots=[0.0],
        gnorm_sh_src=[1.0], gnorm_spec_src=[2.0], gnorm_sh_tgt=1.0, gnorm_tgt=3.0, eta=1.0,
    )
    hand = bound_increment(report, 1.0).increment
    full = bound_increment_full([np.array([1.0, 0.0, 2.0, 0.0])], np.array([0.0, 1.0, 0.0, 3.0]), 1.0)
    traces = [r.trace for r in zdt1_runs()[0]]
    for method in ("erm", "align_only", "pga"):
        traces += [r.trace for r in spurious_runs(method)[0]]
    monotone = sum(
        all(a.bound_cum <= b.bound_cum for a, b in zip(t.records, t.records[1:])) for t in traces
    )
    ok = hand == 30.0 and full == 30.0 and monotone == len(traces)
    return _report("A8", ok, f"hand example increment={hand:g} (full form {full:g}); monotone on {monotone}/{len(traces)} runs")


def check_a9():
    counts = {}
    for n in (1, 2, 3):
        objs = _ce_problem(np.random.default_rng(n), n_sources=n)
        counted = DomainObjectives([CountingObjective(o) for o in objs.sources], CountingObjective(objs.target))
        p = ParamVector(objs.target.layout, np.random.default_rng(0).standard_normal(objs.target.dim))
        pga_step(p, counted, PGAConfig(), 0)
        counts[n] = sum(o.calls for o in counted.sources) + counted.target.calls
    ok = all(c == 2 * (n + 1) for n, c in counts.items())
    return _report("A9", ok, ", ".join(f"N={n}: {c} evals (expect {2 * (n + 1)})" for n, c in counts.items()))


CHECKS = {f"A{k}": globals()[f"check_a{k}"] for k in range(1, 10)}


@pytest.mark.parametrize("name", list(CHECKS))
def test_acceptance(name, capsys):
    with capsys.disabled():
        print()
        ok, detail = CHECKS[name]()
    assert ok, detail


if __name__ == "__main__":
    results = [check() for check in CHECKS.values()]
    sys.exit(0 if all(ok for ok, _ in results) else 1)
