"""Training diagnostics: gradient similarity, the bound proxy, ZDT-1 convergence."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Sequence, Union

import numpy as np

if TYPE_CHECKING:
    from pgalign.optimizer import StepReport

BOUND_NOTE = "# bound_inc and bound_cum are a bound proxy: eta_t^2 * gradient terms only, constants omitted"
MIN_PROFILE_LENGTH = 5


@dataclass(frozen=True)
class BoundTerm:
    increment: float


def bound_increment(report: "StepReport", eta: float) -> BoundTerm:
    """``eta^2 * sum_i (||g_i||^2 + ||g_T||^2 + ||g_i - g_T||^2)`` over full embedded gradients.

    Specific blocks of different domains are disjoint, so the mismatch term
    only needs the shared dot product: each summand equals
    ``2 ||g_i||^2 + 2 ||g_T||^2 - 2 <g_sh,i, g_sh,T>``.
    """
    tgt_sq = report.gnorm_sh_tgt**2 + report.gnorm_tgt**2
    total = 0.0
    for sh, spec, dot in zip(report.gnorm_sh_src, report.gnorm_spec_src, report.shared_dots):
        src_sq = sh**2 + spec**2
        total += 2.0 * src_sq + 2.0 * tgt_sq - 2.0 * dot
    # rounding can leave a tiny negative when both gradients coincide
    return BoundTerm(max(eta * eta * total, 0.0))


def bound_increment_full(g_src: Sequence[np.ndarray], g_tgt: np.ndarray, eta: float) -> float:
    """Reference form on materialized full-space gradients."""
    total = 0.0
    for g in g_src:
        d = g - g_tgt
        total += g @ g + g_tgt @ g_tgt + d @ d
    return float(eta * eta * total)


@dataclass
class TraceRecord:
    iter: int
    eta: float
    source_losses: list[float]
    target_loss: float
    cos_sims: list[float]
    gnorm_sh_src: list[float]
    gnorm_spec_src: list[float]
    gnorm_sh_tgt: float
    gnorm_tgt: float
    bound_inc: float
    bound_cum: float


@dataclass
class TrainTrace:
    """Append-only per-iteration log; the bound proxy is summed with Neumaier compensation."""

    n_sources: int
    records: list[TraceRecord] = field(default_factory=list)
    _sum: float = 0.0
    _comp: float = 0.0

    def __len__(self) -> int:
        return len(self.records)

    def append(self, report: "StepReport") -> TraceRecord:
        if len(report.cos_sims) != self.n_sources:
            raise ValueError(f"report has {len(report.cos_sims)} sources, trace expects {self.n_sources}")
        inc = report.bound_increment
        if not (inc >= 0 and np.isfinite(inc)):
            raise ValueError(f"bound increment must be finite and nonnegative, got {inc}")
        t = self._sum + inc
        if abs(self._sum) >= abs(inc):
            self._comp += (self._sum - t) + inc
        else:
            self._comp += (inc - t) + self._sum
        self._sum = t
        record = TraceRecord(
            iter=len(self.records),
            eta=report.eta,
            source_losses=list(report.source_losses),
            target_loss=report.target_loss,
            cos_sims=list(report.cos_sims),
            gnorm_sh_src=list(report.gnorm_sh_src),
            gnorm_spec_src=list(report.gnorm_spec_src),
            gnorm_sh_tgt=report.gnorm_sh_tgt,
            gnorm_tgt=report.gnorm_tgt,
            bound_inc=inc,
            bound_cum=self._sum + self._comp,
        )
        self.records.append(record)
        return record

    @property
    def bound_cumulative(self) -> float:
        return self._sum + self._comp

    def cos_series(self) -> np.ndarray:
        """Per-iteration cosine similarity, averaged over sources."""
        return np.array([np.mean(r.cos_sims) for r in self.records])

    def columns(self) -> list[str]:
        n = range(self.n_sources)
        return [
            "iter",
            "eta",
            *(f"loss_src_{i}" for i in n),
            "loss_tgt",
            *(f"cos_{i}" for i in n),
            *(f"gnorm_sh_src_{i}" for i in n),
            *(f"gnorm_spec_src_{i}" for i in n),
            "gnorm_sh_tgt",
            "gnorm_tgt",
            "bound_inc",
            "bound_cum",
        ]

    def rows(self):
        for r in self.records:
            floats = [
                r.eta,
                *r.source_losses,
                r.target_loss,
                *r.cos_sims,
                *r.gnorm_sh_src,
                *r.gnorm_spec_src,
                r.gnorm_sh_tgt,
                r.gnorm_tgt,
                r.bound_inc,
                r.bound_cum,
            ]
            yield [str(r.iter), *(fmt_float(v) for v in floats)]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(BOUND_NOTE + "\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(self.columns())
            writer.writerows(self.rows())


def fmt_float(v: float) -> str:
    return format(float(v) + 0.0, ".17g")  # + 0.0 folds -0.0 into 0.0


def read_trace_csv(path) -> tuple[list[str], np.ndarray]:
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    header = lines[0].split(",")
    data = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]])
    return header, data.reshape(-1, len(header))


def zdt1_convergence(x) -> float:
    """Distance of the ZDT-1 ``g`` function from its optimum: ``g(x) - 1``."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.size < 2:
        raise ValueError("ZDT-1 needs at least two variables")
    if not np.all((x >= 0) & (x <= 1)):
        raise ValueError("x must lie in the unit box")
    return float(9.0 / (x.size - 1) * np.sum(x[1:]))


@dataclass(frozen=True)
class SimilarityProfile:
    rise: bool
    fall: bool
    peak_iter: int
    smoothed: np.ndarray = field(repr=False)


def smooth(series, window: int) -> np.ndarray:
    """Centered moving average; the window shrinks at the ends."""
    series = np.asarray(series, dtype=np.float64)
    half = window // 2
    out = np.empty_like(series)
    for k in range(series.size):
        out[k] = series[max(0, k - half) : k + half + 1].mean()
    return out


def similarity_profile(trace: Union[TrainTrace, Sequence[float]], rtol: float = 1e-12) -> SimilarityProfile:
    series = trace.cos_series() if isinstance(trace, TrainTrace) else np.asarray(trace, dtype=np.float64)
    n = series.size
    if n < MIN_PROFILE_LENGTH:
        raise ValueError(f"trace too short for a similarity profile ({n} < {MIN_PROFILE_LENGTH})")
    window = max(3, int(round(0.05 * n)))
    s = smooth(series, window)
    peak = int(np.argmax(s))
    tol = rtol * max(1.0, float(np.max(np.abs(s))))
    return SimilarityProfile(
        rise=bool(s[peak] > s[0] + tol),
        fall=bool(s[-1] < s[peak] - tol),
        peak_iter=peak,
        smoothed=s,
    )
