"""Per-round metrics, rate fitting, byte accounting and summary tables."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .certify import log_linear_fit

__all__ = [
    "RoundSample",
    "Trace",
    "TraceRecorder",
    "Outcome",
    "RateFit",
    "RunRecord",
    "SummaryRow",
    "SummaryTable",
    "suboptimality",
    "consensus_error",
    "fit_linear_rate",
    "bytes_to_accuracy",
    "summarize",
    "fmt_float",
]

TRACE_COLUMNS = ("round", "suboptimality", "consensus_error", "cumulative_bytes")
SUMMARY_COLUMNS = ("label", "bytes_per_iter", "iters_to_eps", "total_bytes", "gamma_hat", "r2")


def fmt_float(x) -> str:
    if x is None:
        return ""
    return format(float(x), ".17g")


def suboptimality(x: np.ndarray, s_star: np.ndarray) -> float:
    """``sum_i ||x_i - s*||^2`` over the rows of ``x``."""
    x = np.asarray(x, dtype=float)
    s_star = np.asarray(s_star, dtype=float)
    if x.ndim != 2 or x.shape[1] != s_star.shape[0]:
        raise ValueError(f"shape mismatch: x {x.shape} vs s* {s_star.shape}")
    diff = x - s_star
    return float(np.sum(diff * diff))


def consensus_error(x: np.ndarray) -> float:
    diff = x - x.mean(axis=0)
    return float(np.sum(diff * diff))


class RoundSample(NamedTuple):
    round: int
    suboptimality: float | None
    consensus_error: float
    cumulative_bytes: int


@dataclass
class Trace:
    """Telemetry columns, one entry per recorded round (round 0 included).

    ``cumulative_bytes`` counts bytes sent by a single node.
    """

    rounds: np.ndarray
    suboptimality: np.ndarray | None
    consensus_error: np.ndarray
    cumulative_bytes: np.ndarray

    def __len__(self):
        return len(self.rounds)

    def __iter__(self):
        for k in range(len(self.rounds)):
            sub = None if self.suboptimality is None else float(self.suboptimality[k])
            yield RoundSample(int(self.rounds[k]), sub, float(self.consensus_error[k]),
                              int(self.cumulative_bytes[k]))

    @property
    def metric(self) -> np.ndarray:
        """Convergence metric: suboptimality when known, else consensus error."""
        return self.suboptimality if self.suboptimality is not None else self.consensus_error

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for s in self:
            w.writerow([s.round, fmt_float(s.suboptimality), fmt_float(s.consensus_error), s.cumulative_bytes])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Trace":
        rows = list(csv.DictReader(io.StringIO(text)))
        sub = [r["suboptimality"] for r in rows]
        return cls(
            rounds=np.array([int(r["round"]) for r in rows], dtype=np.int64),
            suboptimality=None if rows and sub[0] == "" else np.array([float(s) for s in sub]),
            consensus_error=np.array([float(r["consensus_error"]) for r in rows]),
            cumulative_bytes=np.array([int(r["cumulative_bytes"]) for r in rows], dtype=np.int64),
        )


class TraceRecorder:
    def __init__(self, s_star: np.ndarray | None):
        self.s_star = s_star
        self._rounds, self._sub, self._cons, self._bytes = [], [], [], []

    def record(self, t: int, x: np.ndarray, cumulative_bytes: int) -> float:
        """Append one sample; returns the convergence metric for this round."""
        cons = consensus_error(x)
        self._rounds.append(t)
        self._cons.append(cons)
        self._bytes.append(cumulative_bytes)
        if self.s_star is None:
            return cons
        sub = suboptimality(x, self.s_star)
        self._sub.append(sub)
        return sub

    def trace(self) -> Trace:
        return Trace(
            rounds=np.array(self._rounds, dtype=np.int64),
            suboptimality=None if self.s_star is None else np.array(self._sub),
            consensus_error=np.array(self._cons),
            cumulative_bytes=np.array(self._bytes, dtype=np.int64),
        )


@dataclass(frozen=True)
class Outcome:
    status: str  # converged | exhausted | diverged
    round: int

    def to_dict(self):
        return {"status": self.status, "round": self.round}


@dataclass(frozen=True)
class RateFit:
    gamma: float
    r2: float


@dataclass
class RunRecord:
    label: str
    config: dict
    trace: Trace
    outcome: Outcome
    bytes_per_round: int
    target_accuracy: float | None = None
    fitted_rate: RateFit | None = None
    retries: list = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        metric = self.trace.metric
        return {
            "label": self.label,
            "config": self.config,
            "outcome": self.outcome.to_dict(),
            "bytes_per_round": self.bytes_per_round,
            "rounds_recorded": len(self.trace),
            "final_metric": fmt_float(metric[-1]) if len(metric) else None,
            "bytes_to_accuracy": bytes_to_accuracy(self, self.target_accuracy)
            if self.target_accuracy is not None else None,
            "fitted_rate": None if self.fitted_rate is None
            else {"gamma_hat": fmt_float(self.fitted_rate.gamma), "r2": fmt_float(self.fitted_rate.r2)},
            "retries": self.retries,
            "notes": self.notes,
        }


def fit_linear_rate(trace, tail_fraction: float = 0.5, min_samples: int = 20) -> RateFit | None:
    """Fit ``log(metric)`` against round over the trailing ``tail_fraction``.

    Returns ``gamma_hat = 1 - exp(slope)`` with the regression ``R^2``, or
    ``None`` when fewer than ``min_samples`` positive values are available
    or the tail is flat.  If the metric hits exactly zero, only the
    positive prefix of the tail is used.
    """
    y = trace.metric if isinstance(trace, Trace) else np.asarray(trace, dtype=float)
    if not 0 < tail_fraction <= 1:
        raise ValueError("tail_fraction must be in (0, 1]")
    start = int(math.floor(len(y) * (1.0 - tail_fraction)))
    tail = np.asarray(y[start:], dtype=float)
    pos = tail > 0
    if not pos.all():
        tail = tail[: np.argmin(pos)]
    if tail.size < min_samples:
        return None
    slope, r2 = log_linear_fit(tail)
    if r2 is None:
        return None
    return RateFit(gamma=float(-np.expm1(slope)), r2=float(r2))


def bytes_to_accuracy(record, eps: float) -> int | None:
    """Per-node bytes sent by the first round whose suboptimality is ``<= eps``."""
    trace = record.trace if isinstance(record, RunRecord) else record
    if trace.suboptimality is None:
        raise ValueError("trace has no suboptimality column")
    hit = np.flatnonzero(trace.suboptimality <= eps)
    if hit.size == 0:
        return None
    return int(trace.cumulative_bytes[hit[0]])


def iterations_to_accuracy(trace: Trace, eps: float) -> int | None:
    hit = np.flatnonzero(trace.metric <= eps)
    return None if hit.size == 0 else int(trace.rounds[hit[0]])


@dataclass(frozen=True)
class SummaryRow:
    label: str
    bytes_per_iter: int
    iters_to_eps: int | None
    total_bytes: int | None
    gamma_hat: float | None
    r2: float | None


@dataclass
class SummaryTable:
    rows: list

    def __len__(self):
        return len(self.rows)

    def _cells(self, row):
        return [row.label, str(row.bytes_per_iter),
                "" if row.iters_to_eps is None else str(row.iters_to_eps),
                "" if row.total_bytes is None else str(row.total_bytes),
                fmt_float(row.gamma_hat), fmt_float(row.r2)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for row in self.rows:
            w.writerow(self._cells(row))
        return buf.getvalue()

    def to_text(self) -> str:
        table = [list(SUMMARY_COLUMNS)] + [
            [c if c else "-" for c in self._cells(r)[:4]]
            + [f"{r.gamma_hat:.4g}" if r.gamma_hat is not None else "-",
               f"{r.r2:.4f}" if r.r2 is not None else "-"]
            for r in self.rows
        ]
        widths = [max(len(r[k]) for r in table) for k in range(len(SUMMARY_COLUMNS))]
        lines = ["  ".join(c.ljust(w) if k == 0 else c.rjust(w) for k, (c, w) in enumerate(zip(r, widths)))
                 for r in table]
        return "\n".join(lines) + "\n"


def summarize(records, eps: float | None = None) -> SummaryTable:
    """One row per record; ``eps`` defaults to each record's target accuracy."""
    rows = []
    for rec in records:
        target = rec.target_accuracy if eps is None else eps
        iters = total = None
        if target is not None and rec.trace.suboptimality is not None:
            iters = iterations_to_accuracy(rec.trace, target)
            total = bytes_to_accuracy(rec, target)
        fit = rec.fitted_rate
        rows.append(SummaryRow(rec.label, rec.bytes_per_round, iters, total,
                               None if fit is None else fit.gamma, None if fit is None else fit.r2))
    return SummaryTable(rows)
