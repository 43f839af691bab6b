"""Empirical certification of compressor properties.

None of these are proofs.  They sample the defining inequalities and the
induced recursion ``x(t+1) = x(t) - kappa0 C(x(t), t)`` and report what
they saw, so a clean report is evidence, not a certificate.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict

import numpy as np

from .compressors import CompressorSpec, SCHEDULES, compress_rows
from .graph import Spectrum

__all__ = [
    "CertificationReport",
    "certify_induced_decay",
    "certify_contraction",
    "certify_contraction_expectation",
    "certify_pe",
    "estimate_delta",
    "log_linear_fit",
]

_DIVERGED = 1e12
# norms at or below this are treated as exact extinction (avoids subnormals)
_EXTINCT = 1e-280
_MIN_R2 = 0.9


@dataclass
class CertificationReport:
    """Outcome of one sampled certification.

    ``decay_rate`` is the worst per-step norm factor over fitted
    trajectories, present only when every fit reached ``R^2 >= 0.9``; it is
    0.0 when every trajectory hit exactly zero in finite time.
    """

    check: str
    kind: str
    samples: int
    violations: int
    decay_rate: float | None = None
    r2: float | None = None
    lipschitz_estimate: float = 0.0
    finite_time: int = 0
    params: dict | None = None

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def log_linear_fit(y: np.ndarray) -> tuple[float, float | None]:
    """Least-squares slope of ``log y`` against index; returns ``(slope, R^2)``.

    ``R^2`` is ``None`` for a perfectly flat series.
    """
    y = np.asarray(y, dtype=float)
    t = np.arange(y.size, dtype=float)
    ly = np.log(y)
    tc = t - t.mean()
    lc = ly - ly.mean()
    slope = float(tc @ lc / (tc @ tc))
    ss_tot = float(lc @ lc)
    if ss_tot <= 1e-300:
        return slope, None
    resid = lc - slope * tc
    return slope, max(0.0, 1.0 - float(resid @ resid) / ss_tot)


def _fit_tail(norms: np.ndarray):
    """Fit the last half of one norm trajectory.

    Returns ``(factor, r2)``, ``(0.0, None)`` for finite-time extinction, or
    ``None`` when too few positive samples remain to fit.
    """
    horizon = norms.size - 1
    tail = norms[horizon // 2:]
    alive = tail > _EXTINCT
    if not alive.all():
        if not alive.any():
            return 0.0, None
        tail = tail[: np.argmin(alive)]
    if tail.size < 3:
        pos = norms[norms > _EXTINCT]
        if pos.size < 3:
            return 0.0, None
        tail = pos
    slope, r2 = log_linear_fit(tail)
    return float(np.exp(slope)), r2


def _summarize_fits(fits):
    finite = sum(1 for f, r in fits if f == 0.0 and r is None)
    fitted = [(f, r) for f, r in fits if not (f == 0.0 and r is None)]
    if not fitted:
        return 0.0, None, finite
    r2s = [r for _, r in fitted]
    if any(r is None for r in r2s):
        # flat tail: no decay at all
        return None, None, finite
    worst_r2 = min(r2s)
    if worst_r2 < _MIN_R2:
        return None, worst_r2, finite
    return max(f for f, _ in fitted), worst_r2, finite


def certify_induced_decay(spec: CompressorSpec, kappa0: float, d: int, trials: int = 100, horizon: int = 500,
                          rng: np.random.Generator | None = None, seeds: int = 50) -> CertificationReport:
    """Simulate the induced recursion from ``trials`` random unit vectors.

    A trajectory is a violation when its final norm exceeds its initial
    norm or it leaves the ``1e12`` ball.  Stochastic kinds run in
    mean-square mode: each initial point is simulated under ``seeds``
    independent random streams and the root-mean-square norm is what gets
    checked and fitted.
    """
    if trials < 10 or horizon < 50:
        raise ValueError("need trials >= 10 and horizon >= 50")
    rng = np.random.default_rng(0) if rng is None else rng
    x0 = rng.standard_normal((trials, d))
    x0 /= np.linalg.norm(x0, axis=1, keepdims=True)

    reps = seeds if spec.stochastic else 1
    # rows: trial-major, replica-minor
    x = np.repeat(x0, reps, axis=0)
    stream = rng if spec.stochastic else None
    norms = np.empty((horizon + 1, trials * reps))
    norms[0] = np.linalg.norm(x, axis=1)
    lip = 0.0
    dead = np.zeros(trials * reps, dtype=bool)
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(horizon):
            live = ~dead
            c = np.zeros_like(x)
            c[live] = compress_rows(spec, x[live], t, stream)
            nx = norms[t]
            ok = live & (nx > 0)
            if ok.any():
                lip = max(lip, float(np.max(np.linalg.norm(c[ok], axis=1) / nx[ok])))
            x = x - kappa0 * c
            nrm = np.linalg.norm(x, axis=1)
            blown = ~np.isfinite(nrm) | (nrm > _DIVERGED)
            dead |= blown
            nrm[dead] = np.inf
            x[dead] = 0.0
            norms[t + 1] = nrm

    if reps > 1:
        sq = norms.reshape(horizon + 1, trials, reps) ** 2
        traj = np.sqrt(sq.mean(axis=2))
    else:
        traj = norms
    violations = int(np.sum(~np.isfinite(traj[-1]) | (traj[-1] > traj[0])))
    fits = [_fit_tail(traj[:, j]) for j in range(trials) if np.isfinite(traj[-1, j])]
    rate, r2, finite = _summarize_fits(fits) if fits else (None, None, 0)
    return CertificationReport(
        check="induced_decay_mean_square" if spec.stochastic else "induced_decay",
        kind=spec.kind, samples=trials, violations=violations, decay_rate=rate, r2=r2,
        lipschitz_estimate=lip, finite_time=finite,
        params={"kappa0": kappa0, "d": d, "horizon": horizon, **({"seeds": seeds} if spec.stochastic else {})},
    )


def _mixed_scale_samples(rng, samples, d):
    x = rng.standard_normal((samples, d))
    x *= 10.0 ** rng.uniform(-3, 3, size=(samples, 1))
    return x


def certify_contraction(spec: CompressorSpec, p: float, phi: float, samples: int, d: int,
                        rng: np.random.Generator | None = None, t: int = 0,
                        slack: float = 1e-12) -> CertificationReport:
    """Count samples violating ``||C(x)/p - x||^2 <= (1 - phi) ||x||^2``."""
    if spec.stochastic:
        raise ValueError("stochastic kinds: use certify_contraction_expectation")
    rng = np.random.default_rng(0) if rng is None else rng
    x = _mixed_scale_samples(rng, samples, d)
    c = compress_rows(spec, x, t)
    lhs = np.sum((c / p - x) ** 2, axis=1)
    nx2 = np.sum(x**2, axis=1)
    bad = lhs > (1.0 - phi) * nx2 + slack * nx2
    ratio = np.linalg.norm(c, axis=1) / np.sqrt(nx2)
    return CertificationReport(check="contraction", kind=spec.kind, samples=samples, violations=int(bad.sum()),
                               lipschitz_estimate=float(ratio.max()), params={"p": p, "phi": phi, "d": d})


def certify_contraction_expectation(spec: CompressorSpec, p: float, phi: float, samples: int, d: int,
                                    rng: np.random.Generator | None = None, inner: int = 1000,
                                    t: int = 0) -> CertificationReport:
    """Stochastic version: the inequality in expectation over ``inner`` draws.

    A sample counts as a violation only when the Monte-Carlo mean exceeds
    the bound by more than three standard errors.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    x = _mixed_scale_samples(rng, samples, d)
    violations = 0
    lip = 0.0
    for xi in x:
        block = np.repeat(xi[None, :], inner, axis=0)
        c = compress_rows(spec, block, t, rng)
        err = np.sum((c / p - xi) ** 2, axis=1)
        bound = (1.0 - phi) * float(xi @ xi)
        se = err.std(ddof=1) / np.sqrt(inner)
        if err.mean() > bound + 3 * se + 1e-12 * float(xi @ xi):
            violations += 1
        lip = max(lip, float(np.sqrt(np.mean(np.sum(c**2, axis=1)) / (xi @ xi))))
    return CertificationReport(check="contraction_expectation", kind=spec.kind, samples=samples,
                               violations=violations, lipschitz_estimate=lip,
                               params={"p": p, "phi": phi, "d": d, "inner": inner})


def certify_pe(schedule, window: int, d: int, t_max: int) -> tuple[float, float]:
    """Extreme eigenvalues of ``sum_{s=t}^{t+window-1} psi(s) psi(s)^T`` over ``t <= t_max``.

    ``schedule`` is a callable ``(t, d) -> psi`` or a registered name.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    if isinstance(schedule, str):
        schedule = SCHEDULES[schedule]
    psi = np.array([schedule(s, d) for s in range(t_max + window)])
    outer = psi[:, :, None] * psi[:, None, :]
    csum = np.concatenate([np.zeros((1, d, d)), np.cumsum(outer, axis=0)])
    lo, hi = np.inf, -np.inf
    for t in range(t_max + 1):
        w = csum[t + window] - csum[t]
        ev = np.linalg.eigvalsh(w)
        lo, hi = min(lo, ev[0]), max(hi, ev[-1])
    return float(lo), float(hi)


def estimate_delta(spec: CompressorSpec, spec_graph: Spectrum, d: int, samples: int,
                   rng: np.random.Generator | None = None, t_range: int = 1000) -> float:
    """Sampled lower bound on the commutation constant ``delta``.

    Maximizes ``||Cbar(S^T x, t) - S^T C(x, t)|| / ||S^T x||`` over random
    stacked vectors ``x`` (one row per node) and random rounds.
    """
    if spec.stochastic:
        raise ValueError("delta estimation needs a deterministic compressor")
    rng = np.random.default_rng(0) if rng is None else rng
    S = spec_graph.s_basis
    n = S.shape[0]
    best = 0.0
    for _ in range(samples):
        x = rng.standard_normal((n, d)) * 10.0 ** rng.uniform(-2, 2)
        t = int(rng.integers(0, t_range))
        y = S.T @ x
        ny = np.linalg.norm(y)
        if ny < 1e-9:
            continue
        gap = compress_rows(spec, y, t) - S.T @ compress_rows(spec, x, t)
        best = max(best, float(np.linalg.norm(gap) / ny))
    return best
