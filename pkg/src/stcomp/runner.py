"""Drive one configured experiment to completion and collect its telemetry."""

from __future__ import annotations

import logging
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .algorithms import (
    StepSizes,
    check_observers,
    init_state,
    step_consensus_dc,
    step_consensus_oc,
    step_dpd_baseline,
    step_dpd_dc,
    step_dpd_fc,
    step_dpd_oc,
)
from .certify import estimate_delta
from .compressors import CompressorSpec, byte_cost, certified_step
from .config import RunConfig
from .errors import ConfigError, DivergenceError
from .graph import is_connected, laplacian, spectrum
from .objectives import objective_from_dict
from .telemetry import Outcome, RunRecord, TraceRecorder, fit_linear_rate

__all__ = ["run", "check_compatibility", "build_problem"]

log = logging.getLogger(__name__)

DIRECT = frozenset({"consensus_dc", "dpd_dc"})


def check_compatibility(cfg: RunConfig, graph=None) -> dict:
    """Enforce which compressors direct compression may be paired with.

    Direct compression needs a strong (globally Lipschitz, any small gain)
    compressor that also commutes with the disagreement projection.  Linear
    kinds do; for other deterministic kinds the commutation bound is only
    estimated and the pairing requires ``allow_unverified_delta``.  Observer-
    and filter-based schemes accept every kind.
    """
    notes = {}
    spec = cfg.compressor
    if cfg.algorithm not in DIRECT or spec.linear:
        return notes
    rule = ("direct compression requires a strong ST compressor satisfying the commutation bound; "
            "use an observer-based (consensus_oc, dpd_oc) or filter-based (dpd_fc) algorithm instead")
    if spec.stochastic:
        raise ConfigError(f"stochastic kind {spec.kind!r} cannot be used with {cfg.algorithm}: {rule}", "compressor.kind")
    delta = None
    if graph is not None:
        delta = estimate_delta(spec, spectrum(laplacian(graph)), cfg.d, samples=2000,
                               rng=np.random.default_rng(cfg.seed))
        notes["delta_hat"] = delta
    if not cfg.allow_unverified_delta:
        extra = f" (sampled delta_hat={delta:.3g})" if delta is not None else ""
        raise ConfigError(f"nonlinear kind {spec.kind!r} with {cfg.algorithm}{extra}: {rule}; "
                          "pass --allow-unverified-delta to run anyway", "compressor.kind")
    log.warning("running %s with nonlinear %s; commutation bound unverified (delta_hat=%s)",
                cfg.algorithm, spec.kind, delta)
    return notes


def build_problem(cfg: RunConfig, base_dir: Path | None = None):
    """Return ``(graph, objective or None, x0)`` for a config, deterministically."""
    graph = cfg.graph.build(base_dir)
    if not is_connected(graph):
        raise ConfigError("graph is not connected", "graph")
    rng = np.random.default_rng(cfg.seed)
    objective = None
    if cfg.objective is not None:
        block = dict(cfg.objective)
        if block.get("n", graph.n) != graph.n:
            raise ConfigError(f"n={block['n']} disagrees with graph size {graph.n}", "objective.n")
        block["n"] = graph.n
        objective = objective_from_dict(block, rng=None if "seed" in block else rng)
    d = cfg.d
    x0 = cfg.x0_scale * rng.standard_normal((graph.n, d))
    if cfg.x0_center == "optimum":
        s_star = None if objective is None else objective.optimum()
        if s_star is None:
            raise ConfigError("x0_center='optimum' needs an objective with a known optimum", "x0_center")
        x0 = x0 + s_star
    return graph, objective, x0


def _stepper(cfg: RunConfig, L, spec: CompressorSpec, objective, steps: StepSizes, rng):
    algo = cfg.algorithm
    if algo == "consensus_dc":
        return lambda s: step_consensus_dc(s, L, spec, steps.kappa0, rng)
    if algo == "consensus_oc":
        return lambda s: step_consensus_oc(s, L, spec, steps.alpha, steps.kappa0, rng, cfg.observer_ordering)
    if algo == "dpd_baseline":
        return lambda s: step_dpd_baseline(s, L, objective, steps)
    if algo == "dpd_dc":
        return lambda s: step_dpd_dc(s, L, spec, objective, steps, rng)
    if algo == "dpd_oc":
        return lambda s: step_dpd_oc(s, L, spec, objective, steps, rng, cfg.observer_ordering)
    if algo == "dpd_fc":
        return lambda s: step_dpd_fc(s, L, spec, objective, steps, rng)
    raise AssertionError(algo)


def run(cfg: RunConfig, base_dir: Path | None = None, on_round=None, verify_observers: bool = False) -> RunRecord:
    """Run the configured algorithm until ``target_accuracy`` or ``max_rounds``.

    The convergence metric is the suboptimality when the objective optimum
    is known and the consensus error otherwise.  On divergence all step
    sizes except ``beta`` and ``eta`` are halved and the run restarts from
    the same initial state, up to ``retry_halvings`` times; if every attempt
    diverges the record carries the last partial trace and a ``diverged``
    outcome.

    ``on_round(state)`` is called with every state, round 0 included.
    """
    graph, objective, x0 = build_problem(cfg, base_dir)
    notes = check_compatibility(cfg, graph)
    d = cfg.d
    spec = cfg.compressor
    if cfg.algorithm == "dpd_baseline":
        spec = CompressorSpec("identity")
    cost = byte_cost(spec, d)
    if cfg.algorithm != "dpd_baseline" and cfg.steps.kappa0 > certified_step(spec, d) + 1e-15:
        log.warning("kappa0=%g exceeds the certified stable step %g for %s", cfg.steps.kappa0,
                    certified_step(spec, d), spec.label)

    L = laplacian(graph)
    s_star = None if objective is None else objective.optimum()
    target = cfg.target_accuracy
    steps = cfg.steps
    retries = []
    for attempt in range(cfg.retry_halvings + 1):
        rng = np.random.default_rng(spec.seed) if spec.stochastic else None
        step = _stepper(cfg, L, spec, objective, steps, rng)
        recorder = TraceRecorder(s_star)
        state = init_state(cfg.algorithm, x0)
        metric = recorder.record(0, state.x, 0)
        if on_round is not None:
            on_round(state)
        outcome = None
        try:
            while True:
                if target is not None and metric <= target:
                    outcome = Outcome("converged", state.round)
                    break
                if state.round >= cfg.max_rounds:
                    outcome = Outcome("exhausted", state.round)
                    break
                state = step(state)
                if verify_observers and state.observers is not None:
                    check_observers(state, graph)
                metric = recorder.record(state.round, state.x, state.round * cost)
                if on_round is not None:
                    on_round(state)
        except DivergenceError as exc:
            retries.append({"attempt": attempt, "round": exc.round_index, "norms": exc.norms,
                            "steps": asdict(steps)})
            log.warning("attempt %d diverged at round %s; halving step sizes", attempt, exc.round_index)
            outcome = Outcome("diverged", exc.round_index)
            steps = steps.halved()
            continue
        break

    trace = recorder.trace()
    fit = fit_linear_rate(trace) if outcome.status != "diverged" else None
    if retries and outcome.status != "diverged":
        notes["effective_steps"] = asdict(steps)
    return RunRecord(label=cfg.name, config=cfg.to_dict(), trace=trace, outcome=outcome, bytes_per_round=cost,
                     target_accuracy=target, fitted_rate=fit, retries=retries, notes=notes)

