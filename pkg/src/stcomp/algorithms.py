"""Synchronous-round updates for compressed consensus and primal-dual methods.

Every ``step_*`` function is pure: it takes an :class:`AlgorithmState` at
round ``t`` and returns a new state at round ``t + 1``.  Row ``i`` of each
``n x d`` array belongs to node ``i``.

Observer-based variants keep one copy of ``xhat_j`` per holder: entry
``observers[i, j]`` is node ``i``'s local estimate of node ``j``'s state,
meaningful for ``j`` in ``N_i`` and ``j == i``.  The copies are advanced
independently by every holder from the same broadcast, so they only stay in
agreement because every holder starts from the same value and applies the
same increment.  :func:`check_observers` verifies that bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace, asdict

import numpy as np

from .compressors import CompressorSpec, compress_rows
from .errors import ConfigError, DivergenceError, ObserverConsistencyError
from .graph import Graph, laplacian
from .objectives import Objective

__all__ = [
    "ALGORITHMS",
    "StepSizes",
    "AlgorithmState",
    "init_state",
    "holders",
    "check_observers",
    "dual_sum",
    "step_consensus_dc",
    "step_consensus_oc",
    "step_dpd_dc",
    "step_dpd_oc",
    "step_dpd_fc",
    "step_dpd_baseline",
]

ALGORITHMS = ("consensus_dc", "consensus_oc", "dpd_baseline", "dpd_dc", "dpd_oc", "dpd_fc")
PRIMAL_DUAL = frozenset({"dpd_baseline", "dpd_dc", "dpd_oc", "dpd_fc"})
OBSERVER_BASED = frozenset({"consensus_oc", "dpd_oc"})

DIVERGENCE_NORM = 1e12


@dataclass(frozen=True)
class StepSizes:
    kappa: float = 0.05
    kappa0: float = 0.5
    alpha: float = 0.5
    beta: float = 0.3
    eta: float = 0.1

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value) \
                    or value <= 0:
                raise ConfigError(f"must be a finite number > 0, got {value!r}", f"steps.{name}")

    def halved(self) -> "StepSizes":
        return replace(self, kappa=self.kappa / 2, kappa0=self.kappa0 / 2, alpha=self.alpha / 2)


@dataclass(frozen=True, eq=False)
class AlgorithmState:
    x: np.ndarray
    v: np.ndarray | None = None
    observers: np.ndarray | None = None
    sigma: np.ndarray | None = None
    z: np.ndarray | None = None
    round: int = 0


def init_state(algorithm: str, x0: np.ndarray) -> AlgorithmState:
    """Zero duals, observers and filters around the initial iterates."""
    if algorithm not in ALGORITHMS:
        raise ConfigError(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}", "algorithm")
    x0 = np.array(x0, dtype=float)
    n, d = x0.shape
    zeros = np.zeros_like
    return AlgorithmState(
        x=x0,
        v=zeros(x0) if algorithm in PRIMAL_DUAL else None,
        observers=np.zeros((n, n, d)) if algorithm in OBSERVER_BASED else None,
        sigma=zeros(x0) if algorithm == "dpd_fc" else None,
        z=zeros(x0) if algorithm == "dpd_fc" else None,
    )


def holders(L: np.ndarray) -> np.ndarray:
    """``mask[i, j]`` is True when node ``i`` keeps a copy of node ``j``."""
    return (L != 0) | np.eye(L.shape[0], dtype=bool)


def check_observers(state: AlgorithmState, graph: Graph) -> None:
    """Raise if any two holders of ``xhat_j`` disagree in any bit."""
    obs = state.observers
    mask = holders(laplacian(graph))
    for j in range(obs.shape[1]):
        copies = obs[mask[:, j], j]
        ref = obs[j, j]
        if not np.all(copies == ref):
            bad = np.flatnonzero(mask[:, j])[~np.all(copies == ref, axis=1)]
            raise ObserverConsistencyError(f"round {state.round}: copies of xhat_{j} differ at holders {bad.tolist()}")


def dual_sum(state: AlgorithmState) -> np.ndarray:
    return state.v.sum(axis=0)


def _lap(graph) -> np.ndarray:
    return graph if isinstance(graph, np.ndarray) else laplacian(graph)


def _guard(x, t, steps, **others):
    norm = float(np.linalg.norm(x))
    if not math.isfinite(norm) or norm > DIVERGENCE_NORM:
        norms = {"x": norm, **{k: float(np.linalg.norm(v)) for k, v in others.items() if v is not None}}
        raise DivergenceError(f"iterates diverged at round {t} (||x||={norm:.3g}) with step sizes {steps}",
                              round_index=t, norms=norms)


def step_consensus_dc(state: AlgorithmState, graph, compressor: CompressorSpec, kappa0: float,
                      rng: np.random.Generator | None = None) -> AlgorithmState:
    """``x_i <- x_i - kappa0 sum_j L_ij C(x_j, t)``."""
    L = _lap(graph)
    t = state.round
    c = compress_rows(compressor, state.x, t, rng)
    x = state.x - kappa0 * (L @ c)
    _guard(x, t + 1, {"kappa0": kappa0})
    return replace(state, x=x, round=t + 1)


def _observer_round(state, L, compressor, kappa0, rng):
    """Broadcasts ``C(x_j - xhat_j^j, t)`` and returns the advanced observer array."""
    obs = state.observers
    own = obs[np.arange(obs.shape[0]), np.arange(obs.shape[0])]
    xc = compress_rows(compressor, state.x - own, state.round, rng)
    mask = holders(L)
    return obs + kappa0 * (mask[:, :, None] * xc[None, :, :])


def _coupling(L, obs):
    # node i combines its own copies: sum_j L_ij xhat^i_j
    return np.einsum("ij,ijd->id", L, obs)


def step_consensus_oc(state: AlgorithmState, graph, compressor: CompressorSpec, alpha: float, kappa0: float,
                      rng: np.random.Generator | None = None, ordering: str = "pre") -> AlgorithmState:
    L = _lap(graph)
    t = state.round
    new_obs = _observer_round(state, L, compressor, kappa0, rng)
    used = state.observers if ordering == "pre" else new_obs
    x = state.x - alpha * _coupling(L, used)
    _guard(x, t + 1, {"alpha": alpha, "kappa0": kappa0})
    return replace(state, x=x, observers=new_obs, round=t + 1)


def step_dpd_dc(state: AlgorithmState, graph, compressor: CompressorSpec, objective: Objective, steps: StepSizes,
                rng: np.random.Generator | None = None) -> AlgorithmState:
    L = _lap(graph)
    t = state.round
    lc = L @ compress_rows(compressor, state.x, t, rng)
    g = objective.gradients(state.x)
    x = state.x - steps.kappa0 * lc - steps.kappa * (steps.beta * state.v + steps.eta * g)
    v = state.v + steps.kappa0 * steps.beta * lc
    _guard(x, t + 1, steps, v=v)
    return replace(state, x=x, v=v, round=t + 1)


def step_dpd_oc(state: AlgorithmState, graph, compressor: CompressorSpec, objective: Objective, steps: StepSizes,
                rng: np.random.Generator | None = None, ordering: str = "pre") -> AlgorithmState:
    L = _lap(graph)
    t = state.round
    new_obs = _observer_round(state, L, compressor, steps.kappa0, rng)
    lx = _coupling(L, state.observers if ordering == "pre" else new_obs)
    g = objective.gradients(state.x)
    x = state.x - steps.kappa * (lx + steps.beta * state.v + steps.eta * g)
    v = state.v + steps.kappa * steps.beta * lx
    _guard(x, t + 1, steps, v=v)
    return replace(state, x=x, v=v, observers=new_obs, round=t + 1)


def step_dpd_fc(state: AlgorithmState, graph, compressor: CompressorSpec, objective: Objective, steps: StepSizes,
                rng: np.random.Generator | None = None) -> AlgorithmState:
    L = _lap(graph)
    t = state.round
    q = compress_rows(compressor, state.x - state.sigma, t, rng)
    lq = L @ q
    sigma = state.sigma + steps.kappa0 * q
    z = state.z + steps.kappa0 * (q - lq)
    w = state.sigma - state.z + lq
    g = objective.gradients(state.x)
    x = state.x - steps.kappa * (w + steps.beta * state.v + steps.eta * g)
    v = state.v + steps.kappa * steps.beta * w
    _guard(x, t + 1, steps, v=v)
    return replace(state, x=x, v=v, sigma=sigma, z=z, round=t + 1)


def step_dpd_baseline(state: AlgorithmState, graph, objective: Objective, steps: StepSizes) -> AlgorithmState:
    L = _lap(graph)
    t = state.round
    lx = L @ state.x
    g = objective.gradients(state.x)
    x = state.x - steps.kappa * (lx + steps.beta * state.v + steps.eta * g)
    v = state.v + steps.kappa * steps.beta * lx
    _guard(x, t + 1, steps, v=v)
    return replace(state, x=x, v=v, round=t + 1)
