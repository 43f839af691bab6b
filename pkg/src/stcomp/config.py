"""Experiment configuration: parsing, validation and normalization.

Configs are plain JSON objects.  Unknown keys are rejected and every error
names the offending field path, e.g. ``steps.alpha``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path

from .algorithms import ALGORITHMS, StepSizes
from .compressors import CompressorSpec
from .errors import ConfigError
from .graph import Graph, build_complete, build_ring, load_edge_list, random_connected

import numpy as np

__all__ = ["GraphConfig", "RunConfig", "PRESETS", "load_config", "parse_config"]

PRESETS = ("none", "table1", "convex_rosenbrock", "compressor_verify")

_GRAPH_KEYS = {
    "ring": {"kind", "n", "weight"},
    "complete": {"kind", "n", "weight"},
    "random": {"kind", "n", "p", "seed"},
    "edge_list": {"kind", "path"},
}


def _require(cond, message, path):
    if not cond:
        raise ConfigError(message, path)


def _int(data, key, path, minimum=None, default=None):
    value = data.get(key, default)
    _require(isinstance(value, int) and not isinstance(value, bool), f"expected an integer, got {value!r}",
             f"{path}.{key}" if path else key)
    if minimum is not None:
        _require(value >= minimum, f"must be >= {minimum}, got {value}", f"{path}.{key}" if path else key)
    return value


def _float(data, key, path, default=None):
    value = data.get(key, default)
    _require(isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value),
             f"expected a finite number, got {value!r}", f"{path}.{key}" if path else key)
    return float(value)


@dataclass(frozen=True)
class GraphConfig:
    kind: str = "ring"
    n: int | None = 10
    weight: float | None = 1.0
    p: float | None = None
    seed: int | None = None
    path: str | None = None

    @classmethod
    def from_dict(cls, data) -> "GraphConfig":
        _require(isinstance(data, dict), "expected a key-value block", "graph")
        kind = data.get("kind", "ring")
        _require(kind in _GRAPH_KEYS, f"unknown graph kind {kind!r}; expected one of {sorted(_GRAPH_KEYS)}",
                 "graph.kind")
        unknown = sorted(set(data) - _GRAPH_KEYS[kind])
        _require(not unknown, f"unknown key(s) {unknown}", "graph")
        if kind == "edge_list":
            _require(isinstance(data.get("path"), str), "expected a file path", "graph.path")
            return cls(kind=kind, n=None, weight=None, path=data["path"])
        n = _int(data, "n", "graph", minimum=2, default=10)
        if kind == "random":
            p = _float(data, "p", "graph")
            _require(0 < p <= 1, f"must lie in (0, 1], got {p}", "graph.p")
            return cls(kind=kind, n=n, weight=None, p=p, seed=_int(data, "seed", "graph", default=0))
        weight = _float(data, "weight", "graph", default=1.0)
        _require(weight > 0, f"must be > 0, got {weight}", "graph.weight")
        return cls(kind=kind, n=n, weight=weight)

    def to_dict(self):
        return {k: v for k, v in asdict(self).items() if v is not None}

    def build(self, base_dir: Path | None = None) -> Graph:
        if self.kind == "ring":
            return build_ring(self.n, self.weight)
        if self.kind == "complete":
            return build_complete(self.n, self.weight)
        if self.kind == "random":
            return random_connected(self.n, self.p, np.random.default_rng(self.seed))
        path = Path(self.path)
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        return load_edge_list(path)


@dataclass(frozen=True)
class RunConfig:
    """Validated experiment configuration (one run).

    ``target_accuracy`` of ``None`` disables early stopping; JSON ``null``,
    ``"inf"`` and ``Infinity`` all map to it.
    """

    algorithm: str
    graph: GraphConfig = field(default_factory=GraphConfig)
    compressor: CompressorSpec = field(default_factory=lambda: CompressorSpec("identity"))
    objective: dict | None = None
    dimension: int | None = None
    steps: StepSizes = field(default_factory=StepSizes)
    max_rounds: int = 100_000
    target_accuracy: float | None = 1e-4
    seed: int = 0
    x0_scale: float = 1.0
    x0_center: str = "zero"
    observer_ordering: str = "pre"
    allow_unverified_delta: bool = False
    retry_halvings: int = 6
    label: str | None = None
    output_dir: str | None = None
    preset: str = "none"

    _KEYS = (
        "algorithm", "graph", "compressor", "objective", "dimension", "steps", "max_rounds",
        "target_accuracy", "seed", "x0_scale", "x0_center", "observer_ordering", "allow_unverified_delta",
        "retry_halvings", "label", "output_dir", "preset",
    )

    @property
    def d(self) -> int:
        if self.objective is not None:
            return int(self.objective["d"])
        return int(self.dimension)

    @property
    def name(self) -> str:
        return self.label or f"{self.algorithm}-{self.compressor.kind}-s{self.seed}"

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        _require(isinstance(data, dict), "top level must be a JSON object", "<root>")
        unknown = sorted(set(data) - set(cls._KEYS))
        _require(not unknown, f"unknown key(s) {unknown}", "<root>")
        _require("algorithm" in data, "missing required key", "algorithm")
        algorithm = data["algorithm"]
        _require(algorithm in ALGORITHMS, f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}",
                 "algorithm")
        kwargs = {"algorithm": algorithm}
        kwargs["graph"] = GraphConfig.from_dict(data.get("graph", {}))
        if "compressor" in data:
            kwargs["compressor"] = CompressorSpec.from_dict(data["compressor"])

        steps = data.get("steps", {})
        _require(isinstance(steps, dict), "expected a key-value block", "steps")
        unknown = sorted(set(steps) - {"kappa", "kappa0", "alpha", "beta", "eta"})
        _require(not unknown, f"unknown key(s) {unknown}", "steps")
        kwargs["steps"] = StepSizes(**steps)

        objective = data.get("objective")
        if objective is not None:
            _require(isinstance(objective, dict), "expected a key-value block", "objective")
            _require(objective.get("kind") in ("least_squares", "rosenbrock_sum"),
                     f"unknown objective kind {objective.get('kind')!r}", "objective.kind")
            _int(objective, "d", "objective", minimum=1)
            objective = dict(objective)
            n_graph = kwargs["graph"].n
            if "n" in objective and n_graph is not None:
                _require(objective["n"] == n_graph, f"n={objective['n']} disagrees with graph.n={n_graph}",
                         "objective.n")
            kwargs["objective"] = objective
        if algorithm.startswith("dpd"):
            _require(objective is not None, f"algorithm {algorithm!r} needs an objective block", "objective")
        if objective is None:
            kwargs["dimension"] = _int(data, "dimension", "", minimum=1)
        elif "dimension" in data:
            _require(data["dimension"] == objective["d"], "disagrees with objective.d", "dimension")

        if "max_rounds" in data:
            kwargs["max_rounds"] = _int(data, "max_rounds", "", minimum=0)
        if "target_accuracy" in data:
            ta = data["target_accuracy"]
            if ta is None or ta == "inf" or (isinstance(ta, float) and math.isinf(ta) and ta > 0):
                kwargs["target_accuracy"] = None
            else:
                ta = _float(data, "target_accuracy", "")
                _require(ta >= 0, f"must be >= 0, got {ta}", "target_accuracy")
                kwargs["target_accuracy"] = ta
        if "seed" in data:
            kwargs["seed"] = _int(data, "seed", "", minimum=0)
        if "x0_scale" in data:
            kwargs["x0_scale"] = _float(data, "x0_scale", "")
            _require(kwargs["x0_scale"] > 0, "must be > 0", "x0_scale")
        if "x0_center" in data:
            _require(data["x0_center"] in ("zero", "optimum"), "expected 'zero' or 'optimum'", "x0_center")
            kwargs["x0_center"] = data["x0_center"]
        if "observer_ordering" in data:
            _require(data["observer_ordering"] in ("pre", "post"), "expected 'pre' or 'post'",
                     "observer_ordering")
            kwargs["observer_ordering"] = data["observer_ordering"]
        if "allow_unverified_delta" in data:
            _require(isinstance(data["allow_unverified_delta"], bool), "expected a boolean",
                     "allow_unverified_delta")
            kwargs["allow_unverified_delta"] = data["allow_unverified_delta"]
        if "retry_halvings" in data:
            kwargs["retry_halvings"] = _int(data, "retry_halvings", "", minimum=0)
        for key in ("label", "output_dir"):
            if key in data and data[key] is not None:
                _require(isinstance(data[key], str), "expected a string", key)
                kwargs[key] = data[key]
        if "preset" in data:
            _require(data["preset"] in PRESETS, f"expected one of {PRESETS}", "preset")
            kwargs["preset"] = data["preset"]
        return cls(**kwargs)

    def to_dict(self) -> dict:
        out = {
            "algorithm": self.algorithm,
            "graph": self.graph.to_dict(),
            "compressor": self.compressor.to_dict(),
            "steps": asdict(self.steps),
            "max_rounds": self.max_rounds,
            "target_accuracy": self.target_accuracy,
            "seed": self.seed,
            "x0_scale": self.x0_scale,
            "x0_center": self.x0_center,
            "observer_ordering": self.observer_ordering,
            "allow_unverified_delta": self.allow_unverified_delta,
            "retry_halvings": self.retry_halvings,
            "preset": self.preset,
        }
        if self.objective is not None:
            out["objective"] = dict(self.objective)
        else:
            out["dimension"] = self.dimension
        if self.label is not None:
            out["label"] = self.label
        if self.output_dir is not None:
            out["output_dir"] = self.output_dir
        return out

    def with_overrides(self, **changes) -> "RunConfig":
        data = self.to_dict()
        data.update(changes)
        return RunConfig.from_dict(data)


def parse_config(data: dict) -> RunConfig:
    return RunConfig.from_dict(data)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}", str(path)) from exc
    return RunConfig.from_dict(data)
