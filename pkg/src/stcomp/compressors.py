"""Spatio-temporal compressor catalog and the per-message byte-cost model.

Every compressor is a map ``C(x, t)`` from a vector and a round index to a
vector of the same length with ``C(0, t) = 0``.  The simulator exchanges the
decoded vectors and accounts wire size separately through :func:`byte_cost`.

Kinds
-----
identity            no compression
scalarization       ``psi(t) psi(t)^T x`` with a cycling basis schedule
topk                keep the ``k`` largest-magnitude entries
uniform_quantizer   ``(||x||_inf / 2) sgn(x)``
saturated_quantizer pass-through up to ``delta``, ``delta``-grid beyond
scaled_floor        ``g^t floor(x / g^t)`` with ``1/e < g < 1``
unbiased_lbits      randomized ``l``-bit quantizer (needs a random stream)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .errors import ConfigError, NumericInputError

__all__ = [
    "KINDS",
    "LINEAR_KINDS",
    "CompressorSpec",
    "CompressedMessage",
    "CostModel",
    "DEFAULT_COST_MODEL",
    "cycling_basis",
    "SCHEDULES",
    "compress",
    "compress_rows",
    "byte_cost",
    "payload_descriptor",
    "certified_step",
    "contraction_params",
    "lipschitz_bound",
]

KINDS = (
    "identity",
    "scalarization",
    "topk",
    "uniform_quantizer",
    "saturated_quantizer",
    "scaled_floor",
    "unbiased_lbits",
)

# kinds with C(x, t) = M(t) x; these commute with the disagreement projection
LINEAR_KINDS = frozenset({"identity", "scalarization"})
DEFAULT_LBITS = 4

_PARAMS = {
    "identity": {},
    "scalarization": {"schedule": "cycling"},
    "topk": {"k": None},
    "uniform_quantizer": {},
    "saturated_quantizer": {"delta": None},
    "scaled_floor": {"gamma": None},
    "unbiased_lbits": {"l": None},
}


def cycling_basis(t: int, d: int) -> np.ndarray:
    """Unit vector ``e_i`` with ``i = t mod d`` (0-based)."""
    psi = np.zeros(d)
    psi[t % d] = 1.0
    return psi


SCHEDULES = {"cycling": cycling_basis}


@dataclass(frozen=True)
class CompressorSpec:
    """Immutable description of one compressor instance.

    Kind-specific parameters: ``k`` (topk), ``delta`` (saturated_quantizer),
    ``gamma`` (scaled_floor), ``l`` (unbiased_lbits), ``schedule``
    (scalarization).  ``seed`` is required for, and only allowed on, the
    stochastic kind.
    """

    kind: str
    k: int | None = None
    delta: float | None = None
    gamma: float | None = None
    l: int | None = None
    schedule: str | None = None
    byte_cost_override: int | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown compressor kind {self.kind!r}; expected one of {KINDS}", "compressor.kind")
        allowed = _PARAMS[self.kind]
        for name in ("k", "delta", "gamma", "l", "schedule"):
            if name not in allowed and getattr(self, name) is not None:
                raise ConfigError(f"parameter not accepted by kind {self.kind!r}", f"compressor.{name}")
        if self.kind == "scalarization":
            if self.schedule is None:
                object.__setattr__(self, "schedule", "cycling")
            if self.schedule not in SCHEDULES:
                raise ConfigError(f"unknown schedule {self.schedule!r}", "compressor.schedule")
        elif self.kind == "topk":
            if not isinstance(self.k, (int, np.integer)) or isinstance(self.k, bool) or self.k < 1:
                raise ConfigError(f"k must be an integer >= 1, got {self.k!r}", "compressor.k")
        elif self.kind == "saturated_quantizer":
            if self.delta is None or not math.isfinite(self.delta) or self.delta <= 0:
                raise ConfigError(f"delta must be > 0, got {self.delta!r}", "compressor.delta")
        elif self.kind == "scaled_floor":
            if self.gamma is None or not (math.exp(-1) < self.gamma < 1):
                raise ConfigError(f"gamma must lie in (1/e, 1), got {self.gamma!r}", "compressor.gamma")
        elif self.kind == "unbiased_lbits":
            if self.l is None:
                object.__setattr__(self, "l", DEFAULT_LBITS)
            if not isinstance(self.l, (int, np.integer)) or isinstance(self.l, bool) or self.l < 1:
                raise ConfigError(f"l must be an integer >= 1, got {self.l!r}", "compressor.l")
        if self.stochastic and self.seed is None:
            raise ConfigError("stochastic compressor requires a seed", "compressor.seed")
        if not self.stochastic and self.seed is not None:
            raise ConfigError("seed is only meaningful for stochastic kinds", "compressor.seed")
        if self.byte_cost_override is not None and (
            not isinstance(self.byte_cost_override, (int, np.integer)) or self.byte_cost_override < 0
        ):
            raise ConfigError("byte_cost_override must be a nonnegative integer", "compressor.byte_cost_override")

    @property
    def stochastic(self) -> bool:
        return self.kind == "unbiased_lbits"

    @property
    def linear(self) -> bool:
        return self.kind in LINEAR_KINDS

    @property
    def label(self) -> str:
        extra = {"topk": f"k={self.k}", "saturated_quantizer": f"delta={self.delta:g}" if self.delta else "",
                 "scaled_floor": f"gamma={self.gamma:g}" if self.gamma else "",
                 "unbiased_lbits": f"l={self.l}"}.get(self.kind)
        return f"{self.kind}({extra})" if extra else self.kind

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}

    @classmethod
    def from_dict(cls, data: dict, path: str = "compressor") -> "CompressorSpec":
        if not isinstance(data, dict):
            raise ConfigError("expected a key-value block", path)
        known = {"kind", "k", "delta", "gamma", "l", "schedule", "byte_cost_override", "seed"}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown key(s) {unknown}", path)
        if "kind" not in data:
            raise ConfigError("missing required key", f"{path}.kind")
        try:
            return cls(**data)
        except ConfigError as exc:
            if path == "compressor" or not exc.path:
                raise
            raise ConfigError(exc.detail, exc.path.replace("compressor", path, 1)) from None


@dataclass(frozen=True)
class CompressedMessage:
    decoded: np.ndarray
    byte_cost: int
    payload_descriptor: str


@dataclass(frozen=True)
class CostModel:
    """Wire-size assumptions used by :func:`byte_cost`.

    ``lbits_bytes`` is a fixed per-message size for the stochastic l-bit
    quantizer; set it to ``None`` to fall back to the packing estimate
    ``real_bytes + ceil(d (l + 1) / 8)``.  ``overrides`` maps a kind to a
    fixed per-message byte count.
    """

    real_bytes: int = 8
    int_bytes: int = 4
    index_bytes: int = 0
    lbits_bytes: int | None = 20
    overrides: dict = field(default_factory=dict)


DEFAULT_COST_MODEL = CostModel()


def _check_finite(x):
    if not np.all(np.isfinite(x)):
        raise NumericInputError("compressor input contains non-finite values")


def compress_rows(spec: CompressorSpec, X: np.ndarray, t: int, rng: np.random.Generator | None = None) -> np.ndarray:
    """Apply ``C(., t)`` independently to every row of ``X``.

    For the stochastic kind one uniform draw per entry is taken from ``rng``
    in row-major order, i.e. node by node.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D array of row vectors, got shape {X.shape}")
    _check_finite(X)
    if spec.stochastic and rng is None:
        raise ConfigError(f"kind {spec.kind!r} needs a random stream", "compressor.seed")
    m, d = X.shape
    kind = spec.kind

    if kind == "identity":
        return X.copy()

    if kind == "scalarization":
        # psi psi^T x for the cycling basis keeps one coordinate
        out = np.zeros_like(X)
        i = t % d
        out[:, i] = X[:, i]
        return out

    if kind == "topk":
        if spec.k > d:
            raise ConfigError(f"k={spec.k} exceeds dimension d={d}", "compressor.k")
        # stable sort on -|x| keeps the lowest index among ties
        idx = np.argsort(-np.abs(X), axis=1, kind="stable")[:, : spec.k]
        out = np.zeros_like(X)
        rows = np.arange(m)[:, None]
        out[rows, idx] = X[rows, idx]
        return out

    if kind == "uniform_quantizer":
        scale = np.max(np.abs(X), axis=1, keepdims=True) / 2.0
        return scale * np.sign(X)

    if kind == "saturated_quantizer":
        delta = spec.delta
        ax = np.abs(X)
        # magnitude floored on the delta grid, sign restored
        grid = np.sign(X) * delta * np.floor(ax / delta)
        return np.where(ax <= delta, X, grid)

    if kind == "scaled_floor":
        g = spec.gamma ** t
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            q = X / g if g > 0 else np.full_like(X, np.inf)
            out = g * np.floor(q)
        # once g underflows the grid is finer than float spacing: C(x) -> x
        bad = ~np.isfinite(out)
        if bad.any():
            out[bad] = X[bad]
        return out

    if kind == "unbiased_lbits":
        levels = 2.0 ** (spec.l - 1)
        norm = np.max(np.abs(X), axis=1, keepdims=True)
        omega = rng.random(X.shape)
        safe = np.where(norm > 0, norm, 1.0)
        q = np.floor(levels * np.abs(X) / safe + omega)
        out = (safe / levels) * np.sign(X) * q
        return np.where(norm > 0, out, 0.0)

    raise AssertionError(kind)


def compress(spec: CompressorSpec, x, t: int = 0, rng: np.random.Generator | None = None,
             cost_model: CostModel = DEFAULT_COST_MODEL) -> CompressedMessage:
    """Compress a single vector and report its wire size."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {x.shape}")
    if t < 0:
        raise ValueError(f"round index must be >= 0, got {t}")
    decoded = compress_rows(spec, x[None, :], t, rng)[0]
    d = x.shape[0]
    return CompressedMessage(decoded, byte_cost(spec, d, cost_model), payload_descriptor(spec, d))


def byte_cost(spec: CompressorSpec, d: int, cost_model: CostModel = DEFAULT_COST_MODEL) -> int:
    """Bytes one node transmits per round; independent of the vector's value."""
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    if spec.byte_cost_override is not None:
        return int(spec.byte_cost_override)
    if spec.kind in cost_model.overrides:
        return int(cost_model.overrides[spec.kind])
    rb = cost_model.real_bytes
    kind = spec.kind
    if kind == "identity":
        return rb * d
    if kind == "scalarization":
        return rb
    if kind == "topk":
        return (rb + cost_model.index_bytes) * min(spec.k, d)
    if kind == "uniform_quantizer":
        return rb + math.ceil(d / 8)
    if kind == "saturated_quantizer":
        return rb * d
    if kind == "scaled_floor":
        return cost_model.int_bytes * d
    if kind == "unbiased_lbits":
        if cost_model.lbits_bytes is not None:
            return int(cost_model.lbits_bytes)
        return rb + math.ceil(d * (spec.l + 1) / 8)
    raise AssertionError(kind)


def payload_descriptor(spec: CompressorSpec, d: int) -> str:
    return {
        "identity": f"{d} scalars",
        "scalarization": "1 scalar",
        "topk": f"{spec.k} values (+{spec.k} indices)",
        "uniform_quantizer": f"norm + {d} sign bits",
        "saturated_quantizer": f"{d} quantized scalars",
        "scaled_floor": f"{d} integers",
        "unbiased_lbits": f"norm + {d} signed {spec.l}-bit levels",
    }[spec.kind]


def contraction_params(spec: CompressorSpec, d: int) -> tuple[float, float] | None:
    """``(p, phi)`` with ``||C(x)/p - x||^2 <= (1 - phi) ||x||^2``, if known."""
    if spec.kind == "topk":
        return 1.0, spec.k / d
    if spec.kind == "uniform_quantizer":
        return d / 2.0, 1.0 / d**2
    if spec.kind == "saturated_quantizer":
        return 1.0, 0.75
    if spec.kind == "identity":
        return 1.0, 1.0
    return None


def certified_step(spec: CompressorSpec, d: int) -> float:
    """Step ``kappa0`` at which the induced recursion is known to be stable."""
    cp = contraction_params(spec, d)
    if cp is not None:
        return 1.0 / cp[0]
    return 1.0


def lipschitz_bound(spec: CompressorSpec, d: int) -> float:
    """Declared linear-growth constant ``L_c`` with ``||C(x, t)|| <= L_c ||x||``."""
    if spec.kind == "uniform_quantizer":
        return float(d)  # 2p with p = d/2
    if spec.kind == "unbiased_lbits":
        # per entry |C_i| <= |x_i| + ||x||_inf / 2^(l-1)
        return 1.0 + math.sqrt(d) / 2.0 ** (spec.l - 1)
    return 1.0
