"""Per-node objective families with analytic gradients.

Two families are provided:

* ``least_squares``: ``f_i(x) = 0.5 (H_i^T x - b_i)^2`` with ``H_i`` in R^d
  and scalar ``b_i``.  The global sum is strongly convex once
  ``sum_i H_i H_i^T`` is positive definite.
* ``rosenbrock_sum``: ``f_i(x) = sum_j 100 (x_{j+1} - x_j^2)^2 + (x_j - a_i)^2``
  over ``j = 1..d-1``.  Smooth but with no global Lipschitz gradient bound.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericInputError, NumericalError, STCompError

__all__ = [
    "ObjectiveConstructionError",
    "ObjectiveConstants",
    "Objective",
    "LeastSquares",
    "RosenbrockSum",
    "make_least_squares",
    "make_rosenbrock_sum",
    "gradient",
    "optimum",
    "check_gradient",
    "objective_from_dict",
]


class ObjectiveConstructionError(STCompError, ValueError):
    pass


@dataclass(frozen=True)
class ObjectiveConstants:
    mu: float
    lf: float | None
    s_star: np.ndarray | None


def _finite(x):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise NumericInputError("objective evaluated at a non-finite point")
    return x


class Objective:
    """Common interface: ``n`` nodes, dimension ``d``.

    Subclasses implement ``value``/``gradient`` for one node and
    ``gradients`` for all nodes at once (row ``i`` of ``X`` is node ``i``'s
    iterate).
    """

    kind: str
    n: int
    d: int

    def value(self, i: int, x) -> float:
        raise NotImplementedError

    def gradient(self, i: int, x) -> np.ndarray:
        raise NotImplementedError

    def gradients(self, X: np.ndarray) -> np.ndarray:
        return np.array([self.gradient(i, X[i]) for i in range(self.n)])

    def global_value(self, x) -> float:
        return float(sum(self.value(i, x) for i in range(self.n)))

    def global_gradient(self, x) -> np.ndarray:
        return np.sum([self.gradient(i, x) for i in range(self.n)], axis=0)

    @property
    def constants(self) -> ObjectiveConstants:
        raise NotImplementedError

    def optimum(self) -> np.ndarray | None:
        return self.constants.s_star

    def to_dict(self) -> dict:
        raise NotImplementedError


class LeastSquares(Objective):
    kind = "least_squares"

    def __init__(self, H, b, seed: int | None = None):
        H = np.array(H, dtype=float)
        b = np.array(b, dtype=float).reshape(-1)
        if H.ndim != 2 or H.shape[0] != b.shape[0]:
            raise ObjectiveConstructionError(f"H must be n x d and b length n, got {H.shape} and {b.shape}")
        self.H, self.b, self.seed = H, b, seed
        self.H.setflags(write=False)
        self.b.setflags(write=False)
        self.n, self.d = H.shape
        gram = H.T @ H
        mu = float(np.linalg.eigvalsh(gram)[0])
        if mu <= 0:
            raise ObjectiveConstructionError(f"sum H_i H_i^T is singular (lambda_min={mu:.3g})")
        try:
            s_star = np.linalg.solve(gram, H.T @ b)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"normal equations are singular: {exc}") from exc
        s_star.setflags(write=False)
        lf = float(np.max(np.sum(H**2, axis=1)))
        self._constants = ObjectiveConstants(mu=mu, lf=lf, s_star=s_star)

    @property
    def constants(self):
        return self._constants

    def value(self, i, x):
        x = _finite(x)
        r = self.H[i] @ x - self.b[i]
        return 0.5 * float(r * r)

    def gradient(self, i, x):
        x = _finite(x)
        return self.H[i] * (self.H[i] @ x - self.b[i])

    def gradients(self, X):
        X = _finite(X)
        r = np.einsum("ij,ij->i", self.H, X) - self.b
        return self.H * r[:, None]

    def to_dict(self):
        return {"kind": self.kind, "n": self.n, "d": self.d, "H": self.H.tolist(), "b": self.b.tolist(),
                "seed": self.seed}


class RosenbrockSum(Objective):
    kind = "rosenbrock_sum"

    def __init__(self, n: int, d: int, shifts=None):
        if d < 2:
            raise ObjectiveConstructionError(f"rosenbrock_sum needs d >= 2, got {d}")
        self.n, self.d = int(n), int(d)
        a = np.ones(self.n) if shifts is None else np.array(shifts, dtype=float).reshape(-1)
        if a.shape != (self.n,):
            raise ObjectiveConstructionError(f"expected {self.n} shifts, got {a.shape}")
        a.setflags(write=False)
        self.a = a
        s_star = None
        if np.all(a == a[0]):
            # common shift c: every term vanishes at x_j = c iff c = c^2
            if a[0] in (0.0, 1.0):
                s_star = np.full(self.d, a[0])
                s_star.setflags(write=False)
        self._constants = ObjectiveConstants(mu=0.0, lf=None, s_star=s_star)

    @property
    def constants(self):
        return self._constants

    def value(self, i, x):
        x = _finite(x)
        head, tail = x[:-1], x[1:]
        return float(np.sum(100.0 * (tail - head**2) ** 2 + (head - self.a[i]) ** 2))

    def gradients(self, X):
        X = _finite(X)
        head, tail = X[:, :-1], X[:, 1:]
        inner = tail - head**2
        g = np.zeros_like(X)
        g[:, :-1] = -400.0 * head * inner + 2.0 * (head - self.a[:, None])
        g[:, 1:] += 200.0 * inner
        return g

    def gradient(self, i, x):
        x = _finite(x)
        head, tail = x[:-1], x[1:]
        inner = tail - head**2
        g = np.zeros_like(x)
        g[:-1] = -400.0 * head * inner + 2.0 * (head - self.a[i])
        g[1:] += 200.0 * inner
        return g

    def to_dict(self):
        return {"kind": self.kind, "n": self.n, "d": self.d, "shifts": self.a.tolist()}


def make_least_squares(n: int, d: int, rng: np.random.Generator, seed: int | None = None,
                       min_eig: float = 1e-3, attempts: int = 100) -> LeastSquares:
    """Draw ``H_i, b_i`` i.i.d. standard normal until ``lambda_min(H^T H) > min_eig``."""
    if n < d:
        raise ObjectiveConstructionError(f"need n >= d for a full-rank design, got n={n}, d={d}")
    for _ in range(attempts):
        H = rng.standard_normal((n, d))
        b = rng.standard_normal(n)
        if np.linalg.eigvalsh(H.T @ H)[0] > min_eig:
            return LeastSquares(H, b, seed=seed)
    raise ObjectiveConstructionError(f"no well-conditioned draw in {attempts} attempts (n={n}, d={d})")


def make_rosenbrock_sum(n: int, d: int, shift: float = 1.0) -> RosenbrockSum:
    return RosenbrockSum(n, d, np.full(n, float(shift)))


def gradient(obj: Objective, i: int, x) -> np.ndarray:
    return obj.gradient(i, x)


def optimum(obj: Objective) -> np.ndarray | None:
    return obj.optimum()


def check_gradient(obj: Objective, i: int, x, h: float = 1e-5) -> float:
    """Max per-coordinate error between the analytic and central-difference gradient.

    Errors are relative to ``max(1, ||grad||)``.
    """
    if not 1e-8 <= h <= 1e-3:
        raise ValueError(f"step h={h} outside [1e-8, 1e-3]")
    x = _finite(x)
    g = obj.gradient(i, x)
    fd = np.empty_like(x)
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        fd[j] = (obj.value(i, x + e) - obj.value(i, x - e)) / (2 * h)
    return float(np.max(np.abs(fd - g)) / max(1.0, float(np.linalg.norm(g))))


def objective_from_dict(data: dict, n: int | None = None, rng: np.random.Generator | None = None,
                        path: str = "objective") -> Objective:
    """Build an objective from its JSON block.

    A ``least_squares`` block either carries explicit ``H``/``b`` arrays or
    is regenerated from ``seed`` (and ``n``, ``d``).
    """
    if not isinstance(data, dict):
        raise ConfigError("expected a key-value block", path)
    kind = data.get("kind")
    n = data.get("n", n)
    d = data.get("d")
    if kind == "least_squares":
        unknown = sorted(set(data) - {"kind", "n", "d", "H", "b", "seed"})
        if unknown:
            raise ConfigError(f"unknown key(s) {unknown}", path)
        if "H" in data:
            return LeastSquares(data["H"], data["b"], seed=data.get("seed"))
        if n is None or d is None:
            raise ConfigError("least_squares needs 'n' and 'd' (or explicit H, b)", path)
        seed = data.get("seed")
        if rng is None:
            rng = np.random.default_rng(seed)
        return make_least_squares(int(n), int(d), rng, seed=seed)
    if kind == "rosenbrock_sum":
        unknown = sorted(set(data) - {"kind", "n", "d", "shifts", "shift"})
        if unknown:
            raise ConfigError(f"unknown key(s) {unknown}", path)
        if n is None or d is None:
            raise ConfigError("rosenbrock_sum needs 'n' and 'd'", path)
        shifts = data.get("shifts")
        if shifts is None:
            shifts = np.full(int(n), float(data.get("shift", 1.0)))
        return RosenbrockSum(int(n), int(d), shifts)
    raise ConfigError(f"unknown objective kind {kind!r}", f"{path}.kind")
