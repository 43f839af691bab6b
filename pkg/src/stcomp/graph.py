"""Communication graphs, Laplacians and their spectral data.

Graphs are undirected, weighted and static.  The spectral quantities
(algebraic connectivity, largest eigenvalue, and an orthonormal basis ``S``
of the complement of the all-ones vector) parameterize step-size heuristics
and the commutation estimator in :mod:`stcomp.certify`.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidTopologyError, NumericalError

__all__ = [
    "Graph",
    "Spectrum",
    "build_ring",
    "build_complete",
    "from_edges",
    "random_connected",
    "laplacian",
    "spectrum",
    "is_connected",
    "load_edge_list",
    "dump_edge_list",
]

_ZERO_EIG_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected weighted graph on nodes ``0..n-1``.

    ``weights`` is the symmetric adjacency matrix with zero diagonal; it is
    copied and made read-only on construction.
    """

    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float, copy=True)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise InvalidTopologyError(f"weight matrix must be square, got shape {w.shape}")
        if w.shape[0] < 2:
            raise InvalidTopologyError("a graph needs at least 2 nodes")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise InvalidTopologyError("weights must be finite and nonnegative")
        if np.any(np.diag(w) != 0):
            raise InvalidTopologyError("self-loops are not allowed (nonzero diagonal)")
        if not np.array_equal(w, w.T):
            raise InvalidTopologyError("weight matrix must be exactly symmetric")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def neighbors(self, i: int) -> list[int]:
        return [int(j) for j in np.flatnonzero(self.weights[i] > 0)]

    def edges(self) -> list[tuple[int, int, float]]:
        iu, ju = np.nonzero(np.triu(self.weights, k=1))
        return [(int(i), int(j), float(self.weights[i, j])) for i, j in zip(iu, ju)]

    def degrees(self) -> np.ndarray:
        return (self.weights > 0).sum(axis=1)


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigen-decomposition of a Laplacian.

    Attributes
    ----------
    eigenvalues : ndarray, shape (n,)
        Ascending eigenvalues; the smallest is clamped to exactly 0.
    eigenvectors : ndarray, shape (n, n)
        Orthonormal eigenvectors as columns, sign-canonicalized.
    s_basis : ndarray, shape (n, n-1)
        Orthonormal basis of the complement of the all-ones vector.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    s_basis: np.ndarray

    @property
    def lambda2(self) -> float:
        return float(self.eigenvalues[1])

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1])


def _canonical_signs(u: np.ndarray) -> np.ndarray:
    # first component with |.| > tol made positive, column by column
    u = u.copy()
    for k in range(u.shape[1]):
        col = u[:, k]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if nz.size and col[nz[0]] < 0:
            u[:, k] = -col
    return u


def from_edges(n: int, edges) -> Graph:
    """Build a graph from ``(i, j, w)`` triples (0-based, undirected)."""
    w = np.zeros((n, n))
    for i, j, a in edges:
        i, j, a = int(i), int(j), float(a)
        if not (0 <= i < n and 0 <= j < n):
            raise InvalidTopologyError(f"edge ({i}, {j}) out of range for n={n}")
        if i == j:
            raise InvalidTopologyError(f"self-loop at node {i}")
        if a <= 0:
            raise InvalidTopologyError(f"edge ({i}, {j}) has non-positive weight {a}")
        w[i, j] = w[j, i] = a
    return Graph(w)


def build_ring(n: int, weight: float = 1.0) -> Graph:
    """Cycle graph where node ``i`` links to ``i-1`` and ``i+1`` (mod n)."""
    if n < 3:
        raise InvalidTopologyError(f"a ring needs n >= 3 nodes, got {n}")
    if not weight > 0:
        raise InvalidTopologyError(f"ring weight must be positive, got {weight}")
    return from_edges(n, [(i, (i + 1) % n, weight) for i in range(n)])


def build_complete(n: int, weight: float = 1.0) -> Graph:
    w = np.full((n, n), float(weight))
    np.fill_diagonal(w, 0.0)
    return Graph(w)


def random_connected(n: int, p: float, rng: np.random.Generator, max_tries: int = 1000,
                     weight_range: tuple[float, float] | None = None) -> Graph:
    """Erdos-Renyi sample conditioned on connectivity (rejection sampling).

    With ``weight_range`` the edge weights are drawn uniformly from it,
    otherwise all edges get weight 1.
    """
    for _ in range(max_tries):
        mask = np.triu(rng.random((n, n)) < p, k=1)
        if weight_range is None:
            w = mask.astype(float)
        else:
            w = mask * rng.uniform(*weight_range, size=(n, n))
        w = w + w.T
        g = Graph(w)
        if is_connected(g):
            return g
    raise InvalidTopologyError(f"no connected sample after {max_tries} draws (n={n}, p={p})")


def laplacian(g: Graph) -> np.ndarray:
    L = -np.array(g.weights)
    # diagonal set from the row sums of the off-diagonal part so L @ 1 == 0
    np.fill_diagonal(L, 0.0)
    np.fill_diagonal(L, -L.sum(axis=1))
    return L


def spectrum(L: np.ndarray) -> Spectrum:
    L = np.asarray(L, dtype=float)
    n = L.shape[0]
    try:
        vals, vecs = np.linalg.eigh(L)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigen-solver failed: {exc}") from exc
    vals = vals.copy()
    vals[0] = 0.0
    vecs = _canonical_signs(vecs)

    zero = np.flatnonzero(np.abs(vals) <= _ZERO_EIG_TOL * max(1.0, abs(vals[-1])))
    nonzero = np.setdiff1d(np.arange(n), zero)
    # complement of 1 inside the null space (only nontrivial for disconnected graphs)
    ones = np.ones(n) / np.sqrt(n)
    z = vecs[:, zero]
    z = z - np.outer(ones, ones @ z)
    if z.shape[1] > 1:
        q, r = np.linalg.qr(z)
        keep = np.abs(np.diag(r)) > 1e-8
        z_basis = q[:, keep][:, : len(zero) - 1]
    else:
        z_basis = np.zeros((n, 0))
    s = np.hstack([_canonical_signs(z_basis), vecs[:, nonzero]])
    if s.shape[1] != n - 1:
        raise NumericalError(f"complement basis has {s.shape[1]} columns, expected {n - 1}")
    for arr in (vals, vecs, s):
        arr.setflags(write=False)
    return Spectrum(eigenvalues=vals, eigenvectors=vecs, s_basis=s)


def is_connected(g: Graph) -> bool:
    n = g.n
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    queue = deque([0])
    while queue:
        i = queue.popleft()
        for j in np.flatnonzero(g.weights[i] > 0):
            if not seen[j]:
                seen[j] = True
                queue.append(int(j))
    return bool(seen.all())


def load_edge_list(path) -> Graph:
    """Parse the ``n <count>`` header plus ``i j w`` lines format.

    Blank lines and ``#`` comments are ignored.
    """
    n = None
    edges = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if n is None:
            if len(parts) != 2 or parts[0] != "n":
                raise InvalidTopologyError(f"{path}:{lineno}: expected header 'n <count>'")
            n = int(parts[1])
            continue
        if len(parts) != 3:
            raise InvalidTopologyError(f"{path}:{lineno}: expected 'i j w', got {line!r}")
        edges.append((int(parts[0]), int(parts[1]), float(parts[2])))
    if n is None:
        raise InvalidTopologyError(f"{path}: missing 'n <count>' header")
    return from_edges(n, edges)


def dump_edge_list(g: Graph) -> str:
    lines = [f"n {g.n}"]
    lines += [f"{i} {j} {w!r}" for i, j, w in g.edges()]
    return "\n".join(lines) + "\n"
