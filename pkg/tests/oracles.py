"""Straight-line reference implementations used as test oracles.

Written with explicit loops over nodes and coordinates and without importing
anything from ``stcomp``, so a shared bug cannot hide in both copies.
"""

import math


def ring_laplacian(n, w=1.0):
    L = [[0.0] * n for _ in range(n)]
    for i in range(n):
        for j in ((i - 1) % n, (i + 1) % n):
            L[i][j] = -w
        L[i][i] = 2 * w
    return L


def compress_one(kind, x, t, params=None, omega=None):
    """Decoded compressor output for a single vector ``x`` (list of floats)."""
    params = params or {}
    d = len(x)
    if kind == "identity":
        return list(x)
    if kind == "scalarization":
        out = [0.0] * d
        out[t % d] = x[t % d]
        return out
    if kind == "topk":
        k = params["k"]
        order = sorted(range(d), key=lambda j: (-abs(x[j]), j))
        keep = set(order[:k])
        return [x[j] if j in keep else 0.0 for j in range(d)]
    if kind == "uniform_quantizer":
        m = max(abs(v) for v in x)
        return [(m / 2) * (1.0 if v > 0 else -1.0 if v < 0 else 0.0) for v in x]
    if kind == "saturated_quantizer":
        delta = params["delta"]
        out = []
        for v in x:
            if abs(v) <= delta:
                out.append(v)
            else:
                out.append(math.copysign(delta * math.floor(abs(v) / delta), v))
        return out
    if kind == "scaled_floor":
        g = params["gamma"] ** t
        return [g * math.floor(v / g) for v in x]
    if kind == "unbiased_lbits":
        l = params["l"]
        m = max(abs(v) for v in x)
        if m == 0:
            return [0.0] * d
        s = 2 ** (l - 1)
        out = []
        for v, w in zip(x, omega):
            sg = 1.0 if v > 0 else -1.0 if v < 0 else 0.0
            out.append((m / s) * sg * math.floor(s * abs(v) / m + w))
        return out
    raise ValueError(kind)


def _rows(kind, X, t, params):
    return [compress_one(kind, row, t, params) for row in X]


def _matvec(L, X):
    n, d = len(X), len(X[0])
    return [[sum(L[i][j] * X[j][c] for j in range(n)) for c in range(d)] for i in range(n)]


def ls_grad(H, b, X):
    out = []
    for i, x in enumerate(X):
        r = sum(H[i][c] * x[c] for c in range(len(x))) - b[i]
        out.append([H[i][c] * r for c in range(len(x))])
    return out


def consensus_dc(L, X, kind, params, kappa0, rounds):
    X = [list(r) for r in X]
    for t in range(rounds):
        LC = _matvec(L, _rows(kind, X, t, params))
        X = [[X[i][c] - kappa0 * LC[i][c] for c in range(len(X[0]))] for i in range(len(X))]
    return X


def _neighbors_or_self(L, i, j):
    return i == j or L[i][j] != 0


def consensus_oc(L, X, kind, params, alpha, kappa0, rounds):
    """Each node i keeps its own dict of copies ``obs[i][j]``."""
    n, d = len(X), len(X[0])
    X = [list(r) for r in X]
    obs = [{j: [0.0] * d for j in range(n) if _neighbors_or_self(L, i, j)} for i in range(n)]
    for t in range(rounds):
        msgs = [compress_one(kind, [X[j][c] - obs[j][j][c] for c in range(d)], t, params) for j in range(n)]
        newX = []
        for i in range(n):
            acc = [0.0] * d
            for j in obs[i]:
                for c in range(d):
                    acc[c] += L[i][j] * obs[i][j][c]
            newX.append([X[i][c] - alpha * acc[c] for c in range(d)])
        for i in range(n):
            for j in obs[i]:
                obs[i][j] = [obs[i][j][c] + kappa0 * msgs[j][c] for c in range(d)]
        X = newX
    return X, obs


def dpd_dc(L, X, H, b, kind, params, kappa, kappa0, beta, eta, rounds):
    n, d = len(X), len(X[0])
    X = [list(r) for r in X]
    V = [[0.0] * d for _ in range(n)]
    for t in range(rounds):
        LC = _matvec(L, _rows(kind, X, t, params))
        G = ls_grad(H, b, X)
        newX = [[X[i][c] - kappa0 * LC[i][c] - kappa * (beta * V[i][c] + eta * G[i][c]) for c in range(d)]
                for i in range(n)]
        V = [[V[i][c] + kappa0 * beta * LC[i][c] for c in range(d)] for i in range(n)]
        X = newX
    return X, V


def dpd_oc(L, X, H, b, kind, params, kappa, kappa0, beta, eta, rounds):
    n, d = len(X), len(X[0])
    X = [list(r) for r in X]
    V = [[0.0] * d for _ in range(n)]
    obs = [{j: [0.0] * d for j in range(n) if _neighbors_or_self(L, i, j)} for i in range(n)]
    for t in range(rounds):
        msgs = [compress_one(kind, [X[j][c] - obs[j][j][c] for c in range(d)], t, params) for j in range(n)]
        G = ls_grad(H, b, X)
        newX, newV = [], []
        for i in range(n):
            lx = [0.0] * d
            for j in obs[i]:
                for c in range(d):
                    lx[c] += L[i][j] * obs[i][j][c]
            newX.append([X[i][c] - kappa * (lx[c] + beta * V[i][c] + eta * G[i][c]) for c in range(d)])
            newV.append([V[i][c] + kappa * beta * lx[c] for c in range(d)])
        for i in range(n):
            for j in obs[i]:
                obs[i][j] = [obs[i][j][c] + kappa0 * msgs[j][c] for c in range(d)]
        X, V = newX, newV
    return X, V


def dpd_fc(L, X, H, b, kind, params, kappa, kappa0, beta, eta, rounds):
    n, d = len(X), len(X[0])
    X = [list(r) for r in X]
    V = [[0.0] * d for _ in range(n)]
    sig = [[0.0] * d for _ in range(n)]
    z = [[0.0] * d for _ in range(n)]
    for t in range(rounds):
        q = [compress_one(kind, [X[i][c] - sig[i][c] for c in range(d)], t, params) for i in range(n)]
        Lq = _matvec(L, q)
        G = ls_grad(H, b, X)
        w = [[sig[i][c] - z[i][c] + Lq[i][c] for c in range(d)] for i in range(n)]
        X = [[X[i][c] - kappa * (w[i][c] + beta * V[i][c] + eta * G[i][c]) for c in range(d)] for i in range(n)]
        V = [[V[i][c] + kappa * beta * w[i][c] for c in range(d)] for i in range(n)]
        sig = [[sig[i][c] + kappa0 * q[i][c] for c in range(d)] for i in range(n)]
        z = [[z[i][c] + kappa0 * (q[i][c] - Lq[i][c]) for c in range(d)] for i in range(n)]
    return X, V


def dpd_baseline(L, X, H, b, kappa, beta, eta, rounds):
    n, d = len(X), len(X[0])
    X = [list(r) for r in X]
    V = [[0.0] * d for _ in range(n)]
    for _ in range(rounds):
        LX = _matvec(L, X)
        G = ls_grad(H, b, X)
        newX = [[X[i][c] - kappa * (LX[i][c] + beta * V[i][c] + eta * G[i][c]) for c in range(d)]
                for i in range(n)]
        V = [[V[i][c] + kappa * beta * LX[i][c] for c in range(d)] for i in range(n)]
        X = newX
    return X, V


def suboptimality(X, s):
    total = 0.0
    for row in X:
        for c in range(len(row)):
            total += (row[c] - s[c]) ** 2
    return total


def ls_optimum(H, b):
    """Solve the normal equations with Gaussian elimination."""
    d = len(H[0])
    A = [[sum(h[r] * h[c] for h in H) for c in range(d)] for r in range(d)]
    y = [sum(H[i][r] * b[i] for i in range(len(H))) for r in range(d)]
    M = [A[r] + [y[r]] for r in range(d)]
    for col in range(d):
        piv = max(range(col, d), key=lambda r: abs(M[r][col]))
        M[col], M[piv] = M[piv], M[col]
        for r in range(d):
            if r != col:
                f = M[r][col] / M[col][col]
                M[r] = [a - f * p for a, p in zip(M[r], M[col])]
    return [M[r][d] / M[r][r] for r in range(d)]
