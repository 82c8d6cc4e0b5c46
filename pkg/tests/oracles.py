"""Independent reference solvers for small SVM duals.

Both minimize f(a) = 1/2 a'Qa - sum(a) over 0 <= a <= C, y'a = 0, with
Q_ij = y_i y_j K_ij.  Neither shares code with the SMO solver.
"""
import itertools

import numpy as np


def rbf_gram(X, gamma):
    X = np.asarray(X, dtype=float)
    d2 = ((X[:, None, :] - X[None, :, :]) ** 2).sum(-1)
    return np.exp(-gamma * d2)


def objective(a, y, K):
    ay = a * y
    return 0.5 * ay @ K @ ay - a.sum()


def active_set_optimum(K, y, C):
    """Exact minimum by enumerating every (zero, bound, free) split of the variables."""
    y = np.asarray(y, dtype=float)
    n = len(y)
    Q = np.outer(y, y) * K
    best = None
    for split in itertools.product((0, 1, 2), repeat=n):
        free = [i for i in range(n) if split[i] == 2]
        a = np.array([C if s == 1 else 0.0 for s in split])
        if free:
            F = np.array(free)
            fixed = a.copy()
            m = len(F)
            A = np.zeros((m + 1, m + 1))
            A[:m, :m] = Q[np.ix_(F, F)]
            A[:m, m] = y[F]
            A[m, :m] = y[F]
            rhs = np.concatenate([1 - Q[F] @ fixed, [-(y @ fixed)]])
            try:
                sol = np.linalg.solve(A, rhs)
            except np.linalg.LinAlgError:
                continue
            a[F] = sol[:m]
            if np.any(a[F] < -1e-12) or np.any(a[F] > C + 1e-12):
                continue
            a = np.clip(a, 0, C)
        if abs(a @ y) > 1e-9:
            continue
        f = objective(a, y, K)
        if best is None or f < best[0]:
            best = (f, a)
    return best


def grid_optimum(K, y, C, points=9, rounds=40):
    """Zooming grid search: dense grid over n-1 free coordinates, then refine around
    the best point.  The last coordinate is fixed by the equality constraint."""
    y = np.asarray(y, dtype=float)
    n = len(y)
    lo = np.zeros(n - 1)
    hi = np.full(n - 1, float(C))
    best_f, best_a = np.inf, None
    for _ in range(rounds):
        axes = [np.linspace(lo[i], hi[i], points) for i in range(n - 1)]
        grid = np.array(np.meshgrid(*axes, indexing="ij")).reshape(n - 1, -1).T
        last = -y[-1] * (grid @ y[:-1])
        ok = (last >= -1e-12) & (last <= C + 1e-12)
        if not ok.any():
            break
        A = np.column_stack([grid[ok], np.clip(last[ok], 0, C)])
        AY = A * y
        f = 0.5 * np.einsum("ki,ij,kj->k", AY, K, AY) - A.sum(1)
        k = int(np.argmin(f))
        if f[k] < best_f:
            best_f, best_a = float(f[k]), A[k]
        step = (hi - lo) / (points - 1)
        centre = best_a[:-1]
        lo = np.maximum(0.0, centre - 2 * step)
        hi = np.minimum(float(C), centre + 2 * step)
    return best_f, best_a


def toy_problems():
    """Fixed suite of <=6-point problems: (name, X, y, C, gamma)."""
    rng = np.random.default_rng(20151201)
    out = [
        ("pair-1d", np.array([[0.0], [1.0]]), np.array([1, -1]), 100.0, 1.0),
        ("separable-4", np.array([[0, 0], [0, 1], [3, 0], [3, 1]], dtype=float),
         np.array([1, 1, -1, -1]), 10.0, 0.5),
        ("xor-4", np.array([[0, 0], [1, 1], [0, 1], [1, 0]], dtype=float),
         np.array([1, 1, -1, -1]), 1.0, 1.0),
    ]
    for n in (3, 4, 5, 6):
        for C, gamma in ((0.5, 1.0), (2.0, 0.5), (10.0, 2.0)):
            X = rng.normal(size=(n, 2))
            y = np.array([1, -1] + [int(s) for s in rng.choice([-1, 1], size=n - 2)])
            out.append((f"random-{n}-C{C}-g{gamma}", X, y, C, gamma))
    return out
