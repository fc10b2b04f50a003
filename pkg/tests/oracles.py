"""Independent reference implementations used by the test suite."""

import numpy as np
from cvxopt import matrix, solvers

from nodecount.svm import Kernel


def qp_dual(X, y, kernel, C):
    """Solve the soft-margin dual with a generic interior-point QP.

    Returns (alpha, objective) for max sum(a) - 1/2 a^T Q a,
    0 <= a_i <= C_i, sum(a_i y_i) = 0.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    m = len(y)
    C = np.broadcast_to(np.asarray(C, dtype=float), (m,))
    K = kernel.resolved(X.shape[1])(X, X)
    Q = np.outer(y, y) * K
    solvers.options.update(show_progress=False, abstol=1e-12, reltol=1e-12, feastol=1e-12, maxiters=200)
    sol = solvers.qp(
        matrix(Q + 1e-12 * np.eye(m)),
        matrix(-np.ones(m)),
        matrix(np.vstack([-np.eye(m), np.eye(m)])),
        matrix(np.concatenate([np.zeros(m), C])),
        matrix(y.reshape(1, -1)),
        matrix(0.0),
    )
    alpha = np.clip(np.array(sol["x"]).ravel(), 0, C)
    return alpha, float(alpha.sum() - 0.5 * alpha @ Q @ alpha)


def full_alpha(model, m):
    alpha = np.zeros(m)
    alpha[model.support_indices] = np.abs(model.dual_coef)
    return alpha


def kkt_violations(model, X, y, C, tol):
    """Indices breaking the three complementary-slackness cases."""
    from nodecount.svm import decision_value

    y = np.asarray(y, dtype=float)
    C = np.broadcast_to(np.asarray(C, dtype=float), y.shape)
    alpha = full_alpha(model, len(y))
    yf = y * decision_value(model, np.asarray(X, dtype=float))
    at_zero = alpha == 0
    at_bound = alpha >= C
    free = ~at_zero & ~at_bound
    bad = (at_zero & (yf < 1 - tol)) | (free & (np.abs(yf - 1) > tol)) | (at_bound & (yf > 1 + tol))
    bad |= (alpha < 0) | (alpha > C)
    return np.flatnonzero(bad)


def random_binary_problem(rng):
    """Up to 8 points, 1-3 features, both labels present, random kernel and cost."""
    m = int(rng.integers(2, 9))
    n = int(rng.integers(1, 4))
    X = rng.normal(size=(m, n)) * rng.choice([0.5, 1.0, 3.0])
    y = rng.choice([-1.0, 1.0], size=m)
    y[0], y[1] = 1.0, -1.0
    X[y > 0] += rng.normal(scale=rng.choice([0.0, 1.0, 2.0]), size=n)
    kernel = Kernel.linear() if rng.random() < 0.5 else Kernel.rbf(float(rng.choice([0.1, 1.0 / n, 2.0])))
    cost = float(rng.choice([0.1, 1.0, 10.0]))
    return X, y, kernel, cost


def knn_full_sort(X_train, y_train, X_test, k, classes):
    """Full stable sort by distance; label ties by mean neighbour distance, then label."""
    X_train = np.asarray(X_train, dtype=float)
    out = []
    for x in np.asarray(X_test, dtype=float):
        d = np.sqrt(((X_train - x) ** 2).sum(axis=1))
        order = sorted(range(len(d)), key=lambda i: (d[i], i))[:k]
        labels = [y_train[i] for i in order]
        best = None
        for c in classes:
            votes = labels.count(c)
            if votes == 0:
                continue
            mean_d = np.mean([d[i] for i, lab in zip(order, labels) if lab == c])
            key = (-votes, mean_d, c)
            if best is None or key < best:
                best = key
        out.append(best[2])
    return np.array(out)
