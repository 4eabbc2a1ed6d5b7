"""Independent reference computations used by several test modules."""

import numpy as np

from linkfault.learners.mlp import init_params, loss_and_grads


def gradient_check(sizes, task, seed=0, n=20, probes=40, eps=1e-6, l2=1e-3):
    """Worst relative error between analytic and central-difference gradients.

    For large layers only ``probes`` random coordinates per parameter array
    are perturbed; the error is ``||a - n|| / (||a|| + ||n||)`` per array.
    """
    rng = np.random.default_rng(seed)
    W, b = init_params(sizes, rng)
    # small random biases so ReLUs do not all share a kink at zero
    b = [rng.normal(0, 0.1, size=x.shape) for x in b]
    X = rng.standard_normal((n, sizes[0]))
    Y = rng.integers(0, sizes[-1], n) if task == "classifier" else rng.standard_normal((n, sizes[-1]))
    _, gW, gb = loss_and_grads(W, b, X, Y, task, l2)

    def loss():
        return loss_and_grads(W, b, X, Y, task, l2)[0]

    worst = 0.0
    for params, grads in ((W, gW), (b, gb)):
        for P, G in zip(params, grads):
            flat = P.reshape(-1)
            idx = np.arange(flat.size) if flat.size <= probes else rng.choice(flat.size, probes, replace=False)
            num = np.empty(len(idx))
            for j, k in enumerate(idx):
                old = flat[k]
                flat[k] = old + eps
                up = loss()
                flat[k] = old - eps
                down = loss()
                flat[k] = old
                num[j] = (up - down) / (2 * eps)
            ana = G.reshape(-1)[idx]
            denom = np.linalg.norm(ana) + np.linalg.norm(num)
            if denom > 0:
                worst = max(worst, np.linalg.norm(ana - num) / denom)
    return worst


def prf_oracle(y_true, y_pred, labels):
    """Per-class and macro precision/recall/F1 by plain counting loops."""
    per = []
    for c in labels:
        tp = fp = fn = 0
        for t, p in zip(y_true, y_pred):
            if t == c and p == c:
                tp += 1
            elif t != c and p == c:
                fp += 1
            elif t == c and p != c:
                fn += 1
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
        per.append((prec, rec, f1))
    k = len(per)
    return per, tuple(sum(x[i] for x in per) / k for i in range(3))


def r2_oracle(pred, actual):
    """Two-pass R^2 with explicit loops; 2-D targets are centred per column."""
    pred = np.asarray(pred, dtype=float)
    actual = np.asarray(actual, dtype=float)
    if actual.ndim == 1:
        pred, actual = pred[:, None], actual[:, None]
    ss_res = ss_tot = 0.0
    for j in range(actual.shape[1]):
        col = actual[:, j].tolist()
        mean = 0.0
        for a in col:
            mean += a
        mean /= len(col)
        for p, a in zip(pred[:, j].tolist(), col):
            ss_res += (a - p) ** 2
            ss_tot += (a - mean) ** 2
    return 1.0 - ss_res / ss_tot
