#!/usr/bin/env python3
"""Recompute the hand-derived fixture values used in the golden tests.

Every derived constant asserted in the Rust test suite is recomputed here
from first principles (numpy only), so the tests never assert a value that
was not independently produced. Run:

    python3 scripts/compute_fixtures.py
"""
import numpy as np


def weighted_whiten(matrix, probs):
    """Frequency-weighted PCA whitening via SVD of the sqrt(p)-scaled
    centered matrix. Returns (mean, centered, whitened, singular_values)."""
    probs = np.asarray(probs, dtype=float)
    matrix = np.asarray(matrix, dtype=float)
    mean = probs @ matrix
    centered = matrix - mean
    scaled = centered * np.sqrt(probs)[:, None]
    # thin SVD; right singular vectors define the projection
    _, sigma, vt = np.linalg.svd(scaled, full_matrices=False)
    # sign convention: largest-|component| entry of each direction positive
    v = vt.T
    for j in range(v.shape[1]):
        k = np.argmax(np.abs(v[:, j]))
        if v[k, j] < 0:
            v[:, j] = -v[:, j]
    whitened = centered @ v @ np.diag(1.0 / sigma)
    return mean, centered, whitened, sigma


def main():
    print("== 1-D whitening fixture: vectors (1), (-1), p = (0.8, 0.2) ==")
    m = np.array([[1.0], [-1.0]])
    p = np.array([0.8, 0.2])
    mean, centered, whitened, sigma = weighted_whiten(m, p)
    var = p @ (centered[:, 0] ** 2)
    print(f"mean                = {mean[0]!r}")
    print(f"weighted variance   = {var!r}")
    print(f"singular value      = {sigma[0]!r}")
    print(f"whitened values     = {whitened[:, 0]!r}")
    print(f"sum p * x~^2        = {p @ (whitened[:, 0] ** 2)!r}")

    print()
    print("== centering fixture: a=(1,0), b=(0,1), p=(0.75,0.25) ==")
    m = np.array([[1.0, 0.0], [0.0, 1.0]])
    p = np.array([0.75, 0.25])
    mean = p @ m
    print(f"mean     = {mean!r}")
    print(f"centered = {(m - mean)!r}")

    print()
    print("== Sym1 fixture: (1,0), (0,1), p=(0.75,0.25) ==")
    norm_mean = np.linalg.norm(mean)
    mean_norm = p @ np.linalg.norm(m, axis=1)
    sym1 = 1.0 - norm_mean / mean_norm
    print(f"||E v||  = {norm_mean!r}")
    print(f"E ||v||  = {mean_norm!r}")
    print(f"Sym1     = {sym1!r}")

    print()
    print("== Sym2 entropy fixture: eigenvalue spectrum (3, 1), d = 2 ==")
    lam = np.array([3.0, 1.0])
    q = lam / lam.sum()
    entropy = -np.sum(q * np.log(q))
    sym2 = entropy / np.log(2.0)
    print(f"normalized spectrum = {q!r}")
    print(f"entropy (nats)      = {entropy!r}")
    print(f"Sym2                = {sym2!r}")

    print()
    print("== Spearman fixture: xs=[1,1,2], ys=[1,2,3] ==")

    def ranks_by_counting(xs):
        # average ranks computed by direct counting, no sorting
        xs = np.asarray(xs, dtype=float)
        out = np.empty(len(xs))
        for i, x in enumerate(xs):
            less = np.sum(xs < x)
            equal = np.sum(xs == x)
            out[i] = less + (equal + 1) / 2.0
        return out

    rx = ranks_by_counting([1.0, 1.0, 2.0])
    ry = ranks_by_counting([1.0, 2.0, 3.0])
    rho = np.corrcoef(rx, ry)[0, 1]
    print(f"ranks x  = {rx!r}")
    print(f"ranks y  = {ry!r}")
    print(f"rho      = {rho!r}")

    print()
    print("== intersect fixture: emb {a,b,c}, counts {b:1, c:3, d:4} ==")
    counts = {"b": 1.0, "c": 3.0}
    total = sum(counts.values())
    print(f"vocab = ['b', 'c'], probs = {[counts['b']/total, counts['c']/total]!r}")

    print()
    print("== SIF weight fixture: a = 1e-3, p = 3e-3 ==")
    a = 1e-3
    print(f"weight = {a / (a + 3e-3)!r}")

    print()
    print("== pseudo-uniform token weights: tokens [a, a, b] ==")
    tokens = ["a", "a", "b"]
    counts = {t: tokens.count(t) for t in set(tokens)}
    nv = len(counts)
    w = np.array([1.0 / (nv * counts[t]) for t in tokens])
    print(f"weights = {w!r}, sum = {w.sum()!r}")

    print()
    print("== partition fixture: whitened 1-D (0.5, -2.0), p=(0.8,0.2), c=+-1 ==")
    vals = np.array([0.5, -2.0])
    p = np.array([0.8, 0.2])
    z_pos = p @ np.exp(vals * 1.0)
    z_neg = p @ np.exp(vals * -1.0)
    print(f"Z(+1) = {z_pos!r}")
    print(f"Z(-1) = {z_neg!r}")
    zs = np.array([z_pos, z_neg])
    print(f"mean Z = {zs.mean()!r}, rel std = {zs.std() / zs.mean()!r}")

    print()
    print("== cosine fixture: (1,1) vs (1,0) ==")
    u = np.array([1.0, 1.0])
    v = np.array([1.0, 0.0])
    print(f"cosine = {u @ v / (np.linalg.norm(u) * np.linalg.norm(v))!r}")

    print()
    print("== token centering fixture: [(a,v1),(a,v1),(b,v2)], v1=(1,0), v2=(0,2) ==")
    v1 = np.array([1.0, 0.0])
    v2 = np.array([0.0, 2.0])
    tok = np.array([v1, v1, v2])
    print(f"token-uniform mean  = {tok.mean(axis=0)!r}")
    w = np.array([0.25, 0.25, 0.5])
    print(f"pseudo-uniform mean = {w @ tok!r}")

    print()
    print("== testset frequency fixture: sentences ['a b', 'a'], vocab [a,b,c] ==")
    counts = np.array([2.0, 1.0, 0.0])
    print(f"probs = {counts / counts.sum()!r}")


if __name__ == "__main__":
    main()
