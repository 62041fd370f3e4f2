"""Regression forest: bootstrap-resampled variance-reduction trees, averaged.

Every tree gets its own RNG stream spawned from the forest seed by tree
index, so the fitted forest does not depend on how many threads grew it or in
which order the trees finished.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numba
import numpy as np


@numba.njit(cache=True, nogil=True)
def _grow_tree(X, y, order, w, mtry, min_node, seed):
    """Grow one tree on bootstrap multiplicities ``w``.

    ``order[f]`` lists all training rows sorted by column f. Each node owns
    the same slice ``[lo, hi)`` of every per-feature row list, so a split is a
    stable partition of that slice and no node ever re-sorts.
    """
    np.random.seed(seed)
    p, n = order.shape
    XT = np.ascontiguousarray(X.T)
    n_u = 0
    for i in range(n):
        if w[i] > 0:
            n_u += 1
    seg = np.empty((p, n_u), dtype=np.int64)
    for f in range(p):
        k = 0
        for q in range(n):
            r = order[f, q]
            if w[r] > 0:
                seg[f, k] = r
                k += 1

    cap = 2 * n_u + 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros(cap)
    goes_left = np.zeros(n, dtype=np.bool_)
    buf = np.empty(n_u, dtype=np.int64)
    feats = np.arange(p)
    st_node = np.empty(cap, dtype=np.int64)
    st_lo = np.empty(cap, dtype=np.int64)
    st_hi = np.empty(cap, dtype=np.int64)
    st_node[0] = 0
    st_lo[0] = 0
    st_hi[0] = n_u
    top = 1
    n_nodes = 1

    while top > 0:
        top -= 1
        node = st_node[top]
        lo = st_lo[top]
        hi = st_hi[top]
        total = 0.0
        count = 0.0
        ymin = np.inf
        ymax = -np.inf
        for q in range(lo, hi):
            r = seg[0, q]
            v = y[r]
            total += w[r] * v
            count += w[r]
            if v < ymin:
                ymin = v
            if v > ymax:
                ymax = v
        value[node] = total / count
        if count <= min_node or ymin == ymax:
            continue

        parent_score = total * total / count
        best_score = parent_score
        best_f = -1
        best_thr = 0.0
        for k in range(mtry):
            r = k + np.random.randint(0, p - k)
            tmp = feats[k]
            feats[k] = feats[r]
            feats[r] = tmp
            f = feats[k]
            left_sum = 0.0
            left_n = 0.0
            for q in range(lo, hi - 1):
                row = seg[f, q]
                left_sum += w[row] * y[row]
                left_n += w[row]
                a = XT[f, row]
                b = XT[f, seg[f, q + 1]]
                if a == b:
                    continue
                right_sum = total - left_sum
                score = left_sum * left_sum / left_n + right_sum * right_sum / (count - left_n)
                if score > best_score:
                    best_score = score
                    best_f = f
                    thr = 0.5 * (a + b)
                    if thr >= b:
                        thr = a
                    best_thr = thr
        if best_f < 0 or best_score - parent_score <= 1e-12 * (abs(parent_score) + 1.0):
            continue

        mid = lo
        for q in range(lo, hi):
            row = seg[best_f, q]
            gl = XT[best_f, row] <= best_thr
            goes_left[row] = gl
            if gl:
                mid += 1
        for f in range(p):
            a = lo
            b = 0
            for q in range(lo, hi):
                row = seg[f, q]
                if goes_left[row]:
                    seg[f, a] = row
                    a += 1
                else:
                    buf[b] = row
                    b += 1
            for q in range(b):
                seg[f, a + q] = buf[q]

        feature[node] = best_f
        threshold[node] = best_thr
        left[node] = n_nodes
        right[node] = n_nodes + 1
        st_node[top] = n_nodes
        st_lo[top] = lo
        st_hi[top] = mid
        top += 1
        st_node[top] = n_nodes + 1
        st_lo[top] = mid
        st_hi[top] = hi
        top += 1
        n_nodes += 2

    return (feature[:n_nodes].copy(), threshold[:n_nodes].copy(), left[:n_nodes].copy(),
            right[:n_nodes].copy(), value[:n_nodes].copy())


@numba.njit(cache=True, nogil=True)
def _predict_trees(X, feature, threshold, left, right, value, offsets):
    n = X.shape[0]
    n_trees = offsets.shape[0] - 1
    out = np.zeros(n)
    per_tree = np.zeros((n_trees, n))
    for b in range(n_trees):
        base = offsets[b]
        for i in range(n):
            node = 0
            while feature[base + node] >= 0:
                if X[i, feature[base + node]] <= threshold[base + node]:
                    node = left[base + node]
                else:
                    node = right[base + node]
            per_tree[b, i] = value[base + node]
    # sum in tree-index order
    for b in range(n_trees):
        for i in range(n):
            out[i] += per_tree[b, i]
    return out / n_trees, per_tree


@dataclass(frozen=True)
class ForestModel:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    offsets: np.ndarray  # tree b occupies [offsets[b], offsets[b+1])
    B: int
    mtry: int
    min_node: int
    seed: int
    n_features: int

    def predict(self, X) -> np.ndarray:
        return predict_forest(self, X)

    def tree(self, b: int) -> dict:
        s = slice(self.offsets[b], self.offsets[b + 1])
        return {"feature": self.feature[s].tolist(), "threshold": self.threshold[s].tolist(),
                "left": self.left[s].tolist(), "right": self.right[s].tolist(),
                "value": self.value[s].tolist()}

    def to_dict(self) -> dict:
        return {"kind": "forest", "B": self.B, "mtry": self.mtry, "min_node": self.min_node,
                "seed": self.seed, "trees": [self.tree(b) for b in range(self.B)]}


def default_mtry(n_features: int) -> int:
    return max(1, n_features // 3)


def tree_seeds(seed: int, B: int) -> list[tuple[int, int]]:
    """(bootstrap seed, split seed) for each tree index."""
    children = np.random.SeedSequence(seed).spawn(B)
    out = []
    for ss in children:
        a, b = ss.generate_state(2, dtype=np.uint32)
        out.append((int(a), int(b)))
    return out


def fit_forest(
    X,
    d,
    B: int = 500,
    mtry: int | None = None,
    min_node: int = 5,
    seed: int = 0,
    bootstrap: bool = True,
    n_jobs: int = 1,
) -> ForestModel:
    """Grow ``B`` regression trees on bootstrap resamples of ``(X, d)``."""
    X = np.ascontiguousarray(X, dtype=float)
    d = np.ascontiguousarray(d, dtype=float)
    if X.ndim != 2 or X.shape[0] != d.size:
        raise ValueError(f"shape mismatch: X{X.shape}, d{d.shape}")
    if not (np.isfinite(X).all() and np.isfinite(d).all()):
        raise ValueError("X and d must be finite")
    n, p = X.shape
    if n == 0:
        raise ValueError("empty training set")
    if B < 1:
        raise ValueError("B must be >= 1")
    mtry = default_mtry(p) if mtry is None else int(mtry)
    if p > 0 and not 1 <= mtry <= p:
        raise ValueError(f"mtry must lie in [1, {p}], got {mtry}")
    if min_node < 1:
        raise ValueError("min_node must be >= 1")

    seeds = tree_seeds(seed, B)
    if np.ptp(d) == 0.0 or p == 0:
        # every tree is a single leaf holding the constant (or, without features, its sample mean)
        def grow(b):
            if np.ptp(d) == 0.0 or not bootstrap:
                v = d[0] if np.ptp(d) == 0.0 else d.mean()
            else:
                v = d[np.random.default_rng(seeds[b][0]).integers(0, n, n)].mean()
            return (np.array([-1]), np.zeros(1), np.array([-1]), np.array([-1]), np.array([float(v)]))
    else:
        order = np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T.astype(np.int64))

        def grow(b):
            boot_seed, split_seed = seeds[b]
            if bootstrap:
                sample = np.random.default_rng(boot_seed).integers(0, n, n)
                w = np.bincount(sample, minlength=n).astype(float)
            else:
                w = np.ones(n)
            return _grow_tree(X, d, order, w, mtry, min_node, split_seed)

    if n_jobs > 1 and B > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            trees = list(pool.map(grow, range(B)))
    else:
        trees = [grow(b) for b in range(B)]

    sizes = np.array([t[0].size for t in trees])
    offsets = np.concatenate(([0], np.cumsum(sizes))).astype(np.int64)
    return ForestModel(
        feature=np.concatenate([t[0] for t in trees]).astype(np.int64),
        threshold=np.concatenate([t[1] for t in trees]),
        left=np.concatenate([t[2] for t in trees]).astype(np.int64),
        right=np.concatenate([t[3] for t in trees]).astype(np.int64),
        value=np.concatenate([t[4] for t in trees]),
        offsets=offsets,
        B=B, mtry=mtry, min_node=min_node, seed=seed, n_features=p,
    )


def predict_forest(model: ForestModel, X, per_tree: bool = False):
    X = np.ascontiguousarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValueError(f"expected {model.n_features} columns, got {X.shape}")
    mean, trees = _predict_trees(X, model.feature, model.threshold, model.left, model.right,
                                 model.value, model.offsets)
    return (mean, trees) if per_tree else mean
