"""Isolation Forest anomaly scorer over 45-feature vectors.

Ensemble of random binary trees built on uniform subsamples; anomalies
isolate in shorter paths. The score is s = 2^(-E(h(x)) / c(psi)) where
E(h(x)) averages per-tree path lengths and c(n) is the expected unsuccessful
search path length in a random binary search tree of n points. Training and
scoring are deterministic for a fixed seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .features import FEATURE_COUNT, FeatureVector

EULER_GAMMA = 0.5772156649

MODEL_FORMAT_VERSION = 1


def c(n: int) -> float:
    """Expected unsuccessful-search path length in a BST of n points.

    c(0) = c(1) = 0 (a single point cannot be split); c(2) = 1 uses the exact
    harmonic number H(1) = 1 rather than the log approximation, which avoids a
    discontinuity at the smallest splittable size.
    """
    if n <= 1:
        return 0.0
    if n == 2:
        return 1.0
    return 2.0 * (math.log(n - 1) + EULER_GAMMA) - 2.0 * (n - 1) / n


@dataclass(slots=True)
class LeafNode:
    size: int


@dataclass(slots=True)
class SplitNode:
    feature: int
    value: float
    left: "SplitNode | LeafNode"
    right: "SplitNode | LeafNode"


ITreeNode = SplitNode | LeafNode


@dataclass
class IsolationForestModel:
    trees: list[ITreeNode]
    psi: int
    c_psi: float
    height_limit: int
    seed: int
    n_trees: int
    feature_count: int = FEATURE_COUNT
    _c_cache: dict[int, float] = field(default_factory=dict, repr=False)

    def cached_c(self, n: int) -> float:
        val = self._c_cache.get(n)
        if val is None:
            val = c(n)
            self._c_cache[n] = val
        return val


def _build_tree(X: np.ndarray, idx: np.ndarray, depth: int, limit: int,
                rng: np.random.Generator) -> ITreeNode:
    if depth >= limit or idx.size <= 1:
        return LeafNode(size=int(idx.size))
    sub = X[idx]
    lo = sub.min(axis=0)
    hi = sub.max(axis=0)
    candidates = np.nonzero(hi > lo)[0]
    if candidates.size == 0:
        return LeafNode(size=int(idx.size))
    feat = int(candidates[rng.integers(candidates.size)])
    f_lo, f_hi = float(lo[feat]), float(hi[feat])
    value = float(rng.uniform(f_lo, f_hi))
    while not (f_lo < value < f_hi):
        value = float(rng.uniform(f_lo, f_hi))
    mask = X[idx, feat] < value
    return SplitNode(
        feature=feat,
        value=value,
        left=_build_tree(X, idx[mask], depth + 1, limit, rng),
        right=_build_tree(X, idx[~mask], depth + 1, limit, rng),
    )


def train_forest(data: list[FeatureVector] | np.ndarray, n_trees: int = 100,
                 psi: int = 256, seed: int = 0) -> IsolationForestModel:
    """Train an ensemble on uniform random subsamples of the data.

    Each tree is built on min(psi, len(data)) vectors sampled without
    replacement; splits pick a uniform random feature with positive range and
    a uniform random value strictly inside that feature's subsample range.
    Recursion stops at the height limit, a single point, or a zero-range
    subsample.
    """
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    if psi < 2:
        raise ValueError("psi must be >= 2")
    X = np.asarray([fv.values for fv in data] if not isinstance(data, np.ndarray) else data,
                   dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != FEATURE_COUNT:
        raise ValueError(f"training data must be (n, {FEATURE_COUNT})")
    n = X.shape[0]
    if n < 2:
        raise ValueError("need at least 2 training vectors")

    effective_psi = min(psi, n)
    height_limit = math.ceil(math.log2(effective_psi))
    rng = np.random.default_rng(seed)
    trees = [
        _build_tree(X, rng.choice(n, size=effective_psi, replace=False), 0, height_limit, rng)
        for _ in range(n_trees)
    ]
    return IsolationForestModel(
        trees=trees, psi=effective_psi, c_psi=c(effective_psi),
        height_limit=height_limit, seed=seed, n_trees=n_trees,
    )


def path_length(tree: ITreeNode, x: FeatureVector | np.ndarray | list[float],
                c_cache: dict[int, float] | None = None) -> float:
    """Edges traversed to the reached leaf, plus c(size) for unresolved leaves."""
    values = x.values if isinstance(x, FeatureVector) else x
    if isinstance(values, np.ndarray):
        values = values.tolist()
    depth = 0
    node = tree
    while type(node) is SplitNode:
        node = node.left if values[node.feature] < node.value else node.right
        depth += 1
    size = node.size
    if size <= 1:
        return float(depth)
    if c_cache is not None:
        adj = c_cache.get(size)
        if adj is None:
            adj = c(size)
            c_cache[size] = adj
        return depth + adj
    return depth + c(size)


def mean_path_length(model: IsolationForestModel, x: FeatureVector | np.ndarray) -> float:
    values = x.values if isinstance(x, FeatureVector) else np.asarray(x)
    listed = values.tolist()
    total = 0.0
    for tree in model.trees:
        total += path_length(tree, listed, model._c_cache)
    return total / len(model.trees)


def anomaly_score(model: IsolationForestModel, x: FeatureVector | np.ndarray) -> float:
    """s = 2^(-E(h(x)) / c(psi)); higher is more anomalous, always in (0, 1)."""
    return 2.0 ** (-mean_path_length(model, x) / model.c_psi)


def _node_to_doc(node: ITreeNode) -> dict:
    if type(node) is LeafNode:
        return {"n": node.size}
    return {"f": node.feature, "v": node.value,
            "l": _node_to_doc(node.left), "r": _node_to_doc(node.right)}


def _node_from_doc(doc: dict) -> ITreeNode:
    if "n" in doc:
        return LeafNode(size=int(doc["n"]))
    return SplitNode(feature=int(doc["f"]), value=float(doc["v"]),
                     left=_node_from_doc(doc["l"]), right=_node_from_doc(doc["r"]))


def save_model(model: IsolationForestModel, path: str | Path) -> None:
    doc = {
        "version": MODEL_FORMAT_VERSION,
        "psi": model.psi,
        "n_trees": model.n_trees,
        "seed": model.seed,
        "c_psi": model.c_psi,
        "height_limit": model.height_limit,
        "feature_count": model.feature_count,
        "trees": [_node_to_doc(t) for t in model.trees],
    }
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def load_model(path: str | Path) -> IsolationForestModel:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    version = doc.get("version")
    if version != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {version!r}; "
                         f"expected {MODEL_FORMAT_VERSION}")
    return IsolationForestModel(
        trees=[_node_from_doc(t) for t in doc["trees"]],
        psi=int(doc["psi"]),
        c_psi=float(doc["c_psi"]),
        height_limit=int(doc["height_limit"]),
        seed=int(doc["seed"]),
        n_trees=int(doc["n_trees"]),
        feature_count=int(doc.get("feature_count", FEATURE_COUNT)),
    )
