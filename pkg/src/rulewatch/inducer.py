"""Depth-limited decision tree whose leaves become conjunctive rules.

Splits greedily minimize Gini impurity over midpoints of consecutive
distinct feature values. Candidate comparison is exact (integer cross
multiplication), with ties broken by lowest feature index then lowest
threshold, so induction is fully deterministic. Root-to-leaf paths flatten
into rules whose premises partition the feature space: every sample
satisfies exactly one induced rule.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Union

import numpy as np

from .data import DataTable
from .rules import Condition, Rule, Ruleset


class InducerError(ValueError):
    """Induction inputs or outputs unusable for rule generation."""


class RuleQualityWarning(UserWarning):
    """Induced ruleset likely to produce flat, uninformative hit histograms."""


@dataclass(frozen=True)
class TreeLeaf:
    label: str
    support: int


@dataclass(frozen=True)
class TreeSplit:
    feature: str
    threshold: float
    left: "TreeNode"
    right: "TreeNode"


TreeNode = Union[TreeLeaf, TreeSplit]


def induce_tree(
    dataset: DataTable,
    max_depth: int = 4,
    min_leaf: int = 50,
    seed: int = 0,
) -> TreeNode:
    """Grow a binary classification tree on a labeled table.

    ``seed`` is reserved for API stability; all tie-breaking is rule-based,
    so induction is deterministic without it.
    """
    if dataset.labels is None:
        raise InducerError("induction needs a labeled dataset")
    if dataset.n_rows == 0:
        raise InducerError("induction needs a nonempty dataset")
    if max_depth < 1:
        raise InducerError(f"max_depth must be >= 1, got {max_depth}")
    if min_leaf < 1:
        raise InducerError(f"min_leaf must be >= 1, got {min_leaf}")
    classes = tuple(sorted(set(dataset.labels)))
    if len(classes) < 2:
        raise InducerError(f"induction needs >= 2 classes, got {classes}")
    class_code = {c: i for i, c in enumerate(classes)}
    y = np.array([class_code[label] for label in dataset.labels], dtype=np.int64)
    return _grow(dataset.X, y, dataset.columns, classes, depth_left=max_depth, min_leaf=min_leaf)


def _leaf(y: np.ndarray, classes: tuple[str, ...]) -> TreeLeaf:
    counts = np.bincount(y, minlength=len(classes))
    best = counts.max()
    # Lexicographically smallest label among ties; classes are sorted.
    label = classes[int(np.nonzero(counts == best)[0][0])]
    return TreeLeaf(label=label, support=int(len(y)))


def _grow(
    X: np.ndarray,
    y: np.ndarray,
    columns: tuple[str, ...],
    classes: tuple[str, ...],
    depth_left: int,
    min_leaf: int,
) -> TreeNode:
    if depth_left == 0 or len(y) < 2 * min_leaf or np.all(y == y[0]):
        return _leaf(y, classes)
    split = _best_split(X, y, len(classes), min_leaf)
    if split is None:
        return _leaf(y, classes)
    f, threshold = split
    left_mask = X[:, f] <= threshold
    return TreeSplit(
        feature=columns[f],
        threshold=threshold,
        left=_grow(X[left_mask], y[left_mask], columns, classes, depth_left - 1, min_leaf),
        right=_grow(X[~left_mask], y[~left_mask], columns, classes, depth_left - 1, min_leaf),
    )


def _best_split(
    X: np.ndarray, y: np.ndarray, n_classes: int, min_leaf: int
) -> tuple[int, float] | None:
    """Exact Gini-optimal (feature, midpoint threshold), or None.

    Minimizing weighted Gini impurity is equivalent to maximizing
    sum_c nl_c^2 / nl + sum_c nr_c^2 / nr; that score is the fraction
    (A*nr + B*nl) / (nl*nr) with integer numerator and denominator, which
    permits exact comparison. A float prefilter narrows the field, then
    exact arithmetic decides among near-ties.
    """
    n, d = X.shape
    total = np.bincount(y, minlength=n_classes).astype(np.int64)
    candidates: list[tuple[int, int, int, float]] = []  # (num, den, feature, threshold)
    best_float = -np.inf
    for f in range(d):
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        ys = y[order]
        boundaries = np.nonzero(xs[:-1] < xs[1:])[0]
        if boundaries.size == 0:
            continue
        onehot = np.zeros((n, n_classes), dtype=np.int64)
        onehot[np.arange(n), ys] = 1
        cum = np.cumsum(onehot, axis=0)
        nl = boundaries + 1
        keep = (nl >= min_leaf) & (n - nl >= min_leaf)
        if not np.any(keep):
            continue
        boundaries = boundaries[keep]
        nl = nl[keep]
        nr = n - nl
        nl_c = cum[boundaries]
        nr_c = total[None, :] - nl_c
        A = (nl_c * nl_c).sum(axis=1)
        B = (nr_c * nr_c).sum(axis=1)
        num = A * nr + B * nl
        den = nl * nr
        thresholds = (xs[boundaries] + xs[boundaries + 1]) / 2.0
        fscore = num / den
        best_float = max(best_float, float(fscore.max()))
        for i in range(len(boundaries)):
            candidates.append((int(num[i]), int(den[i]), f, float(thresholds[i])))
    if not candidates:
        return None
    # num and den are exactly representable doubles here, so the float
    # score is within one ulp; a 1e-9 band safely contains the exact best.
    shortlist = [
        c for c in candidates if c[0] / c[1] >= best_float - 1e-9 * max(abs(best_float), 1.0)
    ]
    best = max(
        shortlist,
        key=lambda c: (Fraction(c[0], c[1]), -c[2], -c[3]),
    )
    parent_score = Fraction(int((total * total).sum()), n)
    if Fraction(best[0], best[1]) <= parent_score:
        return None  # no impurity decrease
    return best[2], best[3]


def predict_tree(tree: TreeNode, sample: Mapping[str, float]) -> str:
    """Route one sample to its leaf label."""
    node = tree
    while isinstance(node, TreeSplit):
        node = node.left if sample[node.feature] <= node.threshold else node.right
    return node.label


def tree_to_rules(tree: TreeNode) -> Ruleset:
    """One rule per leaf: the conjunction of path conditions, left to right.

    A left edge contributes ``feature <= t``, a right edge ``feature > t``.
    A tree with no split would yield an empty premise, which the rule model
    forbids, so it is rejected.
    """
    if isinstance(tree, TreeLeaf):
        raise InducerError(
            "tree has no splits; a single always-true rule cannot be expressed"
        )
    rules: list[Rule] = []

    def walk(node: TreeNode, path: tuple[Condition, ...]) -> None:
        if isinstance(node, TreeLeaf):
            rules.append(Rule(id=len(rules) + 1, premise=path, consequence=node.label))
            return
        walk(node.left, path + (Condition(node.feature, "<=", node.threshold),))
        walk(node.right, path + (Condition(node.feature, ">", node.threshold),))

    walk(tree, ())
    return Ruleset(tuple(rules))


def induce_ruleset(
    dataset: DataTable,
    max_depth: int = 4,
    min_leaf: int = 50,
    seed: int = 0,
    warn: bool = True,
) -> Ruleset:
    """Induce a tree and flatten it to rules, warning on flat hit shapes.

    Few rules, or rules satisfied by nearly all training samples, flatten
    the hit histograms that downstream detection fingerprints, degrading
    its resolution.
    """
    tree = induce_tree(dataset, max_depth=max_depth, min_leaf=min_leaf, seed=seed)
    ruleset = tree_to_rules(tree)
    if warn:
        if ruleset.n_rules < 4:
            warnings.warn(
                f"only {ruleset.n_rules} rules induced; hit histograms this short "
                "carry little distribution information",
                RuleQualityWarning,
                stacklevel=2,
            )
        mask = ruleset.hit_mask_table(dataset.X, dataset.columns)
        rates = mask.mean(axis=0)
        near_universal = [i + 1 for i, r in enumerate(rates) if r > 0.9]
        if near_universal:
            warnings.warn(
                f"rules {near_universal} are satisfied by >90% of training samples; "
                "near-universal rules flatten the hit histograms",
                RuleQualityWarning,
                stacklevel=2,
            )
    return ruleset
