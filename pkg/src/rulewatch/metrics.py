"""Histogram-comparison metrics.

Two families:

* Value-frequency information metrics. Each histogram is read as a sequence
  of exact values (integer hit counts over a common split size); the
  probability of a value is its multiplicity among the rules, and the joint
  distribution counts exact value pairs per rule. Plain mutual information
  on these distributions is blind to WHERE values sit, so two histograms
  holding the same values in different rule positions look identical; the
  weighted variant scales every entropy term by the mean absolute per-rule
  difference, which restores position sensitivity.

* Per-rule Gaussian surprise. Hit frequencies of each rule across a group
  of splits are modeled as independent Gaussians (one per rule, avoiding a
  joint covariance estimate). Entropies of interval masses around observed
  hits, and their ratio against a reference group, give the rule-based
  information score: ~1 for groups resembling the reference, ~0 (or a
  +inf sentinel) for strongly diverging ones.

All logarithms are natural.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .histogram import HitHistogram

SIGMA_FLOOR_DEFAULT = 1e-6
PROB_CLAMP = 1e-12

_SQRT2 = math.sqrt(2.0)
# Floating guard: analytically the weighted information is nonnegative, but
# the final three-term subtraction may round to a tiny negative.
_NEG_EPS = -1e-12


class MetricError(ValueError):
    """Incompatible metric inputs (usually mismatched rule counts)."""


def _check_same_rules(a: HitHistogram, b: HitHistogram) -> None:
    if a.n_rules != b.n_rules:
        raise MetricError(f"histograms have {a.n_rules} and {b.n_rules} rules")


# ---------------------------------------------------------------------------
# Norms and the pair weight
# ---------------------------------------------------------------------------

def lp_norm(a: HitHistogram, b: HitHistogram, p: int) -> float:
    """l1 or l2 distance between hit-frequency vectors.

    Computed on integer counts when both histograms share a split size, so
    equal inputs give exactly 0 and decimal inputs survive round-tripping.
    """
    _check_same_rules(a, b)
    if p not in (1, 2):
        raise MetricError(f"p must be 1 or 2, got {p}")
    if a.split_size == b.split_size:
        if p == 1:
            return sum(abs(x - y) for x, y in zip(a.counts, b.counts)) / a.split_size
        return math.sqrt(sum((x - y) ** 2 for x, y in zip(a.counts, b.counts))) / a.split_size
    diffs = [abs(x - y) for x, y in zip(a.values, b.values)]
    if p == 1:
        return math.fsum(diffs)
    return math.sqrt(math.fsum(d * d for d in diffs))


def alpha_weight(a: HitHistogram, b: HitHistogram) -> float:
    """Mean absolute per-rule hit difference; the pair weight in [0, 1]."""
    return lp_norm(a, b, 1) / a.n_rules


# ---------------------------------------------------------------------------
# Value-frequency distributions and information metrics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ValueDistribution:
    """Empirical distribution of the exact values occurring in a histogram."""

    support: tuple
    probabilities: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.support) != len(self.probabilities):
            raise MetricError("support and probabilities differ in length")
        if any(p <= 0 for p in self.probabilities):
            raise MetricError("probabilities must be positive")
        total = math.fsum(self.probabilities)
        if abs(total - 1.0) > 1e-12:
            raise MetricError(f"probabilities sum to {total}, not 1")


def value_distribution(h: HitHistogram) -> ValueDistribution:
    """Probability of each distinct value = multiplicity among the rules / n_rules."""
    mult = Counter(h.counts)
    n_r = h.n_rules
    keys = sorted(mult)
    return ValueDistribution(
        support=tuple(k / h.split_size for k in keys),
        probabilities=tuple(mult[k] / n_r for k in keys),
    )


def joint_value_distribution(a: HitHistogram, b: HitHistogram) -> ValueDistribution:
    """Distribution of exact per-rule value pairs across two histograms."""
    _check_same_rules(a, b)
    mult = Counter(zip(a.counts, b.counts))
    n_r = a.n_rules
    keys = sorted(mult)
    return ValueDistribution(
        support=tuple((ka / a.split_size, kb / b.split_size) for ka, kb in keys),
        probabilities=tuple(mult[k] / n_r for k in keys),
    )


def _rulewise_entropy(mult: Counter, n_r: int, alpha: float) -> float:
    """-sum over rules of a*P(value) * log(a*P(value)), grouped by value.

    The sum depends only on the multiset of value multiplicities, so
    iterating them in sorted order makes the result bit-identical under
    argument swaps and joint rule permutations.
    """
    total = 0.0
    for m in sorted(mult.values()):
        p = alpha * m / n_r
        if 0.0 < p < 1.0:
            total -= m * p * math.log(p)
    return total


def _pair_information(a: HitHistogram, b: HitHistogram, alpha: float) -> float:
    n_r = a.n_rules
    h_a = _rulewise_entropy(Counter(a.counts), n_r, alpha)
    h_b = _rulewise_entropy(Counter(b.counts), n_r, alpha)
    h_ab = _rulewise_entropy(Counter(zip(a.counts, b.counts)), n_r, alpha)
    out = h_a + h_b - h_ab
    if _NEG_EPS < out < 0.0:
        return 0.0
    return out


def mutual_information(a: HitHistogram, b: HitHistogram) -> float:
    """Mutual information between the value distributions of two histograms.

    Invariant under joint permutation of rule positions and under per-value
    relabeling, which is exactly why it cannot separate histograms holding
    the same values in shuffled positions.
    """
    _check_same_rules(a, b)
    return _pair_information(a, b, 1.0)


def weighted_mutual_information(a: HitHistogram, b: HitHistogram) -> float:
    """Mutual information with every term damped by the pair weight.

    The weight is the mean absolute per-rule difference, so identical and
    aligned histograms score exactly 0 (the p*log(p) -> 0 limit), while
    value-preserving position shuffles raise the score.
    """
    _check_same_rules(a, b)
    alpha = alpha_weight(a, b)
    if alpha == 0.0:
        return 0.0
    return _pair_information(a, b, alpha)


# ---------------------------------------------------------------------------
# Per-rule Gaussian machinery
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GaussianParams:
    """Mean and floored population standard deviation of one rule's hits."""

    mu: float
    sigma: float

    def __post_init__(self) -> None:
        if not self.sigma > 0.0:
            raise MetricError(f"sigma must be positive, got {self.sigma}")


@dataclass(frozen=True)
class GaussianBank:
    """One Gaussian per rule, fitted from a group of histograms."""

    per_rule: tuple[GaussianParams, ...]
    source: str = ""

    def __len__(self) -> int:
        return len(self.per_rule)

    def __getitem__(self, i: int) -> GaussianParams:
        return self.per_rule[i]


def gaussian_fit(values: Sequence[float], sigma_floor: float = SIGMA_FLOOR_DEFAULT) -> GaussianParams:
    """Maximum-likelihood normal fit: mean and population (divide-by-n) std.

    The floor keeps zero-variance rules (e.g. never-fired ones) usable.
    """
    n = len(values)
    if n < 2:
        raise MetricError(f"gaussian fit needs at least 2 values, got {n}")
    if not sigma_floor > 0.0:
        raise MetricError("sigma_floor must be positive")
    mu = math.fsum(values) / n
    var = math.fsum((v - mu) ** 2 for v in values) / n
    return GaussianParams(mu=mu, sigma=max(math.sqrt(var), sigma_floor))


def fit_bank(
    group: Sequence[HitHistogram],
    sigma_floor: float = SIGMA_FLOOR_DEFAULT,
    source: str = "",
) -> GaussianBank:
    """Fit one Gaussian per rule over the group's hit frequencies."""
    if len(group) < 2:
        raise MetricError(f"bank fit needs at least 2 histograms, got {len(group)}")
    n_r = group[0].n_rules
    for h in group:
        if h.n_rules != n_r:
            raise MetricError("histograms in a group must share the rule count")
    params = tuple(
        gaussian_fit([h.value(j) for h in group], sigma_floor) for j in range(n_r)
    )
    return GaussianBank(params, source=source)


def interval_mass(g: GaussianParams, center: float, halfwidth: float) -> float:
    """P(center - halfwidth <= X <= center + halfwidth) for X ~ N(mu, sigma).

    Clamped into [PROB_CLAMP, 1 - PROB_CLAMP] so downstream entropies and
    probability ratios stay finite.
    """
    if halfwidth < 0:
        raise MetricError(f"halfwidth must be >= 0, got {halfwidth}")
    z_lo = (center - halfwidth - g.mu) / g.sigma
    z_hi = (center + halfwidth - g.mu) / g.sigma
    # Upper-tail form keeps precision when the interval sits far from mu.
    p = 0.5 * (math.erfc(z_lo / _SQRT2) - math.erfc(z_hi / _SQRT2))
    return min(max(p, PROB_CLAMP), 1.0 - PROB_CLAMP)


def _binary_entropy(p: float) -> float:
    q = 1.0 - p
    h = 0.0
    if p > 0.0:
        h -= p * math.log(p)
    if q > 0.0:
        h -= q * math.log(q)
    return h


def hits_entropy(h: HitHistogram, bank: GaussianBank) -> float:
    """Total binary entropy of own-sigma interval masses around each hit.

    The bank must be the histogram's own group bank; each rule contributes
    at most log(2), so the total is bounded by n_rules * log(2).
    """
    if len(bank) != h.n_rules:
        raise MetricError(f"bank has {len(bank)} rules, histogram {h.n_rules}")
    total = 0.0
    for j in range(h.n_rules):
        g = bank[j]
        total += _binary_entropy(interval_mass(g, h.value(j), g.sigma))
    return total


def conditional_hits_entropy(
    h: HitHistogram, ref_bank: GaussianBank, own_bank: GaussianBank
) -> float:
    """Reference-bank entropy of the histogram, reweighted per rule.

    Each rule's term uses the reference Gaussian (with the reference sigma
    as the interval halfwidth) and is scaled by the ratio of own-bank to
    reference-bank interval mass, so hits that are likely under their own
    group but unlikely under the reference are amplified. Reduces exactly
    to hits_entropy when the two banks coincide.
    """
    if len(ref_bank) != h.n_rules or len(own_bank) != h.n_rules:
        raise MetricError("bank lengths must equal the histogram rule count")
    total = 0.0
    for j in range(h.n_rules):
        ref = ref_bank[j]
        own = own_bank[j]
        value = h.value(j)
        p_ref = interval_mass(ref, value, ref.sigma)
        p_own = interval_mass(own, value, own.sigma)
        gamma = p_own / p_ref
        total += gamma * _binary_entropy(p_ref)
    return total


def rule_based_information(
    group: Sequence[HitHistogram],
    own_bank: GaussianBank,
    ref_bank: GaussianBank,
) -> float:
    """Ratio of a group's mean own entropy to its mean conditional entropy.

    Close to 1 when the group is statistically indistinguishable from the
    reference; toward 0 when the conditional entropy is inflated by
    surprise under the reference. Degenerate conventions: 0/0 -> 1
    (identical reads as in-distribution) and x/0 (x > 0) -> +inf, a
    sentinel that always falls outside any finite baseline interval.
    """
    if not group:
        raise MetricError("group must be nonempty")
    num = math.fsum(hits_entropy(h, own_bank) for h in group) / len(group)
    den = math.fsum(
        conditional_hits_entropy(h, ref_bank, own_bank) for h in group
    ) / len(group)
    if den == 0.0:
        return 1.0 if num == 0.0 else math.inf
    return num / den
