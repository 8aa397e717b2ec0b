import numpy as np
import pytest

from rulewatch import HitHistogram, parse_ruleset


@pytest.fixture
def two_rule_set():
    return parse_ruleset(
        "if x1 <= 3.2 and x2 > 0.5 then 1\n"
        "if x1 > 3.2 then 0\n"
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_histogram(rng, n_rules, split_size):
    counts = tuple(int(c) for c in rng.integers(0, split_size + 1, n_rules))
    return HitHistogram(counts, split_size)
