"""Conjunctive if-then rules over named numeric features.

A ruleset is an ordered list of rules; rule order is load-bearing because
downstream hit histograms are indexed by rule position. The text syntax is
line oriented::

    # comment
    if x1 <= 3.2 and x2 > 0.5 then 1
    if d in [0, 0.4] then safe

Keywords are case-insensitive. Comparison thresholds are decimal reals and
are compared with exact binary floating-point semantics, so hit counts are
deterministic for a given ruleset text.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np


class RuleError(ValueError):
    """Base class for ruleset construction and evaluation failures."""


class RuleSyntaxError(RuleError):
    """Rule text that does not conform to the grammar."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class MissingFeatureError(RuleError):
    """A premise references a feature absent from the evaluated sample."""


class NonNumericValueError(RuleError):
    """A premise feature resolved to a non-numeric value."""


_COMPARATORS = ("<=", "<", ">=", ">", "==")
_KEYWORDS = frozenset({"if", "and", "then", "in"})


@dataclass(frozen=True)
class Interval:
    """Numeric interval with independently open/closed endpoints."""

    lo: float
    hi: float
    lo_closed: bool = True
    hi_closed: bool = True

    def __post_init__(self) -> None:
        if not (self.lo <= self.hi):
            raise RuleError(f"interval lower bound {self.lo} exceeds upper bound {self.hi}")

    def contains(self, value: float) -> bool:
        lo_ok = value >= self.lo if self.lo_closed else value > self.lo
        hi_ok = value <= self.hi if self.hi_closed else value < self.hi
        return lo_ok and hi_ok

    def contains_array(self, values: np.ndarray) -> np.ndarray:
        lo_ok = values >= self.lo if self.lo_closed else values > self.lo
        hi_ok = values <= self.hi if self.hi_closed else values < self.hi
        return lo_ok & hi_ok

    def to_text(self) -> str:
        lb = "[" if self.lo_closed else "("
        rb = "]" if self.hi_closed else ")"
        return f"{lb}{_format_number(self.lo)}, {_format_number(self.hi)}{rb}"


@dataclass(frozen=True)
class Condition:
    """Single comparison on one feature.

    ``operator`` is one of ``<, <=, >, >=, ==, in``; ``interval`` is used
    only by ``in`` and ``threshold`` by everything else.
    """

    feature: str
    operator: str
    threshold: float = 0.0
    interval: Interval | None = None

    def __post_init__(self) -> None:
        if self.operator == "in":
            if self.interval is None:
                raise RuleError("'in' condition requires an interval")
        elif self.operator not in _COMPARATORS:
            raise RuleError(f"unknown operator {self.operator!r}")

    def holds(self, value: float) -> bool:
        op = self.operator
        if op == "in":
            return self.interval.contains(value)
        t = self.threshold
        if op == "<":
            return value < t
        if op == "<=":
            return value <= t
        if op == ">":
            return value > t
        if op == ">=":
            return value >= t
        return value == t

    def holds_array(self, values: np.ndarray) -> np.ndarray:
        op = self.operator
        if op == "in":
            return self.interval.contains_array(values)
        t = self.threshold
        if op == "<":
            return values < t
        if op == "<=":
            return values <= t
        if op == ">":
            return values > t
        if op == ">=":
            return values >= t
        return values == t

    def to_text(self) -> str:
        if self.operator == "in":
            return f"{self.feature} in {self.interval.to_text()}"
        return f"{self.feature} {self.operator} {_format_number(self.threshold)}"


@dataclass(frozen=True)
class Rule:
    """One if-then rule: a non-empty conjunction of conditions and a label."""

    id: int
    premise: tuple[Condition, ...]
    consequence: str

    def __post_init__(self) -> None:
        if len(self.premise) == 0:
            raise RuleError(f"rule {self.id}: empty premise")

    def to_text(self) -> str:
        conds = " and ".join(c.to_text() for c in self.premise)
        return f"if {conds} then {self.consequence}"


@dataclass(frozen=True)
class Ruleset:
    """Ordered, immutable collection of rules; ids must run 1..N."""

    rules: tuple[Rule, ...]

    def __post_init__(self) -> None:
        ids = [r.id for r in self.rules]
        if ids != list(range(1, len(ids) + 1)):
            raise RuleError(f"rule ids must be contiguous 1..{len(ids)}, got {ids}")

    def __len__(self) -> int:
        return len(self.rules)

    @property
    def n_rules(self) -> int:
        return len(self.rules)

    @cached_property
    def feature_names(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for rule in self.rules:
            for cond in rule.premise:
                seen.setdefault(cond.feature, None)
        return tuple(seen)

    def hit_mask_table(self, X: np.ndarray, columns: Sequence[str]) -> np.ndarray:
        """Boolean hit table of shape (n_samples, n_rules) for a feature matrix."""
        col_index = {name: i for i, name in enumerate(columns)}
        n = X.shape[0]
        out = np.empty((n, len(self.rules)), dtype=bool)
        for j, rule in enumerate(self.rules):
            mask = np.ones(n, dtype=bool)
            for cond in rule.premise:
                idx = col_index.get(cond.feature)
                if idx is None:
                    raise MissingFeatureError(
                        f"rule {rule.id}: feature {cond.feature!r} not in columns {list(columns)}"
                    )
                mask &= cond.holds_array(X[:, idx])
            out[:, j] = mask
        return out


def evaluate_premise(rule: Rule, sample: Mapping[str, float]) -> bool:
    """True iff every condition of the rule holds on the sample.

    The consequence is ignored: hits are premise satisfaction only, so
    unlabeled operational data evaluates identically to labeled data.
    """
    for cond in rule.premise:
        try:
            value = sample[cond.feature]
        except KeyError:
            raise MissingFeatureError(
                f"rule {rule.id}: sample is missing feature {cond.feature!r}"
            ) from None
        if isinstance(value, bool) or not isinstance(
            value, (int, float, np.integer, np.floating)
        ):
            raise NonNumericValueError(
                f"rule {rule.id}: feature {cond.feature!r} has non-numeric value {value!r}"
            )
        if not cond.holds(float(value)):
            return False
    return True


def ruleset_hits(ruleset: Ruleset, sample: Mapping[str, float]) -> list[bool]:
    """Per-rule hit mask for one sample; a sample may hit many rules or none."""
    return [evaluate_premise(rule, sample) for rule in ruleset.rules]


# ---------------------------------------------------------------------------
# Text syntax
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""(?P<ws>\s+)
      | (?P<number>[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
      | (?P<cmp><=|>=|==|<|>)
      | (?P<ident>[A-Za-z_][A-Za-z0-9_.\-]*)
      | (?P<lbracket>[\[\(])
      | (?P<rbracket>[\]\)])
      | (?P<comma>,)
    """,
    re.VERBOSE,
)


@dataclass
class _Token:
    kind: str
    text: str
    column: int


def _tokenize(text: str, line_no: int) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise RuleSyntaxError(f"unexpected character {text[pos]!r}", line_no, pos + 1)
        kind = m.lastgroup
        if kind != "ws":
            tok_text = m.group()
            if kind == "ident" and tok_text.lower() in _KEYWORDS:
                kind = tok_text.lower()
            tokens.append(_Token(kind, tok_text, m.start() + 1))
        pos = m.end()
    return tokens


class _LineParser:
    def __init__(self, tokens: list[_Token], line_no: int, line_len: int):
        self.tokens = tokens
        self.line_no = line_no
        self.line_len = line_len
        self.pos = 0

    def _fail(self, message: str) -> None:
        col = self.tokens[self.pos].column if self.pos < len(self.tokens) else self.line_len + 1
        raise RuleSyntaxError(message, self.line_no, col)

    def peek(self) -> _Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def expect(self, kind: str, what: str) -> _Token:
        tok = self.peek()
        if tok is None or tok.kind != kind:
            got = f"{tok.text!r}" if tok else "end of line"
            self._fail(f"expected {what}, got {got}")
        self.pos += 1
        return tok

    def parse_rule(self, rule_id: int) -> Rule:
        self.expect("if", "'if'")
        tok = self.peek()
        if tok is not None and tok.kind == "then":
            self._fail("empty premise: expected at least one condition")
        conditions = [self.parse_condition()]
        while True:
            tok = self.peek()
            if tok is not None and tok.kind == "and":
                self.pos += 1
                conditions.append(self.parse_condition())
            else:
                break
        self.expect("then", "'and' or 'then'")
        label = self.expect_label()
        if self.peek() is not None:
            self._fail(f"unexpected trailing token {self.peek().text!r}")
        return Rule(id=rule_id, premise=tuple(conditions), consequence=label)

    def expect_label(self) -> str:
        tok = self.peek()
        if tok is None:
            self._fail("expected class label after 'then'")
        if tok.kind not in ("ident", "number"):
            self._fail(f"expected class label, got {tok.text!r}")
        self.pos += 1
        return tok.text

    def parse_condition(self) -> Condition:
        feat = self.expect("ident", "feature name")
        tok = self.peek()
        if tok is None:
            self._fail("expected comparison or 'in' after feature name")
        if tok.kind == "cmp":
            self.pos += 1
            num = self.expect("number", "numeric threshold")
            return Condition(feature=feat.text, operator=tok.text, threshold=float(num.text))
        if tok.kind == "in":
            self.pos += 1
            lb = self.expect("lbracket", "'[' or '('")
            lo = self.expect("number", "interval lower bound")
            self.expect("comma", "','")
            hi = self.expect("number", "interval upper bound")
            rb = self.expect("rbracket", "']' or ')'")
            lo_v, hi_v = float(lo.text), float(hi.text)
            if lo_v > hi_v:
                raise RuleSyntaxError(
                    f"malformed interval: lower bound {lo.text} exceeds upper bound {hi.text}",
                    self.line_no,
                    lo.column,
                )
            interval = Interval(lo_v, hi_v, lb.text == "[", rb.text == "]")
            return Condition(feature=feat.text, operator="in", interval=interval)
        self._fail(f"expected comparison or 'in', got {tok.text!r}")


def parse_ruleset(text: str) -> Ruleset:
    """Parse ruleset text; rules are numbered 1..N in textual order."""
    rules: list[Rule] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        tokens = _tokenize(line, line_no)
        parser = _LineParser(tokens, line_no, len(line))
        rules.append(parser.parse_rule(len(rules) + 1))
    return Ruleset(tuple(rules))


def format_ruleset(ruleset: Ruleset) -> str:
    """Canonical one-line-per-rule text; parse(format(r)) equals r."""
    return "\n".join(rule.to_text() for rule in ruleset.rules) + ("\n" if ruleset.rules else "")


def _format_number(x: float) -> str:
    return repr(float(x))
