"""Answer verification: exact string match and exact rational arithmetic.

Numeric verification parses the full answer as an arithmetic expression
(+ - * / with parentheses and unary minus, unicode variants accepted) and
evaluates it over ``fractions.Fraction``, so no float rounding enters the
comparison.  A candidate answer that fails to parse labels false; a gold
answer that fails to parse is a data error.

An entailment-based verifier is declared as an extension point but not
implemented here.
"""

from __future__ import annotations

import logging
import re
from fractions import Fraction
from typing import Callable, Optional

from .core import Problem
from .exceptions import ConfigurationError, DataError

logger = logging.getLogger(__name__)

DEFAULT_REL_TOL = 1e-6

_WS_RE = re.compile(r"\s+")

# Unicode operator spellings normalised before tokenising.
_UNICODE_OPS = {
    "−": "-",  # minus sign
    "×": "*",  # multiplication sign
    "÷": "/",  # division sign
}

_TOKEN_RE = re.compile(r"\s*(?:(\d+\.\d*|\.\d+|\d+)|([()+\-*/]))")


class ExpressionError(ValueError):
    """Raised internally when an expression cannot be parsed or evaluated."""


def normalize_answer(text: str) -> str:
    """Trim, collapse internal whitespace, and case-fold."""
    return _WS_RE.sub(" ", text.strip()).casefold()


def extract_answer(text: str, template: str) -> Optional[str]:
    """Pull the answer span out of ``text`` using a literal template.

    The template must contain exactly one ``{answer}`` placeholder, e.g.
    ``"#### {answer}"``.  The last match in the text wins; ``None`` when
    the template does not match.
    """
    if template.count("{answer}") != 1:
        raise ConfigurationError(
            "extraction template must contain exactly one {answer} placeholder"
        )
    prefix, suffix = template.split("{answer}")
    if suffix:
        pattern = re.escape(prefix) + r"([^\n]*?)" + re.escape(suffix)
    else:
        # Without a suffix the answer runs to the end of the line.
        pattern = re.escape(prefix) + r"([^\n]*)"
    matches = re.findall(pattern, text)
    if not matches:
        return None
    return matches[-1].strip()


def verify_exact(answer_text: Optional[str], gold: str) -> bool:
    """Whitespace- and case-insensitive string equality."""
    if answer_text is None:
        return False
    return normalize_answer(answer_text) == normalize_answer(gold)


def _tokenize(expr: str) -> list[str]:
    for uni, ascii_op in _UNICODE_OPS.items():
        expr = expr.replace(uni, ascii_op)
    tokens: list[str] = []
    pos = 0
    while pos < len(expr):
        m = _TOKEN_RE.match(expr, pos)
        if m is None:
            rest = expr[pos:].strip()
            if not rest:
                break
            raise ExpressionError(f"unexpected character at {pos}: {rest[0]!r}")
        tokens.append(m.group(1) or m.group(2))
        pos = m.end()
    if not tokens:
        raise ExpressionError("empty expression")
    return tokens


class _Parser:
    """Recursive-descent parser producing an exact Fraction."""

    def __init__(self, tokens: list[str]) -> None:
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> Optional[str]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def advance(self) -> str:
        tok = self.peek()
        if tok is None:
            raise ExpressionError("unexpected end of expression")
        self.pos += 1
        return tok

    def parse(self) -> Fraction:
        value = self.expr()
        if self.peek() is not None:
            raise ExpressionError(f"trailing input at token {self.pos}")
        return value

    def expr(self) -> Fraction:
        value = self.term()
        while self.peek() in ("+", "-"):
            op = self.advance()
            rhs = self.term()
            value = value + rhs if op == "+" else value - rhs
        return value

    def term(self) -> Fraction:
        value = self.factor()
        while self.peek() in ("*", "/"):
            op = self.advance()
            rhs = self.factor()
            if op == "*":
                value = value * rhs
            else:
                if rhs == 0:
                    raise ExpressionError("division by zero")
                value = value / rhs
        return value

    def factor(self) -> Fraction:
        tok = self.peek()
        if tok == "-":
            self.advance()
            return -self.factor()
        if tok == "+":
            self.advance()
            return self.factor()
        if tok == "(":
            self.advance()
            value = self.expr()
            if self.advance() != ")":
                raise ExpressionError("expected closing parenthesis")
            return value
        tok = self.advance()
        if tok in ("(", ")", "*", "/", "+", "-"):
            raise ExpressionError(f"expected a number, got {tok!r}")
        return Fraction(tok)


def evaluate_expression(expr: str) -> Fraction:
    """Exact rational value of an arithmetic expression; raises on bad input."""
    return _Parser(_tokenize(expr)).parse()


def verify_numeric(
    answer_text: Optional[str],
    gold: str,
    rel_tol: float = DEFAULT_REL_TOL,
) -> bool:
    """Exact-rational numeric comparison with a relative tolerance.

    Accepts iff ``|value - gold| <= rel_tol * max(1, |gold|)``, evaluated
    entirely in rational arithmetic.  An unparseable or undefined answer
    labels false; an unparseable gold raises ``DataError``.
    """
    try:
        gold_value = evaluate_expression(gold)
    except ExpressionError as exc:
        raise DataError(f"gold answer is not a valid expression: {exc}") from exc
    if rel_tol < 0:
        raise ConfigurationError("rel_tol must be >= 0")
    if answer_text is None:
        return False
    try:
        value = evaluate_expression(answer_text)
    except ExpressionError as exc:
        logger.debug("numeric verification failed to parse %r: %s", answer_text, exc)
        return False
    tol = Fraction(str(rel_tol))
    return abs(value - gold_value) <= tol * max(Fraction(1), abs(gold_value))


VERIFIER_KINDS = ("exact", "numeric", "nli")

VerifierFn = Callable[[Optional[str], Problem], bool]


def make_verifier(
    kind: str,
    template: Optional[str] = None,
    rel_tol: float = DEFAULT_REL_TOL,
) -> VerifierFn:
    """Build a ``(answer_text, problem) -> bool`` verifier.

    ``template`` applies answer extraction before comparison.  The ``nli``
    kind is a declared extension point with no implementation.
    """
    if kind not in VERIFIER_KINDS:
        raise ConfigurationError(f"unknown verifier kind {kind!r}")
    if kind == "nli":
        raise NotImplementedError(
            "entailment-based verification is an extension point; "
            "no implementation ships with this package"
        )

    def verifier(answer_text: Optional[str], problem: Problem) -> bool:
        text = answer_text
        if text is not None and template is not None:
            text = extract_answer(text, template)
        if kind == "exact":
            return verify_exact(text, problem.gold_answer)
        return verify_numeric(text, problem.gold_answer, rel_tol=rel_tol)

    return verifier


def label_leaf(
    answer: Optional[str], problem: Problem, verifier: VerifierFn
) -> int:
    """Binary leaf label: 1 iff the verifier accepts the answer."""
    if answer is None:
        return 0
    return int(bool(verifier(answer, problem)))


def leaf_labeler(
    problem: Problem, verifier: VerifierFn
) -> Callable[[Optional[str]], int]:
    """Bind ``label_leaf`` to one problem for use during propagation."""

    def labeler(answer: Optional[str]) -> int:
        return label_leaf(answer, problem, verifier)

    return labeler
