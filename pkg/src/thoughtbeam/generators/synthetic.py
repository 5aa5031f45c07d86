"""A deterministic arithmetic-chain world with planted embedding anchors.

Problems are chains of integer add/multiply steps.  Candidates either apply
the next step correctly or corrupt its result by a small nonzero offset,
with probability controlled by ``correct_step_prob``.  Embeddings mix a
fixed anchor direction (one for correct steps, an orthogonal one for
corrupted steps) with seeded noise, so a learned evaluator has a real but
imperfect signal to find.

Corruption never lands on the gold-track value: offsets are re-drawn while
the corrupted result equals the value a fully correct chain would have at
that depth.  Since the ops are injective, this makes a leaf verify correct
exactly when every step on its path was correct.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..core import Problem, ReasoningState, Thought
from ..exceptions import ConfigurationError, GenerationError
from .base import Candidate, GeneratorMeta, ThoughtGenerator

_VALUE_RE = re.compile(r"-> value (-?\d+)")

_ADD_PHRASES = ("add", "plus", "increase by")
_MUL_PHRASES = ("multiply by", "times", "scale by")

_OFFSETS = (-2, -1, 1, 2)


@dataclass(frozen=True)
class SyntheticConfig:
    """World parameters.

    ``value_range`` bounds the start value and additive operands;
    multipliers are kept in {2, 3} so chain values stay readable.
    """

    embedding_dim: int = 16
    chain_length: int = 5
    correct_step_prob: float = 0.8
    anchor_alpha: float = 0.8
    value_range: tuple[int, int] = (1, 9)

    def __post_init__(self) -> None:
        if self.embedding_dim < 4:
            raise ConfigurationError("embedding_dim must be >= 4")
        if self.chain_length < 1:
            raise ConfigurationError("chain_length must be >= 1")
        if not 0.0 <= self.correct_step_prob <= 1.0:
            raise ConfigurationError("correct_step_prob must lie in [0, 1]")
        if not 0.0 <= self.anchor_alpha <= 1.0:
            raise ConfigurationError("anchor_alpha must lie in [0, 1]")
        lo, hi = self.value_range
        if lo > hi:
            raise ConfigurationError("value_range must satisfy lo <= hi")


@dataclass(frozen=True)
class _Chain:
    start: int
    ops: tuple[tuple[str, int], ...]
    true_values: tuple[int, ...]  # running gold-track value, index 0 = start


def _apply(op: tuple[str, int], value: int) -> int:
    kind, operand = op
    return value + operand if kind == "add" else value * operand


def _stable_rng(*parts: object) -> np.random.Generator:
    key = "|".join(str(p) for p in parts)
    digest = hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest()
    return np.random.default_rng(int.from_bytes(digest, "little"))


class SyntheticWorld(ThoughtGenerator):
    """Arithmetic-chain problem factory and thought generator in one."""

    def __init__(self, config: SyntheticConfig | None = None) -> None:
        super().__init__()
        self.config = config or SyntheticConfig()
        d = self.config.embedding_dim
        self.meta = GeneratorMeta(
            name=f"synthetic-d{d}-m{self.config.chain_length}",
            embedding_dim=d,
            deterministic=True,
        )
        self.u_correct = np.zeros(d)
        self.u_correct[0] = 1.0
        self.u_wrong = np.zeros(d)
        self.u_wrong[1] = 1.0
        self._chains: dict[str, _Chain] = {}

    # ------------------------------------------------------------------
    # problem construction

    def make_problem(self, seed: int) -> Problem:
        """Build, register, and return the problem for ``seed``."""
        cfg = self.config
        rng = np.random.default_rng(seed)
        lo, hi = cfg.value_range
        start = int(rng.integers(lo, hi + 1))
        ops: list[tuple[str, int]] = []
        values = [start]
        for _ in range(cfg.chain_length):
            if rng.random() < 0.5:
                op = ("add", int(rng.integers(lo, hi + 1)))
            else:
                op = ("mul", int(rng.integers(2, 4)))
            ops.append(op)
            values.append(_apply(op, values[-1]))
        words = {"add": "add", "mul": "multiply by"}
        steps = "; ".join(
            f"step {t + 1}: {words[kind]} {operand}"
            for t, (kind, operand) in enumerate(ops)
        )
        text = (
            f"Start with {start}; {steps}. "
            f"What is the value after step {cfg.chain_length}?"
        )
        problem = Problem(
            id=f"syn-{seed:06d}", text=text, gold_answer=str(values[-1])
        )
        self._chains[problem.id] = _Chain(start, tuple(ops), tuple(values))
        self.register_problem(problem)
        return problem

    def _chain(self, problem_id: str) -> _Chain:
        try:
            return self._chains[problem_id]
        except KeyError:
            raise GenerationError(
                f"problem {problem_id!r} was not created by this world"
            ) from None

    # ------------------------------------------------------------------
    # embeddings

    def _mix(self, anchor: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        alpha = self.config.anchor_alpha
        while True:
            eta = rng.standard_normal(self.config.embedding_dim)
            norm = float(np.linalg.norm(eta))
            if norm > 1e-9:
                eta /= norm
            v = alpha * anchor + (1.0 - alpha) * eta
            vnorm = float(np.linalg.norm(v))
            if vnorm > 1e-9:
                return v / vnorm

    def problem_embedding(self, problem: Problem) -> np.ndarray:
        # Problem statements embed near the coherent-reasoning anchor, the
        # way on-topic prose shares a domain subspace with sound steps.
        rng = _stable_rng("synthetic-root", problem.id)
        return self._mix(self.u_correct, rng)

    # ------------------------------------------------------------------
    # value tracking

    def current_value(self, state: ReasoningState) -> int:
        """Running value at ``state``, parsed from its last thought."""
        chain = self._chain(state.problem_id)
        if state.depth == 0:
            return chain.start
        assert state.last_thought is not None
        m = _VALUE_RE.search(state.last_thought.text)
        if m is None:
            raise GenerationError(
                f"thought text does not carry a running value: "
                f"{state.last_thought.text!r}"
            )
        return int(m.group(1))

    def step_correct(self, state: ReasoningState) -> bool:
        """Whether the step that produced ``state`` did exact arithmetic."""
        if state.depth == 0 or state.parent is None:
            raise ValueError("step_correct needs a non-root state with a parent")
        chain = self._chain(state.problem_id)
        prev = self.current_value(state.parent)
        return self.current_value(state) == _apply(chain.ops[state.depth - 1], prev)

    def on_gold_track(self, state: ReasoningState) -> bool:
        """Whether ``state`` carries the fully correct running value."""
        chain = self._chain(state.problem_id)
        return self.current_value(state) == chain.true_values[state.depth]

    # ------------------------------------------------------------------
    # generation

    def generate(
        self, state: ReasoningState, n: int, seed_context: int
    ) -> list[Candidate]:
        if n < 1:
            raise ValueError("n must be >= 1")
        cfg = self.config
        chain = self._chain(state.problem_id)
        if state.terminal:
            raise GenerationError("cannot generate from a terminal state")
        if state.depth >= cfg.chain_length:
            raise GenerationError(
                f"state depth {state.depth} is at the chain end "
                f"({cfg.chain_length})"
            )
        depth = state.depth
        op = chain.ops[depth]
        value = self.current_value(state)
        correct_value = _apply(op, value)
        true_value = chain.true_values[depth + 1]
        is_final = depth + 1 == cfg.chain_length

        out: list[Candidate] = []
        for i in range(n):
            rng = np.random.default_rng([seed_context, i])
            correct = bool(rng.random() < cfg.correct_step_prob)
            if correct:
                result = correct_value
            else:
                # Corrupt, but never onto the gold track (see module docstring).
                result = correct_value + int(rng.choice(_OFFSETS))
                while result == true_value:
                    result = correct_value + int(rng.choice(_OFFSETS))
            kind, operand = op
            phrases = _ADD_PHRASES if kind == "add" else _MUL_PHRASES
            phrase = phrases[int(rng.integers(0, len(phrases)))]
            text = f"step {depth + 1}: {phrase} {operand} -> value {result}"
            answer: Optional[str] = None
            if is_final:
                text += f"; final answer {result}"
                answer = str(result)
            thought = Thought(
                text=text,
                tokens_generated=len(text.split()),
                terminal=is_final,
            )
            anchor = self.u_correct if correct else self.u_wrong
            out.append(Candidate(thought, self._mix(anchor, rng), answer))
        return self.check_output(out, n)
