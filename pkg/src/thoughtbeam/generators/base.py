"""Generator contract: anything that proposes next thoughts for a state.

Engines identify every generate call by a stable seed context derived from
(run seed, problem id, node path, call index), so deterministic generators
reproduce bit-identical candidates across processes and recorded sessions
replay against the same keys.
"""

from __future__ import annotations

import hashlib
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..core import Problem, ReasoningState, Thought
from ..exceptions import GenerationError


def seed_context(
    seed: int, problem_id: str, path: Sequence[int], call_index: int
) -> int:
    """Stable 63-bit hash identifying one generate call.

    Pure function of its arguments, independent of process and platform,
    which is what makes recorded sessions replayable.
    """
    key = f"{seed}|{problem_id}|{','.join(str(p) for p in path)}|{call_index}"
    digest = hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") & (2**63 - 1)


@dataclass(frozen=True)
class GeneratorMeta:
    """What an engine needs to know about a generator up front."""

    name: str
    embedding_dim: int
    deterministic: bool

    def __post_init__(self) -> None:
        if self.embedding_dim < 1:
            raise ValueError("embedding_dim must be >= 1")


class Candidate:
    """One proposed next thought with its embedding and optional answer."""

    __slots__ = ("thought", "embedding", "answer")

    def __init__(
        self,
        thought: Thought,
        embedding: np.ndarray,
        answer: Optional[str] = None,
    ) -> None:
        emb = np.array(embedding, dtype=np.float64, copy=True)
        if emb.ndim != 1 or emb.size == 0:
            raise ValueError("candidate embedding must be a non-empty 1-D vector")
        if not np.all(np.isfinite(emb)):
            raise ValueError("candidate embedding must be finite")
        if answer is not None and not thought.terminal:
            raise ValueError("only terminal candidates carry an answer")
        emb.flags.writeable = False
        self.thought = thought
        self.embedding = emb
        self.answer = answer


class ThoughtGenerator(ABC):
    """Produces candidate next thoughts for a reasoning state.

    Problems are registered before use so prompts and world state can be
    resolved from a state's ``problem_id`` alone.
    """

    meta: GeneratorMeta

    def __init__(self) -> None:
        self._problems: dict[str, Problem] = {}

    def register_problem(self, problem: Problem) -> None:
        self._problems[problem.id] = problem

    def problem(self, problem_id: str) -> Problem:
        try:
            return self._problems[problem_id]
        except KeyError:
            raise GenerationError(
                f"problem {problem_id!r} was never registered with this generator"
            ) from None

    @abstractmethod
    def problem_embedding(self, problem: Problem) -> np.ndarray:
        """Embedding of the bare problem statement (the root's features)."""

    @abstractmethod
    def generate(
        self, state: ReasoningState, n: int, seed_context: int
    ) -> list[Candidate]:
        """Return exactly ``n`` candidates for ``state``.

        Deterministic generators must return identical output for identical
        ``(state, n, seed_context)``.
        """

    def check_output(self, candidates: list[Candidate], n: int) -> list[Candidate]:
        """Shared postcondition: count and embedding width."""
        if len(candidates) != n:
            raise GenerationError(
                f"generator returned {len(candidates)} candidates, expected {n}"
            )
        for cand in candidates:
            if cand.embedding.size != self.meta.embedding_dim:
                raise GenerationError(
                    f"candidate embedding has dim {cand.embedding.size}, "
                    f"generator advertises {self.meta.embedding_dim}"
                )
        return candidates
