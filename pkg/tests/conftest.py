"""Shared test helpers: fixture paths and small tree builders."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from thoughtbeam.core import (
    FeatureVector,
    Problem,
    ReasoningState,
    Thought,
    ThoughtTree,
    extend_state,
    make_root_state,
)

REPO_ROOT = Path(__file__).resolve().parent.parent
WIRE_FIXTURES = REPO_ROOT / "fixtures" / "wire"


@pytest.fixture
def wire_fixtures() -> Path:
    return WIRE_FIXTURES


def unit_vector(dim: int, axis: int = 0) -> np.ndarray:
    v = np.zeros(dim)
    v[axis] = 1.0
    return v


def random_unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    while True:
        v = rng.standard_normal(dim)
        n = float(np.linalg.norm(v))
        if n > 1e-9:
            return v / n


def make_problem(pid: str = "p1") -> Problem:
    return Problem(id=pid, text=f"problem {pid}", gold_answer="42")


def make_state_chain(depth: int, dim: int = 4) -> ReasoningState:
    """A straight chain of non-terminal states below a fresh root."""
    problem = make_problem()
    state = make_root_state(problem, unit_vector(dim))
    for t in range(depth):
        thought = Thought(text=f"step {t + 1}", tokens_generated=2)
        state = extend_state(
            state, thought, FeatureVector(unit_vector(dim), 1.0), ordinal=0
        )
    return state


def grow_random_tree(
    rng: np.random.Generator,
    max_depth: int,
    max_fanout: int,
    dim: int = 4,
    pid: str = "rt",
) -> ThoughtTree:
    """Random-topology tree whose leaves are terminal with binary answers.

    Every internal node gets 1..max_fanout children; each child becomes a
    leaf by coin flip or on reaching max_depth.  Leaf answers are the
    random binary labels the propagation oracle consumes.
    """
    problem = Problem(id=pid, text="tree", gold_answer="1")
    tree = ThoughtTree(make_root_state(problem, random_unit(rng, dim)))
    frontier = [(tree.root, 0)]  # nodes committed to expansion
    counter = 0
    while frontier:
        idx, depth = frontier.pop()
        state = tree.nodes[idx]
        for i in range(int(rng.integers(1, max_fanout + 1))):
            counter += 1
            child_depth = depth + 1
            becomes_leaf = child_depth >= max_depth or rng.random() < 0.35
            thought = Thought(
                text=f"n{counter}", tokens_generated=1, terminal=becomes_leaf
            )
            child = extend_state(
                state,
                thought,
                FeatureVector(random_unit(rng, dim), 1.0),
                ordinal=i,
            )
            answer = str(int(rng.integers(0, 2))) if becomes_leaf else None
            child_idx = tree.add_child(idx, child, answer=answer)
            if not becomes_leaf:
                frontier.append((child_idx, child_depth))
    return tree


def naive_propagated_scores(tree: ThoughtTree, gamma: float) -> list[float]:
    """Independent recursive reference for score propagation."""

    def rec(idx: int) -> float:
        kids = tree.children[idx]
        if not kids:
            answer = tree.answers[idx]
            return float(int(answer)) if answer is not None else 0.0
        return gamma * (sum(rec(k) for k in kids) / len(kids))

    return [rec(i) for i in range(len(tree))]
