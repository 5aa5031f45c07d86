"""Value types shared by collection, training, and search.

A reasoning attempt is a chain of generated thoughts hanging off a problem
statement.  States are immutable records linked through their parents;
``ThoughtTree`` indexes states and carries the per-node bookkeeping
(answers, child order, propagated labels) that the collection and search
engines share.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import ConfigurationError

POOL_POLICIES = ("all_candidates", "above_threshold_only")


@dataclass(frozen=True)
class Problem:
    """One task instance. ``gold_answer`` is consumed only by verification."""

    id: str
    text: str
    gold_answer: str

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("problem id must be non-empty")
        if not self.text:
            raise ValueError("problem text must be non-empty")


@dataclass(frozen=True)
class Thought:
    """A single generated reasoning step."""

    text: str
    tokens_generated: int
    terminal: bool = False

    def __post_init__(self) -> None:
        if self.tokens_generated < 0:
            raise ValueError("tokens_generated must be >= 0")
        if not self.text and not self.terminal:
            raise ValueError("non-terminal thoughts must carry text")


class FeatureVector:
    """An embedding plus the path-consistency scalar appended to it.

    The predictor consumes ``as_array()``, a vector of length ``dim + 1``
    whose final component is the consistency score.
    """

    __slots__ = ("embedding", "consistency")

    def __init__(self, embedding: np.ndarray, consistency: float) -> None:
        emb = np.array(embedding, dtype=np.float64, copy=True)
        if emb.ndim != 1 or emb.size == 0:
            raise ValueError("embedding must be a non-empty 1-D vector")
        if not np.all(np.isfinite(emb)):
            raise ValueError("embedding must be finite")
        c = float(consistency)
        if not -1.0 <= c <= 1.0:
            raise ValueError(f"consistency must lie in [-1, 1], got {c}")
        emb.flags.writeable = False
        self.embedding = emb
        self.consistency = c

    @property
    def dim(self) -> int:
        return int(self.embedding.size)

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.embedding, [self.consistency]])

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"FeatureVector(dim={self.dim}, consistency={self.consistency:.4f})"


@dataclass(eq=False)
class ReasoningState:
    """A node in the thought tree: the problem plus thoughts taken so far.

    ``path`` records the candidate ordinal chosen at each expansion, so the
    root has ``path == ()`` and a node's path length equals its depth.
    ``predictor_score`` is assigned once, right after the state is scored.
    """

    problem_id: str
    thoughts: tuple[Thought, ...]
    features: FeatureVector
    depth: int
    parent: Optional["ReasoningState"] = None
    path: tuple[int, ...] = ()
    predictor_score: Optional[float] = None

    def __post_init__(self) -> None:
        if self.depth != len(self.thoughts):
            raise ValueError("depth must equal the number of thoughts")
        if len(self.path) != self.depth:
            raise ValueError("path length must equal depth")
        if self.parent is None:
            if self.depth != 0:
                raise ValueError("only the root state may lack a parent")
        elif self.parent.depth + 1 != self.depth:
            raise ValueError("child depth must be parent depth + 1")

    @property
    def terminal(self) -> bool:
        return bool(self.thoughts) and self.thoughts[-1].terminal

    @property
    def last_thought(self) -> Optional[Thought]:
        return self.thoughts[-1] if self.thoughts else None

    def chain(self) -> list["ReasoningState"]:
        """Root-first list of states from the root down to this one."""
        out: list[ReasoningState] = []
        node: Optional[ReasoningState] = self
        while node is not None:
            out.append(node)
            node = node.parent
        out.reverse()
        return out


def make_root_state(problem: Problem, embedding: np.ndarray) -> ReasoningState:
    """Root state: features come from the problem text alone, consistency 1.0."""
    return ReasoningState(
        problem_id=problem.id,
        thoughts=(),
        features=FeatureVector(embedding, 1.0),
        depth=0,
    )


def extend_state(
    parent: ReasoningState,
    thought: Thought,
    features: FeatureVector,
    ordinal: int,
) -> ReasoningState:
    """Create the child state reached by appending ``thought`` to ``parent``.

    ``ordinal`` is the candidate index at this expansion; it extends the
    node path used for seeding and replay.
    """
    if parent.terminal:
        raise ValueError("cannot extend a terminal state")
    if ordinal < 0:
        raise ValueError("ordinal must be >= 0")
    if features.dim != parent.features.dim:
        raise ConfigurationError(
            f"feature embedding dim {features.dim} does not match "
            f"the run dim {parent.features.dim}"
        )
    return ReasoningState(
        problem_id=parent.problem_id,
        thoughts=parent.thoughts + (thought,),
        features=features,
        depth=parent.depth + 1,
        parent=parent,
        path=parent.path + (ordinal,),
    )


@dataclass(frozen=True)
class SearchConfig:
    """Knobs for the search engines.

    ``threshold`` accepts values above 1.0 as a never-shortcut sentinel;
    predictor scores are clamped to [0, 1], so such a threshold cannot fire.
    ``consistency_includes_root`` must match between data collection and
    search so the predictor sees the same feature definition in both.
    """

    beam_width: int = 3
    fanout: int = 3
    threshold: float = 0.7
    gamma: float = 0.99
    max_depth: int = 8
    temperature: float = 0.7
    seed: int = 0
    fallback_pool_policy: str = "all_candidates"
    consistency_includes_root: bool = True

    def __post_init__(self) -> None:
        if self.beam_width < 1:
            raise ConfigurationError("beam_width must be >= 1")
        if self.fanout < 1:
            raise ConfigurationError("fanout must be >= 1")
        if self.threshold < 0.0:
            raise ConfigurationError("threshold must be >= 0")
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigurationError("gamma must lie in [0, 1]")
        if self.max_depth < 1:
            raise ConfigurationError("max_depth must be >= 1")
        if self.temperature < 0.0:
            raise ConfigurationError("temperature must be >= 0")
        if self.fallback_pool_policy not in POOL_POLICIES:
            raise ConfigurationError(
                f"fallback_pool_policy must be one of {POOL_POLICIES}, "
                f"got {self.fallback_pool_policy!r}"
            )


class ThoughtTree:
    """An indexed thought tree built by a single writer.

    Node 0 is always the root; children keep generation order, so a node's
    ordinal among its siblings equals the last entry of its state's path.
    ``labels`` stay ``None`` until score propagation runs.
    """

    def __init__(self, root: ReasoningState) -> None:
        if root.depth != 0 or root.parent is not None:
            raise ValueError("tree root must be a depth-0 state")
        self.problem_id = root.problem_id
        self.nodes: list[ReasoningState] = [root]
        self.parent_index: list[Optional[int]] = [None]
        self.children: list[list[int]] = [[]]
        self.answers: list[Optional[str]] = [None]
        self.labels: list[Optional[float]] = [None]
        self._index_of: dict[int, int] = {id(root): 0}

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def root(self) -> int:
        return 0

    def add_child(
        self,
        parent: int,
        state: ReasoningState,
        answer: Optional[str] = None,
    ) -> int:
        if not 0 <= parent < len(self.nodes):
            raise IndexError(f"parent index {parent} out of range")
        if state.parent is not self.nodes[parent]:
            raise ValueError("child state must link to its tree parent")
        if answer is not None and not state.terminal:
            raise ValueError("only terminal states carry an answer")
        idx = len(self.nodes)
        self.nodes.append(state)
        self.parent_index.append(parent)
        self.children.append([])
        self.answers.append(answer)
        self.labels.append(None)
        self.children[parent].append(idx)
        self._index_of[id(state)] = idx
        return idx

    def index_of(self, state: ReasoningState) -> int:
        try:
            return self._index_of[id(state)]
        except KeyError:
            raise LookupError("state does not belong to this tree") from None

    def is_leaf(self, index: int) -> bool:
        return not self.children[index]

    def leaves(self) -> list[int]:
        return [i for i in range(len(self.nodes)) if self.is_leaf(i)]

    def is_terminal(self, index: int) -> bool:
        return self.nodes[index].terminal

    def max_depth(self) -> int:
        return max(s.depth for s in self.nodes)

    def labeled(self) -> bool:
        return all(label is not None for label in self.labels)

    def validate(self, gamma: Optional[float] = None) -> None:
        """Check structural invariants; label ranges too when ``gamma`` given."""
        for idx, state in enumerate(self.nodes):
            parent = self.parent_index[idx]
            if idx == 0:
                if parent is not None:
                    raise ValueError("root must have no parent")
                continue
            if parent is None or not 0 <= parent < idx:
                raise ValueError(f"node {idx} has invalid parent {parent}")
            if state.depth != self.nodes[parent].depth + 1:
                raise ValueError(f"node {idx} depth inconsistent with parent")
            if idx not in self.children[parent]:
                raise ValueError(f"node {idx} missing from parent child list")
        if gamma is not None and self.labeled():
            for idx in range(len(self.nodes)):
                label = self.labels[idx]
                assert label is not None
                if self.is_leaf(idx):
                    if label not in (0.0, 1.0):
                        raise ValueError(f"leaf {idx} label {label} not in {{0, 1}}")
                elif not 0.0 <= label <= gamma:
                    raise ValueError(f"internal label {label} outside [0, {gamma}]")


def path_of(node: ReasoningState, tree: ThoughtTree) -> list[Thought]:
    """Root-to-node thought sequence; raises LookupError for foreign nodes."""
    tree.index_of(node)
    return list(node.thoughts)
