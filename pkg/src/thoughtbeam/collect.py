"""Training-data collection: exhaustive trees, propagated labels, datasets.

Collection builds a breadth-first tree of fixed fanout, verifies the leaves,
and pushes discounted scores up the tree: an internal node's label is
``gamma`` times the mean of its children's labels.  Trees are persisted
before labeling so a new ``gamma`` only needs relabeling, not regeneration.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Optional

import numpy as np

from .core import (
    FeatureVector,
    Problem,
    ReasoningState,
    Thought,
    ThoughtTree,
    extend_state,
    make_root_state,
)
from .exceptions import ConfigurationError, DataError
from .features import candidate_features
from .generators.base import ThoughtGenerator, seed_context

TREE_FORMAT_VERSION = 1


@dataclass(frozen=True)
class CollectConfig:
    """Knobs for tree building and dataset emission."""

    fanout: int = 3
    max_depth: int = 5
    gamma: float = 0.99
    include_leaves: bool = True
    consistency_includes_root: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        if self.fanout < 1:
            raise ConfigurationError("fanout must be >= 1")
        if self.max_depth < 1:
            raise ConfigurationError("max_depth must be >= 1")
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigurationError("gamma must lie in [0, 1]")


@dataclass(frozen=True)
class TrainingExample:
    """One supervised example: predictor features plus a propagated label."""

    features: np.ndarray
    label: float
    problem_id: str
    depth: int
    path: tuple[int, ...]


def build_tree(
    problem: Problem,
    generator: ThoughtGenerator,
    config: CollectConfig,
) -> ThoughtTree:
    """Exhaustive breadth-first tree: every non-terminal node below
    ``max_depth`` expands into exactly ``fanout`` children."""
    generator.register_problem(problem)
    root = make_root_state(problem, generator.problem_embedding(problem))
    tree = ThoughtTree(root)
    queue: deque[int] = deque([tree.root])
    while queue:
        idx = queue.popleft()
        state = tree.nodes[idx]
        if state.depth >= config.max_depth or state.terminal:
            continue
        for i in range(config.fanout):
            ctx = seed_context(config.seed, problem.id, state.path, i)
            cand = generator.generate(state, 1, ctx)[0]
            feats = candidate_features(
                cand.embedding, state, config.consistency_includes_root
            )
            child = extend_state(state, cand.thought, feats, ordinal=i)
            child_idx = tree.add_child(idx, child, answer=cand.answer)
            if not cand.thought.terminal and child.depth < config.max_depth:
                queue.append(child_idx)
    return tree


def propagate_scores(
    tree: ThoughtTree,
    gamma: float,
    labeler: Callable[[Optional[str]], int],
) -> ThoughtTree:
    """Label leaves with the verifier and push discounted scores upward.

    ``labeler`` maps a leaf's answer (possibly ``None``) to a binary label.
    Internal labels are assigned in descending id order, a valid post-order
    because a child's id always exceeds its parent's.
    """
    if not 0.0 <= gamma <= 1.0:
        raise ConfigurationError("gamma must lie in [0, 1]")
    for idx in reversed(range(len(tree))):
        if tree.is_leaf(idx):
            label = int(labeler(tree.answers[idx]))
            if label not in (0, 1):
                raise ValueError(f"leaf labeler returned {label}, expected 0 or 1")
            tree.labels[idx] = float(label)
        else:
            child_labels = [tree.labels[c] for c in tree.children[idx]]
            assert all(v is not None for v in child_labels)
            tree.labels[idx] = gamma * (sum(child_labels) / len(child_labels))
    return tree


def emit_dataset(
    tree: ThoughtTree, include_leaves: bool = True
) -> list[TrainingExample]:
    """One example per non-root node in breadth-first order.

    The root is never emitted: its features are fixed by construction and
    carry no decision information.
    """
    if not tree.labeled():
        raise ValueError("tree must be labeled before emitting a dataset")
    out: list[TrainingExample] = []
    for idx in range(1, len(tree)):
        if not include_leaves and tree.is_leaf(idx):
            continue
        state = tree.nodes[idx]
        label = tree.labels[idx]
        assert label is not None
        out.append(
            TrainingExample(
                features=state.features.as_array(),
                label=float(label),
                problem_id=tree.problem_id,
                depth=state.depth,
                path=state.path,
            )
        )
    return out


# ----------------------------------------------------------------------
# tree persistence


def tree_to_json(tree: ThoughtTree) -> dict:
    """Plain-JSON form of a tree; labels may be ``None`` before propagation."""
    nodes = []
    for idx, state in enumerate(tree.nodes):
        thought = state.last_thought
        nodes.append(
            {
                "id": idx,
                "parent": tree.parent_index[idx],
                "thought": thought.text if thought is not None else None,
                "tokens": thought.tokens_generated if thought is not None else 0,
                "terminal": state.terminal,
                "answer": tree.answers[idx],
                "embedding": [float(x) for x in state.features.embedding],
                "consistency": state.features.consistency,
                "label": tree.labels[idx],
            }
        )
    return {
        "version": TREE_FORMAT_VERSION,
        "problem_id": tree.problem_id,
        "embedding_dim": tree.nodes[0].features.dim,
        "nodes": nodes,
    }


def tree_from_json(doc: dict) -> ThoughtTree:
    """Rebuild a tree, including parent-linked states, from ``tree_to_json``."""
    try:
        problem_id = doc["problem_id"]
        records = doc["nodes"]
    except KeyError as exc:
        raise DataError(f"tree document missing field {exc}") from exc
    if not records:
        raise DataError("tree document has no nodes")
    if records[0]["parent"] is not None:
        raise DataError("first tree node must be the root (parent null)")

    root_rec = records[0]
    root = make_root_state(
        Problem(id=problem_id, text="(restored)", gold_answer=""),
        np.asarray(root_rec["embedding"], dtype=np.float64),
    )
    tree = ThoughtTree(root)
    tree.labels[0] = root_rec.get("label")
    for rec in records[1:]:
        try:
            parent_idx = int(rec["parent"])
            parent = tree.nodes[parent_idx]
            thought = Thought(
                text=rec["thought"],
                tokens_generated=int(rec["tokens"]),
                terminal=bool(rec["terminal"]),
            )
            feats = FeatureVector(
                np.asarray(rec["embedding"], dtype=np.float64),
                float(rec["consistency"]),
            )
            ordinal = len(tree.children[parent_idx])
            state = extend_state(parent, thought, feats, ordinal=ordinal)
            idx = tree.add_child(parent_idx, state, answer=rec.get("answer"))
            tree.labels[idx] = rec.get("label")
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise DataError(f"malformed tree node {rec.get('id')}: {exc}") from exc
    tree.validate()
    return tree


def save_tree(tree: ThoughtTree, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(tree_to_json(tree), fh)
        fh.write("\n")


def load_tree(path: str | Path) -> ThoughtTree:
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read tree {path}: {exc}") from exc
    with fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: invalid JSON: {exc}") from exc
    return tree_from_json(doc)


# ----------------------------------------------------------------------
# dataset persistence (JSON lines)


def write_dataset(examples: Iterable[TrainingExample], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ex in examples:
            fh.write(
                json.dumps(
                    {
                        "features": [float(x) for x in ex.features],
                        "label": ex.label,
                        "problem_id": ex.problem_id,
                        "depth": ex.depth,
                        "path": list(ex.path),
                    }
                )
                + "\n"
            )


def read_dataset(path: str | Path) -> list[TrainingExample]:
    out: list[TrainingExample] = []
    width: Optional[int] = None
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read dataset {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                features = np.asarray(obj["features"], dtype=np.float64)
                ex = TrainingExample(
                    features=features,
                    label=float(obj["label"]),
                    problem_id=str(obj["problem_id"]),
                    depth=int(obj["depth"]),
                    path=tuple(int(p) for p in obj["path"]),
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise DataError(f"{path}:{lineno}: malformed example: {exc}") from exc
            if features.ndim != 1 or not np.all(np.isfinite(features)):
                raise DataError(f"{path}:{lineno}: features must be finite 1-D")
            if width is None:
                width = features.size
            elif features.size != width:
                raise DataError(
                    f"{path}:{lineno}: feature width {features.size} != {width}"
                )
            out.append(ex)
    return out
