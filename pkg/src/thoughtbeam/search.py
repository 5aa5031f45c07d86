"""Search engines over thought trees: adaptive, greedy, and full-beam.

The adaptive engine generates one candidate per beam node first.  When the
predictor scores it at or above the threshold, that candidate is admitted
alone (a shortcut) and no siblings are generated; otherwise the remaining
``fanout - 1`` candidates are generated and pooled (a fallback).  Each
depth keeps the ``beam_width`` best-scored admitted states, ties resolved
toward earlier generation, and the final answer comes from the best-scored
state in the last beam.

Terminal candidates reached before ``max_depth`` stay in the beam and
compete by score but are never expanded.  The greedy baseline follows a
single chain; the reference baseline is the same engine with shortcuts
disabled, so it always pays the full fanout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Protocol, Sequence

import numpy as np

from .core import (
    Problem,
    ReasoningState,
    SearchConfig,
    Thought,
    extend_state,
    make_root_state,
)
from .features import candidate_features
from .generators.base import Candidate, ThoughtGenerator, seed_context

TraceSink = Callable[[dict], None]


class StatePredictor(Protocol):
    """Anything that maps a feature vector to a scalar score."""

    def score(self, features: np.ndarray) -> float: ...


class EmbeddingScorePredictor:
    """Stub predictor reading its score straight from one feature component.

    Scripted walkthroughs plant the intended score in an embedding slot; this
    predictor surfaces it without any learned model in the loop.
    """

    def __init__(self, index: int = 0) -> None:
        self.index = index

    def score(self, features: np.ndarray) -> float:
        v = np.asarray(features, dtype=np.float64)
        if not -v.size <= self.index < v.size:
            raise IndexError(f"feature index {self.index} out of range")
        return float(v[self.index])


class CoinFlipPredictor:
    """Stub predictor emitting a seeded Bernoulli stream of high/low scores.

    Used to drive shortcut events with a known probability when measuring
    effective beam width; the features are ignored.
    """

    def __init__(
        self, p_high: float, seed: int = 0, high: float = 1.0, low: float = 0.0
    ) -> None:
        if not 0.0 <= p_high <= 1.0:
            raise ValueError("p_high must lie in [0, 1]")
        self.p_high = p_high
        self.high = high
        self.low = low
        self._rng = np.random.default_rng(seed)

    def score(self, features: np.ndarray) -> float:
        return self.high if self._rng.random() < self.p_high else self.low


@dataclass
class SearchResult:
    """Outcome and exact cost ledger of one search run."""

    final_path: list[Thought]
    answer: Optional[str]
    explored_nodes: int
    generator_calls: int
    generated_tokens: int
    prompt_tokens: int
    shortcut_events: int
    fallback_events: int
    per_depth_effective_beam: list[int]
    per_depth_expansions: list[int]
    final_state: Optional[ReasoningState] = None

    @property
    def expansions(self) -> int:
        return self.shortcut_events + self.fallback_events


@dataclass
class _Entry:
    state: ReasoningState
    answer: Optional[str]


@dataclass
class _Ledger:
    explored_nodes: int = 0
    generator_calls: int = 0
    generated_tokens: int = 0
    prompt_tokens: int = 0
    shortcut_events: int = 0
    fallback_events: int = 0
    per_depth_effective_beam: list[int] = field(default_factory=list)
    per_depth_expansions: list[int] = field(default_factory=list)


def _prompt_token_count(problem: Problem, state: ReasoningState) -> int:
    # Whitespace token counts; completion tokens are the primary ledger,
    # prompt tokens are auxiliary context cost.
    count = len(problem.text.split())
    for thought in state.thoughts:
        count += len(thought.text.split())
    return count


def _generate_one(
    generator: ThoughtGenerator,
    problem: Problem,
    state: ReasoningState,
    ordinal: int,
    config: SearchConfig,
    ledger: _Ledger,
) -> Candidate:
    ctx = seed_context(config.seed, problem.id, state.path, ordinal)
    cand = generator.generate(state, 1, ctx)[0]
    ledger.generator_calls += 1
    ledger.explored_nodes += 1
    ledger.generated_tokens += cand.thought.tokens_generated
    ledger.prompt_tokens += _prompt_token_count(problem, state)
    return cand


def _scored_child(
    parent: ReasoningState,
    cand: Candidate,
    ordinal: int,
    predictor: StatePredictor,
    config: SearchConfig,
) -> ReasoningState:
    feats = candidate_features(
        cand.embedding, parent, config.consistency_includes_root
    )
    child = extend_state(parent, cand.thought, feats, ordinal=ordinal)
    child.predictor_score = float(predictor.score(feats.as_array()))
    return child


def _result(ledger: _Ledger, final: Optional[_Entry]) -> SearchResult:
    return SearchResult(
        final_path=list(final.state.thoughts) if final else [],
        answer=final.answer if final else None,
        explored_nodes=ledger.explored_nodes,
        generator_calls=ledger.generator_calls,
        generated_tokens=ledger.generated_tokens,
        prompt_tokens=ledger.prompt_tokens,
        shortcut_events=ledger.shortcut_events,
        fallback_events=ledger.fallback_events,
        per_depth_effective_beam=ledger.per_depth_effective_beam,
        per_depth_expansions=ledger.per_depth_expansions,
        final_state=final.state if final else None,
    )


def _beam_engine(
    problem: Problem,
    generator: ThoughtGenerator,
    predictor: StatePredictor,
    config: SearchConfig,
    allow_shortcut: bool,
    trace_sink: Optional[TraceSink],
) -> SearchResult:
    generator.register_problem(problem)
    root = make_root_state(problem, generator.problem_embedding(problem))
    ledger = _Ledger()
    beam: list[_Entry] = [_Entry(root, None)]

    for depth in range(1, config.max_depth + 1):
        active = [e for e in beam if not e.state.terminal]
        carried = [e for e in beam if e.state.terminal]
        if not active:
            break
        pool: list[_Entry] = []
        admitted_count = 0
        for entry in active:
            parent = entry.state
            cand0 = _generate_one(generator, problem, parent, 0, config, ledger)
            child0 = _scored_child(parent, cand0, 0, predictor, config)
            assert child0.predictor_score is not None
            scores = [child0.predictor_score]
            children = [(child0, cand0.answer)]
            if allow_shortcut and child0.predictor_score >= config.threshold:
                ledger.shortcut_events += 1
                action = "shortcut"
                admitted = children
            else:
                ledger.fallback_events += 1
                action = "fallback"
                for i in range(1, config.fanout):
                    cand = _generate_one(
                        generator, problem, parent, i, config, ledger
                    )
                    child = _scored_child(parent, cand, i, predictor, config)
                    assert child.predictor_score is not None
                    scores.append(child.predictor_score)
                    children.append((child, cand.answer))
                if (
                    allow_shortcut
                    and config.fallback_pool_policy == "above_threshold_only"
                ):
                    admitted = [
                        (c, a)
                        for c, a in children
                        if c.predictor_score is not None
                        and c.predictor_score >= config.threshold
                    ]
                else:
                    admitted = children
            pool.extend(_Entry(c, a) for c, a in admitted)
            admitted_count += len(admitted)
            if trace_sink is not None:
                trace_sink(
                    {
                        "depth": depth,
                        "node_path": list(parent.path),
                        "action": action,
                        "scores": scores,
                        "admitted": [c.path[-1] for c, _ in admitted],
                    }
                )
        ledger.per_depth_expansions.append(len(active))
        ledger.per_depth_effective_beam.append(admitted_count)
        # Carried terminals precede this depth's pool, so the stable sort
        # breaks score ties toward earlier generation.  Every entry here was
        # scored at creation; the root never re-enters the beam.
        combined = carried + pool
        combined.sort(key=lambda e: -float(e.state.predictor_score))  # type: ignore[arg-type]
        beam = combined[: config.beam_width]
        if not beam:
            break

    final = beam[0] if beam else None
    if final is not None and final.state.depth == 0:
        final = None  # nothing was generated at all (max_depth exhausted idle)
    return _result(ledger, final)


def adaptive_search(
    problem: Problem,
    generator: ThoughtGenerator,
    predictor: StatePredictor,
    config: SearchConfig,
    trace_sink: Optional[TraceSink] = None,
) -> SearchResult:
    """Predict-first beam search with shortcut admission (the main engine)."""
    return _beam_engine(problem, generator, predictor, config, True, trace_sink)


def beam_search_reference(
    problem: Problem,
    generator: ThoughtGenerator,
    predictor: StatePredictor,
    config: SearchConfig,
    trace_sink: Optional[TraceSink] = None,
) -> SearchResult:
    """Cost baseline: identical ranking, but every expansion pays full fanout."""
    return _beam_engine(problem, generator, predictor, config, False, trace_sink)


def greedy_search(
    problem: Problem,
    generator: ThoughtGenerator,
    predictor: StatePredictor,
    config: SearchConfig,
    trace_sink: Optional[TraceSink] = None,
) -> SearchResult:
    """Single-chain baseline: one candidate per depth, no branching.

    Costs match adaptive search with a zero threshold exactly, since both
    draw the same seeded first candidate at every depth.
    """
    generator.register_problem(problem)
    root = make_root_state(problem, generator.problem_embedding(problem))
    ledger = _Ledger()
    entry = _Entry(root, None)
    for depth in range(1, config.max_depth + 1):
        if entry.state.terminal:
            break
        cand = _generate_one(generator, problem, entry.state, 0, config, ledger)
        child = _scored_child(entry.state, cand, 0, predictor, config)
        ledger.shortcut_events += 1
        ledger.per_depth_expansions.append(1)
        ledger.per_depth_effective_beam.append(1)
        if trace_sink is not None:
            trace_sink(
                {
                    "depth": depth,
                    "node_path": list(entry.state.path),
                    "action": "shortcut",
                    "scores": [child.predictor_score],
                    "admitted": [0],
                }
            )
        entry = _Entry(child, cand.answer)
    final = entry if entry.state.depth > 0 else None
    return _result(ledger, final)


def expected_beam_width(p_shortcut: float, beam_width: int) -> float:
    """Expected admitted-per-expansion when shortcuts fire with probability p."""
    if not 0.0 <= p_shortcut <= 1.0:
        raise ValueError("p_shortcut must lie in [0, 1]")
    if beam_width < 1:
        raise ValueError("beam_width must be >= 1")
    return 1.0 * p_shortcut + beam_width * (1.0 - p_shortcut)


def measure_effective_beam(results: Iterable[SearchResult]) -> float:
    """Empirical mean of admitted candidates per expansion across runs."""
    admitted = 0
    expansions = 0
    for res in results:
        admitted += sum(res.per_depth_effective_beam)
        expansions += sum(res.per_depth_expansions)
    if expansions == 0:
        raise ValueError("no expansions to measure")
    return admitted / expansions


def replay_shortcut_rates(
    events: Sequence[dict], taus: Sequence[float]
) -> list[float]:
    """Shortcut rate per threshold over one recorded candidate stream.

    Replays the recorded first-candidate scores under each threshold,
    isolating the threshold effect from resampling noise.  The result is
    non-increasing in tau by construction.
    """
    first_scores = []
    for event in events:
        scores = event.get("scores")
        if not scores:
            raise ValueError("trace event carries no scores")
        first_scores.append(float(scores[0]))
    if not first_scores:
        raise ValueError("no trace events to replay")
    n = len(first_scores)
    return [sum(s >= tau for s in first_scores) / n for tau in taus]
