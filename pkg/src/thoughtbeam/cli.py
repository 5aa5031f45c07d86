"""Benchmark harness: collect trees, train the predictor, solve, sweep.

Subcommands
-----------
collect   build labeled thought trees and a merged training dataset
train     fit the boosted-tree predictor on a dataset, report metrics
solve     run greedy / adaptive / full-beam search and emit a report CSV
sweep     vary one knob (tau, beam, gamma) over a grid and emit a CSV

Configuration is a single JSON document with sections ``generator``,
``search``, ``collect``, ``train`` and ``report``; command-line flags
override individual fields.  Exit codes: 0 success, 1 usage or
configuration error, 2 data error, 3 generator error.

Reports are reproducible byte-for-byte from (config, seed, model file)
with one exception: the wall_time_ms column measures real elapsed time.
Comparisons that need byte equality should blank that column first.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import numpy as np

from .collect import (
    CollectConfig,
    build_tree,
    emit_dataset,
    load_tree,
    propagate_scores,
    read_dataset,
    save_tree,
    write_dataset,
)
from .core import Problem, SearchConfig
from .exceptions import ConfigurationError, DataError, GenerationError
from .gbdt import (
    GbdtModel,
    GradientBoostedTrees,
    dataset_matrix,
    load_model,
    save_model,
    train,
)
from .generators.base import ThoughtGenerator
from .generators.replay import RecordingGenerator, ScriptedGenerator
from .generators.synthetic import SyntheticConfig, SyntheticWorld
from .llm_client import (
    DEFAULT_BACKOFF,
    DEFAULT_RETRIES,
    DEFAULT_TIMEOUT,
    HttpGenerator,
)
from .search import (
    SearchResult,
    adaptive_search,
    beam_search_reference,
    greedy_search,
    replay_shortcut_rates,
)
from .verify import DEFAULT_REL_TOL, VerifierFn, leaf_labeler, make_verifier

MODES = ("greedy", "adaptive", "full_beam")

_SEARCH_FN: dict[str, Callable[..., SearchResult]] = {
    "greedy": greedy_search,
    "adaptive": adaptive_search,
    "full_beam": beam_search_reference,
}

REPORT_COLUMNS = [
    "method",
    "problem_id",
    "correct",
    "generated_tokens",
    "prompt_tokens",
    "generator_calls",
    "shortcut_rate",
    "effective_beam_width",
    "wall_time_ms",
]

# Section -> permitted keys.  Anything else in a config file is a typo and
# rejected outright rather than silently ignored.
_SCHEMA: dict[str, set[str]] = {
    "generator": {
        "kind",
        "embedding_dim",
        "chain_length",
        "correct_step_prob",
        "anchor_alpha",
        "value_range",
        "problems",
        "first_seed",
        "script",
        "dataset",
        "base_url",
        "timeout",
        "retries",
        "backoff",
        "verifier",
        "answer_template",
        "rel_tol",
        "record",
    },
    "search": {
        "beam_width",
        "fanout",
        "threshold",
        "gamma",
        "max_depth",
        "temperature",
        "seed",
        "fallback_pool_policy",
        "consistency_includes_root",
    },
    "collect": {
        "fanout",
        "max_depth",
        "gamma",
        "include_leaves",
        "consistency_includes_root",
        "seed",
    },
    "train": {
        "dataset",
        "learning_rate",
        "n_rounds",
        "max_leaves",
        "min_samples_leaf",
        "seed",
        "holdout_fraction",
    },
    "report": {"modes", "model", "workers", "trace", "trees"},
}

_DEFAULTS: dict[str, dict[str, Any]] = {
    "generator": {
        "kind": "synthetic",
        "problems": 20,
        "first_seed": 0,
        "verifier": "exact",
        "rel_tol": DEFAULT_REL_TOL,
    },
    "search": {},
    "collect": {},
    "train": {
        "learning_rate": 0.05,
        "n_rounds": 500,
        "max_leaves": 31,
        "min_samples_leaf": 20,
        "seed": 0,
        "holdout_fraction": 0.2,
    },
    "report": {"modes": ["greedy", "adaptive", "full_beam"], "workers": 1},
}


# ---------------------------------------------------------------------------
# configuration


def load_config(path: Optional[str]) -> dict[str, dict[str, Any]]:
    """Merge defaults with an optional JSON config file."""
    config: dict[str, dict[str, Any]] = {
        section: dict(values) for section, values in _DEFAULTS.items()
    }
    if path is None:
        return config
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigurationError(f"{path}: config root must be an object")
    for section, values in doc.items():
        if section not in _SCHEMA:
            raise ConfigurationError(f"{path}: unknown config section {section!r}")
        if not isinstance(values, dict):
            raise ConfigurationError(f"{path}: section {section!r} must be an object")
        for key in values:
            if key not in _SCHEMA[section]:
                raise ConfigurationError(
                    f"{path}: unknown field {key!r} in section {section!r}"
                )
        config[section].update(values)
    return config


def apply_flag_overrides(
    config: dict[str, dict[str, Any]], args: argparse.Namespace
) -> None:
    """Flags beat config-file fields; only flags the user passed apply."""
    if getattr(args, "generator", None) is not None:
        config["generator"]["kind"] = args.generator
    if getattr(args, "tau", None) is not None:
        config["search"]["threshold"] = args.tau
    if getattr(args, "beam", None) is not None:
        config["search"]["beam_width"] = args.beam
    if getattr(args, "k", None) is not None:
        config["search"]["fanout"] = args.k
        config["collect"]["fanout"] = args.k
    if getattr(args, "gamma", None) is not None:
        config["search"]["gamma"] = args.gamma
        config["collect"]["gamma"] = args.gamma
    if getattr(args, "depth", None) is not None:
        config["search"]["max_depth"] = args.depth
        config["collect"]["max_depth"] = args.depth
    if getattr(args, "seed", None) is not None:
        config["search"]["seed"] = args.seed
        config["collect"]["seed"] = args.seed
    if getattr(args, "mode", None) is not None:
        modes = list(MODES) if args.mode == "all" else [args.mode]
        config["report"]["modes"] = modes
    if getattr(args, "model", None) is not None:
        config["report"]["model"] = args.model
    if getattr(args, "dataset", None) is not None:
        config["train"]["dataset"] = args.dataset
    if getattr(args, "trees", None) is not None:
        config["report"]["trees"] = args.trees


def _search_config(section: dict[str, Any]) -> SearchConfig:
    return SearchConfig(**section)


def _collect_config(section: dict[str, Any]) -> CollectConfig:
    return CollectConfig(**section)


# ---------------------------------------------------------------------------
# problem sources and generators


def load_problem_file(path: str) -> list[Problem]:
    """Read a JSON-lines benchmark file: {"id", "question", "answer"}."""
    problems = []
    seen: set[str] = set()
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read dataset {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if not isinstance(row, dict):
                raise DataError(f"{path}:{lineno}: expected an object")
            try:
                problem = Problem(
                    id=str(row["id"]),
                    text=str(row["question"]),
                    gold_answer=str(row["answer"]),
                )
            except KeyError as exc:
                raise DataError(f"{path}:{lineno}: missing field {exc}") from exc
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
            if problem.id in seen:
                raise DataError(f"{path}:{lineno}: duplicate problem id {problem.id!r}")
            seen.add(problem.id)
            problems.append(problem)
    if not problems:
        raise DataError(f"{path}: dataset is empty")
    return problems


def _synthetic_world(section: dict[str, Any]) -> SyntheticWorld:
    kwargs: dict[str, Any] = {}
    for key in (
        "embedding_dim",
        "chain_length",
        "correct_step_prob",
        "anchor_alpha",
    ):
        if key in section:
            kwargs[key] = section[key]
    if "value_range" in section:
        rng = section["value_range"]
        if not (isinstance(rng, (list, tuple)) and len(rng) == 2):
            raise ConfigurationError("value_range must be a [low, high] pair")
        kwargs["value_range"] = (int(rng[0]), int(rng[1]))
    return SyntheticWorld(SyntheticConfig(**kwargs))


class GeneratorSetup:
    """Resolved problem source, generator, and verifier for one command."""

    def __init__(
        self,
        generator: ThoughtGenerator,
        problems: list[Problem],
        verifier: VerifierFn,
        recorder: Optional[RecordingGenerator] = None,
    ) -> None:
        self.generator = generator
        self.problems = problems
        self.verifier = verifier
        self._recorder = recorder

    def close(self) -> None:
        if self._recorder is not None:
            self._recorder.close()


def build_generator_setup(section: dict[str, Any], seed: int) -> GeneratorSetup:
    """Construct the generator named by ``kind`` plus its problem list.

    ``seed`` is the run seed of the calling command; the scripted generator
    needs it to reproduce the per-call contexts its script was keyed with.
    """
    kind = section.get("kind", "synthetic")
    verifier = make_verifier(
        section.get("verifier", "exact"),
        template=section.get("answer_template"),
        rel_tol=section.get("rel_tol", DEFAULT_REL_TOL),
    )
    generator: ThoughtGenerator
    if kind == "synthetic":
        world = _synthetic_world(section)
        count = int(section.get("problems", 20))
        if count < 1:
            raise ConfigurationError("generator.problems must be >= 1")
        first = int(section.get("first_seed", 0))
        problems = [world.make_problem(first + i) for i in range(count)]
        generator = world
    elif kind == "scripted":
        if "script" not in section:
            raise ConfigurationError("scripted generator requires generator.script")
        if "dataset" not in section:
            raise ConfigurationError("scripted generator requires generator.dataset")
        generator = ScriptedGenerator.load(section["script"], seed)
        problems = load_problem_file(section["dataset"])
    elif kind == "http":
        if "base_url" not in section:
            raise ConfigurationError("http generator requires generator.base_url")
        if "dataset" not in section:
            raise ConfigurationError("http generator requires generator.dataset")
        generator = HttpGenerator(
            section["base_url"],
            timeout=float(section.get("timeout", DEFAULT_TIMEOUT)),
            retries=int(section.get("retries", DEFAULT_RETRIES)),
            backoff=float(section.get("backoff", DEFAULT_BACKOFF)),
        )
        problems = load_problem_file(section["dataset"])
    else:
        raise ConfigurationError(f"unknown generator kind {kind!r}")
    recorder = None
    if section.get("record"):
        recorder = RecordingGenerator(generator, section["record"])
        generator = recorder
    return GeneratorSetup(generator, problems, verifier, recorder)


# ---------------------------------------------------------------------------
# collect


def cmd_collect(config: dict[str, dict[str, Any]], out_dir: Path) -> int:
    ccfg = _collect_config(config["collect"])
    setup = build_generator_setup(config["generator"], ccfg.seed)
    out_dir.mkdir(parents=True, exist_ok=True)
    examples = []
    node_total = 0
    try:
        for problem in setup.problems:
            tree = build_tree(problem, setup.generator, ccfg)
            propagate_scores(
                tree, ccfg.gamma, leaf_labeler(problem, setup.verifier)
            )
            save_tree(tree, out_dir / f"tree-{problem.id}.json")
            examples.extend(emit_dataset(tree, include_leaves=ccfg.include_leaves))
            node_total += len(tree)
    finally:
        setup.close()
    dataset_path = out_dir / "dataset.jsonl"
    write_dataset(examples, dataset_path)
    summary = {
        "problems": len(setup.problems),
        "nodes": node_total,
        "examples": len(examples),
    }
    with open(out_dir / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    print(
        f"collect: problems={summary['problems']} nodes={summary['nodes']} "
        f"examples={summary['examples']} -> {dataset_path}"
    )
    return 0


# ---------------------------------------------------------------------------
# train


def _holdout_split(
    n: int, fraction: float, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    if not 0.0 <= fraction < 1.0:
        raise ConfigurationError("holdout_fraction must lie in [0, 1)")
    order = np.random.default_rng(seed).permutation(n)
    n_hold = int(round(n * fraction))
    return order[n_hold:], order[:n_hold]


def _binary_auc(labels: np.ndarray, scores: np.ndarray) -> Optional[float]:
    """AUC over the examples with exact 0/1 labels; None when degenerate."""
    mask = (labels == 0.0) | (labels == 1.0)
    if not mask.any():
        return None
    y = labels[mask]
    if y.min() == y.max():
        return None
    from sklearn.metrics import roc_auc_score

    return float(roc_auc_score(y, scores[mask]))


def cmd_train(config: dict[str, dict[str, Any]], out_dir: Path) -> int:
    tcfg = config["train"]
    if "dataset" not in tcfg:
        raise ConfigurationError("train requires a dataset (--dataset or train.dataset)")
    dataset = read_dataset(tcfg["dataset"])
    train_idx, hold_idx = _holdout_split(
        len(dataset), float(tcfg["holdout_fraction"]), int(tcfg["seed"])
    )
    if train_idx.size == 0:
        raise DataError("holdout split leaves no training examples")
    params = {
        "learning_rate": tcfg["learning_rate"],
        "n_rounds": tcfg["n_rounds"],
        "max_leaves": tcfg["max_leaves"],
        "min_samples_leaf": tcfg["min_samples_leaf"],
        "seed": tcfg["seed"],
    }
    train_split = [dataset[i] for i in train_idx]
    X, y = dataset_matrix(train_split)
    est = GradientBoostedTrees(**params)
    est.fit(X, y)
    model = est.model_
    out_dir.mkdir(parents=True, exist_ok=True)
    model_path = out_dir / "model.json"
    save_model(model, model_path)

    report: dict[str, Any] = {
        "examples": len(dataset),
        "training_examples": len(train_split),
        "holdout_examples": int(hold_idx.size),
        "features": model.n_features,
        "rounds": len(model.trees),
        "base_score": model.base_score,
        "train_mse": est.train_mse_,
        "holdout": None,
    }
    if hold_idx.size:
        X_hold, y_hold = dataset_matrix([dataset[i] for i in hold_idx])
        pred = model.predict(X_hold)
        report["holdout"] = {
            "mse": float(np.mean((pred - y_hold) ** 2)),
            "auc": _binary_auc(y_hold, pred),
        }
    with open(out_dir / "train_report.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    final_mse = report["train_mse"][-1] if report["train_mse"] else None
    print(
        f"train: examples={report['examples']} rounds={report['rounds']} "
        f"final_train_mse={final_mse} -> {model_path}"
    )
    return 0


# ---------------------------------------------------------------------------
# solve


@dataclasses.dataclass
class _Row:
    method: str
    problem_id: str
    correct: int
    generated_tokens: int
    prompt_tokens: int
    generator_calls: int
    shortcut_rate: float
    effective_beam_width: float
    wall_time_ms: float


def _run_one(
    method: str,
    problem: Problem,
    generator: ThoughtGenerator,
    model: GbdtModel,
    scfg: SearchConfig,
    verifier: VerifierFn,
    trace_sink: Optional[Callable[[dict], None]] = None,
) -> tuple[_Row, SearchResult]:
    start = time.perf_counter()
    result = _SEARCH_FN[method](problem, generator, model, scfg, trace_sink)
    elapsed_ms = (time.perf_counter() - start) * 1000.0
    expansions = result.expansions
    admitted = sum(result.per_depth_effective_beam)
    row = _Row(
        method=method,
        problem_id=problem.id,
        correct=int(verifier(result.answer, problem)),
        generated_tokens=result.generated_tokens,
        prompt_tokens=result.prompt_tokens,
        generator_calls=result.generator_calls,
        shortcut_rate=round(
            result.shortcut_events / expansions if expansions else 0.0, 6
        ),
        effective_beam_width=round(admitted / expansions if expansions else 0.0, 6),
        wall_time_ms=round(elapsed_ms, 3),
    )
    return row, result


def _aggregate(rows: Sequence[_Row]) -> _Row:
    """Pure function of the per-problem rows, so the CSV self-verifies."""
    n = len(rows)
    return _Row(
        method=rows[0].method,
        problem_id="ALL",
        correct=sum(r.correct for r in rows),
        generated_tokens=sum(r.generated_tokens for r in rows),
        prompt_tokens=sum(r.prompt_tokens for r in rows),
        generator_calls=sum(r.generator_calls for r in rows),
        shortcut_rate=round(sum(r.shortcut_rate for r in rows) / n, 6),
        effective_beam_width=round(
            sum(r.effective_beam_width for r in rows) / n, 6
        ),
        wall_time_ms=round(sum(r.wall_time_ms for r in rows), 3),
    )


def _write_report(rows: Sequence[_Row], aggregates: Sequence[_Row], path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_COLUMNS)
        for row in list(rows) + list(aggregates):
            writer.writerow(
                [
                    row.method,
                    row.problem_id,
                    row.correct,
                    row.generated_tokens,
                    row.prompt_tokens,
                    row.generator_calls,
                    f"{row.shortcut_rate:.6f}",
                    f"{row.effective_beam_width:.6f}",
                    f"{row.wall_time_ms:.3f}",
                ]
            )


def _load_report_model(config: dict[str, dict[str, Any]]) -> GbdtModel:
    model_path = config["report"].get("model")
    if not model_path:
        raise ConfigurationError("a model file is required (--model or report.model)")
    return load_model(model_path)


def _solve_mode(
    method: str,
    setup: GeneratorSetup,
    model: GbdtModel,
    scfg: SearchConfig,
    workers: int,
    trace_sink: Optional[Callable[[dict], None]] = None,
) -> tuple[list[_Row], list[SearchResult]]:
    """Run one method over all problems; merge preserves problem order."""

    def runner(problem: Problem) -> tuple[_Row, SearchResult]:
        return _run_one(
            method, problem, setup.generator, model, scfg, setup.verifier, trace_sink
        )

    if workers <= 1:
        outcomes = [runner(p) for p in setup.problems]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(runner, setup.problems))
    return [row for row, _ in outcomes], [res for _, res in outcomes]


def cmd_solve(config: dict[str, dict[str, Any]], out_dir: Path) -> int:
    scfg = _search_config(config["search"])
    modes = config["report"]["modes"]
    for mode in modes:
        if mode not in MODES:
            raise ConfigurationError(f"unknown mode {mode!r}")
    model = _load_report_model(config)
    setup = build_generator_setup(config["generator"], scfg.seed)
    workers = int(config["report"].get("workers", 1))
    if workers < 1:
        raise ConfigurationError("report.workers must be >= 1")
    trace_events: list[dict] = []
    trace_wanted = bool(config["report"].get("trace"))
    out_dir.mkdir(parents=True, exist_ok=True)
    rows: list[_Row] = []
    aggregates: list[_Row] = []
    try:
        for mode in modes:
            sink = trace_events.append if trace_wanted and mode == "adaptive" else None
            mode_rows, _ = _solve_mode(mode, setup, model, scfg, workers, sink)
            rows.extend(mode_rows)
            aggregates.append(_aggregate(mode_rows))
    finally:
        setup.close()
    report_path = out_dir / "solve.csv"
    _write_report(rows, aggregates, report_path)
    if trace_wanted:
        with open(out_dir / "trace.jsonl", "w", encoding="utf-8") as fh:
            for event in trace_events:
                fh.write(json.dumps(event) + "\n")
    for agg in aggregates:
        n = sum(1 for r in rows if r.method == agg.method)
        print(
            f"solve[{agg.method}]: accuracy={agg.correct / n:.3f} "
            f"tokens={agg.generated_tokens} calls={agg.generator_calls} "
            f"shortcut_rate={agg.shortcut_rate:.3f}"
        )
    print(f"report -> {report_path}")
    return 0


# ---------------------------------------------------------------------------
# sweep


def _parse_grid(raw: str, param: str) -> list[float]:
    try:
        values = [float(part) for part in raw.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigurationError(f"invalid grid value: {exc}") from exc
    if not values:
        raise ConfigurationError("grid must be non-empty")
    if param == "beam":
        for v in values:
            if v != int(v) or v < 1:
                raise ConfigurationError("beam grid values must be integers >= 1")
    elif param == "gamma":
        for v in values:
            if not 0.0 < v <= 1.0:
                raise ConfigurationError("gamma grid values must lie in (0, 1]")
    elif param == "tau":
        for v in values:
            if v < 0.0:
                raise ConfigurationError("tau grid values must be >= 0")
    return values


def _sweep_accuracy_tokens(
    setup: GeneratorSetup,
    model: GbdtModel,
    scfg: SearchConfig,
    method: str,
    workers: int,
) -> tuple[float, int, float]:
    rows, results = _solve_mode(method, setup, model, scfg, workers)
    total_expansions = sum(r.expansions for r in results)
    total_shortcuts = sum(r.shortcut_events for r in results)
    accuracy = sum(r.correct for r in rows) / len(rows)
    tokens = sum(r.generated_tokens for r in rows)
    rate = total_shortcuts / total_expansions if total_expansions else 0.0
    return accuracy, tokens, rate


def cmd_sweep(
    config: dict[str, dict[str, Any]],
    out_dir: Path,
    param: str,
    grid: list[float],
) -> int:
    scfg = _search_config(config["search"])
    workers = int(config["report"].get("workers", 1))
    out_dir.mkdir(parents=True, exist_ok=True)
    sweep_rows: list[dict[str, Any]] = []

    if param in ("tau", "beam"):
        model = _load_report_model(config)
        setup = build_generator_setup(config["generator"], scfg.seed)
        try:
            if param == "tau":
                # One recorded adaptive run isolates the threshold effect:
                # the same first-candidate scores are re-thresholded per tau.
                events: list[dict] = []
                _solve_mode("adaptive", setup, model, scfg, 1, events.append)
                replayed = replay_shortcut_rates(events, grid)
                for tau, rate in zip(grid, replayed):
                    run_cfg = dataclasses.replace(scfg, threshold=tau)
                    accuracy, tokens, _ = _sweep_accuracy_tokens(
                        setup, model, run_cfg, "adaptive", workers
                    )
                    sweep_rows.append(
                        {
                            "parameter": "tau",
                            "value": tau,
                            "accuracy": accuracy,
                            "generated_tokens": tokens,
                            "shortcut_rate": rate,
                        }
                    )
            else:
                method = config["report"]["modes"][0]
                if method not in MODES:
                    raise ConfigurationError(f"unknown mode {method!r}")
                for width in grid:
                    run_cfg = dataclasses.replace(scfg, beam_width=int(width))
                    accuracy, tokens, rate = _sweep_accuracy_tokens(
                        setup, model, run_cfg, method, workers
                    )
                    sweep_rows.append(
                        {
                            "parameter": "beam",
                            "value": int(width),
                            "accuracy": accuracy,
                            "generated_tokens": tokens,
                            "shortcut_rate": rate,
                        }
                    )
        finally:
            setup.close()
    elif param == "gamma":
        sweep_rows = _gamma_sweep(config, scfg, grid, workers)
    else:
        raise ConfigurationError(f"unknown sweep parameter {param!r}")

    sweep_path = out_dir / "sweep.csv"
    with open(sweep_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["parameter", "value", "accuracy", "generated_tokens", "shortcut_rate"]
        )
        for row in sweep_rows:
            writer.writerow(
                [
                    row["parameter"],
                    row["value"],
                    f"{row['accuracy']:.6f}",
                    row["generated_tokens"],
                    f"{row['shortcut_rate']:.6f}",
                ]
            )
    print(f"sweep[{param}] over {len(grid)} points -> {sweep_path}")
    return 0


def _gamma_sweep(
    config: dict[str, dict[str, Any]],
    scfg: SearchConfig,
    grid: list[float],
    workers: int,
) -> list[dict[str, Any]]:
    """Relabel saved trees per gamma, retrain, re-evaluate.

    Trees are generated once (by ``collect``); the sweep only reruns the
    pure relabel -> train -> search pipeline, never the generator that
    produced the trees.
    """
    trees_dir = config["report"].get("trees")
    if not trees_dir:
        raise ConfigurationError("gamma sweep requires saved trees (--trees)")
    tree_paths = sorted(Path(trees_dir).glob("tree-*.json"))
    if not tree_paths:
        raise DataError(f"no tree-*.json files under {trees_dir}")
    trees = [load_tree(p) for p in tree_paths]
    setup = build_generator_setup(config["generator"], scfg.seed)
    problems_by_id = {p.id: p for p in setup.problems}
    tcfg = config["train"]
    params = {
        "learning_rate": tcfg["learning_rate"],
        "n_rounds": tcfg["n_rounds"],
        "max_leaves": tcfg["max_leaves"],
        "min_samples_leaf": tcfg["min_samples_leaf"],
        "seed": tcfg["seed"],
    }
    include_leaves = bool(config["collect"].get("include_leaves", True))
    rows = []
    try:
        for gamma in grid:
            examples = []
            for tree in trees:
                problem = problems_by_id.get(tree.nodes[tree.root].problem_id)
                if problem is None:
                    raise DataError(
                        f"saved tree for unknown problem "
                        f"{tree.nodes[tree.root].problem_id!r}"
                    )
                propagate_scores(
                    tree, gamma, leaf_labeler(problem, setup.verifier)
                )
                examples.extend(emit_dataset(tree, include_leaves=include_leaves))
            model = train(examples, params)
            run_cfg = dataclasses.replace(scfg, gamma=gamma)
            accuracy, tokens, rate = _sweep_accuracy_tokens(
                setup, model, run_cfg, "adaptive", workers
            )
            rows.append(
                {
                    "parameter": "gamma",
                    "value": gamma,
                    "accuracy": accuracy,
                    "generated_tokens": tokens,
                    "shortcut_rate": rate,
                }
            )
    finally:
        setup.close()
    return rows


# ---------------------------------------------------------------------------
# argument parsing and dispatch


class _ArgumentParser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here is exit code 1."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        raise ConfigurationError(message)


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--seed", type=int, help="run seed override")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument(
        "--generator",
        choices=["synthetic", "scripted", "http"],
        help="generator kind override",
    )
    parser.add_argument("--tau", type=float, help="shortcut threshold override")
    parser.add_argument("--beam", type=int, help="beam width override")
    parser.add_argument("--k", type=int, help="fanout override")
    parser.add_argument("--gamma", type=float, help="discount override")
    parser.add_argument("--depth", type=int, help="max depth override")
    parser.add_argument(
        "--mode",
        choices=list(MODES) + ["all"],
        help="search method(s) for solve/sweep",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="thoughtbeam",
        description="Thought-tree search benchmark harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_collect = sub.add_parser(
        "collect", help="build labeled trees and a training dataset"
    )
    _add_common_flags(p_collect)

    p_train = sub.add_parser("train", help="fit the predictor on a dataset")
    _add_common_flags(p_train)
    p_train.add_argument("--dataset", help="training dataset JSONL")

    p_solve = sub.add_parser("solve", help="run search methods, emit a report CSV")
    _add_common_flags(p_solve)
    p_solve.add_argument("--model", help="trained model file")

    p_sweep = sub.add_parser("sweep", help="vary one knob over a grid")
    _add_common_flags(p_sweep)
    p_sweep.add_argument(
        "--param", required=True, choices=["tau", "beam", "gamma"]
    )
    p_sweep.add_argument(
        "--grid", required=True, help="comma-separated grid values"
    )
    p_sweep.add_argument("--model", help="trained model file")
    p_sweep.add_argument("--trees", help="directory of saved trees (gamma sweep)")
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config = load_config(args.config)
    apply_flag_overrides(config, args)
    out_dir = Path(args.out)
    if args.command == "collect":
        return cmd_collect(config, out_dir)
    if args.command == "train":
        return cmd_train(config, out_dir)
    if args.command == "solve":
        return cmd_solve(config, out_dir)
    if args.command == "sweep":
        grid = _parse_grid(args.grid, args.param)
        return cmd_sweep(config, out_dir, args.param, grid)
    raise ConfigurationError(f"unknown command {args.command!r}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        return run(argv)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NotImplementedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except GenerationError as exc:
        print(f"generation error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
