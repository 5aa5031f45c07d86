"""Record and replay generator sessions.

A replay script is line-delimited JSON: one meta record, one root-embedding
record per problem, and one record per generate call keyed by (problem id,
node path, call index).  The replaying generator resolves calls through the
same stable seed-context hash the engines use, so a recorded session played
back under the same run seed reproduces the original tree bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ..core import Problem, ReasoningState, Thought
from ..exceptions import DataError, ReplayError
from .base import Candidate, GeneratorMeta, ThoughtGenerator, seed_context


@dataclass(frozen=True)
class CallRecord:
    """Candidates returned by one recorded generate call."""

    problem_id: str
    path: tuple[int, ...]
    call_index: int
    candidates: tuple[Candidate, ...]


def _candidate_to_json(cand: Candidate) -> dict:
    return {
        "text": cand.thought.text,
        "embedding": [float(x) for x in cand.embedding],
        "tokens": cand.thought.tokens_generated,
        "terminal": cand.thought.terminal,
        "answer": cand.answer,
    }


def _candidate_from_json(obj: dict, where: str) -> Candidate:
    try:
        thought = Thought(
            text=obj["text"],
            tokens_generated=int(obj["tokens"]),
            terminal=bool(obj["terminal"]),
        )
        return Candidate(thought, np.asarray(obj["embedding"], dtype=np.float64), obj.get("answer"))
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed candidate record in {where}: {exc}") from exc


class ScriptedGenerator(ThoughtGenerator):
    """Replays a recorded script; anything off-script is a replay error."""

    def __init__(
        self,
        embedding_dim: int,
        roots: dict[str, np.ndarray],
        calls: Sequence[CallRecord],
        seed: int,
    ) -> None:
        super().__init__()
        self.meta = GeneratorMeta(
            name="scripted", embedding_dim=embedding_dim, deterministic=True
        )
        self._roots: dict[str, np.ndarray] = {}
        for pid, emb in roots.items():
            arr = np.asarray(emb, dtype=np.float64)
            if arr.shape != (embedding_dim,):
                raise DataError(
                    f"root embedding for {pid!r} has shape {arr.shape}, "
                    f"expected ({embedding_dim},)"
                )
            self._roots[pid] = arr
        self._table: dict[int, CallRecord] = {}
        for rec in calls:
            ctx = seed_context(seed, rec.problem_id, rec.path, rec.call_index)
            for cand in rec.candidates:
                if cand.embedding.size != embedding_dim:
                    raise DataError(
                        f"scripted candidate at path {list(rec.path)} has "
                        f"embedding dim {cand.embedding.size}, expected {embedding_dim}"
                    )
            self._table[ctx] = rec

    @classmethod
    def load(cls, path: str | Path, seed: int) -> "ScriptedGenerator":
        """Read a replay script written by ``RecordingGenerator``."""
        embedding_dim: Optional[int] = None
        roots: dict[str, np.ndarray] = {}
        calls: list[CallRecord] = []
        try:
            fh = open(path, encoding="utf-8")
        except OSError as exc:
            raise DataError(f"cannot read script {path}: {exc}") from exc
        with fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise DataError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
                kind = obj.get("type")
                if kind == "meta":
                    embedding_dim = int(obj["embedding_dim"])
                elif kind == "root":
                    roots[obj["problem_id"]] = np.asarray(
                        obj["embedding"], dtype=np.float64
                    )
                elif kind == "call":
                    calls.append(
                        CallRecord(
                            problem_id=obj["problem_id"],
                            path=tuple(int(p) for p in obj["path"]),
                            call_index=int(obj["call_index"]),
                            candidates=tuple(
                                _candidate_from_json(c, f"{path}:{lineno}")
                                for c in obj["candidates"]
                            ),
                        )
                    )
                else:
                    raise DataError(f"{path}:{lineno}: unknown record type {kind!r}")
        if embedding_dim is None:
            raise DataError(f"{path}: script has no meta record")
        return cls(embedding_dim, roots, calls, seed)

    def problem_embedding(self, problem: Problem) -> np.ndarray:
        try:
            return self._roots[problem.id]
        except KeyError:
            raise ReplayError(
                f"script has no root embedding for problem {problem.id!r}"
            ) from None

    def generate(
        self, state: ReasoningState, n: int, seed_context: int
    ) -> list[Candidate]:
        rec = self._table.get(seed_context)
        if rec is None:
            raise ReplayError(
                f"script exhausted: no entry for problem {state.problem_id!r} "
                f"at node path {list(state.path)}"
            )
        if len(rec.candidates) != n:
            raise ReplayError(
                f"script entry at node path {list(rec.path)} holds "
                f"{len(rec.candidates)} candidates, engine asked for {n}"
            )
        return self.check_output(list(rec.candidates), n)


class RecordingGenerator(ThoughtGenerator):
    """Wraps a generator and writes every call to a replay script."""

    def __init__(self, inner: ThoughtGenerator, out_path: str | Path) -> None:
        super().__init__()
        self.inner = inner
        self.meta = inner.meta
        self._fh = open(out_path, "w", encoding="utf-8")
        self._write({"type": "meta", "embedding_dim": inner.meta.embedding_dim})
        self._roots_written: set[str] = set()
        self._call_counts: dict[tuple[str, tuple[int, ...]], int] = {}

    def _write(self, obj: dict) -> None:
        self._fh.write(json.dumps(obj) + "\n")

    def register_problem(self, problem: Problem) -> None:
        super().register_problem(problem)
        self.inner.register_problem(problem)

    def problem_embedding(self, problem: Problem) -> np.ndarray:
        emb = self.inner.problem_embedding(problem)
        if problem.id not in self._roots_written:
            self._write(
                {
                    "type": "root",
                    "problem_id": problem.id,
                    "embedding": [float(x) for x in emb],
                }
            )
            self._roots_written.add(problem.id)
        return emb

    def generate(
        self, state: ReasoningState, n: int, seed_context: int
    ) -> list[Candidate]:
        candidates = self.inner.generate(state, n, seed_context)
        key = (state.problem_id, state.path)
        call_index = self._call_counts.get(key, 0)
        self._call_counts[key] = call_index + 1
        self._write(
            {
                "type": "call",
                "problem_id": state.problem_id,
                "path": list(state.path),
                "call_index": call_index,
                "candidates": [_candidate_to_json(c) for c in candidates],
            }
        )
        return candidates

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "RecordingGenerator":
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.close()
