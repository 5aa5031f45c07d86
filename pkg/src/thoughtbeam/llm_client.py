"""HTTP generator client speaking the thought-serving wire protocol.

Two endpoints, JSON bodies:

    GET  /v1/meta      -> {"model_id": str, "hidden_dim": int}
    POST /v1/thoughts  {"prompt", "num_candidates", "stop", "temperature",
                        "max_tokens"}
                       -> {"candidates": [{"text", "hidden_state",
                           "tokens_generated", "finished", "answer"}]}

A request with ``max_tokens == 0`` is the embedding probe: the server
generates nothing and returns the prompt's own hidden state, which is how
the root state gets its features.  Malformed responses raise
``ProtocolError`` naming the offending field; transport failures retry
with backoff before raising ``GenerationError``.
"""

from __future__ import annotations

import time
from typing import Any, Optional

import numpy as np
import requests

from .core import Problem, ReasoningState, Thought
from .exceptions import GenerationError, ProtocolError
from .generators.base import Candidate, GeneratorMeta, ThoughtGenerator

DEFAULT_TIMEOUT = 30.0
DEFAULT_RETRIES = 3
DEFAULT_BACKOFF = 0.5
DEFAULT_STOP = "\n"
DEFAULT_MAX_TOKENS = 256


def _field(obj: dict, name: str, kind: type, where: str) -> Any:
    if name not in obj:
        raise ProtocolError(f"{where}: missing field {name!r}")
    value = obj[name]
    if kind is float:
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ProtocolError(f"{where}: field {name!r} must be a number")
        return float(value)
    if kind is int and isinstance(value, bool):
        raise ProtocolError(f"{where}: field {name!r} must be an integer")
    if not isinstance(value, kind):
        raise ProtocolError(
            f"{where}: field {name!r} must be {kind.__name__}, "
            f"got {type(value).__name__}"
        )
    return value


def _request_json(
    session: requests.Session,
    method: str,
    url: str,
    payload: Optional[dict],
    timeout: float,
    retries: int,
    backoff: float,
) -> dict:
    last_error: Optional[Exception] = None
    for attempt in range(retries):
        try:
            resp = session.request(method, url, json=payload, timeout=timeout)
        except requests.RequestException as exc:
            last_error = exc
            if attempt + 1 < retries:
                time.sleep(backoff * (2**attempt))
            continue
        if 400 <= resp.status_code < 500:
            raise ProtocolError(
                f"{method} {url} rejected with HTTP {resp.status_code}: "
                f"{resp.text[:200]}"
            )
        if resp.status_code != 200:
            last_error = GenerationError(
                f"{method} {url} returned HTTP {resp.status_code}"
            )
            if attempt + 1 < retries:
                time.sleep(backoff * (2**attempt))
            continue
        try:
            doc = resp.json()
        except ValueError as exc:
            raise ProtocolError(f"{method} {url}: response is not JSON") from exc
        if not isinstance(doc, dict):
            raise ProtocolError(f"{method} {url}: response must be a JSON object")
        return doc
    raise GenerationError(
        f"{method} {url} failed after {retries} attempts: {last_error}"
    )


def fetch_meta(
    endpoint: str,
    session: Optional[requests.Session] = None,
    timeout: float = DEFAULT_TIMEOUT,
    retries: int = DEFAULT_RETRIES,
    backoff: float = DEFAULT_BACKOFF,
) -> dict:
    """GET /v1/meta, validated to {"model_id": str, "hidden_dim": int >= 1}."""
    sess = session or requests.Session()
    doc = _request_json(
        sess, "GET", endpoint.rstrip("/") + "/v1/meta", None, timeout, retries, backoff
    )
    model_id = _field(doc, "model_id", str, "/v1/meta")
    hidden_dim = _field(doc, "hidden_dim", int, "/v1/meta")
    if hidden_dim < 1:
        raise ProtocolError("/v1/meta: hidden_dim must be >= 1")
    return {"model_id": model_id, "hidden_dim": hidden_dim}


def build_thoughts_request(
    prompt: str, num_candidates: int, stop: str, temperature: float, max_tokens: int
) -> dict:
    """The exact request body for POST /v1/thoughts."""
    if num_candidates < 1:
        raise ValueError("num_candidates must be >= 1")
    if max_tokens < 0:
        raise ValueError("max_tokens must be >= 0")
    return {
        "prompt": prompt,
        "num_candidates": num_candidates,
        "stop": stop,
        "temperature": temperature,
        "max_tokens": max_tokens,
    }


def parse_thoughts_response(doc: dict, expected: int, hidden_dim: int) -> list[dict]:
    """Validate a /v1/thoughts body, returning its candidate records."""
    where = "/v1/thoughts"
    candidates = _field(doc, "candidates", list, where)
    if len(candidates) != expected:
        raise ProtocolError(
            f"{where}: expected {expected} candidates, got {len(candidates)}"
        )
    out = []
    for i, rec in enumerate(candidates):
        if not isinstance(rec, dict):
            raise ProtocolError(f"{where}: candidate {i} must be an object")
        ctx = f"{where} candidate {i}"
        text = _field(rec, "text", str, ctx)
        hidden = _field(rec, "hidden_state", list, ctx)
        if len(hidden) != hidden_dim:
            raise ProtocolError(
                f"{ctx}: field 'hidden_state' has length {len(hidden)}, "
                f"expected {hidden_dim}"
            )
        for j, x in enumerate(hidden):
            if not isinstance(x, (int, float)) or isinstance(x, bool):
                raise ProtocolError(f"{ctx}: hidden_state[{j}] must be a number")
        tokens = _field(rec, "tokens_generated", int, ctx)
        if tokens < 0:
            raise ProtocolError(f"{ctx}: tokens_generated must be >= 0")
        finished = _field(rec, "finished", bool, ctx)
        answer = rec.get("answer")
        if answer is not None and not isinstance(answer, str):
            raise ProtocolError(f"{ctx}: field 'answer' must be a string or null")
        out.append(
            {
                "text": text,
                "hidden_state": hidden,
                "tokens_generated": tokens,
                "finished": finished,
                "answer": answer,
            }
        )
    return out


class HttpGenerator(ThoughtGenerator):
    """Thought generator backed by a remote model server.

    The server owns sampling, so this generator is declared
    non-deterministic; the engines' seed contexts are not transmitted.
    Prompts are the problem text and prior thoughts joined by ``stop``.
    """

    def __init__(
        self,
        endpoint: str,
        stop: str = DEFAULT_STOP,
        temperature: float = 0.7,
        max_tokens: int = DEFAULT_MAX_TOKENS,
        timeout: float = DEFAULT_TIMEOUT,
        retries: int = DEFAULT_RETRIES,
        backoff: float = DEFAULT_BACKOFF,
        session: Optional[requests.Session] = None,
    ) -> None:
        super().__init__()
        self.endpoint = endpoint.rstrip("/")
        self.stop = stop
        self.temperature = temperature
        self.max_tokens = max_tokens
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self.session = session or requests.Session()
        meta = fetch_meta(
            self.endpoint, self.session, timeout, retries, backoff
        )
        self.meta = GeneratorMeta(
            name=meta["model_id"],
            embedding_dim=meta["hidden_dim"],
            deterministic=False,
        )

    def _post_thoughts(
        self, prompt: str, n: int, temperature: float, max_tokens: int
    ) -> list[dict]:
        payload = build_thoughts_request(
            prompt, n, self.stop, temperature, max_tokens
        )
        doc = _request_json(
            self.session,
            "POST",
            self.endpoint + "/v1/thoughts",
            payload,
            self.timeout,
            self.retries,
            self.backoff,
        )
        return parse_thoughts_response(doc, n, self.meta.embedding_dim)

    def prompt_for(self, state: ReasoningState) -> str:
        problem = self.problem(state.problem_id)
        parts = [problem.text] + [t.text for t in state.thoughts]
        return self.stop.join(parts) + self.stop

    def problem_embedding(self, problem: Problem) -> np.ndarray:
        # max_tokens=0 probe: the prompt's own hidden state, nothing sampled.
        recs = self._post_thoughts(problem.text, 1, 0.0, 0)
        return np.asarray(recs[0]["hidden_state"], dtype=np.float64)

    def generate(
        self, state: ReasoningState, n: int, seed_context: int
    ) -> list[Candidate]:
        if state.terminal:
            raise GenerationError("cannot generate from a terminal state")
        recs = self._post_thoughts(
            self.prompt_for(state), n, self.temperature, self.max_tokens
        )
        out = []
        for rec in recs:
            if not rec["text"].strip() and not rec["finished"]:
                raise ProtocolError(
                    "/v1/thoughts: unfinished candidate has empty text"
                )
            if rec["answer"] is not None and not rec["finished"]:
                raise ProtocolError(
                    "/v1/thoughts: unfinished candidate carries an answer"
                )
            thought = Thought(
                text=rec["text"],
                tokens_generated=rec["tokens_generated"],
                terminal=rec["finished"],
            )
            out.append(
                Candidate(
                    thought,
                    np.asarray(rec["hidden_state"], dtype=np.float64),
                    rec["answer"],
                )
            )
        return self.check_output(out, n)
