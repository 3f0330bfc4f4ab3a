"""HTTP/JSON service for parsing, synthesis, and interactive refinement.

Three endpoints: POST /parse ranks sketches for a description, POST
/synthesize produces candidate regexes (from a sketch, a description, or
both examples lanes) and opens a session, POST /session/{id}/refine rejects
a candidate, adds counterexamples, and re-synthesizes over the session's
grown example set. Sessions live in memory with TTL eviction; a session
serializes its own mutations. Every candidate returned carries a
per-example match matrix computed with the core matcher, and candidates
whose matrix has a wrong cell are dropped server-side.
"""
from __future__ import annotations

import threading
import time
import uuid
from dataclasses import dataclass, field

from fastapi import FastAPI, HTTPException
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .grammar import Grammar, GrammarError, demo_grammar
from .nlparser import ModelParams, TOP_SKETCHES, default_model_path, load_model, parse_to_sketches
from .regex import Regex, RegexSyntaxError, match, parse_regex, print_regex
from .synthesis import DEFAULT_TOP_K, ExampleSet, SynthesisConfig, synthesize

SESSION_TTL_S = 1800.0
DEFAULT_TIMEOUT_MS = 20_000
TIMEOUT_CEILING_MS = 60_000


# ---------------------------------------------------------------------------
# Request/response schemas
# ---------------------------------------------------------------------------

class ParseRequest(BaseModel):
    description: str


class SketchOut(BaseModel):
    text: str
    score: float


class ParseResponse(BaseModel):
    sketches: list[SketchOut]


class SynthesizeRequest(BaseModel):
    sketch: str | None = None
    description: str | None = None
    positives: list[str] = Field(default_factory=list)
    negatives: list[str] = Field(default_factory=list)
    top_k: int = DEFAULT_TOP_K
    timeout_ms: int = DEFAULT_TIMEOUT_MS


class MatchMatrix(BaseModel):
    positive: list[bool]
    negative: list[bool]


class CandidateOut(BaseModel):
    regex: str
    matches: MatchMatrix


class SynthesizeResponse(BaseModel):
    candidates: list[CandidateOut]
    timed_out: bool
    session_id: str


class RefineRequest(BaseModel):
    reject: str
    new_positives: list[str] = Field(default_factory=list)
    new_negatives: list[str] = Field(default_factory=list)


# ---------------------------------------------------------------------------
# Sessions
# ---------------------------------------------------------------------------

@dataclass(slots=True)
class Session:
    id: str
    description: str | None
    sketches: list[str]  # ranked sketch texts driving every (re)synthesis
    examples: ExampleSet
    top_k: int
    timeout_ms: int
    candidates: list[str] = field(default_factory=list)
    history: list[dict] = field(default_factory=list)
    touched: float = field(default_factory=time.monotonic)
    lock: threading.Lock = field(default_factory=threading.Lock)


class SessionStore:
    def __init__(self, ttl_s: float = SESSION_TTL_S) -> None:
        self._ttl_s = ttl_s
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def _purge(self, now: float) -> None:
        dead = [sid for sid, s in self._sessions.items() if now - s.touched > self._ttl_s]
        for sid in dead:
            del self._sessions[sid]

    def create(self, session: Session) -> None:
        with self._lock:
            self._purge(time.monotonic())
            self._sessions[session.id] = session

    def get(self, session_id: str) -> Session | None:
        with self._lock:
            now = time.monotonic()
            self._purge(now)
            session = self._sessions.get(session_id)
            if session is not None:
                session.touched = now
            return session


# ---------------------------------------------------------------------------
# Synthesis plumbing
# ---------------------------------------------------------------------------

def _matrix(regex: Regex, examples: ExampleSet) -> MatchMatrix:
    return MatchMatrix(
        positive=[match(regex, s) for s in examples.positives],
        negative=[match(regex, s) for s in examples.negatives],
    )


def _consistent(matrix: MatchMatrix) -> bool:
    return all(matrix.positive) and not any(matrix.negative)


def _pooled_synthesis(
    sketches: list[str],
    examples: ExampleSet,
    top_k: int,
    timeout_ms: int,
) -> tuple[list[CandidateOut], bool]:
    """Run the sketches in rank order under one shared budget; pool and dedup."""
    budget_s = min(timeout_ms, TIMEOUT_CEILING_MS) / 1000.0
    deadline = time.monotonic() + budget_s
    candidates: list[CandidateOut] = []
    seen: set[str] = set()
    timed_out = False
    for text in sketches:
        remaining = deadline - time.monotonic()
        if remaining <= 0:
            timed_out = True
            break
        cfg = SynthesisConfig(top_k=top_k, timeout_s=remaining)
        result = synthesize(text, examples, cfg)
        timed_out = timed_out or result.timed_out
        for regex in result.regexes:
            printed = print_regex(regex)
            if printed in seen:
                continue
            matrix = _matrix(regex, examples)
            if not _consistent(matrix):  # server-side spot check
                continue
            seen.add(printed)
            candidates.append(CandidateOut(regex=printed, matches=matrix))
        if len(candidates) >= top_k:
            break
    return candidates[:top_k], timed_out


def _ranked_sketch_texts(description: str, grammar: Grammar, model: ModelParams | None) -> list[str]:
    ranked = parse_to_sketches(description, grammar, model)
    return [str(sk) for sk, _ in ranked[:TOP_SKETCHES]]


# ---------------------------------------------------------------------------
# Application factory
# ---------------------------------------------------------------------------

def create_app(grammar: Grammar | None = None, model: ModelParams | None = None) -> FastAPI:
    app = FastAPI(title="rexsynth")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    grammar = grammar or demo_grammar()
    if model is None and default_model_path().is_file():
        model = load_model(default_model_path())
    store = SessionStore()
    app.state.sessions = store

    @app.exception_handler(RequestValidationError)
    def malformed_body(request, exc) -> JSONResponse:  # malformed JSON -> 400, not 422
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.post("/parse", response_model=ParseResponse)
    def parse(req: ParseRequest) -> ParseResponse:
        try:
            ranked = parse_to_sketches(req.description, grammar, model)
        except GrammarError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return ParseResponse(sketches=[SketchOut(text=str(sk), score=p) for sk, p in ranked])

    @app.post("/synthesize", response_model=SynthesizeResponse)
    def synthesize_endpoint(req: SynthesizeRequest) -> SynthesizeResponse:
        if req.sketch is None and req.description is None:
            raise HTTPException(status_code=400, detail="provide a sketch or a description")
        try:
            examples = ExampleSet.of(req.positives, req.negatives)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        if req.sketch is not None:
            sketches = [req.sketch]
        else:
            sketches = _ranked_sketch_texts(req.description, grammar, model) or ["?{<any>}"]
        try:
            candidates, timed_out = _pooled_synthesis(sketches, examples, req.top_k, req.timeout_ms)
        except (RegexSyntaxError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        session = Session(
            id=uuid.uuid4().hex,
            description=req.description,
            sketches=sketches,
            examples=examples,
            top_k=req.top_k,
            timeout_ms=req.timeout_ms,
            candidates=[c.regex for c in candidates],
        )
        store.create(session)
        return SynthesizeResponse(candidates=candidates, timed_out=timed_out, session_id=session.id)

    @app.post("/session/{session_id}/refine", response_model=SynthesizeResponse)
    def refine(session_id: str, req: RefineRequest) -> SynthesizeResponse:
        session = store.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail="unknown or expired session")
        try:
            rejected = parse_regex(req.reject)
        except RegexSyntaxError as exc:
            raise HTTPException(status_code=400, detail=f"reject: {exc}")
        # the refinement must rule the rejected candidate out: at least one
        # new example the rejected regex misclassifies
        rules_out = any(not match(rejected, s) for s in req.new_positives) or any(
            match(rejected, s) for s in req.new_negatives
        )
        if not rules_out:
            raise HTTPException(
                status_code=409,
                detail="refinement does not rule out the rejected candidate",
            )
        with session.lock:
            try:
                examples = session.examples.extended(req.new_positives, req.new_negatives)
            except ValueError as exc:
                raise HTTPException(status_code=400, detail=str(exc))
            candidates, timed_out = _pooled_synthesis(
                session.sketches, examples, session.top_k, session.timeout_ms
            )
            rejected_text = print_regex(rejected)
            candidates = [c for c in candidates if c.regex != rejected_text]
            session.examples = examples
            session.candidates = [c.regex for c in candidates]
            session.history.append(
                {
                    "reject": req.reject,
                    "new_positives": list(req.new_positives),
                    "new_negatives": list(req.new_negatives),
                }
            )
        return SynthesizeResponse(candidates=candidates, timed_out=timed_out, session_id=session.id)

    return app
