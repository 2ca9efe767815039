"""Drives the human-in-the-loop engagement cycle over the three modules.

One Engine hosts many engagement sessions. Each session owns a reasoning
context (and with it the task tree), an optional active step plan, and an
append-only event feed. Feedback questions run against a frozen fork of the
reasoning context and therefore never change persisted state: saved sessions
exclude feedback events and feedback-attributed costs by design.
"""

from __future__ import annotations

import datetime as _dt
import json
import os
import threading
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path

from .bench import CostLedger
from .config import EngineConfig, API_KEY_ENV, resolve_path
from .errors import (
    DeadlockReached,
    EngineError,
    InvalidArgument,
    NotFound,
    ParseError,
    UnsupportedVersion,
)
from .generation import EnvironmentProfile, GenerationModule, NextOperation, StepPlan
from .llm import HttpChatBackend, ScriptedBackend, SessionManager, TokenBudget
from .parsing import InputCategory, ParsingModule
from .promptstore import PromptStore
from .reasoning import ReasoningContext, ReasoningModule
from .tree import canonicalize
from .treetext import from_text, to_text

SESSION_FILE_VERSION = 1

EVENT_USER_GOAL = "user-goal"
EVENT_NEXT_OP = "next-op"
EVENT_RESULT_SUBMITTED = "result-submitted"
EVENT_TREE_UPDATED = "tree-updated"
EVENT_FEEDBACK_Q = "feedback-q"
EVENT_FEEDBACK_A = "feedback-a"
EVENT_MANUAL_REVISION = "manual-revision"
EVENT_ERROR = "error"

# Feedback must not alter persisted engagement state, so its events live only
# in the volatile feed.
VOLATILE_KINDS = frozenset({EVENT_FEEDBACK_Q, EVENT_FEEDBACK_A})


@dataclass(frozen=True)
class TranscriptEvent:
    seq: int
    kind: str
    payload: str
    timestamp: str

    def to_dict(self) -> dict:
        return {"seq": self.seq, "kind": self.kind, "payload": self.payload,
                "timestamp": self.timestamp}


@dataclass
class ActivePlan:
    plan: StepPlan
    cursor: int
    revision: int


@dataclass
class EngagementSession:
    id: str
    goal: str
    target_description: str
    reasoning: ReasoningContext
    config: dict
    events: list[TranscriptEvent] = field(default_factory=list)
    active_plan: ActivePlan | None = None
    next_seq: int = 1
    changed: threading.Condition = field(default_factory=threading.Condition)

    @property
    def transcript(self) -> list[TranscriptEvent]:
        """The persisted subset of the event feed."""
        return [e for e in self.events if e.kind not in VOLATILE_KINDS]


def _default_clock() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat()


class Engine:
    def __init__(self, config: EngineConfig, clock=_default_clock, sleep=None,
                 script_offset: int = 0):
        config.validate()
        self.config = config
        self.clock = clock
        self.ledger = CostLedger(config.price_in_per_1k, config.price_out_per_1k)
        budget = TokenBudget(window=config.window, reply_reserve=config.reply_reserve)
        kwargs = {"sleep": sleep} if sleep is not None else {}
        self.manager = SessionManager(budget, cost_hook=self._record_cost, **kwargs)
        self._register_backend(script_offset)
        if config.prompt_dir:
            self.prompts = PromptStore.from_dir(config.prompt_dir)
        else:
            self.prompts = PromptStore.default()
        self.prompts.validate()
        self.environment = EnvironmentProfile(
            os_name=config.target_os,
            attacker_distro=config.attacker_distro,
            prohibited_tools=tuple(config.prohibited_tools),
        )
        self.reasoning = ReasoningModule(
            self.manager, self.prompts, config.backend_name, retries=config.retries
        )
        self.generation = GenerationModule(self.manager, self.prompts, config.backend_name)
        self.parsing = ParsingModule(
            self.manager, self.prompts,
            chunk_budget=config.chunk_budget, summary_budget=config.summary_budget,
        )
        self.sessions: dict[str, EngagementSession] = {}
        self._registry_lock = threading.Lock()
        self._session_counter = 0

    def _register_backend(self, script_offset: int) -> None:
        if self.config.backend_name == "scripted":
            path = resolve_path(self.config.script_path)
            self.scripted = ScriptedBackend.from_file(path, start_at=script_offset)
            self.manager.register("scripted", self.scripted)
        else:
            self.scripted = None
            self.manager.register("http", HttpChatBackend(
                base_url=self.config.base_url,
                model=self.config.model,
                api_key=os.environ.get(API_KEY_ENV, ""),
            ))

    def _record_cost(self, session, tokens_in: int, tokens_out: int) -> None:
        self.ledger.record(session.id, session.label or "unknown", tokens_in, tokens_out)

    # -- events ---------------------------------------------------------------

    def _emit(self, session: EngagementSession, kind: str, payload: dict | str) -> TranscriptEvent:
        if isinstance(payload, dict):
            payload = json.dumps(payload, sort_keys=True, ensure_ascii=True)
        event = TranscriptEvent(
            seq=session.next_seq, kind=kind, payload=payload, timestamp=self.clock()
        )
        with session.changed:
            session.next_seq += 1
            session.events.append(event)
            session.changed.notify_all()
        return event

    # -- engagement lifecycle ---------------------------------------------------

    def start_engagement(self, goal: str, target_description: str) -> EngagementSession:
        if not goal.strip():
            raise InvalidArgument("goal must be non-empty")
        if not target_description.strip():
            raise InvalidArgument("target description must be non-empty")
        ctx = self.reasoning.init_ptt(goal, target_description)
        with self._registry_lock:
            self._session_counter += 1
            session_id = f"e{self._session_counter}"
        session = EngagementSession(
            id=session_id,
            goal=goal,
            target_description=target_description,
            reasoning=ctx,
            config=self.config.to_dict(),
        )
        self.sessions[session.id] = session
        self._emit(session, EVENT_USER_GOAL,
                   {"goal": goal, "target": target_description})
        return session

    def get_session(self, session_id: str) -> EngagementSession:
        if session_id not in self.sessions:
            raise NotFound(f"unknown engagement session {session_id!r}")
        return self.sessions[session_id]

    def next_action(self, session: EngagementSession) -> NextOperation:
        plan = session.active_plan
        if (plan is not None and plan.revision == session.reasoning.revision
                and plan.cursor < len(plan.plan.steps)):
            operation = self.generation.concretize(plan.plan, plan.cursor, self.environment)
            plan.cursor += 1
        else:
            session.active_plan = None  # stale or exhausted
            candidates = self.reasoning.enumerate_candidates(session.reasoning)
            if not candidates:
                tree_text = session.reasoning.last_verified_text
                self._emit(session, EVENT_ERROR,
                           {"error": "deadlock-reached", "tree": tree_text})
                raise DeadlockReached("no viable leaf tasks remain", tree_text=tree_text)
            choice = self.reasoning.select_task(session.reasoning, candidates)
            try:
                new_plan, operation = self.generation.run_generation(choice, self.environment)
            except EngineError as exc:
                self._emit(session, EVENT_ERROR, {"error": exc.kind, "message": str(exc)})
                raise
            session.active_plan = ActivePlan(
                plan=new_plan, cursor=1, revision=session.reasoning.revision
            )
        self._emit(session, EVENT_NEXT_OP, {
            "kind": operation.kind,
            "content": operation.content,
            "step_index": operation.step_index,
            "expected_outcome": operation.expected_outcome,
        })
        return operation

    def submit_result(self, session: EngagementSession, category: InputCategory | str,
                      raw: str) -> int:
        try:
            category = InputCategory(category)
        except ValueError:
            raise InvalidArgument(
                f"unknown input category {category!r}; expected one of "
                f"{[c.value for c in InputCategory]}"
            ) from None
        if not raw.strip():
            raise InvalidArgument("submitted result is empty")
        parse_session = self.manager.open_session(
            self.config.backend_name, self.prompts.render("system.parsing"), label="parsing"
        )
        summary = self.parsing.summarize(raw, category, parse_session)
        self._emit(session, EVENT_RESULT_SUBMITTED,
                   {"category": category.value, "raw": raw})
        try:
            self.reasoning.update_ptt(session.reasoning, summary)
        except EngineError as exc:
            self._emit(session, EVENT_ERROR, {"error": exc.kind, "message": str(exc)})
            raise
        self._emit(session, EVENT_TREE_UPDATED, {
            "revision": session.reasoning.revision,
            "tree": session.reasoning.last_verified_text,
        })
        return session.reasoning.revision

    def feedback(self, session: EngagementSession, question: str) -> str:
        if not question.strip():
            raise InvalidArgument("feedback question must be non-empty")
        chunk = self.manager.snapshot_context(session.reasoning.session)
        fork = self.manager.fork_session(chunk, self.config.backend_name, label="feedback")
        answer = self.manager.send(fork, question).content
        self._emit(session, EVENT_FEEDBACK_Q, {"question": question})
        self._emit(session, EVENT_FEEDBACK_A, {"answer": answer})
        return answer

    def feedback_update(self, session: EngagementSession, instruction: str) -> int:
        try:
            self.reasoning.apply_manual_revision(session.reasoning, instruction)
        except EngineError as exc:
            if not isinstance(exc, InvalidArgument):
                self._emit(session, EVENT_ERROR, {"error": exc.kind, "message": str(exc)})
            raise
        self._emit(session, EVENT_MANUAL_REVISION, {
            "instruction": instruction,
            "revision": session.reasoning.revision,
            "tree": session.reasoning.last_verified_text,
        })
        return session.reasoning.revision

    # -- persistence -------------------------------------------------------------

    def serialize_session(self, session: EngagementSession) -> str:
        plan = None
        if session.active_plan is not None:
            plan = {
                "task_path": list(session.active_plan.plan.task_path),
                "steps": session.active_plan.plan.steps,
                "cursor": session.active_plan.cursor,
                "revision": session.active_plan.revision,
            }
        persisted = session.transcript
        cost = [
            {"session_id": e.session_id, "module": e.module,
             "tokens_in": e.tokens_in, "tokens_out": e.tokens_out, "usd": str(e.usd)}
            for e in self.ledger.entries if e.module != "feedback"
        ]
        doc = {
            "version": SESSION_FILE_VERSION,
            "id": session.id,
            "goal": session.goal,
            "target": session.target_description,
            "tree_text": session.reasoning.last_verified_text,
            "revision": session.reasoning.revision,
            "transcript": [e.to_dict() for e in persisted],
            "next_seq": max((e.seq for e in persisted), default=0) + 1,
            "plan": plan,
            "config": session.config,
            "cost": cost,
        }
        return json.dumps(doc, sort_keys=True, ensure_ascii=True, indent=2) + "\n"

    def save_session(self, session: EngagementSession, path: str | Path) -> None:
        Path(path).write_text(self.serialize_session(session), encoding="utf-8")

    def load_session(self, path: str | Path) -> EngagementSession:
        path = Path(path)
        if not path.exists():
            raise NotFound(f"session file {path} does not exist")
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ParseError(f"session file is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise ParseError("session file must hold a JSON object")
        version = doc.get("version")
        if version != SESSION_FILE_VERSION:
            raise UnsupportedVersion(
                f"session file version {version!r}; this engine reads version {SESSION_FILE_VERSION}"
            )
        try:
            tree = canonicalize(from_text(doc["tree_text"]))
            ctx = ReasoningContext(
                session=self.reasoning.open_session(),
                current_tree=tree,
                revision=int(doc["revision"]),
                last_verified_text=to_text(tree),
            )
            session = EngagementSession(
                id=doc["id"],
                goal=doc["goal"],
                target_description=doc["target"],
                reasoning=ctx,
                config=doc["config"],
                events=[TranscriptEvent(**e) for e in doc["transcript"]],
                next_seq=int(doc["next_seq"]),
            )
            if doc.get("plan"):
                raw = doc["plan"]
                session.active_plan = ActivePlan(
                    plan=StepPlan(task_path=tuple(raw["task_path"]), steps=list(raw["steps"])),
                    cursor=int(raw["cursor"]),
                    revision=int(raw["revision"]),
                )
            for entry in doc.get("cost", []):
                self.ledger.add_entry(
                    entry["session_id"], entry["module"],
                    int(entry["tokens_in"]), int(entry["tokens_out"]),
                    Decimal(str(entry["usd"])),
                )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"session file is malformed: {exc}") from exc
        except EngineError:
            raise
        self.sessions[session.id] = session
        return session
