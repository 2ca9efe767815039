"""Session-oriented chat layer over pluggable LLM backends.

Each engine module talks to the model through its own ChatSession. Token
accounting is deliberately provider-independent (ceil of UTF-8 bytes / 4) so
budgeting and truncation decisions are deterministic. The scripted backend
replays a canned exchange list and is the test oracle for everything built
on top.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import httpx

from .errors import (
    BackendUnavailable,
    BudgetExceeded,
    InvalidArgument,
    NotFound,
    ScriptedMiss,
)

ROLE_SYSTEM = "system"
ROLE_USER = "user"
ROLE_ASSISTANT = "assistant"

RETRY_ATTEMPTS = 3
RETRY_BASE_DELAY = 1.0


def count_tokens(text: str) -> int:
    """Deterministic token estimate: ceil(utf-8 bytes / 4)."""
    return (len(text.encode("utf-8")) + 3) // 4


@dataclass(frozen=True)
class Message:
    role: str
    content: str
    token_count: int


def make_message(role: str, content: str) -> Message:
    if role not in (ROLE_SYSTEM, ROLE_USER, ROLE_ASSISTANT):
        raise InvalidArgument(f"unknown message role {role!r}")
    if role != ROLE_SYSTEM and not content:
        raise InvalidArgument(f"{role} message content must be non-empty")
    return Message(role=role, content=content, token_count=count_tokens(content))


@dataclass(frozen=True)
class TokenBudget:
    window: int
    reply_reserve: int

    def __post_init__(self):
        if self.window <= 0 or self.reply_reserve <= 0:
            raise InvalidArgument("token window and reply reserve must be positive")
        if self.reply_reserve >= self.window:
            raise InvalidArgument("reply reserve must be smaller than the window")


@dataclass
class ChatSession:
    id: str
    backend_name: str
    budget: TokenBudget
    history: list[Message] = field(default_factory=list)
    label: str = ""

    @property
    def token_total(self) -> int:
        return sum(m.token_count for m in self.history)


@dataclass(frozen=True)
class ContextChunk:
    """Immutable copy of a session's history, for active-feedback forks."""

    messages: tuple[Message, ...]
    created_from: str
    checksum: str


def _history_checksum(messages) -> str:
    payload = json.dumps([[m.role, m.content] for m in messages], ensure_ascii=True)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def truncate_to_budget(history: list[Message], budget: TokenBudget,
                       allowance: int | None = None) -> list[Message]:
    """Drop oldest non-system messages until the history fits the budget.

    Whole messages only, order preserved, system messages always kept. Raises
    BudgetExceeded when the system messages alone do not fit.
    """
    if allowance is None:
        allowance = budget.window - budget.reply_reserve
    system_total = sum(m.token_count for m in history if m.role == ROLE_SYSTEM)
    if system_total > allowance:
        raise BudgetExceeded(
            f"system prompt alone ({system_total} tokens) exceeds the {allowance}-token allowance"
        )
    keep: set[int] = {i for i, m in enumerate(history) if m.role == ROLE_SYSTEM}
    total = system_total
    for i in range(len(history) - 1, -1, -1):
        if i in keep:
            continue
        message = history[i]
        if total + message.token_count > allowance:
            break
        keep.add(i)
        total += message.token_count
    return [m for i, m in enumerate(history) if i in keep]


class TransportError(Exception):
    """Transient transport failure inside a live backend; triggers retries."""


class Backend:
    def complete(self, messages: list[Message]) -> str:
        raise NotImplementedError


@dataclass
class ScriptedExchange:
    reply: str
    match: str | None = None


class ScriptedBackend(Backend):
    """Replays exchanges in order; optional substring match guards each one."""

    def __init__(self, exchanges: list[ScriptedExchange], start_at: int = 0):
        self.exchanges = list(exchanges)
        self.cursor = start_at

    @classmethod
    def from_file(cls, path: str | Path, start_at: int = 0) -> "ScriptedBackend":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(raw, list):
            raise InvalidArgument("script file must hold a JSON array of exchanges")
        exchanges = []
        for i, entry in enumerate(raw):
            if not isinstance(entry, dict) or "reply" not in entry:
                raise InvalidArgument(f"script entry {i} must be an object with a 'reply' key")
            exchanges.append(ScriptedExchange(reply=entry["reply"], match=entry.get("match")))
        return cls(exchanges, start_at=start_at)

    @property
    def consumed(self) -> int:
        return self.cursor

    def complete(self, messages: list[Message]) -> str:
        if self.cursor >= len(self.exchanges):
            raise ScriptedMiss(f"script exhausted after {len(self.exchanges)} exchanges")
        exchange = self.exchanges[self.cursor]
        prompt = messages[-1].content if messages else ""
        if exchange.match is not None and exchange.match not in prompt:
            raise ScriptedMiss(
                f"exchange {self.cursor} expected a prompt containing {exchange.match!r}"
            )
        self.cursor += 1
        return exchange.reply


class HttpChatBackend(Backend):
    """Minimal OpenAI-style chat-completions client."""

    def __init__(self, base_url: str, model: str, api_key: str = "",
                 timeout: float = 60.0, transport: httpx.BaseTransport | None = None):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = api_key
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def complete(self, messages: list[Message]) -> str:
        payload = {
            "model": self.model,
            "messages": [{"role": m.role, "content": m.content} for m in messages],
        }
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            response = self._client.post(
                f"{self.base_url}/chat/completions", json=payload, headers=headers
            )
        except httpx.HTTPError as exc:
            raise TransportError(str(exc)) from exc
        if response.status_code != 200:
            raise TransportError(f"backend returned HTTP {response.status_code}")
        try:
            return response.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, ValueError) as exc:
            raise TransportError(f"malformed backend response: {exc}") from exc


class SessionManager:
    """Owns the backend registry and all open chat sessions."""

    def __init__(self, default_budget: TokenBudget, sleep=time.sleep, cost_hook=None):
        self.default_budget = default_budget
        self._sleep = sleep
        self._cost_hook = cost_hook
        self._backends: dict[str, Backend] = {}
        self._sessions: dict[str, ChatSession] = {}
        self._counter = 0

    def register(self, name: str, backend: Backend) -> None:
        self._backends[name] = backend

    def backend(self, name: str) -> Backend:
        if name not in self._backends:
            raise NotFound(f"unknown backend {name!r}")
        return self._backends[name]

    def _new_id(self) -> str:
        self._counter += 1
        return f"s{self._counter}"

    def open_session(self, backend_name: str, system_prompt: str,
                     budget: TokenBudget | None = None, label: str = "") -> ChatSession:
        self.backend(backend_name)
        session = ChatSession(
            id=self._new_id(),
            backend_name=backend_name,
            budget=budget or self.default_budget,
            history=[make_message(ROLE_SYSTEM, system_prompt)],
            label=label,
        )
        self._sessions[session.id] = session
        return session

    def send(self, session: ChatSession, content: str) -> Message:
        if not content:
            raise InvalidArgument("cannot send an empty message")
        backend = self.backend(session.backend_name)
        session.history.append(make_message(ROLE_USER, content))
        session.history = truncate_to_budget(session.history, session.budget)
        reply_text = self._dispatch(backend, session.history)
        tokens_in = sum(m.token_count for m in session.history)
        reply = make_message(ROLE_ASSISTANT, reply_text)
        session.history.append(reply)
        # Keep the post-reply history inside the full window as well.
        session.history = truncate_to_budget(
            session.history, session.budget, allowance=session.budget.window
        )
        if self._cost_hook is not None:
            self._cost_hook(session, tokens_in, reply.token_count)
        return reply

    def _dispatch(self, backend: Backend, history: list[Message]) -> str:
        delay = RETRY_BASE_DELAY
        for attempt in range(RETRY_ATTEMPTS):
            try:
                return backend.complete(history)
            except TransportError as exc:
                if attempt == RETRY_ATTEMPTS - 1:
                    raise BackendUnavailable(
                        f"backend failed after {RETRY_ATTEMPTS} attempts: {exc}"
                    ) from exc
                self._sleep(delay)
                delay *= 2
        raise AssertionError("unreachable")

    def snapshot_context(self, session: ChatSession) -> ContextChunk:
        messages = tuple(session.history)
        return ContextChunk(
            messages=messages,
            created_from=session.id,
            checksum=_history_checksum(messages),
        )

    def fork_session(self, chunk: ContextChunk, backend_name: str,
                     budget: TokenBudget | None = None, label: str = "") -> ChatSession:
        self.backend(backend_name)
        session = ChatSession(
            id=self._new_id(),
            backend_name=backend_name,
            budget=budget or self.default_budget,
            history=list(chunk.messages),
            label=label,
        )
        self._sessions[session.id] = session
        return session
