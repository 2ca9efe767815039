"""Condenses long inputs into summaries that fit the reasoning budget.

Callers must declare which of the four input categories they are submitting;
each category has its own prompt template. Oversized inputs are chunked at
line boundaries, summarized per chunk, and merged with one final LLM round.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .errors import InvalidArgument
from .llm import ChatSession, SessionManager, count_tokens
from .promptstore import PromptStore

MIN_CHUNK_BUDGET = 64
TRUNCATION_MARKER = " [truncated]"


class InputCategory(str, Enum):
    USER_INTENTION = "user-intention"
    TOOL_OUTPUT = "tool-output"
    HTTP_WEB = "http-web"
    SOURCE_CODE = "source-code"


@dataclass
class ParsedSummary:
    category: InputCategory
    summary: str
    salient_facts: list[str] = field(default_factory=list)
    source_token_count: int = 0

    def as_text(self) -> str:
        parts = [self.summary] if self.summary else []
        parts.extend(f"- {fact}" for fact in self.salient_facts)
        return "\n".join(parts)


@dataclass
class ChunkPlan:
    chunks: list[str]
    chunk_budget: int


def chunk(text: str, chunk_budget: int) -> ChunkPlan:
    """Greedy line-boundary packing; single oversized lines split by bytes.

    Concatenating the chunks always reproduces the input exactly.
    """
    if chunk_budget < MIN_CHUNK_BUDGET:
        raise InvalidArgument(f"chunk budget must be at least {MIN_CHUNK_BUDGET} tokens")
    if not text:
        return ChunkPlan(chunks=[], chunk_budget=chunk_budget)

    budget_bytes = chunk_budget * 4
    chunks: list[str] = []
    current = ""
    current_bytes = 0
    for line in text.splitlines(keepends=True):
        line_bytes = len(line.encode("utf-8"))
        if current and count_tokens_from_bytes(current_bytes + line_bytes) > chunk_budget:
            chunks.append(current)
            current = ""
            current_bytes = 0
        if count_tokens_from_bytes(line_bytes) > chunk_budget:
            for piece in _split_line(line, budget_bytes):
                piece_bytes = len(piece.encode("utf-8"))
                if current and count_tokens_from_bytes(current_bytes + piece_bytes) > chunk_budget:
                    chunks.append(current)
                    current = ""
                    current_bytes = 0
                current += piece
                current_bytes += piece_bytes
        else:
            current += line
            current_bytes += line_bytes
    if current:
        chunks.append(current)
    return ChunkPlan(chunks=chunks, chunk_budget=chunk_budget)


def count_tokens_from_bytes(n: int) -> int:
    return (n + 3) // 4


def _split_line(line: str, budget_bytes: int) -> list[str]:
    pieces = []
    piece = ""
    size = 0
    for char in line:
        char_bytes = len(char.encode("utf-8"))
        if size + char_bytes > budget_bytes and piece:
            pieces.append(piece)
            piece = ""
            size = 0
        piece += char
        size += char_bytes
    if piece:
        pieces.append(piece)
    return pieces


class ParsingModule:
    def __init__(self, manager: SessionManager, prompts: PromptStore,
                 chunk_budget: int = 3000, summary_budget: int = 600):
        self.manager = manager
        self.prompts = prompts
        self.chunk_budget = chunk_budget
        self.summary_budget = summary_budget

    def summarize(self, text: str, category: InputCategory,
                  session: ChatSession) -> ParsedSummary:
        category = InputCategory(category)
        if not text.strip():
            return ParsedSummary(category=category, summary="", salient_facts=[],
                                 source_token_count=count_tokens(text))
        plan = chunk(text, self.chunk_budget)
        parts = []
        for piece in plan.chunks:
            prompt = self.prompts.render(f"parse.{category.value}", info=piece)
            reply = self._bounded_reply(session, prompt)
            summary, facts = _split_reply(reply)
            parts.append(ParsedSummary(
                category=category,
                summary=summary,
                salient_facts=facts,
                source_token_count=count_tokens(piece),
            ))
        return self.merge_summaries(parts, session)

    def merge_summaries(self, parts: list[ParsedSummary],
                        session: ChatSession) -> ParsedSummary:
        if not parts:
            raise InvalidArgument("nothing to merge")
        categories = {part.category for part in parts}
        if len(categories) > 1:
            raise InvalidArgument(
                f"cannot merge mixed categories: {sorted(c.value for c in categories)}"
            )
        if len(parts) == 1:
            return parts[0]
        facts: list[str] = []
        for part in parts:
            for fact in part.salient_facts:
                if fact not in facts:
                    facts.append(fact)
        merged_input = "\n\n".join(part.summary for part in parts if part.summary)
        prompt = self.prompts.render("parse.merge", info=merged_input)
        summary, _ = _split_reply(self._bounded_reply(session, prompt))
        return ParsedSummary(
            category=parts[0].category,
            summary=summary,
            salient_facts=facts,
            source_token_count=sum(part.source_token_count for part in parts),
        )

    def _bounded_reply(self, session: ChatSession, prompt: str) -> str:
        """One LLM round, re-asked once and then hard-truncated if over budget."""
        reply = self.manager.send(session, prompt).content
        if count_tokens(reply) <= self.summary_budget:
            return reply
        stricter = (
            f"That summary is too long. Repeat it in at most "
            f"{self.summary_budget * 2} characters, keeping only the most "
            f"important facts."
        )
        reply = self.manager.send(session, stricter).content
        if count_tokens(reply) <= self.summary_budget:
            return reply
        allowed = self.summary_budget * 4 - len(TRUNCATION_MARKER.encode("utf-8"))
        kept = ""
        size = 0
        for char in reply:
            char_bytes = len(char.encode("utf-8"))
            if size + char_bytes > allowed:
                break
            kept += char
            size += char_bytes
        return kept + TRUNCATION_MARKER


def _split_reply(reply: str) -> tuple[str, list[str]]:
    """Separate '- ' fact bullets from the prose summary."""
    summary_lines = []
    facts = []
    for line in reply.splitlines():
        stripped = line.strip()
        if stripped.startswith(("- ", "* ")):
            facts.append(stripped[2:].strip())
        elif stripped:
            summary_lines.append(stripped)
    return " ".join(summary_lines), facts
