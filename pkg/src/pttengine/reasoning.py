"""Owns the task tree inside a dedicated LLM session.

The loop: initialize or update the tree from new information, verify that the
LLM only touched leaves, enumerate viable leaf tasks, and ask the model to
rank them. Candidate enumeration is deterministic engine-side filtering; the
LLM contributes trees and rankings only, so hallucinated tasks can never
enter the state.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import InvalidArgument, ParseError, ReasoningFailed
from .llm import ChatSession, SessionManager
from .parsing import ParsedSummary
from .promptstore import PromptStore
from .tree import (
    NodePath,
    Ptt,
    TaskNode,
    TaskStatus,
    canonicalize,
    diff,
    format_path,
    verify_leaf_only,
)
from .treetext import from_text, to_text

VIABLE_STATUSES = (TaskStatus.TODO.value, TaskStatus.IN_PROGRESS.value)
DEFAULT_RETRIES = 3

_LINE_PREFIX_RE = re.compile(r"^\s*(?:[-*]\s+)?(?:\d+[.)]\s+)?")


@dataclass
class ReasoningContext:
    session: ChatSession
    current_tree: Ptt
    revision: int
    last_verified_text: str


@dataclass
class CandidateTask:
    path: NodePath
    node: TaskNode
    rationale: str = ""


@dataclass
class TaskChoice:
    chosen: CandidateTask
    ranking: list[CandidateTask]
    expected_outcome: str = ""


class ReasoningModule:
    def __init__(self, manager: SessionManager, prompts: PromptStore,
                 backend_name: str, retries: int = DEFAULT_RETRIES):
        self.manager = manager
        self.prompts = prompts
        self.backend_name = backend_name
        self.retries = retries

    def open_session(self) -> ChatSession:
        return self.manager.open_session(
            self.backend_name,
            self.prompts.render("system.reasoning"),
            label="reasoning",
        )

    def init_ptt(self, goal: str, target_info: str,
                 session: ChatSession | None = None) -> ReasoningContext:
        if not goal.strip():
            raise InvalidArgument("goal must be non-empty")
        session = session or self.open_session()
        last_raw = ""
        prompt = self.prompts.render("reason.init", goal=goal, info=target_info)
        for _attempt in range(self.retries):
            last_raw = self.manager.send(session, prompt).content
            try:
                tree = canonicalize(from_text(last_raw))
            except (ParseError, InvalidArgument) as exc:
                prompt = _parse_correction(exc)
                continue
            return ReasoningContext(
                session=session,
                current_tree=tree,
                revision=1,
                last_verified_text=to_text(tree),
            )
        raise ReasoningFailed(
            f"no parseable tree after {self.retries} attempts", raw_output=last_raw
        )

    def update_ptt(self, ctx: ReasoningContext,
                   new_information: ParsedSummary | str) -> ReasoningContext:
        info = new_information.as_text() if isinstance(new_information, ParsedSummary) else new_information
        return self._revise(ctx, "reason.update", info)

    def apply_manual_revision(self, ctx: ReasoningContext, instruction: str) -> ReasoningContext:
        if not instruction.strip():
            raise InvalidArgument("revision instruction must be non-empty")
        return self._revise(ctx, "reason.manual", instruction)

    def _revise(self, ctx: ReasoningContext, prompt_key: str, info: str) -> ReasoningContext:
        last_raw = ""
        failure = ""
        violations_note = ""
        for _attempt in range(self.retries):
            prompt = self.prompts.render(
                prompt_key, tree=ctx.last_verified_text, info=info, violations=violations_note
            )
            last_raw = self.manager.send(ctx.session, prompt).content
            try:
                revised = canonicalize(from_text(last_raw))
            except (ParseError, InvalidArgument) as exc:
                failure = f"unparseable tree: {exc}"
                violations_note = _parse_correction(exc)
                continue
            changes = diff(ctx.current_tree, revised)
            report = verify_leaf_only(ctx.current_tree, changes)
            if not report.ok:
                failure = f"leaf-only rule violated: {report.describe()}"
                violations_note = (
                    "Your previous revision was rejected for these violations:\n"
                    f"{report.describe()}\n"
                    "Regenerate the full tree keeping every existing task intact.\n"
                )
                continue
            ctx.current_tree = revised
            ctx.revision += 1
            ctx.last_verified_text = to_text(revised)
            return ctx
        raise ReasoningFailed(
            f"update rejected after {self.retries} attempts ({failure})", raw_output=last_raw
        )

    def enumerate_candidates(self, ctx: ReasoningContext) -> list[CandidateTask]:
        return [
            CandidateTask(path=path, node=node)
            for _nid, path, node in ctx.current_tree.leaves()
            if node.status in VIABLE_STATUSES
        ]

    def select_task(self, ctx: ReasoningContext,
                    candidates: list[CandidateTask]) -> TaskChoice:
        if not candidates:
            raise InvalidArgument("no candidates to select from")
        if len(candidates) == 1:
            return TaskChoice(chosen=candidates[0], ranking=[candidates[0]])
        listing = "\n".join(f"{i}. {format_path(c.path)}" for i, c in enumerate(candidates, 1))
        prompt = self.prompts.render(
            "reason.select", tree=ctx.last_verified_text, task=listing
        )
        reply = self.manager.send(ctx.session, prompt).content
        ranking, expected = _parse_ranking(reply, candidates)
        if not ranking:
            ranking = [candidates[0]]
        return TaskChoice(chosen=ranking[0], ranking=ranking, expected_outcome=expected)


def _parse_correction(exc: Exception) -> str:
    return (
        f"That tree could not be parsed ({exc}). Output the complete tree "
        "again in the required line format, nothing else.\n"
    )


def _parse_ranking(reply: str, candidates: list[CandidateTask]):
    by_path = {format_path(c.path): c for c in candidates}
    by_name = {}
    for c in candidates:
        by_name.setdefault(c.path[-1], []).append(c)
    ranking: list[CandidateTask] = []
    expected = ""
    for line in reply.splitlines():
        line = _LINE_PREFIX_RE.sub("", line).strip()
        if not line:
            continue
        lowered = line.lower()
        if lowered.startswith(("expected:", "expectation:")):
            expected = line.split(":", 1)[1].strip()
            continue
        candidate = by_path.get(line)
        if candidate is None:
            matches = by_name.get(line, [])
            candidate = matches[0] if len(matches) == 1 else None
        if candidate is not None and candidate not in ranking:
            candidate.rationale = candidate.rationale or ""
            ranking.append(candidate)
    return ranking, expected
