"""Expands a chosen task into steps, then each step into one concrete operation.

Every expansion gets a fresh LLM session so the overarching engagement context
never leaks into (or out of) command generation. Replies carrying a fenced
code block, or opening with a known tool invocation, become terminal commands;
anything else is treated as a GUI operation description.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field

from .errors import GenerationFailed, InvalidArgument
from .llm import SessionManager
from .promptstore import PromptStore
from .reasoning import TaskChoice
from .tree import NodePath, format_path

log = logging.getLogger(__name__)

TERMINAL_COMMAND = "terminal-command"
GUI_OPERATION = "gui-operation"

# End-to-end automated scanners are off limits by default; the point of the
# exercise is reasoning about the target, not outsourcing it.
DEFAULT_PROHIBITED_TOOLS = ("nessus", "openvas", "autopwn")

KNOWN_TOOLS = (
    "nmap", "nikto", "dirb", "gobuster", "dirbuster", "curl", "wget", "ping",
    "ssh", "ftp", "telnet", "nc", "netcat", "hydra", "sqlmap", "searchsploit",
    "enum4linux", "smbclient", "smbmap", "whatweb", "wpscan", "john",
    "hashcat", "wfuzz", "ffuf", "msfconsole", "python", "python3", "php",
    "sudo", "cat", "ls", "find", "grep",
)

_FENCE_RE = re.compile(r"```[a-zA-Z0-9_-]*\n(.*?)```", re.DOTALL)
_PLACEHOLDER_RE = re.compile(r"<[A-Za-z][\w .\-]*>")
_STEP_PREFIX_RE = re.compile(r"^\s*(?:[-*]\s+|\d+[.)]\s+)?")


@dataclass
class EnvironmentProfile:
    os_name: str = "linux"
    attacker_distro: str = "kali"
    available_tools: tuple[str, ...] = KNOWN_TOOLS
    prohibited_tools: tuple[str, ...] = DEFAULT_PROHIBITED_TOOLS

    def __post_init__(self):
        overlap = set(self.prohibited_tools) & set(self.available_tools)
        if overlap:
            raise InvalidArgument(f"tools both available and prohibited: {sorted(overlap)}")

    def describe(self) -> str:
        return (
            f"target OS {self.os_name}; attacker box {self.attacker_distro}; "
            f"available tools: {', '.join(self.available_tools)}; "
            f"prohibited tools: {', '.join(self.prohibited_tools) or 'none'}"
        )


@dataclass
class StepPlan:
    task_path: NodePath
    steps: list[str] = field(default_factory=list)


@dataclass
class NextOperation:
    kind: str
    content: str
    step_index: int
    expected_outcome: str = ""


def _mentions_tool(text: str, tools) -> str | None:
    lowered = text.lower()
    for tool in tools:
        if re.search(rf"\b{re.escape(tool.lower())}\b", lowered):
            return tool
    return None


def _parse_steps(reply: str) -> list[str]:
    steps = []
    for line in reply.splitlines():
        cleaned = _STEP_PREFIX_RE.sub("", line).strip()
        if cleaned:
            steps.append(cleaned)
    return steps


class GenerationModule:
    def __init__(self, manager: SessionManager, prompts: PromptStore, backend_name: str):
        self.manager = manager
        self.prompts = prompts
        self.backend_name = backend_name

    def _fresh_session(self):
        return self.manager.open_session(
            self.backend_name,
            self.prompts.render("system.generation"),
            label="generation",
        )

    def expand_task(self, choice: TaskChoice, env: EnvironmentProfile) -> StepPlan:
        session = self._fresh_session()
        task = format_path(choice.chosen.path)
        if choice.expected_outcome:
            task += f" (expecting: {choice.expected_outcome})"
        prompt = self.prompts.render("gen.expand", task=task, env=env.describe())
        steps = _parse_steps(self.manager.send(session, prompt).content)
        offenders = [s for s in steps if _mentions_tool(s, env.prohibited_tools)]
        if offenders:
            retry = (
                "Some steps use prohibited tools "
                f"({', '.join(sorted({_mentions_tool(s, env.prohibited_tools) for s in offenders}))}). "
                "Regenerate the numbered step list without them."
            )
            steps = _parse_steps(self.manager.send(session, retry).content)
            dropped = [s for s in steps if _mentions_tool(s, env.prohibited_tools)]
            if dropped:
                log.warning("dropping %d steps that still use prohibited tools", len(dropped))
            steps = [s for s in steps if not _mentions_tool(s, env.prohibited_tools)]
        if not steps:
            raise GenerationFailed(f"no usable steps for task {task!r}")
        return StepPlan(task_path=choice.chosen.path, steps=steps)

    def concretize(self, plan: StepPlan, step_index: int,
                   env: EnvironmentProfile) -> NextOperation:
        if not 0 <= step_index < len(plan.steps):
            raise InvalidArgument(
                f"step index {step_index} outside plan of {len(plan.steps)} steps"
            )
        session = self._fresh_session()
        step = plan.steps[step_index]
        prompt = self.prompts.render("gen.concretize", task=step, env=env.describe())
        reply = self.manager.send(session, prompt).content
        operation = self._classify(reply, step_index, step)
        problem = self._command_problem(operation, env)
        if problem:
            reply = self.manager.send(session, f"{problem} Reply again with the corrected output.").content
            operation = self._classify(reply, step_index, step)
            problem = self._command_problem(operation, env)
            if problem:
                raise GenerationFailed(f"step {step_index + 1}: {problem}")
        return operation

    def run_generation(self, choice: TaskChoice,
                       env: EnvironmentProfile) -> tuple[StepPlan, NextOperation]:
        plan = self.expand_task(choice, env)
        return plan, self.concretize(plan, 0, env)

    def _classify(self, reply: str, step_index: int, step: str) -> NextOperation:
        fence = _FENCE_RE.search(reply)
        if fence:
            lines = [l for l in fence.group(1).splitlines() if l.strip()]
            if len(lines) > 1:
                log.info("multi-command reply; keeping the first of %d lines", len(lines))
            command = lines[0].strip() if lines else ""
            return NextOperation(TERMINAL_COMMAND, command, step_index, expected_outcome=step)
        for line in reply.splitlines():
            candidate = line.strip().lstrip("$# ").strip()
            first = candidate.split(" ", 1)[0] if candidate else ""
            if first.lower() in KNOWN_TOOLS:
                return NextOperation(TERMINAL_COMMAND, candidate, step_index, expected_outcome=step)
        return NextOperation(GUI_OPERATION, reply.strip(), step_index, expected_outcome=step)

    def _command_problem(self, op: NextOperation, env: EnvironmentProfile) -> str:
        if op.kind != TERMINAL_COMMAND:
            return ""
        if not op.content:
            return "The code block was empty."
        placeholders = _PLACEHOLDER_RE.findall(op.content)
        if placeholders:
            return f"The command still contains unfilled placeholders: {', '.join(placeholders)}."
        tool = _mentions_tool(op.content, env.prohibited_tools)
        if tool:
            return f"The command uses the prohibited tool {tool}."
        return ""
