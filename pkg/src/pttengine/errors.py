"""Exception hierarchy shared across the engine.

Every failure surfaced to callers (and over the CLI/HTTP layer) is an
EngineError subclass carrying a stable ``kind`` string.
"""


class EngineError(Exception):
    kind = "engine-error"


class InvalidArgument(EngineError):
    kind = "invalid-argument"


class NotFound(EngineError):
    kind = "not-found"


class ParseError(EngineError):
    """Malformed text input; ``line`` is 1-based when known."""

    kind = "parse-error"

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ScriptedMiss(EngineError):
    kind = "scripted-miss"


class BackendUnavailable(EngineError):
    kind = "backend-unavailable"


class BudgetExceeded(EngineError):
    kind = "budget-exceeded"


class ReasoningFailed(EngineError):
    """All regeneration attempts exhausted; keeps the last raw LLM output."""

    kind = "reasoning-failed"

    def __init__(self, message: str, raw_output: str = ""):
        self.raw_output = raw_output
        super().__init__(message)


class GenerationFailed(EngineError):
    kind = "generation-failed"


class DeadlockReached(EngineError):
    """No viable leaf task remains; carries the final tree text."""

    kind = "deadlock-reached"

    def __init__(self, message: str, tree_text: str = ""):
        self.tree_text = tree_text
        super().__init__(message)


class UnsupportedVersion(EngineError):
    kind = "unsupported-version"


class SchemaError(EngineError):
    kind = "schema-error"
