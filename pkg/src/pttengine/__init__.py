"""Interactive penetration-testing copilot engine.

The engine keeps an engagement's state in a pentesting task tree, proposes
the next concrete testing operation through cooperating reasoning, generation,
and parsing modules, and scores engagements against a sub-task benchmark.
All LLM traffic goes through pluggable backends; the scripted backend makes
the whole orchestration deterministic for tests and replays.
"""

__version__ = "0.1.0"

from .config import EngineConfig
from .errors import EngineError
from .orchestrator import Engine

__all__ = ["Engine", "EngineConfig", "EngineError", "__version__"]
