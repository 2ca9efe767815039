import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pttengine.llm import ScriptedBackend, ScriptedExchange, SessionManager, TokenBudget
from pttengine.promptstore import PromptStore


@pytest.fixture(scope="session")
def prompts() -> PromptStore:
    store = PromptStore.default()
    store.validate()
    return store


def scripted_manager(replies, budget: TokenBudget | None = None,
                     cost_hook=None) -> SessionManager:
    """SessionManager with a scripted backend; replies are strings or
    (match, reply) pairs consumed in order."""
    exchanges = []
    for item in replies:
        if isinstance(item, tuple):
            exchanges.append(ScriptedExchange(match=item[0], reply=item[1]))
        else:
            exchanges.append(ScriptedExchange(reply=item))
    manager = SessionManager(
        budget or TokenBudget(window=8000, reply_reserve=1000),
        sleep=lambda _s: None,
        cost_hook=cost_hook,
    )
    manager.register("scripted", ScriptedBackend(exchanges))
    return manager
