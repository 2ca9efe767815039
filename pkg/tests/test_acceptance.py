"""Acceptance suite: every release criterion at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -s`` to see one PASS/FAIL line per
criterion. Everything here runs offline against the scripted backend.
"""

import json
import random
import time
from contextlib import contextmanager
from decimal import Decimal

import pytest

from pttengine.bench import (
    CompletionRecord,
    CostLedger,
    best_of_n,
    bundled_benchmark_path,
    bundled_path,
    compute_metrics,
    ctf_score,
    ledger_totals,
    load_benchmark,
    load_records,
)
from pttengine.config import EngineConfig
from pttengine.llm import ScriptedBackend, ScriptedExchange, SessionManager, TokenBudget
from pttengine.orchestrator import Engine
from pttengine.reasoning import ReasoningModule
from pttengine.tree import diff, verify_leaf_only
from pttengine.treetext import from_text, to_text

from oracles import ALL_KINDS, LEGAL_KINDS, apply_mutation, legal_by_brute_force, random_tree
from golden import (
    NIKTO_COMMAND,
    NMAP_COMMAND,
    MODEL_COMPLETION_COUNTS,
    HTB_MACHINES,
    HTB_TOTAL_USD,
    PICOMINI_CHALLENGES,
    PICOMINI_SOLVED_POINTS,
)
from test_bench import records_for_counts

NMAP_FIXTURE = (
    "PORT   STATE    SERVICE VERSION\n"
    "21/tcp filtered ftp\n"
    "22/tcp open     ssh     OpenSSH 7.6p1\n"
    "80/tcp open     http    Apache httpd 2.4.18\n"
)


@contextmanager
def criterion(name: str, budget_seconds: float):
    started = time.monotonic()
    try:
        yield
    except BaseException:
        print(f"[FAIL] {name}")
        raise
    elapsed = time.monotonic() - started
    if elapsed > budget_seconds:
        print(f"[FAIL] {name} (took {elapsed:.2f}s, budget {budget_seconds}s)")
        pytest.fail(f"{name} exceeded its {budget_seconds}s budget: {elapsed:.2f}s")
    print(f"[PASS] {name} ({elapsed:.2f}s)")


def test_metrics_reproduction():
    with criterion("metrics reproduction (published completion rates)", 1.0):
        benchmark = load_benchmark(bundled_benchmark_path())
        gpt35 = compute_metrics(records_for_counts(benchmark, MODEL_COMPLETION_COUNTS["GPT-3.5"]),
                                benchmark)
        gpt4 = compute_metrics(records_for_counts(benchmark, MODEL_COMPLETION_COUNTS["GPT-4"]),
                               benchmark)
        bard = compute_metrics(records_for_counts(benchmark, MODEL_COMPLETION_COUNTS["Bard"]),
                               benchmark)
        assert gpt35.rows["easy"].subtask_rate == "31.17%"
        assert gpt4.rows["average"].subtask_rate == "52.20%"
        assert bard.rows["average"].overall_rate == "15.38%"


def test_ctf_scoring():
    with criterion("CTF scoring (challenge table totals and marks)", 1.0):
        targets = load_benchmark(bundled_path("picomini_targets.json"))
        _, records = load_records(bundled_path("picomini_records.json"))
        assert ctf_score(records, targets) == PICOMINI_SOLVED_POINTS == 1400

        for name, _category, _points, successes in PICOMINI_CHALLENGES:
            ident = name.replace(" ", "-").lower()
            group = [r for r in records if r.target_id == ident]
            assert best_of_n(group, 5) is (successes > 0), name
        for name, _difficulty, successes, _cost in HTB_MACHINES:
            trials = [CompletionRecord(name, t, {}, t <= successes) for t in range(1, 6)]
            assert best_of_n(trials, 5) is (successes > 0), name


def test_cost_ledger():
    with criterion("cost ledger (per-machine costs sum exactly)", 1.0):
        ledger = CostLedger()
        for name, _difficulty, _successes, cost in HTB_MACHINES:
            ledger.add_entry("golden", name, 0, 0, cost)
        _in, _out, usd = ledger_totals(ledger)
        assert usd == HTB_TOTAL_USD == Decimal("131.5")


def test_ptt_round_trip():
    with criterion("task-tree text round trip (1000 randomized trees)", 10.0):
        rng = random.Random(424242)
        failures = 0
        for _ in range(1000):
            tree = random_tree(rng, max_depth=6, max_fanout=5)
            text = to_text(tree)
            if to_text(from_text(text)) != text:
                failures += 1
        assert failures == 0


def test_leaf_only_verification_against_brute_force():
    with criterion("leaf-only verification vs brute-force classifier (1000+ cases)", 10.0):
        rng = random.Random(31337)
        cases = 0
        seen_kinds = set()
        while cases < 1000:
            tree = random_tree(rng, max_depth=4, max_fanout=4)
            for kind in ALL_KINDS:
                mutated = apply_mutation(rng, tree, kind)
                if mutated is None:
                    continue
                verdict = verify_leaf_only(tree, diff(tree, mutated)).ok
                oracle = legal_by_brute_force(tree, mutated)
                expected = kind in LEGAL_KINDS
                assert verdict == oracle == expected, (
                    f"{kind}: verify={verdict} oracle={oracle} expected={expected}\n"
                    f"old:\n{to_text(tree)}\nnew:\n{to_text(mutated)}"
                )
                seen_kinds.add(kind)
                cases += 1
        assert seen_kinds == set(ALL_KINDS)


CARRIER_BEFORE = (
    "1. Penetration Testing - (todo)\n"
    "    1.1. Reconnaissance - (todo)\n"
    "        1.1.1. Port Scanning - (completed) [finding: ports 21,22,80 open]\n"
    "        1.1.2. Service Scanning - (todo)"
)
CARRIER_AFTER = (
    "1. Penetration Testing - (todo)\n"
    "    1.1. Reconnaissance - (todo)\n"
    "        1.1.1. Port Scanning - (completed) [finding: ports 21,22,80 open]\n"
    "        1.1.2. Service Scanning - (completed) "
    "[finding: 22 ssh OpenSSH 7.6p1, 80 http Apache 2.4.18]\n"
    "            1.1.2.1. Scan web service on port 80 - (todo)\n"
    "            1.1.2.2. Check SSH service for known vulnerabilities - (todo)"
)

TWO_LEAVES = "1. root - (todo)\n    1.1. ftp probe - (todo)\n    1.2. web probe - (todo)"
ONE_TASK = "1. root - (todo)\n    1.1. inspect uploads - (todo)"
DONE_LEAF = "1. root - (todo)\n    1.1. exploit attempt - (completed)"
CHECK = "1. root - (todo)\n    1.1. credential check - (todo)"

# (name, starting tree, scripted update replies, expected final tree)
REGENERATION_FIXTURES = [
    ("carrier scan-result integration", CARRIER_BEFORE, [CARRIER_AFTER], CARRIER_AFTER),
    ("internal rename rejected then corrected", CARRIER_BEFORE,
     [CARRIER_AFTER.replace("Reconnaissance", "Recon"), CARRIER_AFTER], CARRIER_AFTER),
    ("node removal rejected then corrected", CARRIER_BEFORE,
     ["\n".join(l for l in CARRIER_AFTER.splitlines() if "Port Scanning" not in l), CARRIER_AFTER],
     CARRIER_AFTER),
    ("internal attribute edit rejected then corrected", CARRIER_BEFORE,
     [CARRIER_AFTER.replace("1.1. Reconnaissance - (todo)", "1.1. Reconnaissance - (in-progress)"),
      CARRIER_AFTER], CARRIER_AFTER),
    ("addition under internal rejected then corrected", CARRIER_BEFORE,
     [CARRIER_BEFORE + "\n        1.1.3. surprise task - (todo)", CARRIER_AFTER], CARRIER_AFTER),
    ("identical tree accepted as empty update", CARRIER_BEFORE, [CARRIER_BEFORE], CARRIER_BEFORE),
    ("two leaves updated at once", TWO_LEAVES,
     [TWO_LEAVES.replace("ftp probe - (todo)", "ftp probe - (completed)")
                .replace("web probe - (todo)", "web probe - (failed)")],
     TWO_LEAVES.replace("ftp probe - (todo)", "ftp probe - (completed)")
               .replace("web probe - (todo)", "web probe - (failed)")),
    ("deep subtree grown under a leaf", ONE_TASK,
     [ONE_TASK + "\n        1.1.1. list upload dir - (todo)"
                 "\n            1.1.1.1. fetch interesting file - (todo)"],
     ONE_TASK + "\n        1.1.1. list upload dir - (todo)"
                "\n            1.1.1.1. fetch interesting file - (todo)"),
    ("status regression reopens a finished leaf", DONE_LEAF,
     [DONE_LEAF.replace("(completed)", "(todo)")],
     DONE_LEAF.replace("(completed)", "(todo)")),
    ("duplicate-named siblings added under a leaf", CHECK,
     [CHECK + "\n        1.1.1. try password - (todo)\n        1.1.2. try password - (todo)"],
     CHECK + "\n        1.1.1. try password - (todo)\n        1.1.2. try password - (todo)"),
]


def test_reasoning_regeneration_golden_fixtures(prompts):
    with criterion("reasoning regeneration (10 golden update fixtures)", 10.0):
        assert len(REGENERATION_FIXTURES) == 10
        for name, start_text, replies, expected in REGENERATION_FIXTURES:
            manager = SessionManager(TokenBudget(window=32000, reply_reserve=1000),
                                     sleep=lambda _: None)
            manager.register("scripted", ScriptedBackend(
                [ScriptedExchange(reply=start_text)] +
                [ScriptedExchange(reply=r) for r in replies]
            ))
            module = ReasoningModule(manager, prompts, "scripted", retries=3)
            ctx = module.init_ptt("goal", "target")
            module.update_ptt(ctx, f"new information for: {name}")
            assert ctx.last_verified_text == expected, name
            assert len(replies) <= 3  # every correction lands within R attempts


def engine_for_replay(tmp_path, offset=0):
    config = EngineConfig(session_dir=str(tmp_path / "sessions"))
    return Engine(config, clock=lambda: "2024-01-01T00:00:00+00:00", script_offset=offset)


def run_replay(engine):
    session = engine.start_engagement(
        "obtain root on the benchmark machine", "Linux machine at 192.168.1.5")
    trace = []
    reasoning_session = session.reasoning.session

    before = len(reasoning_session.history)
    first = engine.next_action(session)
    trace.append(("next", first.content, len(reasoning_session.history) - before))

    engine.submit_result(session, "tool-output", NMAP_FIXTURE)

    before = len(reasoning_session.history)
    second = engine.next_action(session)
    trace.append(("next", second.content, len(reasoning_session.history) - before))
    return engine, session, first, second, trace


def test_feedback_neutrality(tmp_path):
    with criterion("feedback neutrality (100 calls, byte-identical state)", 10.0):
        script = [{"reply": CARRIER_BEFORE}] + [{"reply": f"answer {i}"} for i in range(100)]
        path = tmp_path / "script.json"
        path.write_text(json.dumps(script))
        config = EngineConfig(script_path=str(path), session_dir=str(tmp_path / "s"))
        engine = Engine(config, clock=lambda: "2024-01-01T00:00:00+00:00")
        session = engine.start_engagement("goal", "target box")
        baseline = engine.serialize_session(session)
        import hashlib
        checksum = hashlib.sha256(baseline.encode()).hexdigest()
        for i in range(100):
            engine.feedback(session, f"question {i}?")
            current = hashlib.sha256(
                engine.serialize_session(session).encode()).hexdigest()
            assert current == checksum, f"state drifted after feedback call {i}"


def test_end_to_end_golden_replay(tmp_path):
    with criterion("end-to-end golden replay (scan then web-scan commands)", 5.0):
        engine_a, session_a, first, second, _ = run_replay(engine_for_replay(tmp_path))
        assert first.content == NMAP_COMMAND
        assert second.content == NIKTO_COMMAND
        serialized_a = engine_a.serialize_session(session_a)

        engine_b, session_b, _, _, _ = run_replay(engine_for_replay(tmp_path))
        serialized_b = engine_b.serialize_session(session_b)
        assert serialized_a == serialized_b  # byte-deterministic replay


def test_session_isolation(tmp_path):
    with criterion("session isolation (generation never touches reasoning)", 5.0):
        engine, session, _, _, trace = run_replay(engine_for_replay(tmp_path))
        reasoning_id = session.reasoning.session.id

        # first next_action: single candidate, no ranking round -> the
        # reasoning session must be completely untouched by generation
        assert trace[0][2] == 0
        # second next_action includes one ranking round (2 messages); the
        # expand/concretize traffic may not add anything beyond that
        assert trace[1][2] == 2

        generation_entries = [e for e in engine.ledger.entries if e.module == "generation"]
        assert len(generation_entries) == 4  # expand+concretize, twice
        assert all(e.session_id != reasoning_id for e in generation_entries)
        reasoning_tokens = session.reasoning.session.token_total
        replayed = [e for e in engine.ledger.entries
                    if e.session_id == reasoning_id and e.module == "reasoning"]
        assert replayed, "reasoning calls must be ledgered"
        assert reasoning_tokens > 0
