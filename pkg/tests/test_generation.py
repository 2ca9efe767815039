import pytest

from pttengine.errors import GenerationFailed, InvalidArgument
from pttengine.generation import (
    GUI_OPERATION,
    TERMINAL_COMMAND,
    EnvironmentProfile,
    GenerationModule,
    StepPlan,
)
from pttengine.reasoning import CandidateTask, TaskChoice
from pttengine.tree import TaskNode

from conftest import scripted_manager


def env(**kwargs):
    return EnvironmentProfile(**kwargs)


def choice_for(name="Service Scanning"):
    node = TaskNode(id=1, name=name, attributes={"status": "todo"})
    candidate = CandidateTask(path=("Penetration Testing", "Reconnaissance", name), node=node)
    return TaskChoice(chosen=candidate, ranking=[candidate])


def generation_with(replies, prompts):
    manager = scripted_manager(replies)
    return manager, GenerationModule(manager, prompts, "scripted")


def test_environment_rejects_overlapping_tool_lists():
    with pytest.raises(InvalidArgument):
        env(available_tools=("nmap", "nessus"), prohibited_tools=("nessus",))


def test_expand_parses_numbered_steps(prompts):
    reply = "1. Confirm the host responds\n2. Run a service scan\n3. Note versions"
    _, module = generation_with([reply], prompts)
    plan = module.expand_task(choice_for(), env())
    assert plan.steps == [
        "Confirm the host responds", "Run a service scan", "Note versions"
    ]
    assert plan.task_path[-1] == "Service Scanning"


def test_expand_opens_exactly_one_fresh_session(prompts):
    manager, module = generation_with(["1. single step"], prompts)
    module.expand_task(choice_for(), env())
    generation_sessions = [
        s for s in manager._sessions.values() if s.label == "generation"
    ]
    assert len(generation_sessions) == 1


def test_expand_reasks_once_on_prohibited_tool_then_filters(prompts):
    first = "1. Run nessus against the target\n2. Check robots.txt"
    second = "1. Check robots.txt\n2. Run nessus anyway\n3. Enumerate directories"
    _, module = generation_with([first, second], prompts)
    plan = module.expand_task(choice_for(), env())
    assert plan.steps == ["Check robots.txt", "Enumerate directories"]


def test_expand_unnumbered_prose_still_yields_steps(prompts):
    reply = "First look at the landing page\nThen request the admin path"
    _, module = generation_with([reply], prompts)
    plan = module.expand_task(choice_for(), env())
    assert len(plan.steps) == 2


def test_expand_fails_when_nothing_usable(prompts):
    _, module = generation_with(["1. use openvas", "1. openvas again"], prompts)
    with pytest.raises(GenerationFailed):
        module.expand_task(choice_for(), env())


def test_concretize_fenced_command(prompts):
    reply = "Run this:\n```\nnmap -sV -sT 192.168.1.5\n```\nand report back."
    _, module = generation_with([reply], prompts)
    plan = StepPlan(task_path=("r",), steps=["scan services on open ports"])
    op = module.concretize(plan, 0, env())
    assert op.kind == TERMINAL_COMMAND
    assert op.content == "nmap -sV -sT 192.168.1.5"
    assert op.step_index == 0
    assert op.expected_outcome == "scan services on open ports"


def test_concretize_known_tool_without_fence(prompts):
    _, module = generation_with(["nikto -h http://192.168.1.5"], prompts)
    plan = StepPlan(task_path=("r",), steps=["web server deep scan"])
    op = module.concretize(plan, 0, env())
    assert op.kind == TERMINAL_COMMAND
    assert op.content == "nikto -h http://192.168.1.5"


def test_concretize_gui_description(prompts):
    reply = (
        "1. Open the proxy and enable intercept\n"
        "2. Reload the login page in the browser\n"
        "3. Edit the captured request body"
    )
    _, module = generation_with([reply], prompts)
    plan = StepPlan(task_path=("r",), steps=["intercept the login request"])
    op = module.concretize(plan, 0, env())
    assert op.kind == GUI_OPERATION
    assert "intercept" in op.content
    assert op.content.count("\n") == 2


def test_concretize_multiline_fence_keeps_first_command(prompts):
    reply = "```\nnmap -sV 10.0.0.1\nnmap -A 10.0.0.1\n```"
    _, module = generation_with([reply], prompts)
    plan = StepPlan(task_path=("r",), steps=["scan"])
    op = module.concretize(plan, 0, env())
    assert op.content == "nmap -sV 10.0.0.1"


def test_concretize_reasks_on_unfilled_placeholder(prompts):
    bad = "```\nnmap -sV <target>\n```"
    good = "```\nnmap -sV 192.168.1.5\n```"
    _, module = generation_with([bad, good], prompts)
    plan = StepPlan(task_path=("r",), steps=["scan"])
    op = module.concretize(plan, 0, env())
    assert op.content == "nmap -sV 192.168.1.5"


def test_concretize_fails_after_persistent_placeholder(prompts):
    bad = "```\nhydra -l <user> -P <wordlist> ssh://<target>\n```"
    _, module = generation_with([bad, bad], prompts)
    plan = StepPlan(task_path=("r",), steps=["brute force"])
    with pytest.raises(GenerationFailed):
        module.concretize(plan, 0, env())


def test_concretize_out_of_range_step(prompts):
    _, module = generation_with([], prompts)
    plan = StepPlan(task_path=("r",), steps=["only step"])
    with pytest.raises(InvalidArgument):
        module.concretize(plan, 3, env())


def test_no_emitted_command_mentions_prohibited_tool(prompts):
    bad = "```\nnessus scan 192.168.1.5\n```"
    good = "```\nnmap -sV 192.168.1.5\n```"
    _, module = generation_with([bad, good], prompts)
    plan = StepPlan(task_path=("r",), steps=["assess services"])
    op = module.concretize(plan, 0, env())
    assert "nessus" not in op.content

    _, module = generation_with([bad, bad], prompts)
    with pytest.raises(GenerationFailed):
        module.concretize(plan, 0, env())


def test_run_generation_composes_and_short_circuits(prompts):
    expand_reply = "1. scan the web server\n2. review findings"
    concretize_reply = "```\nnikto -h http://192.168.1.5\n```"
    manager, module = generation_with([expand_reply, concretize_reply], prompts)
    plan, op = module.run_generation(choice_for("Scan web service on port 80"), env())
    assert len(plan.steps) == 2
    assert op.content == "nikto -h http://192.168.1.5"

    # expansion failure never reaches concretize: script would miss otherwise
    manager, module = generation_with(["1. only openvas", "1. openvas still"], prompts)
    with pytest.raises(GenerationFailed):
        module.run_generation(choice_for(), env())


def test_walking_all_steps_makes_one_concretize_call_each(prompts):
    expand_reply = "1. step one\n2. step two\n3. step three"
    fences = [f"```\nnmap -p{p} 10.0.0.1\n```" for p in (21, 22, 80)]
    manager, module = generation_with([expand_reply, *fences], prompts)
    plan = module.expand_task(choice_for(), env())
    ops = [module.concretize(plan, i, env()) for i in range(len(plan.steps))]
    assert [op.content for op in ops] == [
        "nmap -p21 10.0.0.1", "nmap -p22 10.0.0.1", "nmap -p80 10.0.0.1"
    ]
    assert manager.backend("scripted").consumed == 4


def test_concretize_is_deterministic_for_fixed_script(prompts):
    def run():
        _, module = generation_with(["```\nnmap -sV -sT 192.168.1.5\n```"], prompts)
        plan = StepPlan(task_path=("r",), steps=["scan services"])
        op = module.concretize(plan, 0, env())
        return (op.kind, op.content, op.step_index, op.expected_outcome)

    assert run() == run()
