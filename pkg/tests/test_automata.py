import pytest

from distlab.automata import (
    Action, Execution, Fairness, check_input_enabled, compose, enabled_local,
    enabled_tasks, fairness_verdict, graph_isomorphic, is_fair,
    project_execution, solve_verdicts, solves, step, trace_of, validate)
from distlab.errors import (
    ActionNotEnabled, IncompatibleSignatures, ModelViolation, UnknownAction)

from toys import channel, counter, idler, receiver, sender, toggler


def run_to_quiescence(aut, cap=10_000):
    """Drive locally controlled actions (first in canonical order) until none."""
    cur = aut.start_states[0]
    steps = []
    for _ in range(cap):
        acts = enabled_local(aut, cur)
        if not acts:
            break
        nxt = step(aut, cur, acts[0])
        steps.append((acts[0], nxt))
        cur = nxt
    return Execution(aut.start_states[0], tuple(steps))


def test_step_unknown_action():
    c = counter(3)
    with pytest.raises(UnknownAction):
        step(c, 0, Action("dec", 0))


def test_step_not_enabled():
    c = counter(3)
    with pytest.raises(ActionNotEnabled):
        step(c, 0, Action("inc", 2))


def test_counter_runs_and_quiesces():
    c = counter(3)
    ex = run_to_quiescence(c)
    assert ex.states() == [0, 1, 2, 3]
    assert enabled_tasks(c, 3) == ()
    assert enabled_tasks(c, 1) == ("count",)
    validate(c, ex)


def test_trace_hides_internals():
    c = counter(3)
    ex = run_to_quiescence(c)
    assert trace_of(c, ex) == ()


def test_execution_validation_rejects_forged_step():
    c = counter(3)
    bad = Execution(0, ((Action("inc", 0), 2),))
    with pytest.raises(ModelViolation):
        validate(c, bad)


def closed_pipeline():
    s = sender(["a", "b"])
    ch = channel()
    r = receiver()
    return s, ch, r, compose([s, ch, r])


def test_composition_signature():
    s, ch, r, sys = closed_pipeline()
    assert sys.inputs == frozenset()
    assert sys.outputs == {"send", "deliver"}
    assert set(sys.tasks) == {"sender.emit", "chan.deliver"}
    assert sys.actor_of(Action("send", "a")) == "sender"
    assert sys.actor_of(Action("deliver", "a")) == "chan"


def test_composition_rejects_shared_outputs():
    with pytest.raises(IncompatibleSignatures):
        compose([sender(["a"], name="s1"), sender(["b"], name="s2")])


def test_composition_rejects_leaked_internal():
    leaky = counter(2, name="leaky")  # internal action "inc"
    def try_step(s, a):
        return s + 1 if a.name == "inc" else None
    from distlab.automata import make_automaton
    listener = make_automaton("listener", ["inc"], [], [], [0], {}, try_step,
                              lambda s: ())
    with pytest.raises(IncompatibleSignatures):
        compose([leaky, listener])


def test_composed_run_trace_and_projection():
    s, ch, r, sys = closed_pipeline()
    ex = run_to_quiescence(sys)
    # every external behaviour is a send/deliver interleaving ending drained
    names = [a.name for a in trace_of(sys, ex)]
    assert names.count("send") == 2 and names.count("deliver") == 2
    proj = project_execution(sys, [s, ch, r], 1, ex)
    validate(ch, proj)
    assert proj.states()[-1] == ()


def test_projection_catches_foreign_state_change():
    s, ch, r, sys = closed_pipeline()
    ex = run_to_quiescence(sys)
    # corrupt: pretend the receiver moved on a sender-only action
    forged_steps = []
    for a, st in ex.steps:
        if a.name == "send":
            st = (st[0], st[1], st[2] + ("x",))
        forged_steps.append((a, st))
    forged = Execution(ex.start_state, tuple(forged_steps))
    with pytest.raises(ModelViolation):
        project_execution(sys, [s, ch, r], 2, forged)


def test_input_enabling_holds_for_channel():
    ch = channel()
    states = [(), ("a",), ("a", "b")]
    occs = [Action("send", "a"), Action("send", "z")]
    check_input_enabled(ch, states, occs)


def test_input_enabling_violation_detected():
    from distlab.automata import make_automaton
    def try_step(s, a):
        if a.name == "poke" and s == 0:
            return 1
        return None  # refuses input in state 1
    stubborn = make_automaton("stubborn", ["poke"], [], [], [0], {}, try_step,
                              lambda s: ())
    with pytest.raises(ModelViolation):
        check_input_enabled(stubborn, [0, 1], [Action("poke")])


def test_composition_propagates_input_refusal():
    from distlab.automata import make_automaton
    def try_step(s, a):
        if a.name == "send" and s == 0:
            return 1
        return None
    grumpy = make_automaton("grumpy", ["send"], [], [], [0], {}, try_step,
                            lambda s: ())
    sys = compose([sender(["a", "b"]), grumpy])
    st = step(sys, sys.start_states[0], Action("send", "a"))
    with pytest.raises(ModelViolation):
        step(sys, st, Action("send", "b"))


# fairness ------------------------------------------------------------------

def test_quiescent_end_is_fair():
    c = counter(2)
    ex = run_to_quiescence(c)
    assert fairness_verdict(c, ex) is Fairness.FAIR
    assert is_fair(c, ex)


def test_empty_execution_of_quiescent_start_is_fair():
    c = counter(0)
    ex = Execution(0)
    assert fairness_verdict(c, ex) is Fairness.FAIR


def test_prefix_with_work_left_is_inconclusive():
    c = counter(5)
    ex = Execution(0, ((Action("inc", 0), 1),))
    assert fairness_verdict(c, ex) is Fairness.INCONCLUSIVE
    assert not is_fair(c, ex)


def test_lasso_ignoring_enabled_task_is_unfair():
    sys = compose([toggler(), idler()])
    s0 = sys.start_states[0]
    s1 = step(sys, s0, Action("flip", 0))
    s2 = step(sys, s1, Action("flip", 1))
    assert s2 == s0
    ex = Execution(s0, ((Action("flip", 0), s1), (Action("flip", 1), s2)),
                   lasso_start=0)
    assert fairness_verdict(sys, ex) is Fairness.UNFAIR


def test_lasso_serving_all_tasks_is_fair():
    sys = compose([toggler(), idler()])
    s0 = sys.start_states[0]
    s1 = step(sys, s0, Action("flip", 0))
    s1b = step(sys, s1, Action("work"))
    s2 = step(sys, s1b, Action("flip", 1))
    ex = Execution(s0, ((Action("flip", 0), s1), (Action("work"), s1b),
                        (Action("flip", 1), s2)), lasso_start=0)
    assert fairness_verdict(sys, ex) is Fairness.FAIR


def test_lasso_must_close():
    with pytest.raises(ValueError):
        Execution(0, ((Action("inc", 0), 1),), lasso_start=0)


# solving -------------------------------------------------------------------

def test_solves_is_trace_inclusion():
    s, ch, r, sys = closed_pipeline()
    ex = run_to_quiescence(sys)
    traces = [trace_of(sys, ex)]
    assert solves(traces, lambda t: len(t) == 4)
    assert not solves(traces, lambda t: len(t) == 0)


def test_solve_verdicts_reports_both_readings():
    c = counter(2)
    done = run_to_quiescence(c)
    stub = Execution(0, ((Action("inc", 0), 1),))  # inconclusive, not fair
    verdicts = solve_verdicts(c, [done, stub], lambda t: t == ())
    assert verdicts["all"] and verdicts["fair"]
    assert verdicts["sampled"] == 2 and verdicts["fair_count"] == 1


# composition laws ----------------------------------------------------------

def test_composition_commutes_up_to_isomorphism():
    def build(order):
        parts = {"s": sender(["a", "b"]), "c": channel(), "r": receiver()}
        return compose([parts[k] for k in order])
    assert graph_isomorphic(build("scr"), build("rcs"))


def test_composition_associates_up_to_isomorphism():
    def parts():
        return sender(["a", "b"]), channel(), receiver()
    s1, c1, r1 = parts()
    s2, c2, r2 = parts()
    left = compose([compose([s1, c1], name="sc"), r1])
    right = compose([s2, compose([c2, r2], name="cr")])
    assert graph_isomorphic(left, right)


def test_isomorphism_rejects_different_systems():
    assert not graph_isomorphic(counter(2), counter(3))
