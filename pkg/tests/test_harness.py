import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from distlab.automata import Action, Execution, Fairness, compose, fairness_verdict, step
from distlab.errors import BudgetExceeded, MissingBound, ModelViolation
from distlab.harness import (
    CrashEntry, GSTModel, RoundModel, avoiding_chooser, delay_rules,
    format_log_line, measure_time, run_async, run_rounds, run_with_gst,
    uniform_chooser)

from toys import channel, counter, idler, receiver, sender, toggler


class MinSpread:
    """Round algorithm: broadcast the smallest value seen, keep the min."""
    def start(self, pid, n, value):
        return value
    def message(self, state, rnd):
        return state
    def update(self, state, rnd, received):
        return min([state] + list(received.values()))
    def output(self, state):
        return state


# rounds ---------------------------------------------------------------------

def test_round_run_failure_free():
    model = RoundModel(n=3, f=0)
    run = run_rounds(MinSpread(), model, [2, 0, 1], rounds=1)
    assert run.outputs == {0: 0, 1: 0, 2: 0}
    assert run.crashed == frozenset()
    assert len(run.states_per_round) == 2


def test_crash_partial_sends_hand_checked():
    # p0 holds the min and crashes in round 1, reaching only p1
    model = RoundModel(n=3, f=1, crashes={0: CrashEntry(1, frozenset([1]))})
    run = run_rounds(MinSpread(), model, [0, 5, 7], rounds=2)
    assert run.delivered[0][1] == {0: 0, 1: 5, 2: 7}
    assert run.delivered[0][2] == {1: 5, 2: 7}
    # round 2: p1 relays the min, p0 silent, p2 rebroadcasts min(7, 5)
    assert run.delivered[1][2] == {1: 0, 2: 5}
    assert run.outputs == {1: 0, 2: 0}
    assert run.crashed == frozenset([0])


def test_crash_budget_enforced():
    with pytest.raises(BudgetExceeded):
        RoundModel(n=3, f=0, crashes={0: CrashEntry(1, frozenset())})


def test_byzantine_script_forges_per_recipient():
    model = RoundModel(n=3, f=1, byzantine={(0, 1): {1: 100, 2: 200}})
    run = run_rounds(MinSpread(), model, [0, 5, 7], rounds=1)
    assert run.delivered[0][1][0] == 100
    assert run.delivered[0][2][0] == 200
    assert run.delivered[0][0][0] == 0  # its own inbox sees the honest value


def test_byzantine_budget_enforced():
    with pytest.raises(BudgetExceeded):
        RoundModel(n=3, f=1, crashes={0: CrashEntry(1, frozenset())},
                   byzantine={(1, 1): {2: 9}})


# async schedules -------------------------------------------------------------

def pipeline():
    return compose([sender(["a", "b"]), channel(), receiver()])


def test_async_uniform_reaches_quiescence_deterministically():
    sys = pipeline()
    run1 = run_async(sys, uniform_chooser(7), max_steps=100)
    run2 = run_async(sys, uniform_chooser(7), max_steps=100)
    assert run1.quiescent and run2.quiescent
    assert run1.execution == run2.execution


def test_async_seeds_explore_different_interleavings():
    sys = pipeline()
    seen = {tuple(a.key() for a in run_async(sys, uniform_chooser(s), 100)
                  .execution.actions())
            for s in range(20)}
    assert len(seen) > 1


def test_async_starvation_script_yields_unfair_lasso():
    sys = compose([toggler(), idler()])
    run = run_async(sys, avoiding_chooser({"work"}), max_steps=50)
    ex = run.execution
    assert ex.lasso_start is not None
    assert fairness_verdict(sys, ex) is Fairness.UNFAIR


def test_async_quiescence_marker():
    c = counter(2)
    run = run_async(c, uniform_chooser(0), max_steps=10)
    assert run.quiescent and run.steps_taken == 2


# GST engine ------------------------------------------------------------------

class Echo:
    """Sends one hello to everyone at step 0 and acks whatever it receives."""
    def __init__(self, pid, n):
        self.pid, self.n = pid, n
        self.got = []
    def on_tick(self, step_no, inbox):
        out = []
        if step_no == 0:
            out = [(dst, "hello") for dst in range(self.n) if dst != self.pid]
        for src, payload in inbox:
            self.got.append((step_no, src, payload))
        return out
    def snapshot(self):
        return tuple(self.got)


def test_gst_zero_behaves_synchronously():
    model = GSTModel(n=3, f=0, gst=0, delta=2)
    procs = [Echo(i, 3) for i in range(3)]
    run = run_with_gst(procs, model, horizon=6, seed=1)
    for deliver, src, dst, payload, send in run.deliveries:
        assert deliver - send <= 2


def test_pre_gst_messages_land_by_gst_plus_delta():
    model = GSTModel(n=3, f=0, gst=10, delta=1, pre_gst_max=100)
    procs = [Echo(i, 3) for i in range(3)]
    run = run_with_gst(procs, model, horizon=15, seed=3)
    assert run.deliveries, "hellos must land"
    for deliver, src, dst, payload, send in run.deliveries:
        assert deliver <= 11


def test_delay_rules_hold_specific_message():
    model = GSTModel(n=2, f=0, gst=8, delta=1)
    script = delay_rules([{"src": 0, "dst": 1, "until": 20}])
    procs = [Echo(i, 2) for i in range(2)]
    run = run_with_gst(procs, model, horizon=12, seed=0, delay_script=script)
    held = [d for d in run.deliveries if d[1] == 0 and d[2] == 1]
    assert held and held[0][0] == 9  # clamped to gst + delta


def test_gst_crash_budget():
    with pytest.raises(BudgetExceeded):
        GSTModel(n=3, f=0, gst=0, delta=1, crashes={0: 2})


def test_crashed_process_goes_silent():
    model = GSTModel(n=2, f=1, gst=0, delta=1, crashes={0: 0})
    procs = [Echo(i, 2) for i in range(2)]
    run = run_with_gst(procs, model, horizon=5, seed=0)
    assert all(src != 0 for _, src, _, _, _ in run.deliveries)
    assert run.snapshots[-1][0] == ("crashed",)


def test_log_line_format():
    line = format_log_line(3, "p1", "deliver", (0, "hello"), 3)
    assert line == "3,p1,deliver,\"(0,'hello')\",3"


# time measure ----------------------------------------------------------------

def chain_execution(k):
    c = counter(k)
    cur = 0
    steps = []
    for i in range(k):
        nxt = step(c, cur, Action("inc", cur))
        steps.append((Action("inc", cur), nxt))
        cur = nxt
    return c, Execution(0, tuple(steps))


def test_time_chain_is_k():
    c, ex = chain_execution(5)
    assert measure_time(c, ex, {"count": 1.0}) == 5.0


def test_time_interleaved_independent_tasks():
    sys = compose([toggler(), idler()])
    cur = sys.start_states[0]
    steps = []
    for _ in range(3):
        for act in (Action("flip", cur[0]), Action("work")):
            cur = step(sys, cur, act)
            steps.append((act, cur))
    ex = Execution(sys.start_states[0], tuple(steps))
    bounds = {"toggler.flip": 1.0, "idler.work": 1.0}
    assert measure_time(sys, ex, bounds) == 3.0


def test_time_monotone_ordering_clamps_late_big_bound():
    # big-bound task steps first; the small-bound follower pulls the whole
    # schedule back because events cannot run backwards in time
    sys = compose([toggler(), idler()])
    s0 = sys.start_states[0]
    s1 = step(sys, s0, Action("flip", 0))
    s2 = step(sys, s1, Action("work"))
    ex = Execution(s0, ((Action("flip", 0), s1), (Action("work"), s2)))
    got = measure_time(sys, ex, {"toggler.flip": 10.0, "idler.work": 1.0})
    assert got == 1.0


def test_time_missing_bound():
    c, ex = chain_execution(2)
    with pytest.raises(MissingBound):
        measure_time(c, ex, {})


@settings(max_examples=60, deadline=None)
@given(b1=st.floats(0.1, 10), b2=st.floats(0.1, 10), bump=st.floats(0, 5))
def test_time_monotone_in_bounds(b1, b2, bump):
    sys = compose([toggler(), idler()])
    cur = sys.start_states[0]
    steps = []
    for _ in range(2):
        for act in (Action("flip", cur[0]), Action("work")):
            cur = step(sys, cur, act)
            steps.append((act, cur))
    ex = Execution(sys.start_states[0], tuple(steps))
    base = measure_time(sys, ex, {"toggler.flip": b1, "idler.work": b2})
    more = measure_time(sys, ex, {"toggler.flip": b1 + bump, "idler.work": b2})
    assert more >= base
