"""Quorum register histories, linearizability verdicts, CAP reports."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from distlab.consistency import (
    CapReport,
    Event,
    History,
    Linearizable,
    PartitionScenario,
    Violation,
    cap_scenario,
    history_from_csv,
    history_to_csv,
    lin_check,
    operations,
    quorum_read_write,
    register_run,
    two_vs_one,
)
from distlab.errors import InvalidModel, TooLarge


def ev(ts, client, kind, phase, value=None):
    return Event(ts, client, kind, phase, value)


def hist(*events):
    return History(tuple(events))


def check_witness(history, witness):
    """Independent validation of a claimed linearization order."""
    ops = operations(history)
    completed = {o.ident for o in ops if o.respond_ts is not None}
    placed = {o.ident for o in witness}
    assert completed <= placed
    assert all(o.respond_ts is not None or o.kind == "write" for o in witness)
    pos = {o.ident: i for i, o in enumerate(witness)}
    for a in ops:
        for b in ops:
            if a.respond_ts is not None and a.respond_ts < b.invoke_ts \
                    and a.ident in pos and b.ident in pos:
                assert pos[a.ident] < pos[b.ident]
    value = 0
    for o in witness:
        if o.kind == "write":
            value = o.value
        else:
            assert o.value == value


W_THEN_R = hist(
    ev(0, 0, "write", "invoke", 1),
    ev(1, 0, "write", "respond", 1),
    ev(2, 0, "read", "invoke"),
    ev(3, 0, "read", "respond", 1))


# ---------------------------------------------------------------------------
# histories and serialization

def test_history_rejects_double_invoke():
    with pytest.raises(InvalidModel):
        hist(ev(0, 0, "read", "invoke"), ev(1, 0, "write", "invoke", 1))


def test_history_rejects_orphan_and_mismatched_responses():
    with pytest.raises(InvalidModel):
        hist(ev(0, 0, "read", "respond", 1))
    with pytest.raises(InvalidModel):
        hist(ev(0, 0, "read", "invoke"), ev(1, 0, "write", "respond", 1))


def test_history_rejects_nonincreasing_timestamps():
    with pytest.raises(InvalidModel):
        hist(ev(3, 0, "read", "invoke"), ev(3, 0, "read", "respond", 0))


def test_write_response_must_echo_the_argument():
    with pytest.raises(InvalidModel):
        hist(ev(0, 0, "write", "invoke", 1), ev(1, 0, "write", "respond", 2))


def test_operations_pair_events_and_fill_read_results():
    h = hist(
        ev(0, 0, "write", "invoke", 7),
        ev(1, 1, "read", "invoke"),
        ev(2, 0, "write", "respond", 7),
        ev(3, 1, "read", "respond", 7),
        ev(4, 0, "read", "invoke"))
    ops = operations(h)
    assert [(o.client, o.kind, o.value) for o in ops] == [
        (0, "write", 7), (1, "read", 7), (0, "read", None)]
    assert ops[2].respond_ts is None
    assert h.pending() == ((0, "read", None),)


def test_csv_round_trip_preserves_pending_operations():
    h = hist(
        ev(0, 0, "write", "invoke", 1),
        ev(1, 1, "read", "invoke"),
        ev(2, 0, "write", "respond", 1))
    text = history_to_csv(h)
    assert text.splitlines()[0] == "ts,client,kind,phase,value"
    assert history_from_csv(text) == h


def test_csv_header_is_checked():
    with pytest.raises(InvalidModel):
        history_from_csv("time,who,kind,phase,value\n")


# ---------------------------------------------------------------------------
# linearizability

def test_write_then_read_is_linearizable():
    verdict = lin_check(W_THEN_R)
    assert isinstance(verdict, Linearizable)
    check_witness(W_THEN_R, verdict.witness)


def test_completed_write_forces_later_reads():
    h = hist(
        ev(0, 0, "write", "invoke", 1),
        ev(1, 0, "write", "respond", 1),
        ev(2, 1, "read", "invoke"),
        ev(3, 1, "read", "respond", 0))
    verdict = lin_check(h)
    assert isinstance(verdict, Violation)
    assert verdict.prefix.events == h.events


def test_concurrent_write_straddles_two_reads():
    # W(1) overlaps a read returning 0 and precedes one returning 1: the
    # order R(0), W(1), R(1) explains everything
    h = hist(
        ev(0, 0, "write", "invoke", 1),
        ev(1, 1, "read", "invoke"),
        ev(2, 1, "read", "respond", 0),
        ev(3, 0, "write", "respond", 1),
        ev(4, 1, "read", "invoke"),
        ev(5, 1, "read", "respond", 1))
    verdict = lin_check(h)
    assert isinstance(verdict, Linearizable)
    check_witness(h, verdict.witness)
    assert [(o.kind, o.value) for o in verdict.witness] == [
        ("read", 0), ("write", 1), ("read", 1)]


def test_pending_write_may_have_taken_effect():
    h = hist(
        ev(0, 0, "write", "invoke", 1),
        ev(1, 1, "read", "invoke"),
        ev(2, 1, "read", "respond", 1))
    verdict = lin_check(h)
    assert isinstance(verdict, Linearizable)
    check_witness(h, verdict.witness)


def test_pending_write_cannot_take_effect_twice():
    # the same pending write would have to land both before and after
    h = hist(
        ev(0, 0, "write", "invoke", 1),
        ev(1, 1, "read", "invoke"),
        ev(2, 1, "read", "respond", 1),
        ev(3, 1, "read", "invoke"),
        ev(4, 1, "read", "respond", 0))
    assert isinstance(lin_check(h), Violation)


def test_violation_prefix_is_minimal():
    h = hist(
        ev(0, 0, "read", "invoke"),
        ev(1, 0, "read", "respond", 3),
        ev(2, 0, "write", "invoke", 3),
        ev(3, 0, "write", "respond", 3))
    verdict = lin_check(h)
    assert isinstance(verdict, Violation)
    # the unexplained read alone is already bad; the write never enters
    assert len(verdict.prefix.events) == 2


def test_lin_check_caps_its_brute_force():
    events = []
    for i in range(13):
        events.append(ev(2 * i, 0, "write", "invoke", 0))
        events.append(ev(2 * i + 1, 0, "write", "respond", 0))
    with pytest.raises(TooLarge):
        lin_check(hist(*events))


def test_lin_check_validates_its_knobs():
    with pytest.raises(InvalidModel):
        lin_check(W_THEN_R, semantics="fifoQueue")
    with pytest.raises(InvalidModel):
        lin_check(W_THEN_R, strategy="oracle")


@st.composite
def small_histories(draw):
    """Up to three operations per client over two clients, any interleave."""
    chains = []
    for client in range(2):
        count = draw(st.integers(0, 3))
        kinds = draw(st.lists(st.sampled_from(["read", "write"]),
                              min_size=count, max_size=count))
        chains.append(kinds)
    events = []
    cursor = [0, 0]     # next op per client
    stage = [0, 0]      # 0 = may invoke, 1 = must respond
    while True:
        live = [c for c in range(2)
                if cursor[c] < len(chains[c]) or stage[c] == 1]
        if not live:
            break
        c = live[draw(st.integers(0, len(live) - 1))]
        if stage[c] == 0:
            kind = chains[c][cursor[c]]
            value = draw(st.integers(0, 2)) if kind == "write" else None
            events.append(ev(len(events), c, kind, "invoke", value))
            stage[c] = 1
        else:
            kind = chains[c][cursor[c]]
            if kind == "write":
                value = next(e.value for e in reversed(events)
                             if e.client == c and e.phase == "invoke")
            else:
                value = draw(st.integers(0, 2))
            events.append(ev(len(events), c, kind, "respond", value))
            stage[c] = 0
            cursor[c] += 1
    for c in range(2):
        if events and draw(st.booleans()):
            last = max((i for i, e in enumerate(events) if e.client == c),
                       default=None)
            if last is not None and events[last].phase == "respond":
                del events[last]
    return hist(*(ev(i, e.client, e.kind, e.phase, e.value)
                  for i, e in enumerate(events)))


@settings(max_examples=150, deadline=None)
@given(h=small_histories())
def test_both_strategies_agree(h):
    a = lin_check(h, strategy="enumerate")
    b = lin_check(h, strategy="prune")
    assert type(a) is type(b)
    if isinstance(a, Violation):
        assert a.prefix == b.prefix
    else:
        check_witness(h, a.witness)
        check_witness(h, b.witness)


# ---------------------------------------------------------------------------
# the quorum register

def test_solo_client_reads_back_its_write():
    h = quorum_read_write(3, [[(0, ("write", 1)), (0, ("read",))]])
    ops = operations(h)
    assert [o.kind for o in ops] == ["write", "read"]
    assert all(o.respond_ts is not None for o in ops)
    assert ops[1].value == 1
    assert isinstance(lin_check(h), Linearizable)


@pytest.mark.parametrize("seed", range(20))
def test_completed_write_is_visible_across_clients(seed):
    script = [[(0, ("write", 1))], [(30, ("read",))]]
    h = quorum_read_write(3, script, seed=seed)
    by_client = {o.client: o for o in operations(h)}
    assert by_client[0].respond_ts < by_client[1].invoke_ts
    assert by_client[1].value == 1
    assert isinstance(lin_check(h), Linearizable)


def test_one_crashed_server_does_not_block_anyone():
    script = [[(0, ("write", 5)), (0, ("read",))], [(10, ("read",))]]
    h = quorum_read_write(3, script, crashes={2: 0})
    assert h.pending() == ()
    assert isinstance(lin_check(h), Linearizable)


@pytest.mark.parametrize("seed", range(8))
def test_replica_tags_never_decrease(seed):
    script = [[(0, ("write", 1)), (5, ("read",))],
              [(0, ("write", 2)), (5, ("read",))]]
    result = register_run(3, script, seed=seed)
    last = {}
    for snap in result.run.snapshots:
        for sid in range(3):
            kind, _, tag = snap[sid]
            assert kind == "server"
            assert tag >= last.get(sid, (0, -1))
            last[sid] = tag


def test_same_seed_same_run():
    script = [[(0, ("write", 1))], [(3, ("read",))]]
    a = register_run(3, script, seed=11)
    b = register_run(3, script, seed=11)
    assert a.history == b.history
    assert a.run.log == b.run.log


def test_script_validation():
    with pytest.raises(InvalidModel):
        register_run(3, [[(5, ("read",)), (2, ("read",))]])
    with pytest.raises(InvalidModel):
        register_run(3, [[(0, ("compare_and_swap", 1))]])
    with pytest.raises(InvalidModel):
        register_run(3, [[(0, ("read",))]], variant="chain")


# ---------------------------------------------------------------------------
# partitions

def test_partition_scenario_validation():
    with pytest.raises(InvalidModel):
        PartitionScenario((frozenset({0, 1}),), (0, 5))
    with pytest.raises(InvalidModel):
        PartitionScenario((frozenset({0, 1}), frozenset({1, 2})), (0, 5))
    with pytest.raises(InvalidModel):
        PartitionScenario((frozenset({0}), frozenset({1})), (5, 2))


def test_severed_is_symmetric_and_window_bound():
    ps = two_vs_one((5, 10))
    assert ps.severed(0, 2, 5) and ps.severed(2, 0, 10)
    assert not ps.severed(0, 1, 7)      # same group
    assert not ps.severed(3, 4, 4) and not ps.severed(3, 4, 11)


def test_partition_must_cover_every_process():
    ps = PartitionScenario((frozenset({0, 1}), frozenset({2})), (0, 5))
    with pytest.raises(InvalidModel):
        register_run(3, [[(0, ("read",))]], partition=ps)


def test_minority_operations_finish_after_the_partition_heals():
    script = [[(0, ("write", 1))], [(10, ("read",))]]
    h = quorum_read_write(3, script, partition=two_vs_one((0, 20)))
    assert h.pending() == ()
    by_client = {o.client: o for o in operations(h)}
    assert by_client[1].value == 1
    assert isinstance(lin_check(h), Linearizable)


# ---------------------------------------------------------------------------
# the dilemma made concrete

def test_cp_gives_up_availability_not_consistency():
    report = cap_scenario("cp", two_vs_one((0, 60)))
    assert report.violated == ("availability",)
    assert len(report.pending) >= 1
    assert report.pending[0][:2] == (1, "read")
    assert isinstance(report.verdict, Linearizable)


def test_ap_gives_up_consistency_not_availability():
    report = cap_scenario("ap", two_vs_one((0, 60)))
    assert report.violated == ("consistency",)
    assert report.pending == ()
    assert isinstance(report.verdict, Violation)
    smoking_gun = report.verdict.prefix.events[-1]
    assert (smoking_gun.client, smoking_gun.kind, smoking_gun.value) == \
        (1, "read", 0)


@pytest.mark.parametrize("variant", ["cp", "ap"])
def test_no_partition_no_sacrifice(variant):
    report = cap_scenario(variant)
    assert report.violated == ()
    assert isinstance(report.verdict, Linearizable)


def test_the_canonical_race_is_realized():
    for variant in ("cp", "ap"):
        report = cap_scenario(variant, two_vs_one((0, 60)))
        ops = operations(report.history)
        write = next(o for o in ops if o.kind == "write")
        probe = next(o for o in ops if o.client == 1)
        assert write.respond_ts < probe.invoke_ts


def test_cap_scenario_validates_its_arguments():
    with pytest.raises(InvalidModel):
        cap_scenario("ca")
    with pytest.raises(InvalidModel):
        cap_scenario("cp", n=2)
