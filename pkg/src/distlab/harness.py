"""Simulation harnesses: lock-step rounds, asynchronous schedules, partial
synchrony with a global stabilization time, and the task-bound time measure.

All randomness comes from a named generator (random.Random, Mersenne
Twister) seeded per run, so every run is replayable bit for bit.
"""

import csv
import heapq
import io
from dataclasses import dataclass, field
from random import Random
from typing import Any, Callable, Mapping, Optional

from .automata import Action, Automaton, Execution, enabled_local, step, task_of
from .canon import canon
from .errors import BudgetExceeded, MissingBound, ModelViolation

LOG_HEADER = "step,actor,action,payload,virtualTime"


def format_log_line(step_no, actor, action, payload, vtime) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="").writerow(
        [step_no, actor, action, canon(payload), vtime])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# lock-step rounds with crash / byzantine adversaries

@dataclass(frozen=True)
class CrashEntry:
    """Process stops in `round`; its final broadcast reaches only `recipients`."""
    round: int
    recipients: frozenset


@dataclass(frozen=True)
class RoundModel:
    n: int
    f: int
    crashes: Mapping[int, CrashEntry] = field(default_factory=dict)
    byzantine: Mapping[tuple, Mapping[int, Any]] = field(default_factory=dict)
    # byzantine key: (pid, round) -> {recipient: forged payload}

    def __post_init__(self):
        if len(self.crashes) > self.f:
            raise BudgetExceeded(
                f"{len(self.crashes)} crashes scripted, budget f={self.f}")
        byz_pids = {pid for pid, _ in self.byzantine}
        if len(byz_pids | set(self.crashes)) > self.f:
            raise BudgetExceeded(
                f"faulty set {sorted(byz_pids | set(self.crashes))} exceeds f={self.f}")
        for pid, entry in self.crashes.items():
            if not (0 <= pid < self.n) or entry.round < 1:
                raise ModelViolation(f"bad crash entry for p{pid}: {entry}")


@dataclass
class RoundRun:
    execution: Execution
    states_per_round: list        # [round] -> tuple of per-process states
    delivered: list               # [round] -> {dst: {src: payload}}
    crashed: frozenset
    outputs: dict                 # pid -> output value (alive processes only)
    rounds: int


def run_rounds(algo, model: RoundModel, inputs, rounds: int) -> RoundRun:
    """Drive a broadcast round algorithm for exactly `rounds` rounds.

    algo duck type: start(pid, n, value) -> state; message(state, rnd) ->
    payload; update(state, rnd, received: {src: payload}) -> state;
    output(state) -> value.
    """
    n = model.n
    if len(inputs) != n:
        raise ModelViolation(f"{len(inputs)} inputs for {n} processes")
    states = [algo.start(pid, n, inputs[pid]) for pid in range(n)]
    crashed = set()
    snapshots = [tuple(states)]
    delivered_log = []
    steps = []
    for rnd in range(1, rounds + 1):
        outbox = {}
        for pid in range(n):
            if pid in crashed:
                continue
            payload = algo.message(states[pid], rnd)
            entry = model.crashes.get(pid)
            if entry is not None and entry.round == rnd:
                recipients = set(entry.recipients)
                crashed.add(pid)
            else:
                recipients = set(range(n))
            forged = model.byzantine.get((pid, rnd), {})
            outbox[pid] = {dst: forged.get(dst, payload) for dst in recipients}
        inboxes = {dst: {} for dst in range(n)}
        for src, per_dst in outbox.items():
            for dst, payload in per_dst.items():
                inboxes[dst][src] = payload
        for pid in range(n):
            if pid in crashed:
                continue
            states[pid] = algo.update(states[pid], rnd, inboxes[pid])
        snapshot = tuple(
            ("crashed", states[pid]) if pid in crashed else states[pid]
            for pid in range(n))
        snapshots.append(snapshot)
        delivered_log.append({dst: dict(srcs) for dst, srcs in inboxes.items()
                              if dst not in crashed})
        steps.append((Action("round", rnd), snapshot))
    outputs = {pid: algo.output(states[pid]) for pid in range(n)
               if pid not in crashed}
    return RoundRun(
        execution=Execution(snapshots[0], tuple(steps)),
        states_per_round=snapshots,
        delivered=delivered_log,
        crashed=frozenset(crashed),
        outputs=outputs,
        rounds=rounds)


# ---------------------------------------------------------------------------
# asynchronous schedules over an automaton

@dataclass
class AsyncRun:
    execution: Execution
    quiescent: bool
    steps_taken: int


def uniform_chooser(seed: int):
    rng = Random(seed)
    def choose(enabled, step_no):
        return enabled[rng.randrange(len(enabled))]
    return choose


def avoiding_chooser(avoid_names):
    """Prefer any action outside `avoid_names`; the scripted starvation adversary."""
    avoid = frozenset(avoid_names)
    def choose(enabled, step_no):
        for a in enabled:
            if a.name not in avoid:
                return a
        return enabled[0]
    return choose


def run_async(aut: Automaton, chooser, max_steps: int,
              stop_on_repeat: bool = True) -> AsyncRun:
    """Schedule locally controlled actions until quiescence, a state repeat,
    or the step budget.  The repeat (if any) is recorded as a lasso."""
    cur = aut.start_states[0]
    seen = {cur: 0}
    steps = []
    quiescent = False
    lasso = None
    for i in range(max_steps):
        enabled = enabled_local(aut, cur)
        if not enabled:
            quiescent = True
            break
        act = chooser(enabled, i)
        cur = step(aut, cur, act)
        steps.append((act, cur))
        if cur in seen:
            if stop_on_repeat:
                lasso = seen[cur]
                break
        else:
            seen[cur] = len(steps)
    return AsyncRun(Execution(aut.start_states[0], tuple(steps), lasso),
                    quiescent, len(steps))


# ---------------------------------------------------------------------------
# partial synchrony: tick-driven message passing with a GST

@dataclass(frozen=True)
class GSTModel:
    n: int
    f: int
    gst: int
    delta: int
    crashes: Mapping[int, int] = field(default_factory=dict)  # pid -> crash step
    pre_gst_max: int = 50   # cap on seeded pre-GST delays (always finite)

    def __post_init__(self):
        if self.delta < 1 or self.gst < 0:
            raise ModelViolation(f"need delta >= 1 and gst >= 0, got {self}")
        if len(self.crashes) > self.f:
            raise BudgetExceeded(
                f"{len(self.crashes)} crashes scripted, budget f={self.f}")


@dataclass
class TickRun:
    snapshots: list          # [step] -> tuple of per-process snapshots
    deliveries: list         # (deliver_step, src, dst, payload, send_step)
    log: list                # formatted step,actor,action,payload,virtualTime rows
    steps: int
    crashed: frozenset


def run_with_gst(procs, model: GSTModel, horizon: int, seed: int = 0,
                 delay_script: Optional[Callable] = None) -> TickRun:
    """Tick-step simulation: before gst the adversary (script, then seeded
    fallback) delays messages arbitrarily but finitely; any message still in
    flight at gst lands by gst+delta, and messages sent at or after gst land
    within delta.  Processes expose on_tick(step, inbox) -> [(dst, payload)]
    and snapshot().
    """
    if len(procs) != model.n:
        raise ModelViolation(f"{len(procs)} processes for n={model.n}")
    rng = Random(seed)
    inflight = []  # heap of (deliver_step, seq, src, dst, payload, send_step)
    seq = 0
    deliveries = []
    log = []
    snapshots = []
    crashed_now = set()

    def schedule(src, dst, payload, send_step):
        nonlocal seq
        raw = None
        if delay_script is not None:
            raw = delay_script(src, dst, send_step, payload)
        if raw is None:
            if send_step >= model.gst:
                raw = rng.randint(1, model.delta)
            else:
                raw = rng.randint(1, model.pre_gst_max)
        raw = max(1, raw)
        if send_step >= model.gst:
            deliver = send_step + min(raw, model.delta)
        else:
            deliver = min(send_step + raw, model.gst + model.delta)
        heapq.heappush(inflight, (deliver, seq, src, dst, payload, send_step))
        seq += 1

    for t in range(horizon):
        for pid, when in model.crashes.items():
            if when <= t:
                crashed_now.add(pid)
        inboxes = {pid: [] for pid in range(model.n)}
        while inflight and inflight[0][0] <= t:
            deliver, _, src, dst, payload, send_step = heapq.heappop(inflight)
            if send_step >= model.gst:
                assert deliver - send_step <= model.delta
            if dst in crashed_now:
                continue
            inboxes[dst].append((src, payload))
            deliveries.append((t, src, dst, payload, send_step))
            log.append(format_log_line(t, f"p{dst}", "deliver", (src, payload), t))
        for pid in range(model.n):
            if pid in crashed_now:
                continue
            for dst, payload in procs[pid].on_tick(t, inboxes[pid]):
                if not (0 <= dst < model.n):
                    raise ModelViolation(f"p{pid} sent to unknown p{dst}")
                schedule(pid, dst, payload, t)
                log.append(format_log_line(t, f"p{pid}", "send", (dst, payload), t))
        snapshots.append(tuple(
            ("crashed",) if pid in crashed_now else procs[pid].snapshot()
            for pid in range(model.n)))
    return TickRun(snapshots, deliveries, log, horizon, frozenset(crashed_now))


def delay_rules(rules):
    """Build a delay script from declarative rules.

    Each rule: {"src":? , "dst":?, "from_step":?, "to_step":?, "until": int}
    First matching rule delays the message until step `until` (delivery is
    still clamped by the GST contract).  Missing fields match anything.
    """
    def script(src, dst, send_step, payload):
        for r in rules:
            if "src" in r and r["src"] != src:
                continue
            if "dst" in r and r["dst"] != dst:
                continue
            if "from_step" in r and send_step < r["from_step"]:
                continue
            if "to_step" in r and send_step > r["to_step"]:
                continue
            return max(1, r["until"] - send_step)
        return None
    return script


# ---------------------------------------------------------------------------
# time measure for asynchronous executions

def measure_time(aut: Automaton, ex: Execution, bounds: Mapping[str, float]) -> float:
    """Supremum of the last event's time over all time assignments in which
    each continuously enabled task steps within its bound.

    Computed as a shortest path over the difference constraints
    t_i <= t_anchor(i) + bound(task_i) and t_{i-1} <= t_i, which is the
    latest-time schedule (greedy when no clamping is needed).
    """
    from .automata import enabled_tasks
    actions = ex.actions()
    if not actions:
        return 0.0
    states = ex.states()
    for t in aut.tasks:
        if t not in bounds:
            raise MissingBound(f"no bound for task {t}")
    # anchors[i]: event index (0 = start) the i-th event's deadline hangs off
    anchor_of = {}
    last = {}
    for t in enabled_tasks(aut, states[0]):
        last[t] = 0
    for i, act in enumerate(actions, start=1):
        t = task_of(aut, act)
        if t is None:
            raise MissingBound(f"action {act.name} belongs to no task")
        if t not in last:
            raise ModelViolation(f"task {t} stepped while disabled")
        anchor_of[i] = (last[t], bounds[t])
        enabled_now = set(enabled_tasks(aut, states[i]))
        for u in list(last):
            if u not in enabled_now:
                del last[u]
        for u in enabled_now:
            if u == t or u not in last:
                last[u] = i
    n = len(actions)
    # shortest path 0 -> n over anchor edges (j -> i, weight b) and
    # monotonicity edges (i -> i-1, weight 0)
    fwd = {j: [] for j in range(n + 1)}
    for i, (j, b) in anchor_of.items():
        fwd[j].append((i, b))
    for i in range(1, n + 1):
        fwd[i].append((i - 1, 0))
    dist = {0: 0.0}
    heap = [(0.0, 0)]
    while heap:
        d, v = heapq.heappop(heap)
        if d > dist.get(v, float("inf")):
            continue
        if v == n:
            return d
        for w, b in fwd[v]:
            nd = d + b
            if nd < dist.get(w, float("inf")):
                dist[w] = nd
                heapq.heappush(heap, (nd, w))
    raise ModelViolation("time measure: last event unreachable")  # pragma: no cover
