"""Replicated read/write registers and brute-force consistency checking.

quorum_read_write  majority-quorum register on the tick engine: a write
                   queries a majority for the highest tag and installs
                   (maxSeq+1, writerId) at a majority; a read returns the
                   freshest majority value after writing it back.
lin_check          exhaustive linearizability check for small histories of
                   a last-write-wins integer register, in two independent
                   strategies (order enumeration vs. incremental pruning).
cap_scenario       one partition, two register designs: the quorum register
                   keeps its history linearizable while minority operations
                   hang; the local-first variant answers everyone and pays
                   with a non-linearizable history.
"""

import csv
import io
import itertools
from dataclasses import dataclass
from typing import Any, Optional

from .errors import InvalidModel, TooLarge
from .harness import GSTModel, run_with_gst

CSV_HEADER = "ts,client,kind,phase,value"
LIN_CHECK_CAP = 12
RESEND_EVERY = 4


# ---------------------------------------------------------------------------
# histories

@dataclass(frozen=True)
class Event:
    ts: int
    client: int
    kind: str       # "read" | "write"
    phase: str      # "invoke" | "respond"
    value: Optional[int]


@dataclass(frozen=True)
class Op:
    ident: int
    client: int
    kind: str
    value: Optional[int]        # write argument, or read result (None pending)
    invoke_ts: int
    respond_ts: Optional[int]   # None while the operation is pending


@dataclass(frozen=True)
class History:
    """A per-client alternating sequence of operation invokes and responds.

    Timestamps are logical: strictly increasing, assigned in occurrence
    order.  An invoke without a matching respond is a pending operation,
    the record of an availability failure rather than an error.
    """
    events: tuple

    def __post_init__(self):
        open_op = {}
        last_ts = None
        for ev in self.events:
            if ev.kind not in ("read", "write"):
                raise InvalidModel(f"unknown operation kind {ev.kind!r}")
            if ev.phase not in ("invoke", "respond"):
                raise InvalidModel(f"unknown phase {ev.phase!r}")
            if last_ts is not None and ev.ts <= last_ts:
                raise InvalidModel(
                    f"timestamps must strictly increase, {ev.ts} after {last_ts}")
            last_ts = ev.ts
            if ev.phase == "invoke":
                if ev.client in open_op:
                    raise InvalidModel(
                        f"client {ev.client} invoked twice without a response")
                if ev.kind == "write" and not isinstance(ev.value, int):
                    raise InvalidModel("write invoke needs an integer argument")
                if ev.kind == "read" and ev.value is not None:
                    raise InvalidModel("read invoke carries no value")
                open_op[ev.client] = ev
            else:
                inv = open_op.pop(ev.client, None)
                if inv is None or inv.kind != ev.kind:
                    raise InvalidModel(
                        f"client {ev.client} responded to nothing open")
                if not isinstance(ev.value, int):
                    raise InvalidModel("responses carry an integer value")
                if ev.kind == "write" and ev.value != inv.value:
                    raise InvalidModel("write response disagrees with its argument")

    def pending(self):
        """Operations invoked but never responded, as (client, kind, value)."""
        return tuple((o.client, o.kind, o.value) for o in operations(self)
                     if o.respond_ts is None)


def operations(history: History) -> tuple:
    """Pair invokes with responds, in invoke order."""
    ops = []
    open_at = {}
    for ev in history.events:
        if ev.phase == "invoke":
            open_at[ev.client] = len(ops)
            ops.append(Op(len(ops), ev.client, ev.kind, ev.value, ev.ts, None))
        else:
            i = open_at.pop(ev.client)
            o = ops[i]
            value = ev.value if o.kind == "read" else o.value
            ops[i] = Op(o.ident, o.client, o.kind, value, o.invoke_ts, ev.ts)
    return tuple(ops)


def history_to_csv(history: History) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER.split(","))
    for ev in history.events:
        writer.writerow([ev.ts, ev.client, ev.kind, ev.phase,
                         "" if ev.value is None else ev.value])
    return buf.getvalue()


def history_from_csv(text: str) -> History:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != CSV_HEADER.split(","):
        raise InvalidModel(f"expected header {CSV_HEADER!r}")
    events = []
    for ts, client, kind, phase, value in rows[1:]:
        events.append(Event(int(ts), int(client), kind, phase,
                            None if value == "" else int(value)))
    return History(tuple(events))


# ---------------------------------------------------------------------------
# linearizability
#
# A history is linearizable when some total order of its operations respects
# real-time precedence (respond before invoke) and register semantics (every
# read returns the latest write before it, initially 0).  Pending reads never
# constrain the order and are dropped; pending writes may or may not have
# taken effect, so both choices are searched.

@dataclass(frozen=True)
class Linearizable:
    witness: tuple      # operations in one legal total order


@dataclass(frozen=True)
class Violation:
    prefix: History     # shortest non-linearizable event prefix


def _candidate_sets(ops):
    completed = [o for o in ops if o.respond_ts is not None]
    optional = [o for o in ops if o.respond_ts is None and o.kind == "write"]
    for r in range(len(optional) + 1):
        for extra in itertools.combinations(optional, r):
            yield completed + list(extra)


def _preds(chosen):
    ids = {o.ident for o in chosen}
    preds = {o.ident: frozenset(
        a.ident for a in chosen
        if a.respond_ts is not None and a.respond_ts < o.invoke_ts)
        for o in chosen}
    assert all(p <= ids for p in preds.values())
    return preds


def _extensions(chosen, preds):
    """Every linear extension of the real-time precedence order."""
    def grow(order, placed):
        if len(order) == len(chosen):
            yield tuple(order)
            return
        for o in chosen:
            if o.ident not in placed and preds[o.ident] <= placed:
                order.append(o)
                yield from grow(order, placed | {o.ident})
                order.pop()
    yield from grow([], frozenset())


def _legal(order):
    value = 0
    for o in order:
        if o.kind == "write":
            value = o.value
        elif o.value != value:
            return False
    return True


def _witness_enumerate(ops):
    for chosen in _candidate_sets(ops):
        preds = _preds(chosen)
        for order in _extensions(chosen, preds):
            if _legal(order):
                return order
    return None


def _witness_prune(ops):
    for chosen in _candidate_sets(ops):
        preds = _preds(chosen)
        dead = set()

        def search(placed, value, order):
            if len(order) == len(chosen):
                return tuple(order)
            if (placed, value) in dead:
                return None
            for o in chosen:
                if o.ident in placed or not preds[o.ident] <= placed:
                    continue
                if o.kind == "read":
                    if o.value != value:
                        continue        # this read can never go here
                    nxt = value
                else:
                    nxt = o.value
                order.append(o)
                found = search(placed | {o.ident}, nxt, order)
                if found is not None:
                    return found
                order.pop()
            dead.add((placed, value))
            return None

        found = search(frozenset(), 0, [])
        if found is not None:
            return found
    return None


_STRATEGIES = {"enumerate": _witness_enumerate, "prune": _witness_prune}


def lin_check(history: History, semantics: str = "lastWriteWins",
              strategy: str = "prune"):
    """Return Linearizable(witness) or Violation(shortest bad prefix)."""
    if semantics != "lastWriteWins":
        raise InvalidModel(f"unsupported object semantics {semantics!r}")
    if strategy not in _STRATEGIES:
        raise InvalidModel(f"unknown strategy {strategy!r}")
    search = _STRATEGIES[strategy]
    ops = operations(history)
    load = sum(1 for o in ops if o.respond_ts is not None or o.kind == "write")
    if load > LIN_CHECK_CAP:
        raise TooLarge(f"{load} operations, brute force stops at {LIN_CHECK_CAP}")
    witness = search(ops)
    if witness is not None:
        return Linearizable(witness)
    for k in range(1, len(history.events) + 1):
        prefix = History(history.events[:k])
        if search(operations(prefix)) is None:
            return Violation(prefix)
    raise AssertionError("unreachable: the full history failed the search")


# ---------------------------------------------------------------------------
# simulated registers
#
# Servers occupy pids 0..n-1 and clients n..n+c-1 on one tick engine.  The
# network delivers with small seeded delays; a partition drops cross-group
# messages sent inside its window (they are scheduled past the horizon).
# Clients retransmit their current request every few ticks, so an operation
# completes eventually unless its quorum stays unreachable.

@dataclass(frozen=True)
class PartitionScenario:
    groups: tuple   # frozensets of pids, pairwise disjoint
    window: tuple   # (first_step, last_step) inclusive

    def __post_init__(self):
        if len(self.groups) < 2:
            raise InvalidModel("a partition needs at least two groups")
        seen = set()
        for g in self.groups:
            if g & seen:
                raise InvalidModel(f"groups overlap on {sorted(g & seen)}")
            seen |= g
        lo, hi = self.window
        if lo < 0 or hi < lo:
            raise InvalidModel(f"bad partition window {self.window}")

    def severed(self, src, dst, step):
        if not self.window[0] <= step <= self.window[1]:
            return False
        for g in self.groups:
            if src in g:
                return dst not in g
        return False


def _check_script(script):
    for cid, ops in enumerate(script):
        last = 0
        for at, op in ops:
            if at < last:
                raise InvalidModel(f"client {cid} script steps go backwards")
            last = at
            if op[0] == "write":
                if len(op) != 2 or not isinstance(op[1], int):
                    raise InvalidModel(f"bad write op {op!r}")
            elif op != ("read",):
                raise InvalidModel(f"unknown op {op!r}")


class _QuorumServer:
    """One replica: (value, tag), tag = (seq, writerId), never decreasing."""

    def __init__(self, sid):
        self.sid = sid
        self.value = 0
        self.tag = (0, -1)

    def on_tick(self, t, inbox):
        out = []
        for src, msg in inbox:
            if msg[0] == "query":
                out.append((src, ("state", msg[1], self.tag, self.value)))
            elif msg[0] == "store":
                _, rid, tag, value = msg
                if tag > self.tag:
                    self.tag, self.value = tag, value
                out.append((src, ("stored", rid)))
        return out

    def snapshot(self):
        return ("server", self.value, self.tag)


class _QuorumClient:
    """Two-phase operations: query a majority, then store to a majority.

    A write stores (maxSeq+1, cid) with its argument; a read stores the
    freshest (tag, value) it saw unchanged, so any later read must return a
    value at least that new.
    """

    def __init__(self, cid, n_servers, ops, recorder):
        self.cid = cid
        self.n = n_servers
        self.majority = n_servers // 2 + 1
        self.ops = ops
        self.recorder = recorder
        self.idx = 0
        self.phase = None       # None | "query" | "store"
        self.rid = 0
        self.got = {}
        self.op = None
        self.result = None
        self.request = None
        self.last_send = None

    def _broadcast(self, t, out):
        self.last_send = t
        out.extend((sid, self.request) for sid in range(self.n))

    def on_tick(self, t, inbox):
        out = []
        for src, msg in inbox:
            if msg[0] == "state" and self.phase == "query" and msg[1] == self.rid:
                self.got[src] = (msg[2], msg[3])
            elif msg[0] == "stored" and self.phase == "store" and msg[1] == self.rid:
                self.got[src] = True
        if self.phase == "query" and len(self.got) >= self.majority:
            tag, value = max(self.got.values())
            if self.op[0] == "write":
                tag, value = (tag[0] + 1, self.cid), self.op[1]
            self.result = value
            self.rid += 1
            self.phase = "store"
            self.got = {}
            self.request = ("store", self.rid, tag, value)
            self._broadcast(t, out)
        elif self.phase == "store" and len(self.got) >= self.majority:
            self.recorder.append((self.cid, self.op[0], "respond", self.result))
            self.phase = None
            self.idx += 1
        if self.phase is None and self.idx < len(self.ops) \
                and t >= self.ops[self.idx][0]:
            self.op = self.ops[self.idx][1]
            arg = self.op[1] if self.op[0] == "write" else None
            self.recorder.append((self.cid, self.op[0], "invoke", arg))
            self.rid += 1
            self.phase = "query"
            self.got = {}
            self.request = ("query", self.rid)
            self._broadcast(t, out)
        elif self.phase is not None and t - self.last_send >= RESEND_EVERY:
            self._broadcast(t, out)
        return out

    def snapshot(self):
        return ("client", self.cid, self.idx, self.phase)


class _LocalServer:
    """Availability-first replica: applies locally, gossips afterwards.

    Writes are ordered by (step, sid) tags, last write wins; gossip lost to
    a partition is never repaired, which is the whole point.
    """

    def __init__(self, sid, n_servers):
        self.sid = sid
        self.n = n_servers
        self.value = 0
        self.tag = (0, -1)

    def on_tick(self, t, inbox):
        out = []
        for src, msg in inbox:
            if msg[0] == "do":
                _, rid, op = msg
                if op[0] == "write":
                    self.tag, self.value = (t, self.sid), op[1]
                    out.extend((sid, ("gossip", self.tag, self.value))
                               for sid in range(self.n) if sid != self.sid)
                out.append((src, ("done", rid, self.value)))
            elif msg[0] == "gossip":
                if msg[1] > self.tag:
                    self.tag, self.value = msg[1], msg[2]
        return out

    def snapshot(self):
        return ("server", self.value, self.tag)


class _LocalClient:
    """Sends each operation to its home server and responds on first reply."""

    def __init__(self, cid, home, ops, recorder):
        self.cid = cid
        self.home = home
        self.ops = ops
        self.recorder = recorder
        self.idx = 0
        self.rid = 0
        self.waiting = False
        self.op = None
        self.request = None
        self.last_send = None

    def on_tick(self, t, inbox):
        out = []
        for _, msg in inbox:
            if self.waiting and msg[0] == "done" and msg[1] == self.rid:
                value = self.op[1] if self.op[0] == "write" else msg[2]
                self.recorder.append((self.cid, self.op[0], "respond", value))
                self.waiting = False
                self.idx += 1
        if not self.waiting and self.idx < len(self.ops) \
                and t >= self.ops[self.idx][0]:
            self.op = self.ops[self.idx][1]
            arg = self.op[1] if self.op[0] == "write" else None
            self.recorder.append((self.cid, self.op[0], "invoke", arg))
            self.rid += 1
            self.waiting = True
            self.request = ("do", self.rid, self.op)
            self.last_send = t
            out.append((self.home, self.request))
        elif self.waiting and t - self.last_send >= RESEND_EVERY:
            self.last_send = t
            out.append((self.home, self.request))
        return out

    def snapshot(self):
        return ("client", self.cid, self.idx, "do" if self.waiting else None)


@dataclass
class RegisterRun:
    history: History
    run: Any            # the underlying TickRun
    n_servers: int

    def pending(self):
        return self.history.pending()


def register_run(n, script, variant="quorum", seed=0, horizon=60,
                 partition=None, crashes=None, homes=None) -> RegisterRun:
    """Run scripted clients against n replicas and log the history.

    script: per client, a list of (earliest_step, op) with op ("write", v)
    or ("read",); a client invokes its next operation once the step is
    reached and the previous operation has responded.  homes (ap variant
    only) maps each client to the replica it talks to, nearest-first.
    """
    if n < 1:
        raise InvalidModel(f"need at least one server, got n={n}")
    _check_script(script)
    recorder = []
    if variant == "quorum":
        servers = [_QuorumServer(s) for s in range(n)]
        clients = [_QuorumClient(c, n, tuple(ops), recorder)
                   for c, ops in enumerate(script)]
    elif variant == "local":
        if homes is None:
            homes = [c % n for c in range(len(script))]
        servers = [_LocalServer(s, n) for s in range(n)]
        clients = [_LocalClient(c, homes[c], tuple(ops), recorder)
                   for c, ops in enumerate(script)]
    else:
        raise InvalidModel(f"unknown register variant {variant!r}")
    procs = servers + clients
    crashes = dict(crashes or {})
    if partition is not None:
        covered = set().union(*partition.groups)
        if covered != set(range(len(procs))):
            raise InvalidModel(
                f"partition covers {sorted(covered)}, processes are "
                f"0..{len(procs) - 1}")

    def delays(src, dst, send_step, payload):
        if partition is not None and partition.severed(src, dst, send_step):
            return horizon + 10     # never delivered inside the run
        return None                 # seeded small delay

    model = GSTModel(n=len(procs), f=len(crashes), gst=horizon, delta=1,
                     crashes=crashes, pre_gst_max=4)
    run = run_with_gst(procs, model, horizon, seed=seed, delay_script=delays)
    events = tuple(Event(ts, cid, kind, phase, value)
                   for ts, (cid, kind, phase, value) in enumerate(recorder))
    return RegisterRun(History(events), run, n)


def quorum_read_write(n, script, **kwargs) -> History:
    return register_run(n, script, variant="quorum", **kwargs).history


# ---------------------------------------------------------------------------
# the partition dilemma

def two_vs_one(window, n=3, clients=2) -> PartitionScenario:
    """Majority group: servers 0..n-2 and client 0; minority: the rest."""
    pids = range(n + clients)
    majority = frozenset(range(n - 1)) | {n}
    return PartitionScenario(
        (majority, frozenset(pids) - majority), tuple(window))


@dataclass
class CapReport:
    variant: str
    history: History
    pending: tuple      # operations that never responded
    verdict: Any        # Linearizable | Violation
    violated: tuple     # subset of ("availability", "consistency")


def cap_scenario(variant, partition=None, n=3, seed=0, horizon=60) -> CapReport:
    """Run the canonical cross-group script and report what had to give.

    Client 0 (majority side) writes 1 and reads it back; client 1 (minority
    side) reads once, invoked late enough to land after the write responded.
    The cp variant is the quorum register, the ap variant the local-first
    one with client 1 homed on the minority replica.
    """
    if variant not in ("cp", "ap"):
        raise InvalidModel(f"variant must be cp or ap, got {variant!r}")
    if n < 3:
        raise InvalidModel(f"the dilemma needs n >= 3, got {n}")
    mid = horizon // 2
    script = [
        [(0, ("write", 1)), (mid, ("read",))],
        [(mid, ("read",))],
    ]
    result = register_run(
        n, script,
        variant="quorum" if variant == "cp" else "local",
        seed=seed, horizon=horizon, partition=partition,
        homes=None if variant == "cp" else [0, n - 1])
    verdict = lin_check(result.history)
    pending = result.pending()
    violated = ()
    if pending:
        violated += ("availability",)
    if isinstance(verdict, Violation):
        violated += ("consistency",)
    return CapReport(variant, result.history, pending, verdict, violated)
