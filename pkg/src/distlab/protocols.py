"""Message-passing agreement protocols on an explorable configuration graph.

A configuration holds the fixed input vector, one local state per process,
the multiset of undelivered messages, and the set of crashed processes.
Events are message deliveries (possibly with several nondeterministic
branches), internal process steps, deliveries absorbed by a crashed
recipient, and at most `crash_budget` crash events.  Fairness obligations
are the pending messages plus, for each live process with an enabled
internal event, the duty to let it step; crashes are never obliged, they
belong to the adversary.

The protocols themselves are deliberately tiny: two degenerate contrast
fixtures (one that cannot tolerate a crash at all, one that decides but
breaks agreement), a propose/nack arbiter whose unlucky schedules cycle
forever, a one-shot adoption vote that can wedge undecided after a crash,
and a rotating-coordinator protocol with a bounded number of ballots.  The
last one is the interesting citizen: a proposal is only accepted by
processes whose current ballot is no newer, a coordinator proposes the
value of the newest reported lock, and decisions need a majority.  Giving
each ballot a fresh, never-reused number is what makes the lock argument
go through; the checker finds genuinely bivalent initial configurations
and fair runs that exhaust every ballot without deciding.
"""

from dataclasses import dataclass
from itertools import product
from typing import Any, Callable, Optional

from .automata import Action
from .canon import canon
from .errors import InvalidModel


@dataclass(frozen=True)
class Config:
    inputs: tuple
    states: tuple
    pool: tuple
    crashed: frozenset


@dataclass(frozen=True)
class Protocol:
    """One agreement protocol: per-process behaviour plus its size.

    start(pid, value) returns the initial state and initial sends; deliver
    returns the nondeterministic branches for receiving a payload, each a
    (branch, state, sends) triple; internals lists spontaneous (label,
    state, sends) steps; decision extracts the decided value, if any.
    sends are (destination, payload) pairs.
    """
    name: str
    n: int
    start: Callable[[int, int], tuple]
    deliver: Callable[[Any, int, tuple], list]
    internals: Callable[[Any], list]
    decision: Callable[[Any], Optional[int]]


_entry_keys = {}


def _entry_key(entry):
    """Memoized canonical key; the same few message values recur endlessly."""
    key = _entry_keys.get(entry)
    if key is None:
        key = canon(entry)
        _entry_keys[entry] = key
    return key


def _pool_insert(pool, src, sends):
    if not sends:
        return pool
    grown = list(pool)
    for dst, payload in sends:
        grown.append((src, dst, payload))
    grown.sort(key=_entry_key)
    return tuple(grown)


def _pool_take(pool, entry):
    got = list(pool)
    got.remove(entry)
    return tuple(got)


class ProtocolGraph:
    """Explorable configuration graph of a protocol under crash faults.

    moves() output is already deterministically ordered (pool entries in
    canonical order, then internal steps and crashes by pid), so consumers
    may skip re-sorting.
    """

    presorted = True

    def __init__(self, protocol: Protocol, crash_budget: int = 1,
                 inputs=None):
        self.protocol = protocol
        self.crash_budget = crash_budget
        if inputs is None:
            inputs = list(product((0, 1), repeat=protocol.n))
        starts = []
        for vec in inputs:
            if len(vec) != protocol.n:
                raise InvalidModel(
                    "input vector %r does not fit n=%d" % (vec, protocol.n))
            states = []
            pool = ()
            for pid, v in enumerate(vec):
                st, sends = protocol.start(pid, v)
                states.append(st)
                pool = _pool_insert(pool, pid, sends)
            starts.append(Config(inputs=tuple(vec), states=tuple(states),
                                 pool=pool, crashed=frozenset()))
        self.initial = tuple(starts)

    def moves(self, config: Config):
        proto = self.protocol
        out = []
        for entry in sorted(set(config.pool), key=_entry_key):
            src, dst, payload = entry
            drained = _pool_take(config.pool, entry)
            if dst in config.crashed:
                out.append(("env", Action("absorb", entry),
                            Config(config.inputs, config.states, drained,
                                   config.crashed)))
                continue
            branches = proto.deliver(config.states[dst], src, payload)
            if not branches:
                branches = [("drop", config.states[dst], ())]
            for branch, st, sends in branches:
                states = _swap(config.states, dst, st)
                pool = _pool_insert(drained, dst, sends)
                out.append(("p%d" % dst,
                            Action("deliver", entry + (branch,)),
                            Config(config.inputs, states, pool,
                                   config.crashed)))
        for pid in range(proto.n):
            if pid in config.crashed:
                continue
            for label, st, sends in proto.internals(config.states[pid]):
                states = _swap(config.states, pid, st)
                pool = _pool_insert(config.pool, pid, sends)
                out.append(("p%d" % pid, Action("internal", (pid, label)),
                            Config(config.inputs, states, pool,
                                   config.crashed)))
        if len(config.crashed) < self.crash_budget:
            for pid in range(proto.n):
                if pid not in config.crashed:
                    out.append(("env", Action("crash", (pid,)),
                                Config(config.inputs, config.states,
                                       config.pool,
                                       config.crashed | {pid})))
        return out

    def obligations(self, config: Config):
        obs = {("msg", entry) for entry in set(config.pool)}
        for pid in range(self.protocol.n):
            if pid in config.crashed:
                continue
            if self.protocol.internals(config.states[pid]):
                obs.add(("step", pid))
        return frozenset(obs)

    def discharged(self, config: Config, actor, action):
        if action.name == "deliver":
            src, dst, payload, _ = action.payload
            return frozenset([("msg", (src, dst, payload)), ("step", dst)])
        if action.name == "absorb":
            return frozenset([("msg", action.payload)])
        if action.name == "internal":
            pid, _ = action.payload
            return frozenset([("step", pid)])
        return frozenset()

    def decisions(self, config: Config):
        got = set()
        for st in config.states:
            v = self.protocol.decision(st)
            if v is not None:
                got.add(v)
        return frozenset(got)


def _swap(states, pid, st):
    grown = list(states)
    grown[pid] = st
    return tuple(grown)


def decided_vector(protocol: Protocol, config: Config) -> tuple:
    return tuple(protocol.decision(st) for st in config.states)


# ---------------------------------------------------------------------------
# contrast fixtures

def wait_for_both() -> Protocol:
    """Two processes exchange inputs and decide the minimum.

    Safe, and every crash-free fair run decides; but crashing a process
    before its send leaves the survivor waiting forever, so the protocol is
    not 1-crash tolerant.  No initial configuration is bivalent: the
    decision, when reached, is a function of the inputs alone.
    """
    def start(pid, v):
        return (pid, v, False, None), ()

    def deliver(state, src, payload):
        pid, mine, sent, decided = state
        if payload[0] == "vote" and decided is None:
            return [("recv", (pid, mine, sent, min(mine, payload[1])), ())]
        return [("drop", state, ())]

    def internals(state):
        pid, mine, sent, decided = state
        if not sent:
            return [("send", (pid, mine, True, decided),
                     ((1 - pid, ("vote", mine)),))]
        return []

    def decision(state):
        return state[3]

    return Protocol("wait_for_both", 2, start, deliver, internals, decision)


def decide_own_input() -> Protocol:
    """Each process spontaneously decides its own input.

    Every fair run decides even under a crash, which is exactly why the
    protocol is broken: mixed inputs decide differently.
    """
    def start(pid, v):
        return ("own", v, None), ()

    def deliver(state, src, payload):
        return [("drop", state, ())]

    def internals(state):
        if state[2] is None:
            return [("decide", ("own", state[1], state[1]), ())]
        return []

    def decision(state):
        return state[2]

    return Protocol("decide_own_input", 2, start, deliver, internals,
                    decision)


# ---------------------------------------------------------------------------
# the retry arbiter

def retry_arbiter(n: int) -> Protocol:
    """Process 0 proposes values; voters may accept or reject each proposal.

    Voters send their input to the arbiter, which may propose its own value
    or any value it has seen.  A proposal goes to every voter; the first
    matching acknowledgement commits it, and the commit is broadcast.  A
    round ends only once every voter has responded, so no two rounds are
    ever in flight at once and the message pool stays bounded.  A rejected
    round returns the arbiter to its proposing state, so a schedule in
    which every proposal is rejected revisits the same configuration
    forever while delivering every message: a fair non-deciding cycle.
    """
    if n < 2:
        raise InvalidModel("the arbiter needs at least one voter")
    voters = tuple(range(1, n))

    def start(pid, v):
        if pid == 0:
            return ("a", v, frozenset(), None, None), ()
        return ("v", v, None), ((0, ("vote", v)),)

    def deliver(state, src, payload):
        kind = payload[0]
        if state[0] == "v":
            if kind == "propose" and state[2] is None:
                return [
                    ("accept", state, ((0, ("ack", payload[1])),)),
                    ("nack", state, ((0, ("nack",)),)),
                ]
            if kind == "commit" and state[2] is None:
                return [("recv", ("v", state[1], payload[1]), ())]
            return [("drop", state, ())]
        _, mine, seen, awaiting, committed = state
        if committed is not None:
            return [("drop", state, ())]
        if kind == "vote":
            return [("recv", ("a", mine, seen | {payload[1]}, awaiting,
                              committed), ())]
        if awaiting is None:
            return [("drop", state, ())]
        x, responded = awaiting
        if kind == "ack" and payload[1] == x:
            decided = ("a", mine, seen, None, x)
            return [("recv", decided,
                     tuple((k, ("commit", x)) for k in voters))]
        if kind == "nack":
            responded = responded | {src}
            round_over = len(responded) == len(voters)
            grown = ("a", mine, seen, None if round_over else (x, responded),
                     committed)
            return [("recv", grown, ())]
        return [("drop", state, ())]

    def internals(state):
        if state[0] != "a":
            return []
        _, mine, seen, awaiting, committed = state
        if committed is not None or awaiting is not None:
            return []
        out = []
        for x in sorted({mine} | seen):
            out.append(("propose%d" % x,
                        ("a", mine, seen, (x, frozenset()), committed),
                        tuple((k, ("propose", x)) for k in voters)))
        return out

    def decision(state):
        return state[4] if state[0] == "a" else state[2]

    return Protocol("retry_arbiter_%d" % n, n, start, deliver, internals,
                    decision)


# ---------------------------------------------------------------------------
# one-shot adoption voting

def quorum_vote() -> Protocol:
    """Three processes adopt the first value they hear and tally adoptions.

    Everyone announces its input, adopts the first announcement received,
    rebroadcasts the adoption, and decides any value adopted by two
    distinct processes.  Three adoptions over two values make a pigeonhole
    majority, and 2-2 is impossible, so agreement holds; but with one
    process crashed the two survivors can adopt each other's values and
    wedge, every message delivered, nobody decided.
    """
    n = 3

    def others(pid):
        return tuple(k for k in range(n) if k != pid)

    def start(pid, v):
        state = ("q", pid, v, None, frozenset(), None)
        return state, tuple((k, ("init", v)) for k in others(pid))

    def settle(state):
        _, pid, mine, adopted, claims, decided = state
        if decided is None:
            for w in (0, 1):
                if len({q for q, x in claims if x == w}) >= 2:
                    decided = w
        return ("q", pid, mine, adopted, claims, decided)

    def deliver(state, src, payload):
        _, pid, mine, adopted, claims, decided = state
        if decided is not None:
            return [("drop", state, ())]
        if payload[0] == "init":
            if adopted is not None:
                return [("drop", state, ())]
            w = payload[1]
            grown = settle(("q", pid, mine, w, claims | {(pid, w)}, decided))
            return [("adopt", grown,
                     tuple((k, ("adopted", w)) for k in others(pid)))]
        if payload[0] == "adopted":
            grown = settle(("q", pid, mine, adopted,
                            claims | {(src, payload[1])}, decided))
            return [("recv", grown, ())]
        return [("drop", state, ())]

    def internals(state):
        return []

    def decision(state):
        return state[5]

    return Protocol("quorum_vote_3", n, start, deliver, internals, decision)


# ---------------------------------------------------------------------------
# rotating coordinator

def rotating_coordinator() -> Protocol:
    """Three processes run ballots 0 and 1, ballot b coordinated by process b.

    On entering a ballot a process immediately reports its preference, or
    its lock if it holds one, to the coordinator (the coordinator files its
    own report directly); at any later point it may abort the ballot, a
    timeout.  The moment a coordinator holds reports from two distinct
    processes it proposes the value of the newest reported lock, by
    preference the smallest reported input when nobody is locked, locking
    itself in the act.  Receivers ignore proposals from ballots older than
    their own, otherwise they join the ballot, lock the value and
    acknowledge; one acknowledgement gives the coordinator a majority with
    its own lock, and it decides and broadcasts the decision.

    Locks make decisions stable: a decision at ballot b plants the value in
    a majority of processes, every later report quorum overlaps that
    majority, and the newest-lock rule forces every later proposal to carry
    the same value.  Ballots never repeat, so a run that aborts its way
    through every ballot ends quiescent and undecided; that run is fair,
    every message having been delivered or absorbed.
    """
    n = 3
    ballots = 2

    def others(pid):
        return tuple(k for k in range(n) if k != pid)

    def merge(best, word):
        """Fold one report into the coordinator's running summary."""
        if best is None:
            return word
        if word[0] == "lock":
            if best[0] == "lock":
                return word if word[2] > best[2] else best
            return word
        if best[0] == "lock":
            return best
        return ("pref", min(best[1], word[1]))

    def enter(pid, mine, ballot, lock, decided):
        """State and sends for a process entering a ballot, report included."""
        word = ("lock", lock[0], lock[1]) if lock else ("pref", mine)
        if ballot >= ballots:
            return ("r", pid, mine, ballot, lock, decided,
                    frozenset(), None, False), ()
        if pid == ballot % n:
            return ("r", pid, mine, ballot, lock, decided,
                    frozenset([pid]), word, False), ()
        return ("r", pid, mine, ballot, lock, decided,
                frozenset(), None, False), \
            ((ballot % n, ("report", ballot, word)),)

    def maybe_propose(state):
        """Propose as soon as two reports are in; returns (state, sends)."""
        _, pid, mine, ballot, lock, decided, senders, best, proposed = state
        if proposed or len(senders) < 2:
            return state, ()
        v = best[1]
        primed = ("r", pid, mine, ballot, (v, ballot), decided,
                  senders, best, True)
        return primed, tuple(
            (k, ("propose", ballot, v)) for k in others(pid))

    def start(pid, v):
        return enter(pid, v, 0, None, None)

    def decision(state):
        return state[5]

    def deliver(state, src, payload):
        _, pid, mine, ballot, lock, decided, senders, best, proposed = state
        kind = payload[0]
        if kind == "decide":
            if decided is None:
                return [("recv", ("r", pid, mine, ballot, lock, payload[1],
                                  senders, best, proposed), ())]
            return [("drop", state, ())]
        if decided is not None or ballot >= ballots:
            return [("drop", state, ())]
        if kind == "report":
            b = payload[1]
            if pid == b % n and ballot == b and not proposed:
                grown = ("r", pid, mine, ballot, lock, decided,
                         senders | {src}, merge(best, payload[2]), proposed)
                primed, sends = maybe_propose(grown)
                return [("recv", primed, sends)]
            return [("drop", state, ())]
        if kind == "propose":
            b, v = payload[1], payload[2]
            if b < ballot:
                return [("drop", state, ())]
            # joining an in-progress ballot: no report, its coordinator has
            # proposed already; just lock the value and acknowledge
            joined = ("r", pid, mine, b, (v, b), decided,
                      senders if b == ballot else frozenset(),
                      best if b == ballot else None,
                      proposed if b == ballot else False)
            return [("lock", joined, ((src, ("ack", b)),))]
        if kind == "ack":
            b = payload[1]
            if pid == b % n and ballot == b and proposed:
                # one remote lock plus the coordinator's own is a majority
                v = lock[0]
                done = ("r", pid, mine, ballot, lock, v,
                        senders, best, proposed)
                return [("recv", done,
                         tuple((k, ("decide", v)) for k in others(pid)))]
            return [("drop", state, ())]
        return [("drop", state, ())]

    def internals(state):
        _, pid, mine, ballot, lock, decided, senders, best, proposed = state
        if decided is not None or ballot >= ballots:
            return []
        primed, sends = enter(pid, mine, ballot + 1, lock, decided)
        return [("abort", primed, sends)]

    return Protocol("rotating_coordinator_3", n, start, deliver, internals,
                    decision)


def flp_exhibits() -> tuple:
    """The crash-tolerant protocols whose graphs carry the impossibility
    in its strongest finite form: a bivalent initial configuration and a
    fair cycle of undecided configurations.

    Each entry pairs a protocol with the input vectors its configuration
    graph is built from; None means every vector.  Only the retrying
    arbiters qualify: their abort-and-reopen loop is what lets the
    adversary stay undecided forever.  The one-shot toys (quorum_vote,
    rotating_coordinator with its ballot cap) have acyclic graphs, so
    their fair non-deciding runs are crash-wedged quiescent states
    rather than lassos; they are exercised directly by the checker
    tests instead of through this registry.
    """
    return (
        (retry_arbiter(2), None),
        (retry_arbiter(3), None),
    )


def exhibit_graph(protocol: Protocol, inputs=None,
                  crash_budget: int = 1) -> ProtocolGraph:
    return ProtocolGraph(protocol, crash_budget=crash_budget, inputs=inputs)
