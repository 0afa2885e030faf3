"""Reference fault-tolerant agreement algorithms.

flood_min     k-set agreement under crash faults, floor(f/k)+1 rounds of
              propagating the smallest value seen.
dls_consensus binary/multi-valued consensus under partial synchrony with
              rotating coordinators, value locks and majority acks; safe
              always, live after the global stabilization time.
approx_sync / approx_async
              approximate agreement by successive approximation with a
              fault-tolerant (symmetrically trimmed) averaging function.
"""

import itertools
from dataclasses import dataclass, field
from random import Random
from typing import Any, Mapping, Optional

from .errors import InvalidModel, ModelViolation, QuorumUnreachable, TooFewValues
from .harness import CrashEntry, GSTModel, RoundModel, run_rounds, run_with_gst


# ---------------------------------------------------------------------------
# k-set agreement

def floodmin_rounds(f: int, k: int) -> int:
    return f // k + 1


class FloodMinAlgo:
    """Each process keeps and rebroadcasts the minimum value it has seen."""
    def start(self, pid, n, value):
        return value
    def message(self, state, rnd):
        return state
    def update(self, state, rnd, received):
        return min([state] + list(received.values()))
    def output(self, state):
        return state


@dataclass
class FloodMinResult:
    decisions: dict
    rounds: int
    run: Any


def flood_min(n, f, k, inputs, crashes=None) -> FloodMinResult:
    if not 0 <= f < n:
        raise InvalidModel(f"need 0 <= f < n, got n={n} f={f}")
    if k < 1:
        raise InvalidModel(f"need k >= 1, got {k}")
    rounds = floodmin_rounds(f, k)
    model = RoundModel(n=n, f=f, crashes=crashes or {})
    run = run_rounds(FloodMinAlgo(), model, list(inputs), rounds)
    return FloodMinResult(run.outputs, rounds, run)


def flood_min_fast(n, inputs, script, rounds):
    """Lean simulation used by the exhaustive checker.

    script: {pid: (crash_round, recipients_tuple)}.  Returns a tuple of
    per-process decisions, None for crashed processes.
    """
    vals = list(inputs)
    alive = [True] * n
    for rnd in range(1, rounds + 1):
        bcast = None
        partial = None
        for p in range(n):
            if not alive[p]:
                continue
            ent = script.get(p)
            if ent is not None and ent[0] == rnd:
                if partial is None:
                    partial = []
                partial.append((ent[1], vals[p]))
                alive[p] = False
            else:
                v = vals[p]
                if bcast is None or v < bcast:
                    bcast = v
        if bcast is not None:
            for dst in range(n):
                if alive[dst] and bcast < vals[dst]:
                    vals[dst] = bcast
        if partial:
            for recips, v in partial:
                for dst in recips:
                    if alive[dst] and v < vals[dst]:
                        vals[dst] = v
    return tuple(vals[p] if alive[p] else None for p in range(n))


def iter_crash_scripts(n, f, rounds):
    """Every crash script with at most f faulty processes: each picks a
    crash round and the subset of other processes its last broadcast reaches."""
    others = [tuple(q for q in range(n) if q != p) for p in range(n)]
    per_proc = []
    for p in range(n):
        opts = []
        for rnd in range(1, rounds + 1):
            for bits in range(1 << (n - 1)):
                recips = tuple(others[p][i] for i in range(n - 1) if bits >> i & 1)
                opts.append((rnd, recips))
        per_proc.append(opts)
    yield {}
    for size in range(1, f + 1):
        for team in itertools.combinations(range(n), size):
            for choice in itertools.product(*(per_proc[p] for p in team)):
                yield dict(zip(team, choice))


def check_kset_exhaustive(n, f, k, domain=(0, 1)) -> dict:
    """Exhaustively verify the k-set bound for one (n, f, k):
    over every input vector from `domain` and every <=f crash script,
    nonfaulty decisions take at most k distinct values, each some input,
    after exactly floor(f/k)+1 rounds.  Returns counters; raises on any
    violation with the offending script."""
    rounds = floodmin_rounds(f, k)
    scripts = list(iter_crash_scripts(n, f, rounds))
    vectors = list(itertools.product(domain, repeat=n))
    runs = 0
    for inputs in vectors:
        inset = set(inputs)
        for script in scripts:
            decisions = flood_min_fast(n, inputs, script, rounds)
            got = set(d for d in decisions if d is not None)
            runs += 1
            if len(got) > k or not got <= inset:
                raise ModelViolation(
                    f"k-set violated: n={n} f={f} k={k} inputs={inputs} "
                    f"script={script} decisions={decisions}")
    return {"n": n, "f": f, "k": k, "rounds": rounds,
            "scripts": len(scripts), "vectors": len(vectors), "runs": runs}


def worst_case_chain_script(n, f):
    """The classical hand-off adversary: process p holds the minimum and
    crashes in round p+1 telling only process p+1, for p = 0..f-1."""
    return {p: CrashEntry(p + 1, frozenset([p + 1])) for p in range(f)}


# ---------------------------------------------------------------------------
# fault-tolerant averaging and approximate agreement

def ft_average(values, f: int) -> float:
    """Symmetric trimmed mean: discard the f lowest and f highest, average
    the rest.  Needs more than 2f values."""
    vals = sorted(values)
    if len(vals) <= 2 * f:
        raise TooFewValues(f"{len(vals)} values cannot tolerate f={f}")
    core = vals[f:len(vals) - f] if f else vals
    return sum(core) / len(core)


class _ApproxSyncAlgo:
    """State: (value, halted).  Halted processes echo their final value so
    stragglers can still fill their rounds."""
    def __init__(self, f, eps):
        self.f, self.eps = f, eps

    def start(self, pid, n, value):
        return (float(value), False)

    def message(self, state, rnd):
        return state[0]

    def update(self, state, rnd, received):
        value, halted = state
        if halted:
            return state
        vals = list(received.values())
        spread = max(vals) - min(vals)
        new = ft_average(vals, self.f)
        # spread_p + spread_q <= eps bounds the final gap through any shared
        # received value, hence the halved local threshold
        return (new, spread <= self.eps / 2)

    def output(self, state):
        return state[0]


@dataclass
class ApproxResult:
    values: dict
    terminated: bool
    rounds_used: Optional[int]
    diameters: list
    contraction: list
    mode: str


def _alive_values(snapshot):
    return [s[0] for s in snapshot if not (isinstance(s, tuple) and s and s[0] == "crashed")]


def approx_sync(n, f, inputs, eps, crashes=None, round_cap=64) -> ApproxResult:
    if eps <= 0:
        raise InvalidModel(f"eps must be positive, got {eps}")
    if n - f <= 2 * f:
        raise InvalidModel(f"sync trimming needs n - f > 2f, got n={n} f={f}")
    crashes = crashes or {}
    model = RoundModel(n=n, f=f, crashes=crashes)
    algo = _ApproxSyncAlgo(f, eps)
    run = run_rounds(algo, model, list(inputs), round_cap)
    # validity and diameter range over the nonfaulty processes only; the
    # trimmed mean keeps every new value inside their current span
    good = [p for p in range(n) if p not in crashes]
    lo = min(inputs[p] for p in good)
    hi = max(inputs[p] for p in good)
    diameters = []
    rounds_used = None
    for rnd, snap in enumerate(run.states_per_round):
        vals = []
        all_halted = True
        for pid in good:
            s = snap[pid]
            vals.append(s[0])
            all_halted = all_halted and s[1]
            if not lo - 1e-12 <= s[0] <= hi + 1e-12:
                raise ModelViolation(
                    f"validity broken in round {rnd}: {s[0]} outside [{lo}, {hi}]")
        d = max(vals) - min(vals)
        if diameters and d > diameters[-1] + 1e-12:
            raise ModelViolation(
                f"diameter grew in round {rnd}: {diameters[-1]} -> {d}")
        diameters.append(d)
        if rnd > 0 and all_halted and rounds_used is None:
            rounds_used = rnd
    contraction = [diameters[i + 1] / diameters[i]
                   for i in range(len(diameters) - 1) if diameters[i] > 0]
    final = {pid: run.outputs[pid] for pid in run.outputs}
    terminated = rounds_used is not None
    if terminated:
        vals = [final[p] for p in good]
        if max(vals) - min(vals) > eps + 1e-12:
            raise ModelViolation("halted outputs spread past eps")
    return ApproxResult(final, terminated, rounds_used,
                        diameters, contraction, "sync")


def approx_async(n, f, inputs, eps, seed=0, crashes=None, step_cap=20_000,
                 round_cap=128) -> ApproxResult:
    """Message-driven successive approximation: each round a process waits
    for exactly n-f round-tagged values (its own included) and applies the
    trimmed mean.  Requires f < n/3.  Crashes: {pid: scheduler step}."""
    if eps <= 0:
        raise InvalidModel(f"eps must be positive, got {eps}")
    if 3 * f >= n:
        raise InvalidModel(f"async mode needs f < n/3, got n={n} f={f}")
    crashes = crashes or {}
    if len(crashes) > f:
        raise InvalidModel(f"{len(crashes)} crashes scripted, budget f={f}")
    rng = Random(seed)
    quorum = n - f
    good = [p for p in range(n) if p not in crashes]
    value = {p: float(inputs[p]) for p in range(n)}
    rnd = {p: 1 for p in range(n)}
    halted = {p: False for p in range(n)}
    capped = set()
    crashed = set()
    got = {p: {} for p in range(n)}   # p -> round -> {src: value}
    finals = {p: {} for p in range(n)}  # p -> {halted src: its last value}
    pending = []                      # (src, dst, round|None, value)
    lo = min(inputs[p] for p in good)
    hi = max(inputs[p] for p in good)

    def broadcast(p, r, v):
        for q in range(n):
            if q != p:
                pending.append((p, q, r, v))
        got[p].setdefault(r, {})[p] = v

    def halt(p):
        # a halted process would resend its last value in every later
        # round; one round-less final message stands in for all of them
        halted[p] = True
        for q in range(n):
            if q != p:
                pending.append((p, q, None, value[p]))

    def visible(p, r):
        box = dict(got[p].get(r, {}))
        for src, v in finals[p].items():
            box.setdefault(src, v)
        return box

    def maybe_advance(p):
        while not halted[p]:
            r = rnd[p]
            box = visible(p, r)
            if len(box) < quorum:
                return
            vals = list(box.values())[:quorum]  # first n-f known, own included
            new = ft_average(vals, f)
            spread = max(vals) - min(vals)
            if p in set(good) and not lo - 1e-12 <= new <= hi + 1e-12:
                raise ModelViolation(f"validity broken at p{p} round {r}: {new}")
            value[p] = new
            if spread <= eps / 2:
                halt(p)
                return
            if r + 1 > round_cap:
                capped.add(p)
                halt(p)
                return
            rnd[p] = r + 1
            broadcast(p, r + 1, new)

    for p in range(n):
        broadcast(p, 1, value[p])
    steps = 0
    while steps < step_cap:
        for p, when in crashes.items():
            if when <= steps:
                crashed.add(p)
        live = [p for p in range(n) if p not in crashed]
        if all(halted[p] for p in live):
            break
        # in-flight messages from crashed senders stay deliverable
        deliverable = [i for i, (src, dst, _, _) in enumerate(pending)
                       if dst not in crashed]
        if not deliverable:
            break
        idx = deliverable[rng.randrange(len(deliverable))]
        src, dst, r, v = pending.pop(idx)
        steps += 1
        if halted[dst]:
            continue
        if r is None:
            finals[dst][src] = v
        else:
            got[dst].setdefault(r, {})[src] = v
        maybe_advance(dst)

    live = [p for p in range(n) if p not in crashed]
    terminated = all(halted[p] for p in live) and not (capped & set(live))
    finals = {p: value[p] for p in live}
    if terminated and finals:
        vs = [finals[p] for p in good if p in finals]
        if max(vs) - min(vs) > eps + 1e-12:
            raise ModelViolation("halted outputs spread past eps")
    return ApproxResult(finals, terminated, max(rnd[p] for p in live) if live else None,
                        [], [], "async")


# ---------------------------------------------------------------------------
# consensus under partial synchrony

@dataclass
class DlsResult:
    decisions: dict            # pid -> value or None
    decided_attempt: dict      # pid -> attempt at which it decided
    proposals: list            # (attempt, coordinator, value)
    run: Any
    horizon: int

    def agreement_ok(self):
        vals = {v for v in self.decisions.values() if v is not None}
        return len(vals) <= 1

    def validity_ok(self, inputs):
        vals = {v for v in self.decisions.values() if v is not None}
        return vals <= set(inputs)


class DlsProcess:
    """One participant: sequential attempts of four phases, window 4(delta+1)
    ticks, coordinator = attempt mod n.

    gather   every undecided process reports its lock (else its input) to
             the coordinator
    propose  the coordinator picks a value acceptable to a majority of the
             reports (a report is acceptable for v unless it locks a
             different value) and broadcasts it
    ack      recipients lock (value, attempt) and ack; a lock on a different
             value is released exactly when the incoming lock is younger
    decide   on majority acks the coordinator decides and broadcasts; decide
             messages are retransmitted at every attempt start
    """

    def __init__(self, pid, n, value, delta):
        self.pid, self.n, self.input, self.delta = pid, n, value, delta
        self.L = delta + 1
        self.W = 4 * self.L
        self.majority = n // 2 + 1
        self.lock = None          # (value, attempt)
        self.decided = None
        self.decided_attempt = None
        self.decided_tick = None
        self.gathers = {}         # attempt -> {src: ("lock", v, att) | ("input", x)}
        self.acks = {}            # attempt -> set of pids
        self.proposed = {}        # attempt -> value (as coordinator)
        self.proposal_log = []

    def _report(self):
        if self.lock is not None:
            return ("lock", self.lock[0], self.lock[1])
        return ("input", self.input)

    def _receive_propose(self, att, v, out):
        if self.decided is not None:
            return
        if self.lock is None or self.lock[0] == v:
            newatt = att if self.lock is None else max(att, self.lock[1])
            self.lock = (v, newatt)
        elif att > self.lock[1]:
            self.lock = (v, att)   # release the older conflicting lock
        else:
            return                 # stale conflicting proposal, keep the lock
        coord = att % self.n
        if coord == self.pid:
            self.acks.setdefault(att, set()).add(self.pid)
        else:
            out.append((coord, ("ack", att)))

    def on_tick(self, t, inbox):
        out = []
        for src, msg in inbox:
            kind = msg[0]
            if kind == "gather":
                self.gathers.setdefault(msg[1], {})[src] = msg[2]
            elif kind == "propose":
                self._receive_propose(msg[1], msg[2], out)
            elif kind == "ack":
                self.acks.setdefault(msg[1], set()).add(src)
            elif kind == "decide":
                if self.decided is None:
                    self.decided = msg[1]
                    self.decided_attempt = msg[2]
                    self.decided_tick = t
        att = t // self.W
        phase_tick = t % self.W
        coord = att % self.n
        if phase_tick == 0:
            if self.decided is not None:
                for q in range(self.n):
                    if q != self.pid:
                        out.append((q, ("decide", self.decided, self.decided_attempt)))
            elif coord == self.pid:
                self.gathers.setdefault(att, {})[self.pid] = self._report()
            else:
                out.append((coord, ("gather", att, self._report())))
        elif phase_tick == self.L and coord == self.pid and self.decided is None:
            v = self._pick(att)
            if v is not None:
                self.proposed[att] = v
                self.proposal_log.append((att, self.pid, v))
                for q in range(self.n):
                    if q != self.pid:
                        out.append((q, ("propose", att, v)))
                self._receive_propose(att, v, out)
        elif phase_tick == 3 * self.L and coord == self.pid and self.decided is None:
            v = self.proposed.get(att)
            if v is not None and len(self.acks.get(att, ())) >= self.majority:
                self.decided = v
                self.decided_attempt = att
                self.decided_tick = t
                for q in range(self.n):
                    if q != self.pid:
                        out.append((q, ("decide", v, att)))
        return out

    def _pick(self, att):
        reports = self.gathers.get(att, {})
        if len(reports) < self.majority:
            return None
        locks = sorted((r for r in reports.values() if r[0] == "lock"),
                       key=lambda r: (-r[2], r[1]))
        candidates = [r[1] for r in locks]
        candidates += sorted(r[1] for r in reports.values() if r[0] == "input")
        for v in candidates:
            ok = sum(1 for r in reports.values()
                     if r[0] == "input" or r[1] == v)
            if ok >= self.majority:
                return v
        return None

    def snapshot(self):
        return (self.lock, self.decided, self.decided_attempt)


def dls_consensus(n, f, inputs, gst, delta, horizon=None, seed=0,
                  delay_script=None, crashes=None, pre_gst_max=None) -> DlsResult:
    if 2 * f >= n:
        raise QuorumUnreachable(
            f"f={f} leaves no nonfaulty majority at n={n}")
    procs = [DlsProcess(p, n, inputs[p], delta) for p in range(n)]
    W = procs[0].W
    if horizon is None:
        first_stable = (gst + W - 1) // W
        horizon = (first_stable + f + 2) * W + delta + 1
    model = GSTModel(n=n, f=f, gst=gst, delta=delta, crashes=crashes or {},
                     pre_gst_max=pre_gst_max or max(2 * gst, 10))
    run = run_with_gst(procs, model, horizon, seed=seed,
                       delay_script=delay_script)
    decisions = {p.pid: p.decided for p in procs}
    attempts = {p.pid: p.decided_attempt for p in procs if p.decided is not None}
    proposals = sorted(set(itertools.chain.from_iterable(
        p.proposal_log for p in procs)))
    per_attempt = {}
    for att, _, v in proposals:
        per_attempt.setdefault(att, set()).add(v)
    for att, vals in per_attempt.items():
        if len(vals) > 1:  # lock coherence: one proposer, one value per attempt
            raise ModelViolation(f"attempt {att} locked two values: {vals}")
    res = DlsResult(decisions, attempts, proposals, run, horizon)
    if not res.agreement_ok():
        raise ModelViolation(f"agreement violated: {decisions}")
    if not res.validity_ok(inputs):
        raise ModelViolation(f"validity violated: {decisions} from {inputs}")
    return res
