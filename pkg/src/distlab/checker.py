"""Exhaustive finite-instance analysis: safety, fair progress, valence.

Everything here works on an explorable system: an object with `initial`
(a tuple of start states), `moves(state)` returning (actor, action,
successor) triples, `obligations(state)` naming the fairness obligations
active in a state, and `discharged(state, actor, action)` naming the
obligations that taking the edge satisfies.  `decisions(state)` returns
the set of values decided in a configuration, for the valence analysis;
systems without a decision concept return the empty set.

Automaton-backed systems get all of this from tasks (an obligation is an
enabled task, discharged by any of its actions); protocol graphs use
pending messages and per-process step obligations.

The fair-cycle search rests on one fact about a strongly connected
component S: some cycle through S satisfies the lasso fairness rule if and
only if every obligation active at all states of S is discharged by some
edge inside S.  Necessity: an obligation active everywhere and never
discharged is active throughout any cycle and never acts.  Sufficiency: the
grand tour visiting every state and every required discharge edge of S is
itself a cycle, and any obligation it carries throughout is discharged on
it.  The witness executions returned here are exactly such tours.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Optional

from .automata import Automaton, Execution, enabled_local, enabled_tasks, task_of
from .canon import canon
from .errors import CapExceeded, ModelViolation
from .mutex import SharedMemSystem, as_automaton


# ---------------------------------------------------------------------------
# explorable views

class AutomatonGraph:
    """Closed automaton as an explorable system (tasks are obligations)."""

    def __init__(self, aut: Automaton):
        self.aut = aut
        self.initial = tuple(aut.start_states)

    def _actor(self, action) -> str:
        head = action.name.split(".", 1)[0]
        if head.startswith("p") and head[1:].isdigit():
            return head
        return self.aut.name

    def moves(self, state):
        out = []
        for act in enabled_local(self.aut, state):
            out.append((self._actor(act), act, self.aut.try_step(state, act)))
        out.sort(key=lambda m: (m[0], m[1].key()))
        return out

    def obligations(self, state):
        return frozenset(enabled_tasks(self.aut, state))

    def discharged(self, state, actor, action):
        task = task_of(self.aut, action)
        return frozenset() if task is None else frozenset([task])

    def decisions(self, state):
        return frozenset()


def system_graph(system: SharedMemSystem) -> AutomatonGraph:
    return AutomatonGraph(as_automaton(system))


# ---------------------------------------------------------------------------
# results

@dataclass(frozen=True)
class Verified:
    states: int


@dataclass(frozen=True)
class Counterexample:
    """Shortest path from a start state into a bad state.

    steps are (actor, action, successor) triples; length-0 means a start
    state is already bad.
    """
    start_state: Any
    steps: tuple
    bad_state: Any

    def __len__(self):
        return len(self.steps)


@dataclass(frozen=True)
class Live:
    states: int


@dataclass(frozen=True)
class Lasso:
    """A fair lasso counterexample: prefix plus cycle, or a quiescent run.

    steps are (actor, action, successor) triples.  lasso_start indexes the
    state sequence where the cycle closes; None means the run simply halts
    with nothing pending, the degenerate fair non-progress shape.
    """
    start_state: Any
    steps: tuple
    lasso_start: Optional[int]


def as_execution(result) -> Execution:
    """Rebuild a core execution from a checker result for replay."""
    steps = tuple((action, state) for _, action, state in result.steps)
    lasso = getattr(result, "lasso_start", None)
    return Execution(result.start_state, steps, lasso_start=lasso)


# ---------------------------------------------------------------------------
# reachability

@dataclass(frozen=True)
class Reach:
    nodes: tuple
    moves: dict
    initial: tuple


def materialize(explorable, cap: int) -> Reach:
    """Breadth-first closure with memoized, deterministically ordered moves.

    Explorables that guarantee a deterministic move order themselves say so
    with a true `presorted` attribute and skip the canonical re-sort.
    """
    presorted = getattr(explorable, "presorted", False)
    seen = set()
    order = []
    initial = []
    for s in explorable.initial:
        if s not in seen:
            seen.add(s)
            order.append(s)
            initial.append(s)
    moves = {}
    i = 0
    while i < len(order):
        s = order[i]
        i += 1
        raw = explorable.moves(s)
        out = tuple(raw) if presorted else tuple(
            sorted(raw, key=lambda m: (m[0], m[1].key())))
        moves[s] = out
        for _, _, t in out:
            if t not in seen:
                if len(seen) >= cap:
                    raise CapExceeded("more than %d reachable states" % cap)
                seen.add(t)
                order.append(t)
    return Reach(nodes=tuple(order), moves=moves, initial=tuple(initial))


def explore_safety(explorable, bad: Callable[[Any], bool], cap: int,
                   shards: int = 1):
    """BFS for the shortest path into `bad`; Verified carries the exact count.

    The frontier may be split into `shards` buckets that are expanded
    independently within a layer; discoveries are merged with a canonical
    tie-break on (parent, actor, action), so the verdict, the counterexample
    and the state count do not depend on the shard count.
    """
    if shards < 1:
        raise ValueError("shards must be positive")
    ckey = _canon_cache()
    parents = {}
    layer = []
    for s in explorable.initial:
        if s not in parents:
            parents[s] = None
            layer.append(s)
    layer.sort(key=ckey)
    start_bads = [s for s in layer if bad(s)]
    if start_bads:
        worst = min(start_bads, key=ckey)
        return Counterexample(start_state=worst, steps=(), bad_state=worst)
    while layer:
        proposals = {}
        for bucket in (layer[k::shards] for k in range(shards)):
            for s in bucket:
                for actor, action, t in explorable.moves(s):
                    if t in parents:
                        continue
                    proposals.setdefault(t, []).append((s, actor, action))
        fresh = sorted(proposals, key=ckey)
        if len(parents) + len(fresh) > cap:
            raise CapExceeded("more than %d reachable states" % cap)
        for t in fresh:
            parents[t] = min(proposals[t],
                             key=lambda c: (ckey(c[0]), c[1], c[2].key()))
        hits = [t for t in fresh if bad(t)]
        if hits:
            traces = [_rebuild(parents, t) for t in hits]
            best = min(traces, key=lambda tr: [(a, act.key()) for a, act, _ in tr[1]])
            start, steps = best
            return Counterexample(start_state=start, steps=tuple(steps),
                                  bad_state=steps[-1][2])
        layer = fresh
    return Verified(states=len(parents))


def _canon_cache():
    cache = {}

    def key(state):
        got = cache.get(state)
        if got is None:
            got = canon(state)
            cache[state] = got
        return got
    return key


def _rebuild(parents, t):
    steps = []
    cur = t
    while parents[cur] is not None:
        s, actor, action = parents[cur]
        steps.append((actor, action, cur))
        cur = s
    steps.reverse()
    return cur, steps


# ---------------------------------------------------------------------------
# strongly connected components (iterative Tarjan)

def _sccs(nodes, succ):
    index = {}
    low = {}
    onstack = set()
    stack = []
    out = []
    counter = 0
    for root in nodes:
        if root in index:
            continue
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        onstack.add(root)
        work = [(root, iter(succ(root)))]
        while work:
            v, it = work[-1]
            descended = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    onstack.add(w)
                    work.append((w, iter(succ(w))))
                    descended = True
                    break
                if w in onstack:
                    low[v] = min(low[v], index[w])
            if descended:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    onstack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                out.append(comp)
    return out


# ---------------------------------------------------------------------------
# fair-cycle progress checking

def check_progress(explorable, pending: Callable[[Any], bool], goal,
                   cap: int = 200_000):
    """Live, or a fair lasso on which pending holds and goal never fires.

    goal is an edge predicate (state, action, successor) -> bool.  The
    search restricts to the subgraph where pending holds with goal edges
    deleted, then looks for a strongly connected component admitting a fair
    cycle; the returned lasso is the grand tour of that component, reached
    by a shortest prefix from a start state.
    """
    reach = materialize(explorable, cap)
    members = {s for s in reach.nodes if pending(s)}

    def allowed(s):
        return [(actor, action, t) for actor, action, t in reach.moves[s]
                if t in members and not goal(s, action, t)]

    comp = _fair_component(explorable, [s for s in reach.nodes if s in members],
                           allowed)
    if comp is None:
        return Live(states=len(reach.nodes))
    return _lasso_to(reach, explorable, comp, allowed)


def _fair_component(explorable, nodes, allowed):
    """First SCC (in Tarjan order) that admits a fair cycle, or None."""
    for comp in _sccs(nodes, lambda s: [t for _, _, t in allowed(s)]):
        comp_set = set(comp)
        edges = [(s, actor, action, t)
                 for s in comp for actor, action, t in allowed(s)
                 if t in comp_set]
        if not edges:
            continue
        always = None
        for s in comp:
            obs = explorable.obligations(s)
            always = obs if always is None else always & obs
        satisfiable = True
        for o in sorted(always, key=canon):
            if not any(o in explorable.discharged(s, actor, action)
                       for s, actor, action, _ in edges):
                satisfiable = False
                break
        if satisfiable:
            return comp
    return None


def _path(src, dsts, allowed):
    """Shortest walk from src to any state in dsts using allowed edges."""
    if src in dsts:
        return src, []
    seen = {src: None}
    queue = [src]
    qi = 0
    while qi < len(queue):
        s = queue[qi]
        qi += 1
        for actor, action, t in allowed(s):
            if t in seen:
                continue
            seen[t] = (s, actor, action)
            if t in dsts:
                steps = []
                cur = t
                while seen[cur] is not None:
                    ps, pa, pact = seen[cur]
                    steps.append((pa, pact, cur))
                    cur = ps
                steps.reverse()
                return t, steps
            queue.append(t)
    raise ModelViolation("component is not strongly connected")


def _lasso_to(reach, explorable, comp, allowed):
    """Prefix to the component plus a grand tour of it."""
    comp_sorted = sorted(comp, key=canon)
    comp_set = set(comp)
    anchor = comp_sorted[0]

    def full_moves(s):
        return reach.moves[s]

    start, prefix = _prefix_to(reach, {anchor}, full_moves)
    always = None
    for s in comp:
        obs = explorable.obligations(s)
        always = obs if always is None else always & obs
    edges = [(s, actor, action, t)
             for s in comp for actor, action, t in allowed(s) if t in comp_set]
    required = []
    for o in sorted(always, key=canon):
        for s, actor, action, t in edges:
            if o in explorable.discharged(s, actor, action):
                required.append((s, actor, action, t))
                break
    cycle = []
    cur = anchor
    for waypoint in comp_sorted[1:]:
        cur, walk = _path(cur, {waypoint}, allowed)
        cycle.extend(walk)
    for s, actor, action, t in required:
        cur, walk = _path(cur, {s}, allowed)
        cycle.extend(walk)
        cycle.append((actor, action, t))
        cur = t
    cur, walk = _path(cur, {anchor}, allowed)
    cycle.extend(walk)
    if not cycle:
        # single state whose only fair behaviour is a self-loop
        s, actor, action, t = edges[0]
        cycle = [(actor, action, t)]
    return Lasso(start_state=start, steps=tuple(prefix) + tuple(cycle),
                 lasso_start=len(prefix))


def _prefix_to(reach, targets, moves, sources=None):
    """Shortest path from a start state to any target over the full graph."""
    seen = {}
    queue = []
    for s in sources if sources is not None else reach.initial:
        if s not in seen:
            seen[s] = None
            queue.append(s)
    for s in queue:
        if s in targets:
            return s, []
    qi = 0
    while qi < len(queue):
        s = queue[qi]
        qi += 1
        for actor, action, t in moves(s):
            if t in seen:
                continue
            seen[t] = (s, actor, action)
            if t in targets:
                steps = []
                cur = t
                while seen[cur] is not None:
                    ps, pa, pact = seen[cur]
                    steps.append((pa, pact, cur))
                    cur = ps
                steps.reverse()
                root = cur
                return root, steps
            queue.append(t)
    raise ModelViolation("target not reachable from the start states")


# ---------------------------------------------------------------------------
# valence analysis

class Valence(Enum):
    ZERO = "zeroValent"
    ONE = "oneValent"
    BIVALENT = "bivalent"
    DEAD = "undecidedDead"


def _tag(values: frozenset) -> Valence:
    if not values:
        return Valence.DEAD
    if len(values) > 1:
        return Valence.BIVALENT
    return Valence.ZERO if next(iter(values)) == 0 else Valence.ONE


@dataclass(frozen=True)
class ValenceMap:
    reach: Reach
    reachable_decisions: dict
    tags: dict

    def of(self, config) -> Valence:
        return self.tags[config]


def valence_map(explorable, cap: int = 200_000,
                reach: Optional[Reach] = None) -> ValenceMap:
    """Reachable-decision sets for every configuration, by one SCC pass.

    Tarjan emits components children-first, so each component's decision
    set is its own decisions plus the union over already-finished
    successors.
    """
    if reach is None:
        reach = materialize(explorable, cap)
    comp_of = {}
    comps = _sccs(list(reach.nodes),
                  lambda s: [t for _, _, t in reach.moves[s]])
    for k, comp in enumerate(comps):
        for s in comp:
            comp_of[s] = k
    decided = [frozenset() for _ in comps]
    for k, comp in enumerate(comps):
        acc = set()
        for s in comp:
            acc |= explorable.decisions(s)
            for _, _, t in reach.moves[s]:
                j = comp_of[t]
                if j != k:
                    acc |= decided[j]
        decided[k] = frozenset(acc)
    sets = {s: decided[comp_of[s]] for s in reach.nodes}
    tags = {s: _tag(v) for s, v in sets.items()}
    return ValenceMap(reach=reach, reachable_decisions=sets, tags=tags)


def valence(config, explorable, cap: int = 200_000) -> Valence:
    vm = valence_map(explorable, cap)
    if config not in vm.tags:
        raise ModelViolation("configuration not reachable from the graph's starts")
    return vm.of(config)


def check_valence_monotonicity(explorable, cap: int = 200_000,
                               vm: Optional[ValenceMap] = None) -> dict:
    """Assert the edge-wise valence laws across the whole graph.

    Successors can only lose reachable decisions; a settled configuration
    stays settled (its successors are settled the same way or dead, dead
    arising only in protocols whose runs can wedge undecided); a bivalent
    configuration keeps both options open among its successors, jointly if
    not in a single successor.
    """
    if vm is None:
        vm = valence_map(explorable, cap)
    stats = {v: 0 for v in Valence}
    for s in vm.reach.nodes:
        stats[vm.tags[s]] += 1
        here = vm.reachable_decisions[s]
        succ_sets = [vm.reachable_decisions[t] for _, _, t in vm.reach.moves[s]]
        for ss in succ_sets:
            if not ss <= here:
                raise ModelViolation("successor gained a decision value")
        if vm.tags[s] in (Valence.ZERO, Valence.ONE):
            want = here
            for ss in succ_sets:
                if ss and ss != want:
                    raise ModelViolation("settled configuration flipped")
        if vm.tags[s] is Valence.BIVALENT and succ_sets:
            joint = frozenset().union(*succ_sets) | explorable.decisions(s)
            if not here <= joint:
                raise ModelViolation("bivalent configuration lost an option")
    return {tag.value: n for tag, n in stats.items()}


# ---------------------------------------------------------------------------
# the FLP witness search

@dataclass(frozen=True)
class NonDecidingRun:
    """A fair run in which no process ever decides.

    shape "cycle": run.lasso_start marks a fair cycle of undecided (where
    possible, bivalent) configurations.  shape "quiescent": the run halts
    undecided with nothing pending, typically after a crash; lasso_start is
    None.  bivalent_init reports whether the run starts at a bivalent
    initial configuration.
    """
    shape: str
    run: Lasso
    bivalent_init: bool


@dataclass(frozen=True)
class AllRunsDecide:
    """Every fair run decides; carries the follow-up violation search.

    For a protocol claiming agreement and one-crash tolerance this verdict
    signals a modeling bug, so the checker immediately hunts for the
    matching safety violation; `violation` is a path to a configuration
    with two distinct decided values, or None if agreement also holds.
    """
    states: int
    violation: Optional[Counterexample]


def flp_witness(explorable, cap: int = 200_000,
                vm: Optional[ValenceMap] = None):
    """Find a fair non-deciding run, preferring a bivalent cycle.

    Searches the undecided subgraph for a component admitting a fair cycle
    (components of bivalent configurations first), then for quiescent
    undecided halting configurations, and only then concedes AllRunsDecide.
    """
    if vm is None:
        vm = valence_map(explorable, cap)
    reach = vm.reach
    undecided = {s for s in reach.nodes if not explorable.decisions(s)}

    def allowed(s):
        return [(actor, action, t) for actor, action, t in reach.moves[s]
                if t in undecided]

    nodes = [s for s in reach.nodes if s in undecided]
    bivalent_nodes = [s for s in nodes if vm.tags[s] is Valence.BIVALENT]

    def bivalent_allowed(s):
        return [(actor, action, t) for actor, action, t in allowed(s)
                if vm.tags[t] is Valence.BIVALENT]

    comp = _fair_component(explorable, bivalent_nodes, bivalent_allowed)
    picked_allowed = bivalent_allowed
    if comp is None:
        comp = _fair_component(explorable, nodes, allowed)
        picked_allowed = allowed
    if comp is not None:
        lasso = _lasso_to(reach, explorable, comp, picked_allowed)
        return NonDecidingRun(
            shape="cycle", run=lasso,
            bivalent_init=vm.tags[lasso.start_state] is Valence.BIVALENT)
    wedged = {s for s in nodes if not reach.moves[s]}
    if wedged:
        lasso = _wedged_run(reach, vm, wedged)
        return NonDecidingRun(
            shape="quiescent", run=lasso,
            bivalent_init=vm.tags[lasso.start_state] is Valence.BIVALENT)
    violation = explore_safety(
        _ReachView(reach), lambda s: len(explorable.decisions(s)) > 1, cap)
    return AllRunsDecide(
        states=len(reach.nodes),
        violation=violation if isinstance(violation, Counterexample) else None)


class _ReachView:
    """Explore an already materialized graph without regenerating moves."""

    presorted = True

    def __init__(self, reach: Reach):
        self.initial = reach.initial
        self._moves = reach.moves

    def moves(self, s):
        return self._moves[s]


def _wedged_run(reach, vm, wedged):
    """Shortest run into a wedged configuration, from a bivalent start if any."""
    bivalent_starts = [s for s in reach.initial
                       if vm.tags[s] is Valence.BIVALENT]

    def moves(s):
        return reach.moves[s]

    if bivalent_starts:
        try:
            start, steps = _prefix_to(reach, wedged, moves,
                                      sources=bivalent_starts)
            return Lasso(start_state=start, steps=tuple(steps), lasso_start=None)
        except ModelViolation:
            pass
    start, steps = _prefix_to(reach, wedged, moves)
    return Lasso(start_state=start, steps=tuple(steps), lasso_start=None)
