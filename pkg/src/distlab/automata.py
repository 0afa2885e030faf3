"""Input/output automata: signatures, composition, executions, fairness.

An automaton here is a finite description of a (possibly infinite) labelled
transition system.  Action occurrences are `Action(name, payload)` values;
the signature partitions action *names* into inputs, outputs and internals.
Inputs must be enabled in every reachable state (input-enabling); outputs
and internals are locally controlled and grouped into tasks, the unit of
fairness.

States are opaque to this module: any hashable value with a canonical form
(see canon.py) works.  Transitions are given as a `try_step` callable that
returns the successor state, or None when the action is not enabled there.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Iterable, Mapping, Optional

from .canon import canon
from .errors import ActionNotEnabled, IncompatibleSignatures, ModelViolation, UnknownAction

ENV = "env"  # actor attribution for actions nobody in the system controls


@dataclass(frozen=True)
class Action:
    name: str
    payload: Any = None

    def key(self):
        return (self.name, canon(self.payload))


@dataclass(frozen=True)
class Automaton:
    name: str
    inputs: frozenset
    outputs: frozenset
    internals: frozenset
    start_states: tuple
    tasks: Mapping[str, frozenset]
    try_step: Callable[[Any, Action], Optional[Any]]
    local_candidates: Callable[[Any], Iterable[Action]]
    owners: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        overlap = (self.inputs & self.outputs) | (self.inputs & self.internals) | (
            self.outputs & self.internals)
        if overlap:
            raise IncompatibleSignatures(
                f"{self.name}: action kinds overlap on {sorted(overlap)}")
        local = self.locally_controlled()
        covered = set()
        for task, names in self.tasks.items():
            stray = set(names) - local
            if stray:
                raise IncompatibleSignatures(
                    f"{self.name}: task {task} claims non-local actions {sorted(stray)}")
            dup = covered & set(names)
            if dup:
                raise IncompatibleSignatures(
                    f"{self.name}: actions {sorted(dup)} appear in two tasks")
            covered |= set(names)
        missing = local - covered
        if missing:
            raise IncompatibleSignatures(
                f"{self.name}: locally controlled actions {sorted(missing)} not in any task")

    def locally_controlled(self) -> frozenset:
        return self.outputs | self.internals

    def signature(self) -> frozenset:
        return self.inputs | self.outputs | self.internals

    def external(self) -> frozenset:
        return self.inputs | self.outputs

    def actor_of(self, action: Action) -> str:
        return self.owners.get(action.name, ENV)


def make_automaton(name, inputs, outputs, internals, start_states, tasks,
                   try_step, local_candidates) -> Automaton:
    """Constructor that fills in self-ownership for locally controlled actions."""
    outputs = frozenset(outputs)
    internals = frozenset(internals)
    owners = {a: name for a in outputs | internals}
    return Automaton(name, frozenset(inputs), outputs, internals,
                     tuple(start_states),
                     {t: frozenset(ns) for t, ns in tasks.items()},
                     try_step, local_candidates, owners)


def step(aut: Automaton, state, action: Action):
    """Apply one action; raise UnknownAction / ActionNotEnabled otherwise."""
    if action.name not in aut.signature():
        raise UnknownAction(f"{aut.name}: {action.name} not in signature")
    nxt = aut.try_step(state, action)
    if nxt is None:
        raise ActionNotEnabled(
            f"{aut.name}: {action.name} {canon(action.payload)} not enabled in {canon(state)}")
    return nxt


def enabled_local(aut: Automaton, state) -> list:
    """Locally controlled action occurrences enabled in `state`, canonically ordered."""
    out = []
    for act in aut.local_candidates(state):
        if aut.try_step(state, act) is not None:
            out.append(act)
    out.sort(key=lambda a: a.key())
    return out


def enabled_tasks(aut: Automaton, state) -> tuple:
    enabled_names = {a.name for a in enabled_local(aut, state)}
    return tuple(t for t in sorted(aut.tasks) if aut.tasks[t] & enabled_names)


def check_input_enabled(aut: Automaton, states, occurrences) -> None:
    """Every listed input occurrence must be enabled in every listed state."""
    for s in states:
        for act in occurrences:
            if act.name not in aut.inputs:
                raise UnknownAction(f"{act.name} is not an input of {aut.name}")
            if aut.try_step(s, act) is None:
                raise ModelViolation(
                    f"{aut.name}: input {act.name} {canon(act.payload)} "
                    f"not enabled in {canon(s)}")


# ---------------------------------------------------------------------------
# composition

def compose(components, name=None) -> Automaton:
    components = list(components)
    if not components:
        raise IncompatibleSignatures("nothing to compose")
    names = [c.name for c in components]
    if len(set(names)) != len(names):
        raise IncompatibleSignatures(f"duplicate component names: {names}")

    for i, a in enumerate(components):
        for b in components[i + 1:]:
            shared_out = a.outputs & b.outputs
            if shared_out:
                raise IncompatibleSignatures(
                    f"{a.name} and {b.name} share outputs {sorted(shared_out)}")
            leaked = (a.internals & b.signature()) | (b.internals & a.signature())
            if leaked:
                raise IncompatibleSignatures(
                    f"internal actions {sorted(leaked)} visible across "
                    f"{a.name} and {b.name}")

    outputs = frozenset().union(*(c.outputs for c in components))
    internals = frozenset().union(*(c.internals for c in components))
    inputs = frozenset().union(*(c.inputs for c in components)) - outputs

    tasks = {}
    owners = {}
    for c in components:
        for t, acts in c.tasks.items():
            tasks[f"{c.name}.{t}"] = acts
        owners.update(c.owners)

    participation = []  # per component: the action names it reacts to
    for c in components:
        participation.append(c.signature())

    def try_step(state, action: Action):
        nxt = list(state)
        hit = False
        for i, c in enumerate(components):
            if action.name not in participation[i]:
                continue
            hit = True
            res = c.try_step(state[i], action)
            if res is None:
                if action.name in c.inputs:
                    raise ModelViolation(
                        f"{c.name} refuses input {action.name} in {canon(state[i])}: "
                        "input-enabling violated")
                return None
            nxt[i] = res
        if not hit:
            return None
        return tuple(nxt)

    def local_candidates(state):
        for i, c in enumerate(components):
            for act in c.local_candidates(state[i]):
                yield act

    start = [()]
    for c in components:
        start = [s + (s0,) for s in start for s0 in c.start_states]

    return Automaton(
        name or "||".join(names),
        inputs, outputs, internals, tuple(start),
        tasks, try_step, local_candidates, owners)


# ---------------------------------------------------------------------------
# executions, traces, fairness

class Fairness(Enum):
    FAIR = "fair"
    UNFAIR = "unfair"
    INCONCLUSIVE = "fairness-inconclusive"


@dataclass(frozen=True)
class Execution:
    """Alternating state/action record: start_state, then (action, state) steps.

    `lasso_start` marks the index (into the state sequence) where a cycle
    begins; the final state must equal the state at that index.  None means
    the record is a plain finite prefix.
    """
    start_state: Any
    steps: tuple = ()
    lasso_start: Optional[int] = None

    def states(self) -> list:
        return [self.start_state] + [s for _, s in self.steps]

    def actions(self) -> list:
        return [a for a, _ in self.steps]

    def __post_init__(self):
        if self.lasso_start is not None:
            states = self.states()
            if not (0 <= self.lasso_start < len(states) - 1):
                raise ValueError(f"lasso_start {self.lasso_start} out of range")
            if states[self.lasso_start] != states[-1]:
                raise ValueError("lasso does not close: end state differs from lasso_start state")


def validate(aut: Automaton, ex: Execution) -> None:
    """Re-run every transition through step(); raises if any is illegal."""
    if ex.start_state not in aut.start_states:
        raise ModelViolation(f"{aut.name}: execution does not begin in a start state")
    cur = ex.start_state
    for action, nxt in ex.steps:
        got = step(aut, cur, action)
        if got != nxt:
            raise ModelViolation(
                f"{aut.name}: recorded successor {canon(nxt)} != computed {canon(got)}")
        cur = nxt


def trace_of(aut: Automaton, ex: Execution) -> tuple:
    ext = aut.external()
    return tuple(a for a in ex.actions() if a.name in ext)


def task_of(aut: Automaton, action: Action) -> Optional[str]:
    for t, names in aut.tasks.items():
        if action.name in names:
            return t
    return None


def fairness_verdict(aut: Automaton, ex: Execution) -> Fairness:
    """Task fairness at finite scale.

    Quiescent end (no task enabled) => FAIR.  A lasso is FAIR iff every task
    enabled at every state around the cycle takes at least one step inside
    the cycle, UNFAIR otherwise.  A plain prefix that ends with work still
    enabled is neither: INCONCLUSIVE.
    """
    states = ex.states()
    if ex.lasso_start is None:
        if enabled_tasks(aut, states[-1]):
            return Fairness.INCONCLUSIVE
        return Fairness.FAIR
    cycle_states = states[ex.lasso_start:-1]
    cycle_actions = [a for a, _ in ex.steps[ex.lasso_start:]]
    if not cycle_actions:
        # degenerate lasso: a quiescent state repeated
        return Fairness.FAIR if not enabled_tasks(aut, states[-1]) else Fairness.UNFAIR
    always_enabled = None
    for s in cycle_states:
        here = set(enabled_tasks(aut, s))
        always_enabled = here if always_enabled is None else (always_enabled & here)
    stepped = {task_of(aut, a) for a in cycle_actions}
    return Fairness.FAIR if always_enabled <= stepped else Fairness.UNFAIR


def is_fair(aut: Automaton, ex: Execution) -> bool:
    return fairness_verdict(aut, ex) is Fairness.FAIR


def solves(traces, predicate) -> bool:
    """Trace-set inclusion: every trace satisfies the problem predicate."""
    return all(predicate(t) for t in traces)


def solve_verdicts(aut: Automaton, executions, predicate) -> dict:
    """Report both readings of 'solves': over all sampled traces, and over
    the fair ones only.  Scenario outputs carry both fields."""
    all_traces = [trace_of(aut, ex) for ex in executions]
    fair_traces = [trace_of(aut, ex) for ex in executions if is_fair(aut, ex)]
    return {
        "all": solves(all_traces, predicate),
        "fair": solves(fair_traces, predicate),
        "sampled": len(all_traces),
        "fair_count": len(fair_traces),
    }


def project_execution(composed: Automaton, components, index: int,
                      ex: Execution) -> Execution:
    """Project an execution of a composition onto one component."""
    comp = components[index]
    sig = comp.signature()
    start = ex.start_state[index]
    steps = []
    cur = start
    for action, state in ex.steps:
        if action.name in sig:
            steps.append((action, state[index]))
            cur = state[index]
        else:
            if state[index] != cur:
                raise ModelViolation(
                    f"{comp.name} changed state on foreign action {action.name}")
    return Execution(start, tuple(steps))


# ---------------------------------------------------------------------------
# reachable-graph isomorphism (used to state composition laws)

def reachable_graph(aut: Automaton, cap: int):
    """Explore via locally controlled actions; returns (states, edges).

    edges: state -> {action key -> (action, successor)}.  Raises if `cap`
    states are exceeded.  Only meaningful for closed systems (no inputs
    driven here).
    """
    from .errors import CapExceeded
    seen = {}
    order = []
    frontier = list(aut.start_states)
    for s in frontier:
        if s not in seen:
            seen[s] = len(seen)
            order.append(s)
    edges = {}
    i = 0
    while i < len(order):
        s = order[i]
        i += 1
        out = {}
        for act in enabled_local(aut, s):
            nxt = aut.try_step(s, act)
            out[act.key()] = (act, nxt)
            if nxt not in seen:
                if len(seen) >= cap:
                    raise CapExceeded(f"{aut.name}: more than {cap} reachable states")
                seen[nxt] = len(seen)
                order.append(nxt)
        edges[s] = out
    return order, edges


def graph_isomorphic(a: Automaton, b: Automaton, cap: int = 10_000) -> bool:
    """Reachable labelled-transition-graph isomorphism.

    Transitions are deterministic per action occurrence, so once start
    states are matched the bijection is forced; we just walk both graphs in
    lock step and compare enabled-action sets.
    """
    if a.external() != b.external():
        return False
    if len(a.start_states) != len(b.start_states):
        return False
    _, ea = reachable_graph(a, cap)
    _, eb = reachable_graph(b, cap)

    import itertools
    for perm in itertools.permutations(range(len(b.start_states))):
        pairing = {a.start_states[i]: b.start_states[perm[i]]
                   for i in range(len(a.start_states))}
        if _lockstep_match(ea, eb, pairing):
            return True
    return False


def _lockstep_match(ea, eb, pairing) -> bool:
    mapped = dict(pairing)
    queue = list(pairing.items())
    while queue:
        sa, sb = queue.pop()
        outa, outb = ea[sa], eb[sb]
        if set(outa) != set(outb):
            return False
        for key, (_, na) in outa.items():
            nb = outb[key][1]
            if na in mapped:
                if mapped[na] != nb:
                    return False
            else:
                mapped[na] = nb
                queue.append((na, nb))
    return True
