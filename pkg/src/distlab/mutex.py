"""Shared-memory mutual exclusion: process programs, algorithms, adversary.

Processes run finite control programs over named shared registers.  A step
touches at most one register: an atomic read (branching on the value seen),
an atomic write, or an atomic test-and-set that reads, rewrites and branches
in one go.  Program counters are labeled with the region they belong to, and
every edge must follow the service cycle remainder, trying, critical, exit.

burns_lynch_system builds the one-bit-per-process algorithm on single-writer
binary flags; semaphore_system the trivial test-and-set lock; and
broken_register_system a deliberately under-provisioned two-process protocol
on one multi-writer register, shipped as prey for poised_attack, the
schedule search that hides other processes' writes behind an overwrite.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Optional

from .automata import Action, Automaton, Execution, make_automaton
from .errors import InvalidModel, ModelViolation, NotFound


class Region(Enum):
    REMAINDER = "remainder"
    TRYING = "trying"
    CRITICAL = "critical"
    EXIT = "exit"


#: legal region of a successor pc, besides staying put
NEXT_REGION = {
    Region.REMAINDER: Region.TRYING,
    Region.TRYING: Region.CRITICAL,
    Region.CRITICAL: Region.EXIT,
    Region.EXIT: Region.REMAINDER,
}


# ---------------------------------------------------------------------------
# programs

@dataclass(frozen=True)
class ReadStep:
    """Atomic read of `reg`; `next` maps every possible value to a pc."""
    reg: str
    next: Mapping


@dataclass(frozen=True)
class WriteStep:
    reg: str
    value: object
    next: int


@dataclass(frozen=True)
class TasStep:
    """Atomic read-modify-write: branch maps seen value to (new value, pc)."""
    reg: str
    branch: Mapping


@dataclass(frozen=True)
class MoveStep:
    """Register-free control move; several targets mean a free local choice.

    A remainder pc pointing at itself plus the trying protocol is the
    standard way to let a process decline to compete without stalling the
    fairness rule: its task keeps stepping, just not toward the door.
    """
    nexts: tuple


@dataclass(frozen=True)
class Register:
    name: str
    init: object = 0
    kind: str = "rw"                     # "rw" or "tas"
    writers: Optional[frozenset] = None  # None: anyone may write
    domain: tuple = (0, 1)


@dataclass(frozen=True)
class Program:
    steps: tuple
    regions: tuple
    start: int = 0


def _successor_pcs(step) -> tuple:
    if isinstance(step, ReadStep):
        return tuple(step.next.values())
    if isinstance(step, WriteStep):
        return (step.next,)
    if isinstance(step, TasStep):
        return tuple(pc for _, pc in step.branch.values())
    if isinstance(step, MoveStep):
        return step.nexts
    raise InvalidModel("unknown step type %r" % (step,))


@dataclass(frozen=True)
class SharedMemSystem:
    name: str
    n: int
    registers: tuple
    programs: tuple

    def __post_init__(self):
        if self.n < 1 or len(self.programs) != self.n:
            raise InvalidModel("need one program per process")
        by_name = {}
        for reg in self.registers:
            if reg.name in by_name:
                raise InvalidModel("duplicate register %s" % reg.name)
            if reg.kind not in ("rw", "tas"):
                raise InvalidModel("register kind must be rw or tas")
            if reg.init not in reg.domain:
                raise InvalidModel("register %s starts outside its domain" % reg.name)
            by_name[reg.name] = reg
        for pid, prog in enumerate(self.programs):
            if len(prog.steps) != len(prog.regions) or not prog.steps:
                raise InvalidModel("program %d: one region label per pc" % pid)
            if not 0 <= prog.start < len(prog.steps):
                raise InvalidModel("program %d: start pc out of range" % pid)
            for pc, step in enumerate(prog.steps):
                self._check_step(pid, prog, pc, step, by_name)

    def _check_step(self, pid, prog, pc, step, by_name):
        where = "program %d pc %d" % (pid, pc)
        if isinstance(step, (ReadStep, WriteStep, TasStep)):
            reg = by_name.get(step.reg)
            if reg is None:
                raise InvalidModel("%s: unknown register %s" % (where, step.reg))
            want = "tas" if isinstance(step, TasStep) else "rw"
            if reg.kind != want:
                raise InvalidModel("%s: %s access on %s register %s"
                                   % (where, want, reg.kind, reg.name))
            if isinstance(step, ReadStep) and set(step.next) != set(reg.domain):
                raise InvalidModel("%s: read branch must cover the domain" % where)
            if isinstance(step, TasStep):
                if set(step.branch) != set(reg.domain):
                    raise InvalidModel("%s: tas branch must cover the domain" % where)
                if any(v not in reg.domain for v, _ in step.branch.values()):
                    raise InvalidModel("%s: tas writes outside the domain" % where)
            if isinstance(step, WriteStep) and step.value not in reg.domain:
                raise InvalidModel("%s: write outside the domain" % where)
            writes = isinstance(step, (WriteStep, TasStep))
            if writes and reg.writers is not None and pid not in reg.writers:
                raise ModelViolation("%s: process %d may not write %s"
                                     % (where, pid, reg.name))
        for nxt in _successor_pcs(step):
            if not 0 <= nxt < len(prog.steps):
                raise InvalidModel("%s: successor pc %d out of range" % (where, nxt))
            here, there = prog.regions[pc], prog.regions[nxt]
            if there is not here and there is not NEXT_REGION[here]:
                raise InvalidModel("%s: illegal region move %s to %s"
                                   % (where, here.value, there.value))

    def register_index(self, name: str) -> int:
        for k, reg in enumerate(self.registers):
            if reg.name == name:
                return k
        raise InvalidModel("unknown register %s" % name)


def start_state(system: SharedMemSystem) -> tuple:
    return (tuple(p.start for p in system.programs),
            tuple(r.init for r in system.registers))


def regions_of(system: SharedMemSystem, state) -> tuple:
    pcs, _ = state
    return tuple(system.programs[pid].regions[pc] for pid, pc in enumerate(pcs))


def action_pid(action: Action) -> int:
    """Recover the process index from an adapter action name like p2.read."""
    name = action.name
    return int(name[1:name.index(".")])


def _moves(system: SharedMemSystem, state):
    """Enabled (action, successor) pairs, one bundle of candidates per process."""
    pcs, regs = state
    out = []
    for pid in range(system.n):
        prog = system.programs[pid]
        step = prog.steps[pcs[pid]]
        if isinstance(step, ReadStep):
            k = system.register_index(step.reg)
            v = regs[k]
            nxt = (_bump(pcs, pid, step.next[v]), regs)
            out.append((Action("p%d.read" % pid, (step.reg, v)), nxt))
        elif isinstance(step, WriteStep):
            k = system.register_index(step.reg)
            nxt = (_bump(pcs, pid, step.next), _store(regs, k, step.value))
            out.append((Action("p%d.write" % pid, (step.reg, step.value)), nxt))
        elif isinstance(step, TasStep):
            k = system.register_index(step.reg)
            v = regs[k]
            new, npc = step.branch[v]
            nxt = (_bump(pcs, pid, npc), _store(regs, k, new))
            out.append((Action("p%d.tas" % pid, (step.reg, v, new)), nxt))
        else:
            for target in step.nexts:
                nxt = (_bump(pcs, pid, target), regs)
                out.append((Action("p%d.move" % pid, (target,)), nxt))
    return out


def _bump(pcs, pid, pc):
    return pcs[:pid] + (pc,) + pcs[pid + 1:]


def _store(regs, k, v):
    return regs[:k] + (v,) + regs[k + 1:]


def as_automaton(system: SharedMemSystem) -> Automaton:
    """Closed-system view: every step is an output, one task per process."""
    names = {pid: set() for pid in range(system.n)}
    for pid, prog in enumerate(system.programs):
        for step in prog.steps:
            kind = {ReadStep: "read", WriteStep: "write",
                    TasStep: "tas", MoveStep: "move"}[type(step)]
            names[pid].add("p%d.%s" % (pid, kind))
    tasks = {"p%d" % pid: frozenset(names[pid]) for pid in range(system.n)}
    outputs = frozenset().union(*tasks.values())

    def try_step(state, action):
        for act, nxt in _moves(system, state):
            if act == action:
                return nxt
        return None

    def local_candidates(state):
        return [act for act, _ in _moves(system, state)]

    return make_automaton(
        name=system.name, inputs=(), outputs=outputs, internals=(),
        start_states=(start_state(system),), tasks=tasks,
        try_step=try_step, local_candidates=local_candidates)


# ---------------------------------------------------------------------------
# the two algorithms and the sacrificial fixture

def burns_lynch_system(n: int) -> SharedMemSystem:
    """One binary single-writer flag per process.

    Process i loops: lower its own flag; scan the flags of lower-numbered
    processes, restarting if any is up; raise its flag; rescan the lower
    flags, restarting if any is up; then wait until every higher flag is
    down and enter.  The exit protocol lowers the flag.  Mutual exclusion
    and deadlock freedom hold; individual processes may starve.
    """
    if n < 2:
        raise InvalidModel("the flag scan needs at least two processes")
    registers = tuple(Register("F%d" % i, init=0, kind="rw",
                               writers=frozenset([i])) for i in range(n))
    programs = []
    for i in range(n):
        lowers = list(range(i))
        highers = list(range(i + 1, n))
        a = 1
        c = a + 1 + len(lowers)
        e0 = c + 1 + len(lowers)
        f = e0 + len(highers)
        x = f + 1
        steps = [MoveStep((0, a)),
                 WriteStep("F%d" % i, 0, a + 1)]
        for k, j in enumerate(lowers):
            steps.append(ReadStep("F%d" % j, {0: a + 2 + k, 1: a}))
        steps.append(WriteStep("F%d" % i, 1, c + 1))
        for k, j in enumerate(lowers):
            steps.append(ReadStep("F%d" % j, {0: c + 2 + k, 1: a}))
        for k, j in enumerate(highers):
            steps.append(ReadStep("F%d" % j, {0: e0 + k + 1, 1: e0 + k}))
        steps.append(MoveStep((x,)))
        steps.append(WriteStep("F%d" % i, 0, 0))
        regions = ([Region.REMAINDER] + [Region.TRYING] * (f - 1)
                   + [Region.CRITICAL, Region.EXIT])
        programs.append(Program(steps=tuple(steps), regions=tuple(regions)))
    return SharedMemSystem(name="burnslynch%d" % n, n=n,
                           registers=registers, programs=tuple(programs))


def semaphore_system(n: int) -> SharedMemSystem:
    """A single two-valued test-and-set register guarding the door.

    Trying atomically grabs the register if it reads 0 and spins otherwise;
    exit clears it.  Safe and deadlock-free, but a spinning process can
    lose every race forever, which is the lockout counterexample.
    """
    if n < 1:
        raise InvalidModel("need at least one process")
    registers = (Register("sem", init=0, kind="tas", domain=(0, 1)),)
    program = Program(
        steps=(MoveStep((0, 1)),
               TasStep("sem", {0: (1, 2), 1: (1, 1)}),
               MoveStep((3,)),
               TasStep("sem", {0: (0, 0), 1: (0, 0)})),
        regions=(Region.REMAINDER, Region.TRYING, Region.CRITICAL,
                 Region.EXIT))
    return SharedMemSystem(name="semaphore%d" % n, n=n,
                           registers=registers, programs=(program,) * n)


def broken_register_system() -> SharedMemSystem:
    """Two processes sharing one multi-writer bit: read 0, claim, verify.

    The verify read cannot tell its own claim from the other's, so the
    handshake is vacuous.  Both mutual exclusion and write visibility fail;
    poised_attack demonstrates the latter mechanically.
    """
    registers = (Register("R", init=0, kind="rw", writers=None),)
    program = Program(
        steps=(MoveStep((0, 1)),
               ReadStep("R", {0: 2, 1: 1}),
               WriteStep("R", 1, 3),
               ReadStep("R", {1: 4, 0: 1}),
               MoveStep((5,)),
               WriteStep("R", 0, 0)),
        regions=(Region.REMAINDER, Region.TRYING, Region.TRYING,
                 Region.TRYING, Region.CRITICAL, Region.EXIT))
    return SharedMemSystem(name="brokenregister", n=2,
                           registers=registers, programs=(program,) * 2)


# ---------------------------------------------------------------------------
# problem statements as execution predicates

class PropertyKind(Enum):
    MUTUAL_EXCLUSION = "mutualExclusion"
    DEADLOCK_FREEDOM = "deadlockFreedom"
    NO_LOCKOUT = "noLockout"
    BOUNDED_BYPASS = "boundedBypass"


@dataclass(frozen=True)
class MutexProperty:
    kind: PropertyKind
    pid: Optional[int] = None
    bound: Optional[int] = None


def critical_count(system: SharedMemSystem, state) -> int:
    return sum(1 for r in regions_of(system, state) if r is Region.CRITICAL)


def both_critical(system: SharedMemSystem):
    def bad(state):
        return critical_count(system, state) >= 2
    return bad


def someone_trying_nobody_critical(system: SharedMemSystem):
    def pending(state):
        rs = regions_of(system, state)
        return Region.TRYING in rs and Region.CRITICAL not in rs
    return pending


def trying(system: SharedMemSystem, pid: int):
    def pending(state):
        return regions_of(system, state)[pid] is Region.TRYING
    return pending


def critical_entry(system: SharedMemSystem, pid: Optional[int] = None):
    """Edge predicate: some process (or the given one) steps into critical."""
    def goal(state, action, successor):
        before = regions_of(system, state)
        after = regions_of(system, successor)
        for q in range(system.n) if pid is None else (pid,):
            if before[q] is Region.TRYING and after[q] is Region.CRITICAL:
                return True
        return False
    return goal


def _entries(system, state, successor):
    before = regions_of(system, state)
    after = regions_of(system, successor)
    return [q for q in range(system.n)
            if before[q] is Region.TRYING and after[q] is Region.CRITICAL]


def violates(prop: MutexProperty, system: SharedMemSystem,
             ex: Execution) -> Optional[str]:
    """Why the execution witnesses a violation, or None.

    Safety kinds scan states; progress kinds only ever conclude from a
    lasso, since a finite prefix proves nothing about eventually.
    """
    states = ex.states()
    if prop.kind is PropertyKind.MUTUAL_EXCLUSION:
        for s in states:
            if critical_count(system, s) >= 2:
                return "two processes in the critical region"
        return None
    if prop.kind is PropertyKind.BOUNDED_BYPASS:
        waited = 0
        for k, (action, nxt) in enumerate(ex.steps):
            if regions_of(system, states[k])[prop.pid] is not Region.TRYING:
                waited = 0
                continue
            waited += sum(1 for q in _entries(system, states[k], nxt)
                          if q != prop.pid)
            if waited > prop.bound:
                return "bypassed %d times while trying" % waited
        # fall through: an unbounded-bypass lasso is also a lockout lasso
    if ex.lasso_start is None:
        return None
    cycle = range(ex.lasso_start, len(ex.steps))
    cycle_states = states[ex.lasso_start:-1]
    entries = [q for k in cycle for q in _entries(system, states[k], states[k + 1])]
    if prop.kind is PropertyKind.DEADLOCK_FREEDOM:
        pending = someone_trying_nobody_critical(system)
        if all(pending(s) for s in cycle_states) and not entries:
            return "trying forever with the door never used"
        return None
    # no-lockout and the lasso arm of bounded bypass
    stuck = all(regions_of(system, s)[prop.pid] is Region.TRYING
                for s in cycle_states)
    if not stuck:
        return None
    if prop.kind is PropertyKind.NO_LOCKOUT and prop.pid not in entries:
        return "process %d trying forever around the cycle" % prop.pid
    if prop.kind is PropertyKind.BOUNDED_BYPASS and any(q != prop.pid for q in entries):
        return "bypassed every lap of the cycle"
    return None


# ---------------------------------------------------------------------------
# the poised-overwrite adversary

@dataclass(frozen=True)
class AttackFragment:
    """A schedule hiding other processes' writes behind poised overwrites.

    execution: setup, hidden middle, the overwrites, observer continuation.
    twin: the same schedule with the middle removed.  view/twin_view are the
    observer's (register, value) read logs after the overwrite; the attack
    is only reported when they are equal bit for bit.
    """
    observer: int
    targets: frozenset
    poised: tuple
    hidden_writes: int
    execution: Execution
    twin: Execution
    view: tuple
    twin_view: tuple


def _writes_reg(step):
    if isinstance(step, WriteStep):
        return step.reg
    return None


def _poise_set(system, state, targets):
    """Processes sitting on a write to a target register."""
    pcs, _ = state
    out = {}
    for pid in range(system.n):
        reg = _writes_reg(system.programs[pid].steps[pcs[pid]])
        if reg in targets:
            out[pid] = reg
    return out


def _fire_write(system, state, pid):
    pcs, regs = state
    step = system.programs[pid].steps[pcs[pid]]
    k = system.register_index(step.reg)
    action = Action("p%d.write" % pid, (step.reg, step.value))
    return action, (_bump(pcs, pid, step.next), _store(regs, k, step.value))


def _observer_tail(system, state, observer, cap):
    """Deterministic solo continuation: first branch at every free choice,
    stop on returning to remainder or after cap steps.  Returns the steps
    and the observer's read view."""
    steps = []
    view = []
    cur = state
    for _ in range(cap):
        pcs, regs = cur
        prog = system.programs[observer]
        step = prog.steps[pcs[observer]]
        if isinstance(step, ReadStep):
            k = system.register_index(step.reg)
            v = regs[k]
            view.append((step.reg, v))
            nxt = (_bump(pcs, observer, step.next[v]), regs)
            steps.append((Action("p%d.read" % observer, (step.reg, v)), nxt))
        elif isinstance(step, WriteStep):
            act, nxt = _fire_write(system, cur, observer)
            steps.append((act, nxt))
        elif isinstance(step, MoveStep):
            target = step.nexts[-1] if len(step.nexts) > 1 else step.nexts[0]
            nxt = (_bump(pcs, observer, target), regs)
            steps.append((Action("p%d.move" % observer, (target,)), nxt))
        else:
            raise InvalidModel("tas access in a read/write attack")
        cur = steps[-1][1]
        if prog.regions[cur[0][observer]] is Region.REMAINDER:
            break
    return steps, tuple(view)


def poised_attack(system: SharedMemSystem, targets, observer: int = 0,
                  budget: int = 100_000, middle_cap: int = 64,
                  suffix_cap: int = 256) -> AttackFragment:
    """Search for a hiding schedule; raise NotFound when the budget runs out.

    Phase one explores interleavings until the observer (plus, if needed,
    further processes) stands poised to write every target register.  Phase
    two runs only the remaining processes, allowing writes solely to target
    registers, until at least one lands.  The poised writes then fire, and
    the observer runs alone.  The fragment is returned together with its
    middle-free twin; their observer views must match, which is the hidden
    write made concrete.  NotFound is inconclusive: the budget is a search
    bound, not a proof that no schedule exists.
    """
    if any(reg.kind != "rw" for reg in system.registers):
        raise InvalidModel("the poised adversary works on read/write registers only")
    targets = frozenset(targets)
    known = {reg.name for reg in system.registers}
    if not targets <= known:
        raise InvalidModel("unknown target register")
    if not 0 <= observer < system.n:
        raise InvalidModel("observer out of range")
    if not targets:
        raise NotFound("no target registers to hide behind")

    init = start_state(system)
    seen = {init}
    stack = [(init, ())]
    visited = 0
    while stack:
        state, path = stack.pop()
        visited += 1
        if visited > budget:
            raise NotFound("no hiding schedule within %d states" % budget)
        poised = _poise_set(system, state, targets)
        if observer in poised and set(poised.values()) == targets:
            found = _attack_from(system, state, path, poised, targets,
                                 observer, middle_cap, suffix_cap)
            if found is not None:
                return found
        for action, nxt in reversed(_moves(system, state)):
            if nxt not in seen:
                seen.add(nxt)
                stack.append((nxt, path + ((action, nxt),)))
    raise NotFound("interleavings exhausted without a hiding schedule")


def _attack_from(system, poise_state, path, poised, targets, observer,
                 middle_cap, suffix_cap):
    """Try to finish the attack from one poised configuration."""
    movers = [pid for pid in range(system.n) if pid not in poised]
    # dedup on (state, landed-a-write-yet): the same configuration is worth
    # revisiting once more if the first visit had nothing to hide
    seen = {(poise_state, False)}
    stack = [(poise_state, (), 0)]
    while stack:
        state, middle, hidden = stack.pop()
        if hidden:
            done = _finish(system, poise_state, path, middle, hidden,
                           poised, targets, observer, suffix_cap)
            if done is not None:
                return done
        if len(middle) >= middle_cap:
            continue
        for action, nxt in reversed(_moves(system, state)):
            pid = action_pid(action)
            if pid not in movers:
                continue
            wrote = 0
            if action.name.endswith(".write"):
                if action.payload[0] not in targets:
                    continue
                wrote = 1
            key = (nxt, hidden + wrote > 0)
            if key not in seen:
                seen.add(key)
                stack.append((nxt, middle + ((action, nxt),), hidden + wrote))
    return None


def _finish(system, poise_state, path, middle, hidden, poised, targets,
            observer, suffix_cap):
    """Fire the poised writes, run the observer, and compare with the twin."""
    def overwrite_then_tail(base):
        steps = []
        cur = base
        for pid in sorted(poised, key=lambda q: (q == observer, q)):
            act, cur = _fire_write(system, cur, pid)
            steps.append((act, cur))
        tail, view = _observer_tail(system, cur, observer, suffix_cap)
        return steps + tail, view

    mid_state = middle[-1][1] if middle else poise_state
    attack_steps, view = overwrite_then_tail(mid_state)
    twin_steps, twin_view = overwrite_then_tail(poise_state)
    if not any(reg in targets for reg, _ in view):
        return None
    if view != twin_view:
        raise ModelViolation("observer view differs from the hiding-free twin")
    full = Execution(start_state(system), tuple(path + middle + tuple(attack_steps)))
    twin = Execution(start_state(system), tuple(path + tuple(twin_steps)))
    return AttackFragment(
        observer=observer, targets=targets,
        poised=tuple(sorted(poised)), hidden_writes=hidden,
        execution=full, twin=twin, view=view, twin_view=twin_view)
