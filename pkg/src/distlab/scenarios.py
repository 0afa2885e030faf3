"""Declarative experiment kinds: schemas, runners and replayable traces.

A scenario file is JSON of the shape

    {"version": 1, "kind": "floodmin", "params": {"n": 3, "f": 1, "k": 1},
     "seeds": [0, 1, 2], "output": "smoke"}

with "seeds" either a list of integers or the string "exhaustive" for kinds
that can enumerate their whole adversary space.  Unknown fields anywhere
are rejected, a typo should fail loudly rather than silently run defaults.

Every kind's runner is a pure function of (params, seed); all randomness
flows from the seed, so a failure trace replays bit for bit.  Trace files
carry directive lines (#version, #kind, #params, #seed, #verdict) before
the usual `step,actor,action,payload,virtualTime` header, and fair-cycle
counterexamples mark where their loop begins with `#lasso-start`.
"""

import hashlib
import itertools
import json
from dataclasses import dataclass, field
from random import Random
from typing import Any, Callable, Mapping, Optional

from . import SCENARIO_VERSION, TRACE_FORMAT_VERSION
from .checker import (
    Live,
    Verified,
    check_progress,
    explore_safety,
    system_graph,
)
from .clocksync import (
    ClockModel,
    corner_skews,
    random_delays,
    shift_witness,
    skew_bound,
    sync_run,
)
from .consensus import (
    ApproxResult,
    approx_async,
    approx_sync,
    dls_consensus,
    flood_min,
    flood_min_fast,
    floodmin_rounds,
    iter_crash_scripts,
)
from .consistency import (
    Linearizable,
    PartitionScenario,
    cap_scenario,
    history_to_csv,
    lin_check,
    operations,
    register_run,
    two_vs_one,
)
from .errors import (
    ModelViolation,
    NotFound,
    ParseError,
    SchemaViolation,
    UnknownKind,
    VersionMismatch,
    TraceDiverged,
)
from .harness import CrashEntry, LOG_HEADER, delay_rules, format_log_line
from .mutex import (
    broken_register_system,
    burns_lynch_system,
    both_critical,
    critical_entry,
    poised_attack,
    semaphore_system,
    someone_trying_nobody_critical,
    trying,
)

_REQUIRED = object()
TOLERANCE = 1e-9


# ---------------------------------------------------------------------------
# registry plumbing

@dataclass(frozen=True)
class Param:
    types: tuple
    default: Any = _REQUIRED
    doc: str = ""


@dataclass(frozen=True)
class Kind:
    name: str
    doc: str
    schema: Mapping[str, Param]
    run: Callable                       # (params, seed) -> Outcome
    exhaustive: bool = False            # accepts seeds = "exhaustive"
    check: Optional[Callable] = None    # cross-parameter validation


@dataclass
class Outcome:
    verdict: str                        # "pass" | "fail"
    metrics: dict
    trace: Optional[tuple] = None       # log lines, failures only
    artifacts: Mapping[str, str] = field(default_factory=dict)


def validate_params(kind: Kind, raw: Mapping) -> dict:
    for name in raw:
        if name not in kind.schema:
            raise SchemaViolation(
                f"kind {kind.name}: unknown parameter {name!r} "
                f"(takes {sorted(kind.schema)})")
    params = {}
    for name, spec in kind.schema.items():
        if name in raw:
            value = raw[name]
        elif spec.default is _REQUIRED:
            raise SchemaViolation(f"kind {kind.name}: missing parameter {name!r}")
        else:
            value = spec.default
        if isinstance(value, bool) and bool not in spec.types:
            raise SchemaViolation(
                f"kind {kind.name}: parameter {name!r} must not be a bool")
        if not isinstance(value, spec.types):
            raise SchemaViolation(
                f"kind {kind.name}: parameter {name!r} has type "
                f"{type(value).__name__}, wants "
                f"{'/'.join(t.__name__ for t in spec.types)}")
        params[name] = value
    if kind.check is not None:
        kind.check(params)
    return params


def params_hash(params: Mapping) -> str:
    blob = json.dumps(params, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def format_metrics(metrics: Mapping) -> str:
    parts = []
    for key in sorted(metrics):
        value = metrics[key]
        if isinstance(value, float):
            value = format(value, ".9g")
        parts.append(f"{key}={value}")
    return ";".join(parts)


# ---------------------------------------------------------------------------
# scenario files

@dataclass(frozen=True)
class Scenario:
    kind: str
    params: dict
    seeds: Any          # tuple of ints, or the string "exhaustive"
    output: str         # file-name prefix for traces and artifacts


def parse_scenario(text: str, where: str = "<scenario>") -> Scenario:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(
            f"{where}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise SchemaViolation(f"{where}: scenario must be a JSON object")
    allowed = {"version", "kind", "params", "seeds", "output"}
    unknown = set(doc) - allowed
    if unknown:
        raise SchemaViolation(f"{where}: unknown fields {sorted(unknown)}")
    for required in ("version", "kind", "params", "seeds"):
        if required not in doc:
            raise SchemaViolation(f"{where}: missing field {required!r}")
    if doc["version"] != SCENARIO_VERSION:
        raise VersionMismatch(
            f"{where}: scenario version {doc['version']!r}, "
            f"this tool reads {SCENARIO_VERSION}")
    kind = lookup(doc["kind"])
    if not isinstance(doc["params"], dict):
        raise SchemaViolation(f"{where}: params must be an object")
    params = validate_params(kind, doc["params"])
    seeds = doc["seeds"]
    if seeds == "exhaustive":
        if not kind.exhaustive:
            raise SchemaViolation(
                f"{where}: kind {kind.name} has no exhaustive mode")
    elif isinstance(seeds, list) and seeds and all(
            isinstance(s, int) and not isinstance(s, bool) for s in seeds):
        seeds = tuple(seeds)
    else:
        raise SchemaViolation(
            f"{where}: seeds must be a nonempty list of integers "
            f"or \"exhaustive\"")
    output = doc.get("output", doc["kind"])
    if not isinstance(output, str) or not output or "/" in output:
        raise SchemaViolation(f"{where}: output must be a bare name prefix")
    return Scenario(doc["kind"], params, seeds, output)


def load_scenario(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario(fh.read(), where=str(path))


def lookup(name) -> Kind:
    kind = REGISTRY.get(name)
    if kind is None:
        raise UnknownKind(f"no scenario kind {name!r}; "
                          f"known: {', '.join(REGISTRY)}")
    return kind


def list_kinds() -> dict:
    """Registry dump: kind -> doc, exhaustive flag, parameter table."""
    out = {}
    for name, kind in REGISTRY.items():
        out[name] = {
            "doc": kind.doc,
            "exhaustive": kind.exhaustive,
            "params": {
                p: {"types": "/".join(t.__name__ for t in spec.types),
                    "required": spec.default is _REQUIRED,
                    "default": None if spec.default is _REQUIRED
                    else spec.default,
                    "doc": spec.doc}
                for p, spec in kind.schema.items()},
        }
    return out


def seeds_of(scenario: Scenario) -> tuple:
    """The (scenario, seed) fan-out; exhaustive mode is the one seed None."""
    if scenario.seeds == "exhaustive":
        return (None,)
    return tuple(scenario.seeds)


def run_scenario(scenario: Scenario, seed) -> Outcome:
    return lookup(scenario.kind).run(scenario.params, seed)


# ---------------------------------------------------------------------------
# trace files

def seed_token(seed) -> str:
    return "exhaustive" if seed is None else str(seed)


def render_trace(kind: str, phash: str, seed, verdict: str, lines) -> str:
    head = [f"#version {TRACE_FORMAT_VERSION}",
            f"#kind {kind}",
            f"#params {phash}",
            f"#seed {seed_token(seed)}",
            f"#verdict {verdict}",
            LOG_HEADER]
    return "\n".join(head + list(lines)) + "\n"


@dataclass(frozen=True)
class TraceFile:
    kind: str
    phash: str
    seed: Optional[int]
    verdict: str
    lines: tuple


def parse_trace(text: str, where: str = "<trace>") -> TraceFile:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("#version "):
        raise ParseError(f"{where}:1:1: expected a #version directive")
    version = lines[0].split(" ", 1)[1]
    if version != str(TRACE_FORMAT_VERSION):
        raise VersionMismatch(
            f"{where}: trace version {version}, this tool reads "
            f"{TRACE_FORMAT_VERSION}")
    fields = {}
    body_at = None
    for i, line in enumerate(lines[1:], start=2):
        if line == LOG_HEADER:
            body_at = i
            break
        if not line.startswith("#"):
            raise ParseError(f"{where}:{i}:1: expected directive or header")
        name, _, value = line[1:].partition(" ")
        if name not in ("kind", "params", "seed", "verdict"):
            raise SchemaViolation(f"{where}:{i}: unknown directive #{name}")
        fields[name] = value
    if body_at is None:
        raise SchemaViolation(f"{where}: no {LOG_HEADER!r} header line")
    missing = {"kind", "params", "seed", "verdict"} - set(fields)
    if missing:
        raise SchemaViolation(f"{where}: missing directives {sorted(missing)}")
    seed = None if fields["seed"] == "exhaustive" else int(fields["seed"])
    return TraceFile(fields["kind"], fields["params"], seed,
                     fields["verdict"], tuple(lines[body_at:]))


def replay(trace_text: str, scenario: Scenario, where: str = "<trace>"):
    """Re-execute a recorded failure and insist on the identical outcome.

    Returns (TraceFile, Outcome) when the rerun reproduces the trace lines
    and the verdict; any difference raises TraceDiverged, which means
    nondeterminism crept in somewhere and should be treated as a bug.
    """
    tf = parse_trace(trace_text, where=where)
    if tf.kind != scenario.kind:
        raise TraceDiverged(
            f"trace was recorded by kind {tf.kind}, scenario runs "
            f"{scenario.kind}")
    phash = params_hash(scenario.params)
    if tf.phash != phash:
        raise TraceDiverged(
            f"trace params-hash {tf.phash} does not match the scenario's "
            f"{phash}")
    if tf.seed is None and scenario.seeds != "exhaustive":
        raise TraceDiverged("trace is exhaustive, scenario is seeded")
    outcome = run_scenario(scenario, tf.seed)
    got = tuple(outcome.trace or ())
    if got != tf.lines:
        for i, (a, b) in enumerate(zip(tf.lines, got)):
            if a != b:
                raise TraceDiverged(
                    f"step {i}: recorded {a!r}, replay produced {b!r}")
        raise TraceDiverged(
            f"recorded {len(tf.lines)} trace lines, replay produced "
            f"{len(got)}")
    if outcome.verdict != tf.verdict:
        raise TraceDiverged(
            f"recorded verdict {tf.verdict}, replay says {outcome.verdict}")
    return tf, outcome


# ---------------------------------------------------------------------------
# shared trace builders

def _steps_trace(result) -> tuple:
    """Checker counterexamples and lassos in the core log format."""
    lines = [format_log_line(i, actor, action.name, action.payload, i)
             for i, (actor, action, _) in enumerate(result.steps)]
    start = getattr(result, "lasso_start", None)
    if start is not None:
        lines.append(f"#lasso-start {start}")
    return tuple(lines)


def _round_trace(run) -> tuple:
    lines = []
    step = 0
    for rnd, snap in enumerate(run.states_per_round):
        for pid, state in enumerate(snap):
            lines.append(format_log_line(step, f"p{pid}", f"round{rnd}",
                                         state, rnd))
            step += 1
    return tuple(lines)


def _history_trace(history) -> tuple:
    return tuple(
        format_log_line(i, f"c{ev.client}", f"{ev.kind}.{ev.phase}",
                        ev.value, ev.ts)
        for i, ev in enumerate(history.events))


# ---------------------------------------------------------------------------
# kind runners

def _run_floodmin(params, seed) -> Outcome:
    n, f, k = params["n"], params["f"], params["k"]
    rounds = floodmin_rounds(f, k)
    if seed is None:
        scripts = list(iter_crash_scripts(n, f, rounds))
        runs = 0
        for inputs in itertools.product((0, 1), repeat=n):
            inset = set(inputs)
            for script in scripts:
                decisions = flood_min_fast(n, inputs, script, rounds)
                got = {d for d in decisions if d is not None}
                runs += 1
                if len(got) > k or not got <= inset:
                    return _floodmin_fail(params, inputs, script, got, runs)
        return Outcome("pass", {"rounds": rounds, "runs": runs,
                                "scripts": len(scripts)})
    rng = Random(seed)
    inputs = tuple(rng.randint(0, 1) for _ in range(n))
    script = {}
    for pid in rng.sample(range(n), rng.randint(0, f)):
        recipients = tuple(sorted(rng.sample(range(n), rng.randint(0, n))))
        script[pid] = (rng.randint(1, rounds), recipients)
    decisions = flood_min_fast(n, inputs, script, rounds)
    got = {d for d in decisions if d is not None}
    if len(got) > k or not got <= set(inputs):
        return _floodmin_fail(params, inputs, script, got, 1)
    return Outcome("pass", {"rounds": rounds, "runs": 1,
                            "distinct": len(got), "crashes": len(script)})


def _floodmin_fail(params, inputs, script, got, runs) -> Outcome:
    n, f, k = params["n"], params["f"], params["k"]
    crashes = {pid: CrashEntry(round=r, recipients=frozenset(rec))
               for pid, (r, rec) in script.items()}
    rich = flood_min(n, f, k, list(inputs), crashes=crashes)
    return Outcome("fail",
                   {"rounds": rich.rounds, "runs": runs,
                    "distinct": len(got), "crashes": len(script)},
                   trace=_round_trace(rich.run))


def _violation_outcome(exc) -> Outcome:
    # the algorithm modules raise on broken safety theorems; surface that
    # as a failing run whose one-line trace still replays deterministically
    return Outcome("fail", {"error": type(exc).__name__},
                   trace=(format_log_line(0, "net", "violation",
                                          str(exc), 0),))


def _run_dls(params, seed) -> Outcome:
    n, f = params["n"], params["f"]
    rng = Random(seed)
    inputs = params["inputs"]
    if inputs is None:
        inputs = [rng.randint(0, 1) for _ in range(n)]
    script = delay_rules(params["delay_rules"]) if params["delay_rules"] \
        else None
    crashes = {int(p): s for p, s in params["crashes"].items()}
    try:
        res = dls_consensus(n, f, inputs, params["gst"], params["delta"],
                            horizon=params["horizon"], seed=seed,
                            delay_script=script, crashes=crashes)
    except ModelViolation as exc:
        return _violation_outcome(exc)
    nonfaulty = [p for p in range(n) if p not in crashes]
    decided = [p for p in nonfaulty if res.decisions.get(p) is not None]
    ok = res.agreement_ok() and res.validity_ok(inputs)
    if params["require_decision"]:
        ok = ok and len(decided) == len(nonfaulty)
    metrics = {"decided": len(decided), "nonfaulty": len(nonfaulty),
               "horizon": res.horizon,
               "proposals": len(res.proposals)}
    trace = None if ok else tuple(res.run.log)
    return Outcome("pass" if ok else "fail", metrics, trace=trace)


def _approx_ok(res: ApproxResult, inputs, eps, crashes) -> bool:
    good = [p for p in res.values if p not in crashes]
    lo = min(inputs[p] for p in good)
    hi = max(inputs[p] for p in good)
    monotone = all(b <= a + TOLERANCE
                   for a, b in zip(res.diameters, res.diameters[1:]))
    inside = all(lo - TOLERANCE <= res.values[p] <= hi + TOLERANCE
                 for p in good)
    spread = [res.values[p] for p in good]
    return (res.terminated and monotone and inside
            and max(spread) - min(spread) <= eps + TOLERANCE)


def _run_approx(params, seed) -> Outcome:
    n, f, eps = params["n"], params["f"], params["eps"]
    rng = Random(seed)
    inputs = params["inputs"]
    if inputs is None:
        inputs = [round(rng.uniform(0.0, 1.0), 6) for _ in range(n)]
    try:
        if params["mode"] == "sync":
            crashes = {}
            if f and rng.random() < 0.5:
                pid = rng.randrange(n)
                crashes = {pid: CrashEntry(
                    round=rng.randint(1, 4),
                    recipients=frozenset(rng.sample(range(n),
                                                    rng.randint(0, n))))}
            res = approx_sync(n, f, inputs, eps, crashes=crashes)
        else:
            crashes = {rng.randrange(n): rng.randint(0, 40)} \
                if f and rng.random() < 0.5 else {}
            res = approx_async(n, f, inputs, eps, seed=seed, crashes=crashes)
    except ModelViolation as exc:
        return _violation_outcome(exc)
    ok = _approx_ok(res, inputs, eps, crashes)
    final = res.diameters[-1] if res.diameters else 0.0
    metrics = {"mode": res.mode, "rounds": res.rounds_used or 0,
               "final_diameter": final, "crashes": len(crashes)}
    trace = None
    if not ok:
        trace = tuple(format_log_line(i, f"p{p}", "value", v, i)
                      for i, (p, v) in enumerate(sorted(res.values.items())))
    return Outcome("pass" if ok else "fail", metrics, trace=trace)


def _run_clocksync(params, seed) -> Outcome:
    n, eps, delta = params["n"], params["eps"], params["delta"]
    corners = corner_skews(n, delta, eps)
    bound = skew_bound(n, eps)
    base = ClockModel(n=n, delta=delta, eps=eps, offsets=(0,) * n)
    witness = shift_witness(base)
    views_equal = witness.run_a.views == witness.run_b.views
    sample_max = 0.0
    samples = params["samples"] if seed is not None else 0
    rng = Random(seed or 0)
    for _ in range(samples):
        offsets = tuple(rng.uniform(-1.0, 1.0) for _ in range(n))
        model = ClockModel(n=n, delta=delta, eps=eps, offsets=offsets,
                           delays=random_delays(n, delta, eps, rng))
        sample_max = max(sample_max, sync_run(model).skew)
    worst = max(skew for _, skew in corners)
    ok = (worst <= bound + TOLERANCE
          and sample_max <= bound + TOLERANCE
          and witness.skew >= bound - TOLERANCE
          and views_equal)
    rows = ["n,epsilon,assignmentId,skew"]
    rows += [f"{n},{eps},{aid},{format(skew, '.9g')}"
             for aid, skew in corners]
    metrics = {"bound": bound, "max_corner_skew": worst,
               "witness_skew": witness.skew, "corners": len(corners),
               "samples": samples, "views_equal": views_equal}
    trace = None
    if not ok:
        trace = tuple(format_log_line(i, "net", "cornerSkew", (aid, skew), 0)
                      for i, (aid, skew) in enumerate(corners))
    return Outcome("pass" if ok else "fail", metrics, trace=trace,
                   artifacts={"corners.csv": "\n".join(rows) + "\n"})


def _run_mutex_burns(params, seed) -> Outcome:
    system = burns_lynch_system(params["n"])
    graph = system_graph(system)
    cap = params["cap"]
    safe = explore_safety(graph, both_critical(system), cap)
    live = check_progress(graph, someone_trying_nobody_critical(system),
                          critical_entry(system), cap=cap)
    ok = isinstance(safe, Verified) and isinstance(live, Live)
    metrics = {
        "states": safe.states if isinstance(safe, Verified) else 0,
        "exclusion": "held" if isinstance(safe, Verified) else "violated",
        "deadlock_free": isinstance(live, Live)}
    trace = None
    if not isinstance(safe, Verified):
        trace = _steps_trace(safe)
    elif not isinstance(live, Live):
        trace = _steps_trace(live)
    return Outcome("pass" if ok else "fail", metrics, trace=trace)


def _run_mutex_semaphore(params, seed) -> Outcome:
    system = semaphore_system(params["n"])
    graph = system_graph(system)
    starved = params["pid"]
    result = check_progress(graph, trying(system, starved),
                            critical_entry(system, starved),
                            cap=params["cap"])
    ok = isinstance(result, Live)
    metrics = {"pid": starved,
               "lockout_free": ok,
               "states": result.states if ok else len(result.steps)}
    return Outcome("pass" if ok else "fail", metrics,
                   trace=None if ok else _steps_trace(result))


def _run_mutex_attack(params, seed) -> Outcome:
    system = broken_register_system()
    graph = system_graph(system)
    safe = explore_safety(graph, both_critical(system), params["cap"])
    metrics = {"exclusion": "held" if isinstance(safe, Verified)
               else "violated"}
    try:
        fragment = poised_attack(system, ("R",), observer=params["observer"])
        metrics["hidden_writes"] = fragment.hidden_writes
        metrics["views_equal"] = fragment.view == fragment.twin_view
    except NotFound:
        metrics["hidden_writes"] = 0
        metrics["views_equal"] = False
    ok = isinstance(safe, Verified) and not metrics["views_equal"]
    return Outcome("pass" if ok else "fail", metrics,
                   trace=None if isinstance(safe, Verified)
                   else _steps_trace(safe))


def _decode_script(raw) -> list:
    script = []
    for ops in raw:
        decoded = []
        for entry in ops:
            if not isinstance(entry, list) or len(entry) < 2:
                raise SchemaViolation(f"bad script entry {entry!r}")
            at, op = entry[0], entry[1]
            if op == "write" and len(entry) == 3:
                decoded.append((at, ("write", entry[2])))
            elif op == "read" and len(entry) == 2:
                decoded.append((at, ("read",)))
            else:
                raise SchemaViolation(f"bad script entry {entry!r}")
        script.append(decoded)
    return script


def _decode_partition(raw) -> Optional[PartitionScenario]:
    if raw is None:
        return None
    keys = set(raw)
    if keys != {"groups", "window"}:
        raise SchemaViolation(
            f"partition wants groups and window, got {sorted(keys)}")
    return PartitionScenario(
        tuple(frozenset(g) for g in raw["groups"]), tuple(raw["window"]))


def _run_quorum(params, seed) -> Outcome:
    script = _decode_script(params["script"])
    partition = _decode_partition(params["partition"])
    crashes = {int(p): s for p, s in params["crashes"].items()}
    result = register_run(params["n"], script, seed=seed,
                          horizon=params["horizon"], partition=partition,
                          crashes=crashes)
    verdict = lin_check(result.history)
    pending = result.pending()
    ok = isinstance(verdict, Linearizable)
    if params["require_all_respond"]:
        ok = ok and not pending
    metrics = {"ops": len(operations(result.history)),
               "pending": len(pending),
               "linearizable": isinstance(verdict, Linearizable)}
    return Outcome("pass" if ok else "fail", metrics,
                   trace=None if ok else tuple(result.run.log),
                   artifacts={"history.csv": history_to_csv(result.history)})


def _run_cap(variant, params, seed) -> Outcome:
    window = params["window"]
    partition = None if window is None else \
        two_vs_one(tuple(window), n=params["n"])
    report = cap_scenario(variant, partition, n=params["n"], seed=seed,
                          horizon=params["horizon"])
    kept = "consistency" if variant == "cp" else "availability"
    ok = kept not in report.violated
    metrics = {"pending": len(report.pending),
               "violated": ",".join(report.violated) or "none",
               "linearizable": isinstance(report.verdict, Linearizable)}
    return Outcome("pass" if ok else "fail", metrics,
                   trace=None if ok else _history_trace(report.history),
                   artifacts={"history.csv": history_to_csv(report.history)})


def _run_cap_cp(params, seed) -> Outcome:
    return _run_cap("cp", params, seed)


def _run_cap_ap(params, seed) -> Outcome:
    return _run_cap("ap", params, seed)


# ---------------------------------------------------------------------------
# the registry

def _check_floodmin(p):
    if not 0 <= p["f"] < p["n"]:
        raise SchemaViolation(f"floodmin needs 0 <= f < n, got {p}")
    if p["k"] < 1:
        raise SchemaViolation("floodmin needs k >= 1")
    if p["n"] > 6:
        raise SchemaViolation("floodmin enumeration is capped at n = 6")


def _check_dls(p):
    if 2 * p["f"] >= p["n"]:
        raise SchemaViolation(f"dls needs 2f < n, got {p}")
    if p["inputs"] is not None and len(p["inputs"]) != p["n"]:
        raise SchemaViolation("inputs must list one value per process")
    for rule in p["delay_rules"]:
        if not isinstance(rule, dict) or "until" not in rule or \
                set(rule) - {"src", "dst", "from_step", "to_step", "until"}:
            raise SchemaViolation(f"bad delay rule {rule!r}")


def _check_approx(p):
    if p["mode"] not in ("sync", "async"):
        raise SchemaViolation(f"mode must be sync or async, got {p['mode']!r}")
    if p["eps"] <= 0:
        raise SchemaViolation("eps must be positive")
    if p["inputs"] is not None and len(p["inputs"]) != p["n"]:
        raise SchemaViolation("inputs must list one value per process")


def _check_clocksync(p):
    if not 2 <= p["n"] <= 4:
        raise SchemaViolation("corner enumeration wants 2 <= n <= 4")
    if p["eps"] < 0:
        raise SchemaViolation("eps must be nonnegative")


def _check_cap(p):
    if p["n"] < 3:
        raise SchemaViolation("the dilemma needs n >= 3")
    if p["window"] is not None and (
            len(p["window"]) != 2
            or not all(isinstance(x, int) for x in p["window"])):
        raise SchemaViolation("window must be [first_step, last_step]")


_INT = (int,)
_NUM = (int, float)


def _kind(name, doc, run, check=None, exhaustive=False, **schema) -> Kind:
    return Kind(name, doc, schema, run, exhaustive=exhaustive, check=check)


REGISTRY = {k.name: k for k in (
    _kind("floodmin",
          "k-set agreement by flooding minima: seeded random crash script, "
          "or every script and input vector under seeds=exhaustive",
          _run_floodmin, check=_check_floodmin, exhaustive=True,
          n=Param(_INT, doc="processes"),
          f=Param(_INT, doc="crash budget"),
          k=Param(_INT, doc="allowed distinct decisions")),
    _kind("dls",
          "consensus under partial synchrony: chaotic pre-GST delays from "
          "the seed, optional scripted delay rules and crashes",
          _run_dls, check=_check_dls,
          n=Param(_INT), f=Param(_INT),
          gst=Param(_INT, doc="global stabilization step"),
          delta=Param(_INT, doc="post-GST delay bound"),
          horizon=Param((int, type(None)), default=None),
          inputs=Param((list, type(None)), default=None),
          delay_rules=Param((list,), default=[]),
          crashes=Param((dict,), default={}, doc="pid -> crash step"),
          require_decision=Param((bool,), default=True)),
    _kind("approx",
          "approximate agreement via trimmed means, sync rounds or an "
          "async seeded schedule, optional random crash",
          _run_approx, check=_check_approx,
          n=Param(_INT), f=Param(_INT), eps=Param(_NUM),
          mode=Param((str,), default="sync"),
          inputs=Param((list, type(None)), default=None)),
    _kind("clocksync",
          "one-round averaging sync: exhaustive corner delays against the "
          "(1-1/n)*eps bound plus the shifted-execution witness",
          _run_clocksync, check=_check_clocksync, exhaustive=True,
          n=Param(_INT), eps=Param(_NUM),
          delta=Param(_NUM, default=1.0),
          samples=Param(_INT, default=200, doc="seeded random assignments")),
    _kind("mutex.burns",
          "exhaustive safety and deadlock-freedom of the two-flag "
          "shared-memory algorithm",
          _run_mutex_burns,
          exhaustive=True,
          n=Param(_INT),
          cap=Param(_INT, default=200_000)),
    _kind("mutex.semaphore",
          "lockout check for the test-and-set door; fails by design with "
          "a fair starvation lasso",
          _run_mutex_semaphore, exhaustive=True,
          n=Param(_INT), pid=Param(_INT, default=1),
          cap=Param(_INT, default=200_000)),
    _kind("mutex.attack",
          "the broken one-register fixture: mutual exclusion "
          "counterexample plus the poised-overwrite hiding schedule",
          _run_mutex_attack, exhaustive=True,
          observer=Param(_INT, default=0),
          cap=Param(_INT, default=200_000)),
    _kind("quorum",
          "majority-quorum register driven by a client script; asserts "
          "the history linearizes",
          _run_quorum,
          n=Param(_INT),
          script=Param((list,), doc="per client: [step, op, value?]"),
          partition=Param((dict, type(None)), default=None),
          crashes=Param((dict,), default={}),
          horizon=Param(_INT, default=60),
          require_all_respond=Param((bool,), default=False)),
    _kind("cap.cp",
          "quorum register under a 2-vs-1 partition: consistency asserted, "
          "the availability loss is reported",
          _run_cap_cp, check=_check_cap,
          n=Param(_INT, default=3),
          window=Param((list, type(None)), default=[0, 60]),
          horizon=Param(_INT, default=60)),
    _kind("cap.ap",
          "local-first register under the same partition: availability "
          "asserted, the consistency loss is reported",
          _run_cap_ap, check=_check_cap,
          n=Param(_INT, default=3),
          window=Param((list, type(None)), default=[0, 60]),
          horizon=Param(_INT, default=60)),
)}
