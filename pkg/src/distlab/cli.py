"""Scenario runner.

    distlab run <scenario.json>       execute every (scenario, seed) pair
    distlab replay <trace> <file>     re-execute a recorded failure
    distlab list                      dump the kind registry

`run` writes results.csv (columns kind,paramsHash,seed,verdict,metrics,
metrics being a sorted semicolon-joined key=value list), one .trace file
per failing run, and any per-run artifacts such as history CSVs; every
file lands atomically.  The output directory comes from --out, then the
DISTLAB_OUT environment variable, then the working directory.  With
--jobs N the runs execute in a process pool; aggregation stays ordered
and single-threaded, so results.csv is identical either way.

Exit codes: 0 every asserted property held, 1 some run failed its
property (or a replayed failure is still a failure, which is the expected
outcome of replaying a counterexample), 2 usage, parse, schema, version
or divergence errors.
"""

import argparse
import csv
import io
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor

from .errors import DistlabError
from .scenarios import (
    format_metrics,
    list_kinds,
    load_scenario,
    lookup,
    params_hash,
    render_trace,
    replay,
    seed_token,
    seeds_of,
)

RESULTS_HEADER = ("kind", "paramsHash", "seed", "verdict", "metrics")


def _write_atomic(path, text):
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".",
                               prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _execute(job):
    kind_name, params, seed = job
    return lookup(kind_name).run(params, seed)


def _out_dir(args):
    out = args.out or os.environ.get("DISTLAB_OUT") or "."
    os.makedirs(out, exist_ok=True)
    return out


def cmd_run(args):
    scenario = load_scenario(args.scenario)
    out = _out_dir(args)
    seeds = seeds_of(scenario)
    jobs = [(scenario.kind, scenario.params, seed) for seed in seeds]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            outcomes = list(pool.map(_execute, jobs))
    else:
        outcomes = [_execute(job) for job in jobs]

    phash = params_hash(scenario.params)
    failures = 0
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RESULTS_HEADER)
    for seed, outcome in zip(seeds, outcomes):
        token = seed_token(seed)
        writer.writerow([scenario.kind, phash, token, outcome.verdict,
                         format_metrics(outcome.metrics)])
        print(f"{scenario.kind}[{token}] {outcome.verdict} "
              f"{format_metrics(outcome.metrics)}")
        stem = f"{scenario.output}-{token}"
        if outcome.verdict != "pass":
            failures += 1
            if outcome.trace is not None:
                trace_path = os.path.join(out, stem + ".trace")
                _write_atomic(trace_path, render_trace(
                    scenario.kind, phash, seed, outcome.verdict,
                    outcome.trace))
                print(f"  trace: {trace_path}")
        for name, text in outcome.artifacts.items():
            _write_atomic(os.path.join(out, f"{stem}-{name}"), text)
    results_path = os.path.join(out, "results.csv")
    _write_atomic(results_path, buf.getvalue())
    print(f"{len(jobs)} run(s), {failures} failure(s), results in "
          f"{results_path}")
    return 0 if failures == 0 else 1


def cmd_replay(args):
    scenario = load_scenario(args.scenario)
    with open(args.trace, "r", encoding="utf-8") as fh:
        text = fh.read()
    tf, outcome = replay(text, scenario, where=args.trace)
    print(f"replay matched: {len(tf.lines)} line(s), verdict "
          f"{outcome.verdict}")
    return 0 if outcome.verdict == "pass" else 1


def cmd_list(args):
    for name, info in list_kinds().items():
        flag = "  [exhaustive]" if info["exhaustive"] else ""
        print(f"{name}{flag}")
        print(f"    {info['doc']}")
        for pname, p in info["params"].items():
            need = "required" if p["required"] else f"default {p['default']!r}"
            doc = f"  ({p['doc']})" if p["doc"] else ""
            print(f"    {pname}: {p['types']}, {need}{doc}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="distlab", description="scenario runner for the lab")
    parser.add_argument("--jobs", type=int, default=1, metavar="N",
                        help="worker processes for seeded runs")
    parser.add_argument("--out", default=None, metavar="DIR",
                        help="output directory (or $DISTLAB_OUT)")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute a scenario file")
    p_run.add_argument("scenario")
    p_run.set_defaults(func=cmd_run)
    p_replay = sub.add_parser("replay", help="re-execute a recorded trace")
    p_replay.add_argument("trace")
    p_replay.add_argument("scenario")
    p_replay.set_defaults(func=cmd_replay)
    p_list = sub.add_parser("list", help="show registered scenario kinds")
    p_list.set_defaults(func=cmd_list)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DistlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
