"""
Replicated registers: linearizability, quorums, and the partition bill
======================================================================

"""

# A single register replicated across three servers, read and written by
# scripted clients over an unreliable network.  The quorum protocol tags
# writes with timestamps, asks a majority on every operation, and writes
# back what it read.
from distlab.consistency import lin_check, register_run

script = [
    [(0, ("write", 1)), (20, ("read",))],
    [(10, ("write", 2)), (30, ("read",))],
]
run = register_run(n=3, script=script, variant="quorum", seed=4)
for op in run.history.events:
    print(f"  t={op.ts:>2} client {op.client} {op.kind} {op.phase} {op.value}")

# Linearizability: some total order of the operations, consistent with
# real time, explains every read.
verdict = lin_check(run.history)
print("verdict:", type(verdict).__name__)

# Histories serialize to CSV and back, so a run can be archived and
# re-judged later.
from distlab.consistency import history_from_csv, history_to_csv

text = history_to_csv(run.history)
print("round-trips through csv:", history_from_csv(text) == run.history)

# Now cut the network.  Servers {0,1} and client 0 stay connected; server
# 2 and client 1 are marooned for the heart of the run.  The quorum
# register refuses to answer the minority client rather than lie.
from distlab.consistency import cap_scenario, two_vs_one

partition = two_vs_one(window=(0, 60))
cp = cap_scenario("cp", partition=partition)
print("\nquorum register under partition:")
print("  unanswered operations:", len(cp.pending))
print("  verdict on the answered ones:", type(cp.verdict).__name__)
print("  gave up:", cp.violated)

# The local-first register makes the opposite choice: it answers from the
# nearest replica immediately and reconciles later.  Everyone gets a
# response; the minority reader gets a stale value.
ap = cap_scenario("ap", partition=partition)
print("local-first register under partition:")
print("  unanswered operations:", len(ap.pending))
print("  verdict on the answered ones:", type(ap.verdict).__name__)
print("  gave up:", ap.violated)

# The violation carries the shortest event prefix no legal order can
# explain; its last response is the stale read.
tail = ap.verdict.prefix.events[-1]
print(f"  stale read: client {tail.client} got {tail.value} at t={tail.ts}")

# There is no third option: during a partition a register answers
# everyone or stays linearizable, never both.  The two variants simply
# pick different sides, which is the whole dilemma at desk scale.
