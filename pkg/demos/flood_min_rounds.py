"""
Flooding the minimum: why k-set agreement needs floor(f/k)+1 rounds
===================================================================

"""

# Each process floods the smallest value it has seen and decides after a
# fixed number of rounds.  With f crashes and agreement on at most k
# values, floor(f/k)+1 rounds are enough, and no fewer are.
from distlab.consensus import flood_min, floodmin_rounds

for f in range(4):
    for k in (1, 2):
        print(f"f={f} k={k}: rounds = {floodmin_rounds(f, k)}")

# A failure-free run: everybody hears everything in round one, so all
# decide the global minimum.
r = flood_min(n=4, f=1, k=1, inputs=[3, 1, 2, 2])
print("\nno crashes, inputs [3,1,2,2]: decisions", r.decisions)

# The adversary that forces the bound crashes one process per round, each
# time after it whispered its value to a single successor.  The chain
# keeps the survivors' views apart until the last round.
from distlab.consensus import worst_case_chain_script

n, f = 4, 2
script = worst_case_chain_script(n, f)
for pid, entry in sorted(script.items()):
    print(f"process {pid} crashes in round {entry.round}, "
          f"last words reach {sorted(entry.recipients)}")

r = flood_min(n, f, k=1, inputs=[0, 1, 1, 1], crashes=script)
print("after the chain: decisions", r.decisions, "rounds", r.rounds)

# With one round too few the same chain splits the decisions.  The runner
# trusts its round bound, so we call the lean engine (which takes the
# script as plain tuples) directly.
from distlab.consensus import flood_min_fast

lean = {p: (e.round, tuple(e.recipients)) for p, e in script.items()}
short = flood_min_fast(n, [0, 1, 1, 1], lean, rounds=floodmin_rounds(f, 1) - 1)
print("one round short:", short, "<- two different values, agreement lost")

# At desk scale the bound can be checked against every adversary, not just
# the famous one: all crash schedules, all inputs over a small domain.
from distlab.consensus import check_kset_exhaustive

counts = check_kset_exhaustive(n=3, f=2, k=2)
print(f"\nn=3 f=2 k=2: {counts['runs']} runs, "
      f"{counts['scripts']} crash schedules, no violation")
