"""
Approximate agreement: halving the spread every round
=====================================================

"""

# Exact consensus is off the table in asynchrony, but agreeing within eps
# is not.  Each round every process averages the values it saw after
# discarding the f highest and f lowest; the survivors' spread shrinks by
# at least half per round.  Without crashes everyone sees the same
# multiset and converges in a single round, so the interesting runs are
# the ones where a crash splits the views.
from distlab.consensus import approx_sync
from distlab.harness import CrashEntry

r = approx_sync(n=5, f=1, inputs=[0.0, 1.0, 2.0, 4.0, 8.0], eps=0.5)
print("crash-free: values", sorted(set(r.values.values())),
      "after", r.rounds_used, "rounds")

# Process 4 dies mid-broadcast in round 1; only 0 and 1 hear its value.
# The two camps now average different multisets, yet each new value stays
# inside the old span and the spread at least halves.
script = {4: CrashEntry(1, frozenset([0, 1]))}
r = approx_sync(n=5, f=1, inputs=[0.0, 1.0, 2.0, 4.0, 8.0], eps=0.5,
                crashes=script)
used = r.rounds_used
print("\nprocess 4 crashes telling only 0 and 1:")
print("  diameters per round:", [round(d, 4) for d in r.diameters[:used + 1]])
print("  contraction factors:", [round(c, 3) for c in r.contraction])
print("  final values:", {p: round(v, 4) for p, v in r.values.items()
                          if p != 4})
print("  rounds used:", used, " terminated:", r.terminated)

# The asynchronous variant runs the same rule over a scrambled network: a
# seeded adversary reorders deliveries, yet every survivor still lands
# within eps of the others.
from distlab.consensus import approx_async

for seed in range(4):
    r = approx_async(n=4, f=1, inputs=[0.0, 1.0, 2.0, 4.0], eps=0.25,
                     seed=seed)
    spread = max(r.values.values()) - min(r.values.values())
    print(f"async seed {seed}: rounds {r.rounds_used}, "
          f"spread {spread:.4f} <= eps, terminated {r.terminated}")

# A crash mid-run leaves fewer voices, not a stuck protocol: survivors
# keep exchanging values until their spread halves below eps.
r = approx_async(n=4, f=1, inputs=[0.0, 1.0, 2.0, 4.0], eps=0.25,
                 seed=7, crashes={3: 12})
alive = {p: round(v, 4) for p, v in r.values.items() if p != 3}
print("\nasync with a crash at step 12:", alive, "terminated", r.terminated)
