"""
Consensus under partial synchrony: safe always, live after GST
==============================================================

"""

# Messages behave arbitrarily until an unknown global stabilization time,
# then respect a delay bound delta.  The rotating-coordinator protocol
# locks values before deciding, so agreement holds even while the network
# misbehaves; termination arrives once coordination survives a window.
from distlab.consensus import dls_consensus

n, f, delta = 4, 1, 1
r = dls_consensus(n, f, inputs=[0, 1, 1, 0], gst=12, delta=delta, seed=5)
print("decisions:", r.decisions)
print("decided at attempt:", r.decided_attempt)
print("proposals (attempt, coordinator, value):")
for att, coord, v in r.proposals:
    print(f"  attempt {att}: coordinator {coord} proposed {v}")

# A late GST only postpones the decision; it never corrupts it.
for gst in (0, 8, 24, 40):
    r = dls_consensus(n, f, inputs=[1, 0, 0, 0], gst=gst, delta=delta, seed=9)
    vals = {v for v in r.decisions.values() if v is not None}
    print(f"gst={gst:>2}: decided {sorted(vals)} by attempt "
          f"{max(r.decided_attempt.values())}")

# Crashing the first coordinator hands the attempt to the next one.
r = dls_consensus(n, f, inputs=[0, 1, 1, 1], gst=0, delta=delta, crashes={0: 3})
print("\ncoordinator 0 crashed at step 3:", r.decisions)

# The dangerous schedule: before GST the adversary may delay anything, so
# it cuts process 0 off right when it proposes.  0's value gets locked
# only at home; the next coordinator never learns of the lock and
# proposes the other value.  Different attempts carry different
# proposals; the locking discipline still forbids different decisions.
from distlab.harness import delay_rules

script = delay_rules([
    {"src": 0, "from_step": 2, "until": 25},   # swallow 0's proposal
    {"until": 0},                              # everything else: next step
])
r = dls_consensus(n=3, f=1, inputs=[0, 1, 1], gst=24, delta=delta,
                  seed=301, delay_script=script)
print("\nisolating the first proposer (gst=24):")
for att, coord, v in r.proposals:
    print(f"  attempt {att}: coordinator {coord} proposed {v}")
print("  decisions still agree:", r.decisions)
