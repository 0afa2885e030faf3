"""
Clock synchronization: the skew floor nobody can beat
=====================================================

"""

# Every process broadcasts when its own clock reads tau0 and averages the
# arrival times it observes.  Message delays live in [delta, delta+eps];
# delta is harmless (everyone can subtract it), the uncertainty eps is
# not.  After one exchange the averaging rule brings the worst pairwise
# clock difference down to eps*(1-1/n).
from distlab.clocksync import ClockModel, constant_delays, skew_bound, sync_run

n, delta, eps = 3, 2.0, 1.0
print("guaranteed skew for n=3, eps=1:", skew_bound(n, eps))

# With identical delays the exchange cancels the offsets completely.
model = ClockModel(n, delta, eps, offsets=[0.0, 0.7, -0.4],
                   delays=constant_delays(n, delta))
r = sync_run(model)
print("equal delays: adjustments", r.adjustments, "-> skew", r.skew)

# The adversary picks delays from the corners of the [delta, delta+eps]
# box.  Sweeping every corner assignment finds the worst case, and it
# lands exactly on the bound.
from distlab.clocksync import corner_count, corner_delays

worst = 0.0
for cid in range(corner_count(n)):
    m = ClockModel(n, delta, eps, offsets=[0.0] * n,
                   delays=corner_delays(n, cid, delta, eps))
    worst = max(worst, sync_run(m).skew)
print(f"worst over {corner_count(n)} corner assignments:", worst)

# Why can no cleverer rule do better?  Shift one clock and compensate all
# its delays: every process observes the same arrival times, so no
# algorithm can distinguish the two worlds, yet the true offsets differ.
from distlab.clocksync import shift_witness

w = shift_witness(ClockModel(n, delta, eps, offsets=[0.0] * n))
print("\ntwo indistinguishable executions:")
print("  clock offsets a:", [float(o) for o in w.model_a.offsets])
print("  clock offsets b:", [float(o) for o in w.model_b.offsets])
print("  views identical:", w.run_a.views == w.run_b.views)
print("  forced skew:", w.skew, "=", f"eps*(1-1/{n})")

# The floor rises toward eps as the group grows.
for m in (2, 3, 4, 8, 100):
    print(f"n={m:>3}: best achievable skew = {skew_bound(m, eps)}")
