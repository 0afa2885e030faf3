"""
Mutual exclusion on shared memory: verdicts, lassos, and hidden writes
======================================================================

"""

# Processes loop through remainder, trying, critical, exit regions and
# talk only through shared registers.  At this scale the whole state
# space fits in memory, so claims become exhaustive verdicts instead of
# test runs.
from distlab.checker import check_progress, explore_safety, system_graph
from distlab.mutex import (both_critical, burns_lynch_system, critical_entry,
                           someone_trying_nobody_critical)

sysm = burns_lynch_system(2)
graph = system_graph(sysm)

# Safety: no reachable state puts two processes in the critical region.
safe = explore_safety(graph, both_critical(sysm), cap=100_000)
print("exclusion for two processes:", type(safe).__name__,
      "over", safe.states, "states")

# Progress: from any state where someone is trying and nobody is
# critical, every fair schedule eventually lets somebody in.
live = check_progress(graph, someone_trying_nobody_critical(sysm),
                      critical_entry(sysm), cap=100_000)
print("deadlock freedom:", type(live).__name__)

# The same questions scale to three processes.
sys3 = burns_lynch_system(3)
g3 = system_graph(sys3)
print("three processes:", type(explore_safety(g3, both_critical(sys3),
                                              cap=100_000)).__name__,
      "/", type(check_progress(g3, someone_trying_nobody_critical(sys3),
                               critical_entry(sys3), cap=100_000)).__name__)

# Deadlock freedom is weaker than fairness to individuals.  A semaphore
# always lets somebody in, yet a fair schedule can starve one process
# forever.  The verdict is a lasso: a reachable cycle around which
# process 1 is trying at every state and never enters.
from distlab.mutex import semaphore_system, trying

sema = semaphore_system(2)
sg = system_graph(sema)
lock = check_progress(sg, trying(sema, 1), critical_entry(sema, 1),
                      cap=100_000)
print("\nsemaphore lockout:", type(lock).__name__,
      "with cycle starting at state", lock.lasso_start,
      "of", len(lock.steps), "steps")
for actor, action, _ in lock.steps[lock.lasso_start:]:
    print(f"  around the cycle: {actor} {action.name} {action.payload}")

# Registers hide history: a write poised over a register masks whatever
# was written there in between.  The scheduler below parks process 0
# ready to overwrite the shared bit, lets process 1 write it, then fires
# the overwrite.  Process 0's reads afterwards cannot tell that anything
# happened, which is why the broken handshake below admits no fix by
# cleverer reading alone.
from distlab.mutex import broken_register_system, poised_attack

attack = poised_attack(broken_register_system(), targets={"R"})
print("\nhidden-overwrite attack on the observer:")
print("  writes hidden:", attack.hidden_writes)
print("  observer view with the middle:   ", attack.view)
print("  observer view without the middle:", attack.twin_view)
print("  indistinguishable:", attack.view == attack.twin_view)
