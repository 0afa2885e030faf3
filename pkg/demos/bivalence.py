"""
Bivalence: why asynchronous consensus cannot always decide
==========================================================

"""

# A configuration is bivalent when both decision values are still
# reachable from it.  The classical argument against wait-free
# asynchronous consensus runs on three facts: some initial configuration
# is bivalent, bivalence can be kept alive forever by scheduling, and the
# schedule doing so is fair.  At desk scale all three are checkable.
from distlab.checker import Valence, valence_map
from distlab.protocols import exhibit_graph, retry_arbiter

proto = retry_arbiter(2)
graph = exhibit_graph(proto)
vm = valence_map(graph)

# Fact one: some initial configurations leave both outcomes on the table
# before a single message moves.
for cfg in graph.initial:
    print(f"inputs {cfg.inputs}: {vm.of(cfg).value}")

# The valence laws hold edge-wise over the whole graph: successors never
# gain decision values, settled stays settled, bivalent keeps both
# options open among its successors.
from distlab.checker import check_valence_monotonicity

stats = check_valence_monotonicity(graph, vm=vm)
print("\nconfigurations by valence:", stats)

# Facts two and three: a fair cycle of undecided configurations.  Every
# message sent inside the cycle is also delivered inside it, no process
# crashes, and still nobody ever decides.  Here it is, concretely.
from distlab.checker import flp_witness

w = flp_witness(graph, vm=vm)
print("\nwitness shape:", w.shape)
print("starts bivalent:", w.bivalent_init)
lasso = w.run
print("prefix of", lasso.lasso_start, "steps, then a cycle of",
      len(lasso.steps) - lasso.lasso_start, "steps:")
for actor, action, _ in lasso.steps[lasso.lasso_start:]:
    print(f"  {actor}: {action.name} {action.payload}")

# The same question asked of a protocol that always decides comes back
# with the opposite verdict and the state count that certifies it.
from distlab.protocols import decide_own_input

trivial = flp_witness(exhibit_graph(decide_own_input()))
print("\na protocol with no agreement to defend:",
      type(trivial).__name__, "over", trivial.states, "configurations")
