"""distlab: an executable laboratory for classical distributed-computing theory.

Modelling core (automata), simulation harnesses (rounds, async schedules,
partial synchrony), reference algorithms (k-set agreement, consensus under
GST, approximate agreement, clock sync, mutual exclusion, replicated
registers) and exhaustive small-instance checkers for the classical bounds
and impossibility phenomena.
"""

__version__ = "0.1.0"
TRACE_FORMAT_VERSION = 1
SCENARIO_VERSION = 1
