"""
Composing I/O automata: a sender, a channel, and a receiver
===========================================================

"""

# Every component comes from the same constructor: a signature (inputs,
# outputs, internals), start states, a task partition of the locally
# controlled actions, and two callbacks giving the transition relation.
from distlab.automata import Action, make_automaton


def sender(msgs):
    msgs = tuple(msgs)

    def try_step(s, a):
        if a.name == "send" and s < len(msgs) and a.payload == msgs[s]:
            return s + 1
        return None

    def cands(s):
        if s < len(msgs):
            yield Action("send", msgs[s])

    return make_automaton("sender", [], ["send"], [], [0],
                          {"emit": ["send"]}, try_step, cands)


def channel():
    # send(m) is an input, so it must be enabled in every state: the
    # channel simply appends.  deliver(head) is the only output.
    def try_step(s, a):
        if a.name == "send":
            return s + (a.payload,)
        if a.name == "deliver" and s and s[0] == a.payload:
            return s[1:]
        return None

    def cands(s):
        if s:
            yield Action("deliver", s[0])

    return make_automaton("chan", ["send"], ["deliver"], [], [()],
                          {"deliver": ["deliver"]}, try_step, cands)


def receiver():
    def try_step(s, a):
        if a.name == "deliver":
            return s + (a.payload,)
        return None

    return make_automaton("recv", ["deliver"], [], [], [()],
                          {}, try_step, lambda s: ())


# Composition matches actions by name: the sender's output send feeds the
# channel's input, the channel's output deliver feeds the receiver.
from distlab.automata import compose

parts = [sender("abc"), channel(), receiver()]
system = compose(parts, name="pipeline")
print("composed signature:", sorted(system.signature()))
print("start state:", system.start_states[0])

# Drive the composition by always firing the first enabled local action.
from distlab.automata import enabled_local, step, Execution

cur = system.start_states[0]
steps = []
while True:
    acts = enabled_local(system, cur)
    if not acts:
        break
    nxt = step(system, cur, acts[0])
    steps.append((acts[0], nxt))
    cur = nxt
ex = Execution(system.start_states[0], tuple(steps))
print("quiescent state:", cur)

# The trace keeps only external actions, in order.
from distlab.automata import trace_of, fairness_verdict

for a in trace_of(system, ex):
    print("  trace:", a.name, a.payload)
print("fairness:", fairness_verdict(system, ex).name)

# Projection recovers a legal execution of each component on its own.
from distlab.automata import project_execution, validate

chan_ex = project_execution(system, parts, 1, ex)
validate(parts[1], chan_ex)
print("channel saw", len(chan_ex.steps), "of the", len(ex.steps), "steps")

# Composition is commutative up to reachable-graph isomorphism: the same
# parts in a different order yield the same behaviour.
from distlab.automata import graph_isomorphic

swapped = compose([parts[1], parts[2], parts[0]], name="shuffled")
print("order-independent:", graph_isomorphic(system, swapped, cap=1000))

# "Solving a problem" is trace inclusion.  Here the problem is FIFO
# delivery of exactly the sent letters.
from distlab.automata import solves


def delivers_in_order(trace):
    sent = [a.payload for a in trace if a.name == "send"]
    got = [a.payload for a in trace if a.name == "deliver"]
    return got == sent[:len(got)]


print("solves fifo delivery:", solves([trace_of(system, ex)], delivers_in_order))
