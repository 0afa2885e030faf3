"""Small automata used across the test suite."""

from distlab.automata import Action, make_automaton


def counter(cap, name="counter"):
    """Counts 0..cap via an internal action, then goes quiescent."""
    def try_step(s, a):
        if a.name == "inc" and a.payload == s and s < cap:
            return s + 1
        return None

    def cands(s):
        if s < cap:
            yield Action("inc", s)

    return make_automaton(name, [], [], ["inc"], [0],
                          {"count": ["inc"]}, try_step, cands)


def sender(msgs, name="sender", send="send"):
    msgs = tuple(msgs)

    def try_step(s, a):
        if a.name == send and s < len(msgs) and a.payload == msgs[s]:
            return s + 1
        return None

    def cands(s):
        if s < len(msgs):
            yield Action(send, msgs[s])

    return make_automaton(name, [], [send], [], [0],
                          {"emit": [send]}, try_step, cands)


def channel(name="chan", send="send", deliver="deliver"):
    """FIFO channel: input send(m) always enabled, output deliver(head)."""
    def try_step(s, a):
        if a.name == send:
            return s + (a.payload,)
        if a.name == deliver and s and s[0] == a.payload:
            return s[1:]
        return None

    def cands(s):
        if s:
            yield Action(deliver, s[0])

    return make_automaton(name, [send], [deliver], [], [()],
                          {"deliver": [deliver]}, try_step, cands)


def receiver(name="recv", deliver="deliver"):
    def try_step(s, a):
        if a.name == deliver:
            return s + (a.payload,)
        return None

    def cands(s):
        return ()

    return make_automaton(name, [deliver], [], [], [()], {}, try_step, cands)


def toggler(name="toggler"):
    """Flips a bit forever; one task, never quiescent."""
    def try_step(s, a):
        if a.name == "flip" and a.payload == s:
            return 1 - s
        return None

    def cands(s):
        yield Action("flip", s)

    return make_automaton(name, [], [], ["flip"], [0],
                          {"flip": ["flip"]}, try_step, cands)


def idler(name="idler"):
    """A task that is always enabled and never changes anything visible."""
    def try_step(s, a):
        if a.name == "work":
            return s
        return None

    def cands(s):
        yield Action("work")

    return make_automaton(name, [], [], ["work"], [0],
                          {"work": ["work"]}, try_step, cands)
