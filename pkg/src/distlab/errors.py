"""Exception types shared across the lab.

Every error carries enough context to be actionable in a test failure or a
CLI message; none of them are ever swallowed silently.
"""


class DistlabError(Exception):
    """Base class for all lab errors."""


class UnknownAction(DistlabError):
    """Action name not in the automaton's signature."""


class ActionNotEnabled(DistlabError):
    """Transition attempted from a state where the action has no effect defined."""


class IncompatibleSignatures(DistlabError):
    """Composition precondition violated (shared outputs, leaked internals, ...)."""


class ModelViolation(DistlabError):
    """A modelling rule was broken (input-enabling breach, non-owner write, ...)."""


class BudgetExceeded(DistlabError):
    """A failure script names more faulty processes than the model's budget."""


class MissingBound(DistlabError):
    """measure_time was given an execution with a task that has no bound."""


class TooFewValues(DistlabError):
    """Trimmed mean needs more than 2f values to be meaningful."""


class QuorumUnreachable(DistlabError):
    """Fault budget leaves no live majority, so the algorithm cannot be run."""


class InvalidModel(DistlabError):
    """Model parameters out of range (negative delays, delay outside [dmin, dmax], ...)."""


class CapExceeded(DistlabError):
    """State-space exploration hit its configured cap before finishing."""


class NotFound(DistlabError):
    """Bounded search exhausted its budget without a witness (inconclusive)."""


class TooLarge(DistlabError):
    """History is beyond the brute-force linearizability checker's remit."""


class ParseError(DistlabError):
    """Scenario or trace file is not even syntactically valid; reports position."""


class SchemaViolation(DistlabError):
    """Scenario file is syntactically valid JSON but structurally wrong."""


class UnknownKind(DistlabError):
    """Scenario kind not present in the registry."""


class VersionMismatch(DistlabError):
    """Trace or scenario file written by an incompatible format version."""


class TraceDiverged(DistlabError):
    """Replay produced a different execution than the recorded trace."""
