"""Clock synchronization with bounded message uncertainty.

Processes own drift-free clocks that differ only by fixed offsets.  Every
message takes between delta and delta+eps real time, and nobody fails.  One
all-to-all exchange of timestamps, with each receiver estimating the sender
by the midpoint delay delta+eps/2 and every process averaging the n
estimates of its own clock (its own reading counts as one of them), brings
the adjusted clocks within eps*(1-1/n) of each other.  The bound is tight:
shift_witness builds a delay assignment attaining it together with a second,
indistinguishable execution obtained by sliding one process's clock by eps
and compensating every delay it touches.

All arithmetic runs on exact rationals internally, so the two witness
executions produce view logs that are equal bit for bit once rendered back
to floats, with no tolerance games.
"""

import dataclasses
from dataclasses import dataclass
from fractions import Fraction
from random import Random
from typing import Mapping, Optional, Sequence, Union

from .errors import InvalidModel, TooLarge

Num = Union[int, float, Fraction]

#: enumerating every corner of the delay box costs 2**(n*(n-1)) runs, which
#: is 4096 at n=4 and hopeless soon after; larger n gets Monte-Carlo only.
CORNER_LIMIT = 4


def ordered_pairs(n: int):
    """All (sender, receiver) pairs with distinct endpoints, lexicographic."""
    for i in range(n):
        for j in range(n):
            if i != j:
                yield (i, j)


def _exact(x: Num) -> Fraction:
    return Fraction(x)


@dataclass(frozen=True)
class ClockModel:
    """A one-shot synchronization instance.

    offsets[i] is process i's hardware clock minus real time.  delays maps
    every ordered pair (sender, receiver) to that message's transit time,
    which must lie in [delta, delta+eps].  tau0 is the agreed local clock
    reading at which everybody broadcasts.
    """
    n: int
    delta: Num
    eps: Num
    offsets: Sequence[Num]
    delays: Optional[Mapping[tuple, Num]] = None
    tau0: Num = 0

    def with_delays(self, delays: Mapping[tuple, Num]) -> "ClockModel":
        return dataclasses.replace(self, delays=dict(delays))


@dataclass(frozen=True)
class SyncResult:
    """Outcome of one synchronization exchange.

    adjustments[i] is what process i adds to its clock; logical_offsets[i]
    is the adjusted clock minus real time, so skew is the largest pairwise
    difference of logical_offsets.  views[i] lists (sender, local arrival
    time) for every message process i received, in sender order; it is all
    the process ever observes, and identical views force identical
    adjustments.
    """
    adjustments: tuple
    logical_offsets: tuple
    skew: float
    views: tuple


def _validated(model: ClockModel) -> tuple:
    if model.n < 1:
        raise InvalidModel("need at least one process")
    delta = _exact(model.delta)
    eps = _exact(model.eps)
    if delta < 0:
        raise InvalidModel("delta must be nonnegative")
    if eps < 0:
        raise InvalidModel("eps must be nonnegative")
    offsets = tuple(_exact(o) for o in model.offsets)
    if len(offsets) != model.n:
        raise InvalidModel("need exactly one offset per process")
    if model.delays is None:
        raise InvalidModel("model has no delay assignment")
    delays = {}
    for pair in ordered_pairs(model.n):
        if pair not in model.delays:
            raise InvalidModel("missing delay for pair %r" % (pair,))
        d = _exact(model.delays[pair])
        if not (delta <= d <= delta + eps):
            raise InvalidModel(
                "delay %s for pair %r outside [delta, delta+eps]" % (d, pair))
        delays[pair] = d
    if len(model.delays) != model.n * (model.n - 1):
        raise InvalidModel("delay assignment names an unknown pair")
    return delta, eps, offsets, delays


def sync_run(model: ClockModel) -> SyncResult:
    """Run the exchange and return adjustments, views and attained skew.

    Each receiver estimates the sender's current clock as the received
    timestamp plus delta+eps/2; the difference between that estimate and
    the receiver's own reading at arrival is drift-free, so averaging the
    differences (the process's own clock contributing zero) at any later
    instant realizes the mean of its own clock and the n-1 estimates.
    """
    delta, eps, offsets, delays = _validated(model)
    tau0 = _exact(model.tau0)
    mid = delta + eps / 2
    adjustments = []
    logical = []
    views = []
    for p in range(model.n):
        entries = []
        total = Fraction(0)
        for q in range(model.n):
            if q == p:
                continue
            # q broadcast when its own clock read tau0, at real time
            # tau0 - offsets[q]; transit takes delays[(q, p)].
            arrival = tau0 + offsets[p] - offsets[q] + delays[(q, p)]
            entries.append((q, float(arrival)))
            total += (tau0 + mid) - arrival
        adj = total / model.n
        adjustments.append(adj)
        logical.append(offsets[p] + adj)
        views.append(tuple(entries))
    spread = max(logical) - min(logical) if model.n > 1 else Fraction(0)
    return SyncResult(
        adjustments=tuple(float(a) for a in adjustments),
        logical_offsets=tuple(float(v) for v in logical),
        skew=float(spread),
        views=tuple(views),
    )


def skew_bound(n: int, eps: Num) -> float:
    """The tight worst-case skew eps*(1-1/n) for this algorithm."""
    return float(_exact(eps) * (n - 1) / n)


# ---------------------------------------------------------------------------
# delay assignments

def constant_delays(n: int, value: Num) -> dict:
    return {pair: value for pair in ordered_pairs(n)}


def random_delays(n: int, delta: Num, eps: Num, rng: Random) -> dict:
    """Independent uniform draws from the delay box."""
    lo, width = float(delta), float(eps)
    return {pair: lo + rng.random() * width for pair in ordered_pairs(n)}


def corner_count(n: int) -> int:
    return 2 ** (n * (n - 1))


def corner_delays(n: int, assignment_id: int, delta: Num, eps: Num) -> dict:
    """Corner number assignment_id of the delay box.

    Bit k of the id (least significant first) picks delta+eps over delta
    for the k-th ordered pair in lexicographic order.
    """
    if not 0 <= assignment_id < corner_count(n):
        raise InvalidModel("assignment id out of range")
    delta = _exact(delta)
    eps = _exact(eps)
    out = {}
    for k, pair in enumerate(ordered_pairs(n)):
        out[pair] = delta + eps if assignment_id >> k & 1 else delta
    return out


def corner_skews(n: int, delta: Num, eps: Num,
                 offsets: Optional[Sequence[Num]] = None,
                 tau0: Num = 0) -> list:
    """Skew at every corner of the delay box, as (assignment_id, skew).

    The adjusted-clock spread is an affine function of the delays, so its
    maximum over the box sits at one of these corners; the returned list is
    therefore an exact worst-case oracle.  Refuses n above CORNER_LIMIT.
    """
    if n > CORNER_LIMIT:
        raise TooLarge("corner enumeration is capped at n=%d" % CORNER_LIMIT)
    if offsets is None:
        offsets = (0,) * n
    out = []
    for assignment_id in range(corner_count(n)):
        model = ClockModel(n=n, delta=delta, eps=eps, offsets=offsets,
                           delays=corner_delays(n, assignment_id, delta, eps),
                           tau0=tau0)
        out.append((assignment_id, sync_run(model).skew))
    return out


# ---------------------------------------------------------------------------
# the matching lower-bound construction

@dataclass(frozen=True)
class ShiftWitness:
    """Two executions no process can tell apart.

    model_a attains skew eps*(1-1/n); model_b shifts process 0's clock
    forward by eps and compensates every delay into or out of it, which
    keeps all delays inside the box precisely because assignment a pinned
    them to the opposite extremes.  run_a.views == run_b.views bit for bit,
    yet the two models disagree by eps about where process 0's clock is, so
    no algorithm reading these views can beat the bound.
    """
    model_a: ClockModel
    model_b: ClockModel
    run_a: SyncResult
    run_b: SyncResult
    skew: float


def shift_witness(model: ClockModel) -> ShiftWitness:
    """Build the skew-attaining assignment plus its shifted twin.

    Ignores any delays already present on the model.  Messages out of
    process 0 travel at delta and messages into it at delta+eps, which is
    exactly the headroom needed to hide the shift; messages into process 1
    from the rest also travel at delta, pushing its estimate the other way;
    all remaining delays sit at the neutral midpoint.
    """
    if model.n < 2:
        raise InvalidModel("the shift construction needs two processes")
    n = model.n
    delta = _exact(model.delta)
    eps = _exact(model.eps)
    mid = delta + eps / 2
    a = {}
    for (i, j) in ordered_pairs(n):
        if i == 0:
            a[(i, j)] = delta
        elif j == 0:
            a[(i, j)] = delta + eps
        elif j == 1:
            a[(i, j)] = delta
        else:
            a[(i, j)] = mid
    b = {}
    for (i, j), d in a.items():
        if i == 0:
            b[(i, j)] = d + eps
        elif j == 0:
            b[(i, j)] = d - eps
        else:
            b[(i, j)] = d
    offsets = tuple(_exact(o) for o in model.offsets)
    if len(offsets) != n:
        raise InvalidModel("need exactly one offset per process")
    shifted = (offsets[0] + eps,) + offsets[1:]
    model_a = dataclasses.replace(model, delays=a)
    model_b = dataclasses.replace(model, delays=b, offsets=shifted)
    run_a = sync_run(model_a)
    run_b = sync_run(model_b)
    assert run_a.views == run_b.views, "shifted twin leaked through the views"
    return ShiftWitness(model_a=model_a, model_b=model_b,
                        run_a=run_a, run_b=run_b, skew=run_a.skew)
