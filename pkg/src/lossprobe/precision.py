"""Working with oracles that round: separation bounds, batch sizing, lookups.

An oracle reporting phi significant digits still leaks labels, just fewer
per query.  A batch of b points has 2^b candidate labelings; the pair of
rounded scores (AUC, LL) can take at most 10^phi * (10^phi + 1) values, so
b is capped by the pigeonhole bound of max_unique_batch().  That bound is
only necessary.  Whether a concrete prediction vector actually separates
all 2^b labelings is checked here by exhaustive enumeration, and the
curated vectors below are the largest ones such a search has found.

Batches are scored in isolation: a query carries the indices of the batch
and predictions for those points only, so the reported scores depend on
nothing outside the batch.  The classic alternative, padding the query to
full length with 1/2 so every out-of-batch point contributes exactly ln 2
to the unnormalized loss, is provided as pad_with_half(); it keeps the log
loss invertible but pollutes AUC with unknown out-of-batch labels, which
is why the lookup attack does not use it.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Mapping, Protocol, Sequence

from .core import (
    DecimalScore,
    Labeling,
    PredictionVector,
    ScoreKind,
    auc,
    logloss_decimal,
)
from .errors import LookupBuildError, DecodeError, ValidationError
from .exact import (
    DEFAULT_LIMITS,
    Limits,
    decode_binary_from_decimal,
    required_precision_binary,
)

__all__ = [
    "min_digits_for_separation",
    "max_unique_batch",
    "query_bound",
    "pad_with_half",
    "TupleLookup",
    "build_tuple_lookup",
    "tuple_lookup_for",
    "curated_batch_vector",
    "BatchSpec",
    "AttackPlan",
    "plan_batches",
    "batched_inference",
]


def _as_fraction(value) -> Fraction:
    try:
        if isinstance(value, float):
            # floats are taken at face value: 0.002 means 2/1000, not its
            # nearest binary neighbour
            return Fraction(str(value))
        return Fraction(value)
    except (ValueError, ZeroDivisionError, TypeError) as exc:
        raise ValidationError(f"not a number: {value!r}") from exc


def min_digits_for_separation(delta) -> int:
    """Significant digits needed to tell apart values at least delta apart.

    ceil(log10(1/delta)), computed in exact integer arithmetic so boundary
    cases like delta = 0.001 do not wobble with float log rounding.
    """
    gap = _as_fraction(delta)
    if gap <= 0:
        raise ValidationError("separation must be positive")
    p, q = gap.numerator, gap.denominator
    if p >= q:
        return 0
    k = max(0, len(str(q)) - len(str(p)) - 1)
    while p * 10**k < q:
        k += 1
    return k


def max_unique_batch(phi: int) -> int:
    """Pigeonhole cap on batch size for (AUC, LL) tuples at phi digits.

    floor(log2(10^phi * (10^phi + 1))): the tuple can take at most
    10^phi * (10^phi + 1) values, so 2^b beyond that cannot be injective.
    This is an upper bound, not a construction; see curated_batch_vector.
    """
    if phi < 1:
        raise ValidationError("need at least one significant digit")
    states = 10**phi * (10**phi + 1)
    return states.bit_length() - 1


def query_bound(n: int, phi: int) -> int:
    """ceil(n / (6 * phi)) queries to recover n labels at phi digits.

    The 6*phi in the denominator is the conservative per-query capacity
    estimate behind max_unique_batch (log2 10 rounded down to 3 per score).
    """
    if n < 1:
        raise ValidationError("need at least one label")
    if phi < 1:
        raise ValidationError("need at least one significant digit")
    return -(-n // (6 * phi))


def pad_with_half(
    entries: Sequence[Fraction], indices: Sequence[int], n: int
) -> PredictionVector:
    """Expand batch predictions to length n with 1/2 everywhere else.

    Every out-of-batch point then contributes exactly ln 2 to the
    unnormalized log loss whatever its label, so the batch's exact score
    is recoverable from the full-dataset score.  AUC enjoys no such
    neutrality, which is why batched_inference queries subsets instead.
    """
    if len(entries) != len(indices):
        raise ValidationError("one index per batch entry")
    if sorted(set(indices)) != sorted(indices):
        raise ValidationError("batch indices must be distinct")
    full = [Fraction(1, 2)] * n
    for pos, value in zip(indices, entries):
        if not 0 <= pos < n:
            raise ValidationError(f"index {pos} outside dataset of size {n}")
        full[pos] = Fraction(value)
    return PredictionVector(tuple(full))


# Batch prediction vectors found by an offline annealing search over
# numerators, re-verified exactly, and frozen here.  Every prefix of every
# vector separates all labelings of that prefix (checked in the test
# suite), so slicing the front yields a working smaller batch.  Larger
# batches at these precisions were searched for and not found: at two
# digits, nine points already leave colliding tuples after extensive
# annealing, and the tuple capacity argument says roughly ninety distinct
# log-loss strings exist per decade, far too few for 2^12 labelings.
_CURATED_NUMERATORS: Mapping[int, tuple[tuple[int, int], ...]] = {
    1: tuple((a, 10**7) for a in (16, 21, 74, 2117, 248959)),
    2: tuple(
        (a, 10**6)
        for a in (1, 58, 3512, 60729, 66818, 79784, 425597, 219830)
    ),
    3: tuple(
        (a, 10**7)
        for a in (
            59, 389, 400, 434, 1795, 2282,
            3187, 4620, 55822, 144813, 3050190, 9875102,
        )
    ),
}


def curated_batch_vector(phi: int) -> tuple[Fraction, ...] | None:
    """Largest known prediction vector with injective tuples at phi digits.

    None when no curated vector exists for this precision; callers fall
    back to the binary construction, whose precision demand is computable.
    """
    pairs = _CURATED_NUMERATORS.get(phi)
    if pairs is None:
        return None
    return tuple(Fraction(a, d) for a, d in pairs)


@dataclass(frozen=True)
class TupleLookup:
    """Inverse table from (LL wire, AUC wire) pairs back to labelings."""

    entries: tuple[Fraction, ...]
    phi: int
    table: Mapping[tuple[str, str], tuple[int, ...]]

    def __len__(self) -> int:
        return len(self.table)

    def labeling_for(self, ll: DecimalScore | str, auc_score: DecimalScore | str) -> Labeling:
        ll_wire = ll if isinstance(ll, str) else ll.wire()
        auc_wire = auc_score if isinstance(auc_score, str) else auc_score.wire()
        bits = self.table.get((ll_wire, auc_wire))
        if bits is None:
            raise DecodeError(
                f"tuple ({ll_wire}, {auc_wire}) matches no labeling of this batch"
            )
        return Labeling(bits)


def _guard_batch_size(b: int, phi: int, limits: Limits) -> None:
    # rejecting up front keeps a doomed 2^b enumeration from ever starting
    if b < 1:
        raise ValidationError("batch must hold at least one point")
    cap = max_unique_batch(phi)
    if b > cap:
        raise ValidationError(
            f"batch of {b} exceeds the {cap}-point pigeonhole cap "
            f"at {phi} significant digits"
        )
    if b > limits.lookup_max_batch:
        raise ValidationError(
            f"batch of {b} exceeds the enumeration guard of "
            f"{limits.lookup_max_batch}"
        )


def _tuple_table(entries: tuple[Fraction, ...], phi: int):
    """Map rounded tuples to labelings, or report the first collision.

    Returns the table dict on success, else (bits_a, bits_b, key) naming
    two labelings that round to the same tuple.
    """
    vec = PredictionVector(entries)
    b = len(vec)
    table: dict[tuple[str, str], tuple[int, ...]] = {}
    for mask in range(1 << b):
        bits = tuple((mask >> i) & 1 for i in range(b))
        labels = Labeling(bits)
        key = (
            logloss_decimal(vec, labels, phi).wire(),
            auc(vec, labels, phi).wire(),
        )
        other = table.get(key)
        if other is not None:
            return other, bits, key
        table[key] = bits
    return table


def tuple_lookup_for(
    entries: Sequence[Fraction], phi: int, limits: Limits = DEFAULT_LIMITS
) -> TupleLookup:
    """Verify one specific prediction vector and build its inverse table.

    Raises LookupBuildError naming both labelings when two of them round
    to the same (LL, AUC) tuple at phi digits.
    """
    vec = tuple(Fraction(e) for e in entries)
    _guard_batch_size(len(vec), phi, limits)
    table = _tuple_table(vec, phi)
    if not isinstance(table, dict):
        first, second, key = table
        raise LookupBuildError(
            f"labelings {''.join(map(str, first))} and "
            f"{''.join(map(str, second))} both round to {key} "
            f"at {phi} significant digits"
        )
    return TupleLookup(entries=vec, phi=phi, table=table)


def _candidate_vectors(b: int, phi: int) -> Iterator[tuple[Fraction, ...]]:
    """Deterministic stream of batch vectors to try, best bets first.

    Order: the curated vector's prefix, an evenly spaced grid, short runs
    over small denominators, then seeded pseudorandom numerators.  The
    stream is infinite; the caller's budget cuts it off.
    """
    curated = curated_batch_vector(phi)
    if curated is not None and len(curated) >= b:
        yield curated[:b]
    yield tuple(Fraction(i, b + 1) for i in range(1, b + 1))
    for d in range(b + 2, b + 10):
        yield tuple(Fraction(i, d) for i in range(1, b + 1))
    rng = random.Random(f"tuple-lookup:{b}:{phi}")
    d = 10 ** (phi + 4)
    while True:
        nums = sorted(rng.sample(range(1, d), b))
        yield tuple(Fraction(a, d) for a in nums)


def build_tuple_lookup(
    b: int, phi: int, budget: int = 32, limits: Limits = DEFAULT_LIMITS
) -> TupleLookup:
    """Find a b-point vector whose rounded tuples separate all labelings.

    Candidates come from _candidate_vectors and each one is verified by
    exhaustive enumeration of its 2^b labelings; there is no other way to
    prove injectivity.  Raises ValidationError when the pigeonhole bound
    already rules b out, LookupBuildError when the budget runs dry.  The
    budget counts candidate vectors, so the worst case does budget * 2^b
    score evaluations.
    """
    _guard_batch_size(b, phi, limits)
    tried = 0
    for entries in _candidate_vectors(b, phi):
        if tried >= budget:
            break
        tried += 1
        table = _tuple_table(entries, phi)
        if isinstance(table, dict):
            return TupleLookup(entries=entries, phi=phi, table=table)
    raise LookupBuildError(
        f"no injective {b}-point vector found at {phi} significant digits "
        f"after {tried} candidates; retry with a smaller batch"
    )


_LOOKUP_CACHE: dict[tuple[int, int], TupleLookup] = {}


def _cached_lookup(b: int, phi: int, limits: Limits) -> TupleLookup:
    key = (phi, b)
    found = _LOOKUP_CACHE.get(key)
    if found is None:
        found = build_tuple_lookup(b, phi, limits=limits)
        _LOOKUP_CACHE[key] = found
    return found


class ScoringOracle(Protocol):
    """What batched_inference needs from the curator's reporting side."""

    def decimal_scores(
        self, entries: Sequence[Fraction], phi: int, indices: Sequence[int] | None = None
    ) -> tuple[DecimalScore, DecimalScore]:
        """Return (log loss, AUC) at phi digits for predictions on the
        given dataset indices (the whole dataset when indices is None)."""
        ...

    def decimal_scores_for_binary(
        self, n: int, phi: int, indices: Sequence[int] | None = None
    ) -> tuple[DecimalScore, DecimalScore]:
        """Same, for the named binary construction of size n; the entries
        are too large to ship once n passes the low thirties."""
        ...


@dataclass(frozen=True)
class BatchSpec:
    """One planned oracle query: which indices, resolved how."""

    indices: tuple[int, ...]
    method: str  # "tuple-table" or "binary-decimal"
    fill: tuple[int, ...] = ()  # already-recovered indices used as padding


@dataclass(frozen=True)
class AttackPlan:
    """Query schedule for recovering n labels from a phi-digit oracle."""

    n: int
    phi: int
    pigeonhole_batch: int
    bound: int
    method: str
    batch_size: int
    batches: tuple[BatchSpec, ...]

    @property
    def planned_queries(self) -> int:
        return len(self.batches)


def _largest_binary_batch(phi: int, limits: Limits) -> int:
    best = 0
    n = 1
    while n <= limits.binary_decimal_max_n:
        # required precision grows with n, so the first miss ends the scan
        if required_precision_binary(n, limits) > phi:
            break
        best = n
        n += 1
    return best


def plan_batches(n: int, phi: int, limits: Limits = DEFAULT_LIMITS) -> AttackPlan:
    """Choose batch size and method for a phi-digit oracle over n points.

    Picks the larger of the curated tuple-table batch and the biggest
    binary-construction batch whose decimal round-trip is guaranteed at
    this precision.  The formula bound assumes a perfect 6*phi bits per
    query and is reported alongside for comparison; realized schedules
    can need more queries than the bound promises.
    """
    if n < 1:
        raise ValidationError("need at least one label")
    curated = curated_batch_vector(phi)
    b_table = len(curated) if curated is not None else 0
    b_binary = _largest_binary_batch(phi, limits)
    if b_table == 0 and b_binary == 0:
        raise ValidationError(
            f"no batch construction works at {phi} significant digits"
        )
    if b_table >= b_binary:
        method, size = "tuple-table", b_table
    else:
        method, size = "binary-decimal", b_binary
    batches = []
    for start in range(0, n, size):
        chunk = tuple(range(start, min(start + size, n)))
        fill: tuple[int, ...] = ()
        if method == "tuple-table" and len(chunk) < size and start > 0:
            # keep the verified batch length by re-asking already
            # recovered indices; their answers double as a lie detector
            fill = tuple(range(start - (size - len(chunk)), start))
        batches.append(BatchSpec(indices=chunk, method=method, fill=fill))
    return AttackPlan(
        n=n,
        phi=phi,
        pigeonhole_batch=max_unique_batch(phi),
        bound=query_bound(n, phi),
        method=method,
        batch_size=size,
        batches=tuple(batches),
    )


def batched_inference(
    oracle: ScoringOracle,
    n: int,
    phi: int,
    limits: Limits = DEFAULT_LIMITS,
) -> tuple[Labeling, AttackPlan]:
    """Recover all n hidden labels from a phi-digit scoring oracle.

    Executes plan_batches: each query scores one batch of indices, and the
    rounded answers are inverted either through the curated tuple lookup
    or the binary construction's decimal decoder.  Returns the recovered
    labeling and the executed plan (one query per batch, exactly).
    """
    plan = plan_batches(n, phi, limits)
    recovered: list[int | None] = [None] * n
    for batch in plan.batches:
        ask = batch.fill + batch.indices
        if batch.method == "tuple-table":
            lookup = _cached_lookup(len(ask), phi, limits)
            ll, auc_score = oracle.decimal_scores(lookup.entries, phi, indices=ask)
            labeling = lookup.labeling_for(ll, auc_score)
        else:
            ll, _ = oracle.decimal_scores_for_binary(len(ask), phi, indices=ask)
            labeling = decode_binary_from_decimal(ll, len(ask), limits)
        for pos, bit in zip(ask, labeling.bits):
            if recovered[pos] is not None and recovered[pos] != bit:
                raise DecodeError(
                    f"oracle answers disagree on index {pos}; "
                    "the curator is not reporting honestly"
                )
            recovered[pos] = bit
    assert all(bit is not None for bit in recovered)
    return Labeling(tuple(recovered)), plan
