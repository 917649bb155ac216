"""Membership inference against a truthful scoring curator.

The simulated world has two sides.  The curator holds the hidden
membership bits and answers scoring queries about them, exactly or
rounded to phi significant digits.  The adversary sees nothing but those
answers: no model, no per-point predictions, no ground truth.  The
attacks below submit one crafted prediction vector per batch and decode
the hidden bits from the returned scores.

Separation is structural.  Attacks operate on a ScoringView, a facade
holding only the curator's two answer methods, so adversary code cannot
reach the membership bits even by attribute poking.  Accuracy is always
computed back on the curator's side.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Protocol, Sequence

from .core import (
    DecimalScore,
    ExactScore,
    Labeling,
    PredictionVector,
    auc,
    exact_score,
    logloss_decimal,
)
from .errors import ValidationError
from .exact import (
    DEFAULT_LIMITS,
    Limits,
    binary_decimal_response,
    build_binary_vector,
    build_twin_prime_vector,
    decode_binary,
    decode_twin_prime,
)
from .precision import AttackPlan, batched_inference

__all__ = [
    "AttackMode",
    "CandidateSet",
    "MembershipVector",
    "AttackReport",
    "ScoringView",
    "Curator",
    "CuratorOracle",
    "curator_oracle",
    "one_query_attack",
    "fixed_precision_attack",
    "perturb_prime",
    "run_demo",
]


class AttackMode(Enum):
    EXACT_TWIN = "twin"
    EXACT_BINARY = "binary"
    FIXED_PRECISION = "fixed"


@dataclass(frozen=True)
class CandidateSet:
    """The datapoints under attack, in a fixed session order."""

    ids: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.ids)) != len(self.ids):
            raise ValidationError("candidate ids must be unique")
        if not self.ids:
            raise ValidationError("candidate set is empty")

    def __len__(self) -> int:
        return len(self.ids)

    @classmethod
    def numbered(cls, n: int, prefix: str = "point-") -> "CandidateSet":
        if n < 1:
            raise ValidationError("need at least one candidate")
        width = len(str(n - 1))
        return cls(tuple(f"{prefix}{i:0{width}d}" for i in range(n)))


@dataclass(frozen=True)
class MembershipVector:
    """One bit per candidate: 1 means the point was in the training set."""

    bits: Labeling

    def __len__(self) -> int:
        return len(self.bits)

    @classmethod
    def random(cls, n: int, seed: int) -> "MembershipVector":
        rng = random.Random(seed)
        return cls(Labeling(tuple(rng.randint(0, 1) for _ in range(n))))


@dataclass(frozen=True)
class AttackReport:
    """Outcome of one attack run, assessed on the curator side."""

    mode: AttackMode
    queries_used: int
    recovered: MembershipVector
    accuracy: Fraction
    phi: int | None = None
    plan: AttackPlan | None = None


class ScoringView:
    """The only thing an adversary gets: the curator's answer methods."""

    def __init__(self, exact_response, decimal_scores, decimal_scores_for_binary):
        self.exact_response = exact_response
        self.decimal_scores = decimal_scores
        self.decimal_scores_for_binary = decimal_scores_for_binary


class Curator(Protocol):
    """What the attack harness needs from a curator, local or remote."""

    @property
    def queries_used(self) -> int: ...

    def scoring_view(self) -> ScoringView: ...

    def assess(self, claimed: MembershipVector) -> Fraction: ...


class CuratorOracle:
    """Holds the hidden membership bits and reports scores truthfully.

    Queries may target the whole candidate set or, via indices, any
    subset; the predictions then line up with the chosen positions.
    """

    def __init__(self, hidden: MembershipVector, limits: Limits = DEFAULT_LIMITS):
        self.__hidden = hidden
        self._limits = limits
        self._queries = 0

    @property
    def n(self) -> int:
        return len(self.__hidden)

    @property
    def queries_used(self) -> int:
        return self._queries

    def _sub_labels(self, count: int, indices: Sequence[int] | None) -> Labeling:
        bits = self.__hidden.bits.bits
        if indices is None:
            if count != len(bits):
                raise ValidationError(
                    f"expected {len(bits)} predictions, got {count}"
                )
            return Labeling(bits)
        if len(indices) != count:
            raise ValidationError("one prediction per queried index")
        if len(set(indices)) != len(indices):
            raise ValidationError("queried indices must be distinct")
        for i in indices:
            if not 0 <= i < len(bits):
                raise ValidationError(f"index {i} outside the candidate set")
        return Labeling(tuple(bits[i] for i in indices))

    def exact_response(
        self, entries: Sequence[Fraction], indices: Sequence[int] | None = None
    ) -> ExactScore:
        labels = self._sub_labels(len(entries), indices)
        self._queries += 1
        return exact_score(PredictionVector(tuple(map(Fraction, entries))), labels)

    def decimal_scores(
        self,
        entries: Sequence[Fraction],
        phi: int,
        indices: Sequence[int] | None = None,
    ) -> tuple[DecimalScore, DecimalScore]:
        labels = self._sub_labels(len(entries), indices)
        vec = PredictionVector(tuple(map(Fraction, entries)))
        self._queries += 1
        return logloss_decimal(vec, labels, phi), auc(vec, labels, phi)

    def decimal_scores_for_binary(
        self, n: int, phi: int, indices: Sequence[int] | None = None
    ) -> tuple[DecimalScore, DecimalScore]:
        labels = self._sub_labels(n, indices)
        self._queries += 1
        return binary_decimal_response(labels, phi, self._limits)

    def assess(self, claimed: MembershipVector) -> Fraction:
        """Curator-side accuracy of a claimed membership vector."""
        truth = self.__hidden.bits.bits
        if len(claimed) != len(truth):
            raise ValidationError("claimed vector has the wrong length")
        hits = sum(a == b for a, b in zip(claimed.bits.bits, truth))
        return Fraction(hits, len(truth))

    def scoring_view(self) -> ScoringView:
        return ScoringView(
            self.exact_response, self.decimal_scores, self.decimal_scores_for_binary
        )


def curator_oracle(
    hidden: MembershipVector, limits: Limits = DEFAULT_LIMITS
) -> CuratorOracle:
    """The oracle of the simulation: truthful scores over hidden bits."""
    return CuratorOracle(hidden, limits)


def _recover_exact(
    view: ScoringView, n: int, mode: AttackMode, limits: Limits
) -> Labeling:
    """Adversary side of the exact modes: one query, then decode."""
    if mode is AttackMode.EXACT_TWIN:
        vector = build_twin_prime_vector(n, limits)
        return decode_twin_prime(view.exact_response(vector.entries), limits)
    if mode is AttackMode.EXACT_BINARY:
        vector = build_binary_vector(n, limits)
        return decode_binary(view.exact_response(vector.entries), n, limits)
    raise ValidationError(f"{mode} is not an exact mode")


def one_query_attack(
    candidates: CandidateSet,
    oracle: Curator,
    mode: AttackMode = AttackMode.EXACT_TWIN,
    limits: Limits = DEFAULT_LIMITS,
) -> AttackReport:
    """Full membership recovery from a single exact-score response.

    Decoder errors propagate: they mean the oracle is dishonest or the
    session is misconfigured, and there is no labeling to report.
    """
    before = oracle.queries_used
    bits = _recover_exact(oracle.scoring_view(), len(candidates), mode, limits)
    recovered = MembershipVector(bits)
    return AttackReport(
        mode=mode,
        queries_used=oracle.queries_used - before,
        recovered=recovered,
        accuracy=oracle.assess(recovered),
    )


def fixed_precision_attack(
    candidates: CandidateSet,
    oracle: Curator,
    phi: int,
    limits: Limits = DEFAULT_LIMITS,
) -> AttackReport:
    """Membership recovery from rounded (LL, AUC) answers, batch by batch."""
    before = oracle.queries_used
    bits, plan = batched_inference(oracle.scoring_view(), len(candidates), phi, limits)
    recovered = MembershipVector(bits)
    return AttackReport(
        mode=AttackMode.FIXED_PRECISION,
        queries_used=oracle.queries_used - before,
        recovered=recovered,
        accuracy=oracle.assess(recovered),
        phi=phi,
        plan=plan,
    )


def perturb_prime(score: ExactScore, prime: int, delta: int) -> ExactScore:
    """Shift one prime's exponent in the score's factorization by delta.

    Models a tampering curator.  The decoders treat any single-prime
    perturbation of a twin-prime score as ill-formed rather than decoding
    it to a wrong labeling, which is what makes honesty observable.
    """
    if delta not in (-1, 1):
        raise ValidationError("tampering model shifts an exponent by one")
    if prime < 2:
        raise ValidationError("need a prime to perturb")
    return ExactScore(value=score.value * Fraction(prime) ** delta, n=score.n)


def run_demo(
    n: int,
    mode: AttackMode,
    seed: int,
    phi: int | None = None,
    limits: Limits = DEFAULT_LIMITS,
) -> AttackReport:
    """Self-contained attack demonstration with a seeded hidden vector."""
    hidden = MembershipVector.random(n, seed)
    oracle = curator_oracle(hidden, limits)
    candidates = CandidateSet.numbered(n)
    if mode is AttackMode.FIXED_PRECISION:
        return fixed_precision_attack(candidates, oracle, 2 if phi is None else phi, limits)
    if phi is not None:
        raise ValidationError("significant digits only apply to fixed-precision mode")
    return one_query_attack(candidates, oracle, mode, limits)
