"""Adversarial constructions whose exact scores decode back to the labels.

Three encodings, all driven by unique factorization:

* twin-prime: entry i is p_i/(p_i + 2) over twin pairs starting at (5, 7).
  The score's numerator is prod (p_i + 2), which reveals n; the reduced
  denominator is 2^m times the p_i of the 1-labeled points.
* binary-representation: entry i is a_i/(1 + a_i) with a_i = 2^(2^(i-1)).
  The reduced denominator is exactly 2^N where N's little-endian bits are
  the labels, so one exponent carries the whole labeling.
* multi-class: row i is (1, p_i, p_i^2, ...) / alpha_i over plain primes;
  the score divides prod alpha_i by prod p_i^(label_i - 1).

Decoders refuse anything that does not factor exactly as constructed:
a tampered score raises DecodeError rather than decoding to wrong labels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

from .core import (
    ClassLabeling,
    DecimalScore,
    ExactScore,
    Labeling,
    PredictionMatrix,
    PredictionVector,
    ScoreKind,
    _round_decimal_sig,
    coprime_fraction,
    round_fraction_sig,
)
from .errors import DecodeError, PrecisionError, ValidationError
from .primes import factor_over, first_primes, twin_primes

from decimal import Decimal, localcontext
from fractions import Fraction


@dataclass(frozen=True)
class Limits:
    """Size guards; defaults keep demo-scale inputs from exploding."""

    # entry n of the binary construction is a 2^(n-1)-bit integer, so the
    # vector itself stops being materializable long before the score does
    binary_max_n: int = 32
    twin_max_n: int = 100_000
    multiclass_max_cells: int = 10_000
    # full all-ones numerator verification is skipped above this size
    binary_full_verify_bits: int = 1 << 26
    # the decimal route never touches the huge integers, only ln C(n)
    binary_decimal_max_n: int = 4096
    lookup_max_batch: int = 16
    # past this, binary entries and scores are walls of digits on the wire
    # (the exponent doubles per point and str() of an int is quadratic)
    binary_wire_max_n: int = 16


DEFAULT_LIMITS = Limits()


class BinaryRepVector(PredictionVector):
    """Prediction vector of the binary-representation construction.

    Overrides the cached score-factor parts with closed forms: the
    denominator product telescopes to 2^(2^n) - 1 and every numerator is
    a plain power of two, so scoring stays in shift territory instead of
    multiplying quarter-gigabyte integers at n = 32.
    """

    @property
    def n(self) -> int:
        return len(self.entries)

    @cached_property
    def _factor_parts(self) -> tuple[tuple[int, int, int, int], ...]:
        return tuple((1 << i, 1, 0, 1) for i in range(len(self.entries)))

    @cached_property
    def _denominator_product(self) -> tuple[int, int]:
        return 0, (1 << (1 << len(self.entries))) - 1


def build_twin_prime_vector(n: int, limits: Limits = DEFAULT_LIMITS) -> PredictionVector:
    """Entries p_i/(p_i + 2) over the first n lower twins (5/7, 11/13, ...)."""
    if n < 1:
        raise ValidationError("need at least one datapoint")
    if n > limits.twin_max_n:
        raise ValidationError(f"twin-prime construction capped at n = {limits.twin_max_n}")
    table = twin_primes(n)
    return PredictionVector(tuple(Fraction(p, p + 2) for p in table.primes))


def decode_twin_prime_value(value: Fraction, limits: Limits = DEFAULT_LIMITS) -> Labeling:
    """Recover the labeling from a bare twin-prime score value; n is inferred."""
    numerator, denominator = value.numerator, value.denominator
    # Peel upper twins off the numerator in order; the count is n.
    table = twin_primes(8)
    rest = numerator
    n = 0
    while rest > 1:
        if n >= limits.twin_max_n:
            raise DecodeError("numerator demands more twin primes than the guard allows")
        if n >= len(table):
            table = twin_primes(len(table) * 2)
        upper = table.primes[n] + 2
        if rest % upper:
            raise DecodeError(f"numerator has an unexpected factor (stuck at {rest})")
        rest //= upper
        if rest % upper == 0:
            raise DecodeError(f"numerator contains {upper} twice")
        n += 1
    if n == 0:
        raise DecodeError("numerator of 1 encodes no datapoints")
    lowers = table.primes[:n]
    parts = factor_over(denominator, (2, *lowers))
    if parts.leftover != 1:
        raise DecodeError(f"denominator has a foreign factor {parts.leftover}")
    bits = [0] * n
    for i, p in enumerate(lowers):
        e = parts.exponents.get(p, 0)
        if e > 1:
            raise DecodeError(f"denominator contains {p} twice")
        bits[i] = e
    m = parts.exponents.get(2, 0)
    if m != n - sum(bits):
        raise DecodeError(
            f"power of two {m} disagrees with the {n - sum(bits)} zero-labeled points"
        )
    return Labeling(tuple(bits))


def decode_twin_prime(score: ExactScore, limits: Limits = DEFAULT_LIMITS) -> Labeling:
    """Recover the labeling from a twin-prime exact score; n is inferred."""
    labeling = decode_twin_prime_value(score.value, limits)
    if score.n != len(labeling):
        raise DecodeError(
            f"score claims n = {score.n} but the factorization encodes {len(labeling)}"
        )
    return labeling


def build_binary_vector(n: int, limits: Limits = DEFAULT_LIMITS) -> BinaryRepVector:
    """Entries a_i/(1 + a_i) with a_i = 2^(2^(i-1)): 2/3, 4/5, 16/17, ..."""
    if n < 1:
        raise ValidationError("need at least one datapoint")
    if n > limits.binary_max_n:
        raise ValidationError(f"binary construction capped at n = {limits.binary_max_n}")
    entries = []
    for i in range(1, n + 1):
        a = 1 << (1 << (i - 1))
        entries.append(coprime_fraction(a, a + 1))
    return BinaryRepVector(tuple(entries))


def decode_binary(
    score: ExactScore, n: int | None = None, limits: Limits = DEFAULT_LIMITS
) -> Labeling:
    """Read the labeling out of the reduced denominator's exponent of two."""
    if n is None:
        n = score.n
    elif n != score.n:
        raise DecodeError(f"caller says n = {n} but the score carries n = {score.n}")
    numerator, denominator = score.value.numerator, score.value.denominator
    expected_bits = 1 << n
    if numerator.bit_length() != expected_bits:
        raise DecodeError("numerator is not the binary-construction product for this n")
    if numerator.bit_length() <= limits.binary_full_verify_bits:
        # exact all-ones check: prod (1 + a_i) == 2^(2^n) - 1
        if numerator & (numerator + 1):
            raise DecodeError("numerator is not the binary-construction product")
    if denominator.bit_count() != 1:
        raise DecodeError("denominator is not a power of two")
    exponent = denominator.bit_length() - 1
    if exponent >= expected_bits:
        raise DecodeError(f"denominator exponent {exponent} needs more than {n} points")
    return Labeling(tuple((exponent >> i) & 1 for i in range(n)))


def _log_sum_digits(n: int) -> int:
    """Decimal digits in the integer part of sum_j ln(1 + 2^(2^(j-1)))."""
    # the sum is (2^n - 1) ln 2 plus corrections below ln 2
    log10_c = n * math.log10(2) + math.log10(math.log(2)) if n > 40 else math.log10(
        (2.0**n - 1) * math.log(2) + 0.7
    )
    return max(1, int(log10_c) + 1)


def required_precision_binary(n: int, limits: Limits = DEFAULT_LIMITS) -> int:
    """Significant digits phi that guarantee decode_binary_from_decimal works.

    Sufficient condition: the worst-case quantization error of LL at phi
    digits, propagated through N = (C - n LL) log2(e), stays below 1/4.
    """
    if n < 1:
        raise ValidationError("need at least one datapoint")
    if n > limits.binary_decimal_max_n:
        raise ValidationError(
            f"binary decimal route capped at n = {limits.binary_decimal_max_n}"
        )
    if n <= 40:
        c = (2.0**n - 1) * math.log(2) + 0.7
        log10_x = math.log10(4 * c / math.log(2))
    else:
        # log-space to dodge overflow: C ~ 2^n ln 2, X = 4 C log2(e)
        log10_x = math.log10(4 / math.log(2)) + n * math.log10(2) + math.log10(math.log(2))
    return int(math.floor(log10_x + 1e-12)) + 2


def _binary_log_constant(n: int, prec: int) -> Decimal:
    """C = sum_j ln(1 + 2^(2^(j-1))) without materializing the huge terms.

    Each term is 2^(j-1) ln 2 + ln(1 + 2^-2^(j-1)); corrections below the
    working precision are dropped.
    """
    with localcontext() as ctx:
        ctx.prec = prec + 10
        ln2 = Decimal(2).ln()
        total = ((1 << n) - 1) * ln2
        for j in range(1, n + 1):
            scale = 1 << (j - 1)
            if scale > (prec + 12) * 4:  # 2^-scale is beyond the precision
                break
            correction = (1 + Decimal(2) ** -scale).ln()
            total += correction
        return +total


def decode_binary_from_decimal(
    ll: DecimalScore, n: int, limits: Limits = DEFAULT_LIMITS
) -> Labeling:
    """Recover the labeling from a rounded log-loss of the binary construction.

    Inverts LL = (C - N ln 2)/n for the integer N; rejects when the rounded
    digits leave the nearest integer ambiguous (residual above 1/4).
    """
    if ll.kind is not ScoreKind.LOGLOSS:
        raise ValidationError("need a log-loss score")
    if n < 1:
        raise ValidationError("need at least one datapoint")
    if n > limits.binary_decimal_max_n:
        raise ValidationError(
            f"binary decimal route capped at n = {limits.binary_decimal_max_n}"
        )
    prec = _log_sum_digits(n) + max(ll.phi, 20) + 10
    with localcontext() as ctx:
        ctx.prec = prec
        c = _binary_log_constant(n, prec)
        estimate = (c - n * Decimal(ll.digits)) / Decimal(2).ln()
        nearest = int(estimate.to_integral_value())
        residual = abs(estimate - nearest)
        if residual > Decimal("0.25"):
            raise PrecisionError(
                f"{ll.phi} digits leave the exponent ambiguous (residual {residual})"
            )
    if nearest < 0 or nearest >= 1 << n:
        raise DecodeError(f"decoded exponent {nearest} is out of range for n = {n}")
    return Labeling(tuple((nearest >> i) & 1 for i in range(n)))


def binary_decimal_response(
    labels: Labeling, phi: int, limits: Limits = DEFAULT_LIMITS
) -> tuple[DecimalScore, DecimalScore]:
    """(LL, AUC) of the binary construction against labels, in closed form.

    LL = (C(n) - N ln 2) / n with N the labeling's bitmask, and AUC follows
    from rank sums since the entries are strictly increasing.  Nothing here
    grows with 2^(2^n), so a curator can answer far past the sizes where
    the construction's entries stop fitting in memory.  Agrees digit for
    digit with scoring the materialized vector.
    """
    if phi < 1:
        raise ValidationError("need at least one significant digit")
    n = len(labels)
    if n < 1:
        raise ValidationError("need at least one datapoint")
    if n > limits.binary_decimal_max_n:
        raise ValidationError(
            f"binary decimal route capped at n = {limits.binary_decimal_max_n}"
        )
    bitmask = sum(bit << i for i, bit in enumerate(labels.bits))
    sig = 2 * phi + 10
    prec = sig + _log_sum_digits(n) + 10
    with localcontext() as ctx:
        ctx.prec = prec
        c = _binary_log_constant(n, prec)
        ll_value = (c - bitmask * Decimal(2).ln()) / n
        ll = DecimalScore(
            digits=_round_decimal_sig(ll_value, phi), phi=phi, kind=ScoreKind.LOGLOSS
        )
    ones = sum(labels.bits)
    if ones == 0 or ones == n:
        return ll, DecimalScore(digits="", phi=phi, kind=ScoreKind.AUC_NOT_DEFINED)
    rank_sum = sum(i + 1 for i, bit in enumerate(labels.bits) if bit)
    u = rank_sum - ones * (ones + 1) // 2
    auc_value = Fraction(u, ones * (n - ones))
    return ll, DecimalScore(
        digits=round_fraction_sig(auc_value, phi), phi=phi, kind=ScoreKind.AUC
    )


def build_multiclass_matrix(
    n: int, k: int, limits: Limits = DEFAULT_LIMITS
) -> PredictionMatrix:
    """Row i is (1, p_i, ..., p_i^(k-1)) / alpha_i over the plain primes 2, 3, 5, ...

    alpha_i = 1 + p_i + ... + p_i^(k-1) normalizes each row to sum 1.
    """
    if n < 1:
        raise ValidationError("need at least one datapoint")
    if k < 2:
        raise ValidationError("need at least two classes")
    if n * k > limits.multiclass_max_cells:
        raise ValidationError(
            f"multi-class construction capped at n * k = {limits.multiclass_max_cells}"
        )
    rows = []
    for p in first_primes(n):
        alpha = (p**k - 1) // (p - 1)
        rows.append(tuple(Fraction(p**j, alpha) for j in range(k)))
    return PredictionMatrix(tuple(rows))


def decode_multiclass(
    score: ExactScore, n: int, k: int, limits: Limits = DEFAULT_LIMITS
) -> ClassLabeling:
    """Recover class labels from a multi-class exact score.

    The score equals prod(alpha_i) / M with M = prod p_i^(label_i - 1);
    M is isolated exactly, then factored over the first n primes.
    """
    if score.n != n:
        raise DecodeError(f"caller says n = {n} but the score carries n = {score.n}")
    if n < 1 or k < 2:
        raise ValidationError("need n >= 1 and k >= 2")
    if n * k > limits.multiclass_max_cells:
        raise ValidationError(
            f"multi-class construction capped at n * k = {limits.multiclass_max_cells}"
        )
    primes = first_primes(n)
    alpha_product = 1
    for p in primes:
        alpha_product *= (p**k - 1) // (p - 1)
    m = Fraction(alpha_product) / score.value
    if m.denominator != 1:
        raise DecodeError("score does not divide the alpha product")
    parts = factor_over(m.numerator, primes)
    if parts.leftover != 1:
        raise DecodeError(f"label product has a foreign factor {parts.leftover}")
    classes = []
    for p in primes:
        e = parts.exponents.get(p, 0)
        if e > k - 1:
            raise DecodeError(f"exponent of {p} exceeds the class count")
        classes.append(e + 1)
    return ClassLabeling(tuple(classes), k)
