"""Core scoring types and operations.

The central object is the exact score: for predictions x in (0, 1)^n and
binary labels l, the per-point log-loss contributions sum to

    n * LL(x, l) = -sum_i [ l_i ln x_i + (1 - l_i) ln (1 - x_i) ],

so exp(n * LL) is the reciprocal of prod_i (x_i if l_i = 1 else 1 - x_i),
a ratio of integers.  Working with that reduced rational removes every
logarithm from the pipeline: no irrational number is ever materialized,
and scores can be compared, serialized, and factored exactly.

Rounded scores (``DecimalScore``) model a bounded-precision reporting
channel: a value is collapsed to a fixed number of significant digits
with half-even rounding and printed in normalized scientific notation.
Equality of rounded scores is string equality.
"""

from __future__ import annotations

import math
import re
import sys
from dataclasses import dataclass
from decimal import Context, Decimal, ROUND_HALF_EVEN, localcontext
from enum import Enum
from fractions import Fraction
from functools import cached_property
from typing import Iterable

from .errors import ValidationError

Rational = Fraction


def coprime_fraction(numerator: int, denominator: int) -> Fraction:
    """Build a Fraction from parts already known to be coprime and positive.

    Skips the constructor's gcd pass, which matters when the parts are
    hundreds of megabytes (binary-representation scores).  Falls back to
    the public constructor if the private fast paths ever disappear.
    """
    try:
        return Fraction(numerator, denominator, _normalize=False)
    except TypeError:
        pass
    fast = getattr(Fraction, "_from_coprime_ints", None)
    if fast is not None:
        return fast(numerator, denominator)
    return Fraction(numerator, denominator)


def _split_pow2(value: int) -> tuple[int, int]:
    """value as (t, odd) with value = odd << t."""
    if value <= 0:
        raise ValidationError("positive integer required")
    t = (value & -value).bit_length() - 1
    return t, value >> t


@dataclass(frozen=True)
class Labeling:
    """Binary labels, one per datapoint, index 1 leftmost."""

    bits: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.bits) < 1:
            raise ValidationError("a labeling needs at least one bit")
        if any(b not in (0, 1) for b in self.bits):
            raise ValidationError("labeling bits must be 0 or 1")

    def __len__(self) -> int:
        return len(self.bits)

    @property
    def ones(self) -> tuple[int, ...]:
        """1-based positions labeled 1."""
        return tuple(i + 1 for i, b in enumerate(self.bits) if b)

    @classmethod
    def from_string(cls, text: str) -> "Labeling":
        if not text or any(c not in "01" for c in text):
            raise ValidationError(f"not a bitstring: {text!r}")
        return cls(tuple(int(c) for c in text))

    def to_string(self) -> str:
        return "".join(str(b) for b in self.bits)


@dataclass(frozen=True)
class ClassLabeling:
    """Multi-class labels in 1..k, one per datapoint."""

    classes: tuple[int, ...]
    k: int

    def __post_init__(self) -> None:
        if self.k < 2:
            raise ValidationError("need at least two classes")
        if len(self.classes) < 1:
            raise ValidationError("a labeling needs at least one entry")
        if any(not 1 <= c <= self.k for c in self.classes):
            raise ValidationError("class labels must lie in 1..k")

    def __len__(self) -> int:
        return len(self.classes)

    @classmethod
    def from_string(cls, text: str, k: int) -> "ClassLabeling":
        try:
            values = tuple(int(part) for part in text.split(","))
        except ValueError:
            raise ValidationError(f"not a class list: {text!r}") from None
        return cls(values, k)

    def to_string(self) -> str:
        return ",".join(str(c) for c in self.classes)


@dataclass(frozen=True)
class PredictionVector:
    """Per-point probabilities of the positive class, each strictly in (0, 1).

    Endpoints are rejected up front: a probability of exactly 0 or 1 makes
    the log-loss infinite for one labeling, and keeping the open interval
    keeps every score finite and every reciprocal well defined.
    """

    entries: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        if len(self.entries) < 1:
            raise ValidationError("a prediction vector needs at least one entry")
        for x in self.entries:
            if not isinstance(x, Fraction):
                raise ValidationError("entries must be Fractions")
            if not 0 < x < 1:
                raise ValidationError(f"prediction {x} outside the open interval (0, 1)")

    def __len__(self) -> int:
        return len(self.entries)

    # Pre-split factor parts let exact_score run without re-deriving the
    # complements or re-reducing anything per call; for the power-of-two
    # heavy constructions this is the difference between shifts and
    # multi-hundred-megabyte multiplications.
    @cached_property
    def _factor_parts(self) -> tuple[tuple[int, int, int, int], ...]:
        parts = []
        for x in self.entries:
            num, den = x.numerator, x.denominator
            ns, no = _split_pow2(num)
            cs, co = _split_pow2(den - num)
            parts.append((ns, no, cs, co))
        return tuple(parts)

    @cached_property
    def _denominator_product(self) -> tuple[int, int]:
        shift = 0
        odd = 1
        for x in self.entries:
            s, o = _split_pow2(x.denominator)
            shift += s
            if o > 1:
                odd *= o
        return shift, odd


@dataclass(frozen=True)
class PredictionMatrix:
    """Row-stochastic class probabilities: rows[i][c] in (0, 1), each row sums to 1."""

    rows: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self) -> None:
        if len(self.rows) < 1:
            raise ValidationError("a prediction matrix needs at least one row")
        k = len(self.rows[0])
        if k < 2:
            raise ValidationError("need at least two classes per row")
        for row in self.rows:
            if len(row) != k:
                raise ValidationError("ragged prediction matrix")
            for x in row:
                if not isinstance(x, Fraction) or not 0 < x < 1:
                    raise ValidationError("matrix entries must be Fractions in (0, 1)")
            if sum(row) != 1:
                raise ValidationError("each row must sum to exactly 1")

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def k(self) -> int:
        return len(self.rows[0])


@dataclass(frozen=True)
class ExactScore:
    """exp(n * LL) as a reduced rational, with the dataset size it belongs to."""

    value: Fraction
    n: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValidationError("score needs a positive dataset size")
        if self.value <= 0:
            raise ValidationError("exact scores are positive by construction")


class ScoreKind(Enum):
    LOGLOSS = "logloss"
    AUC = "auc"
    AUC_NOT_DEFINED = "auc_not_defined"


@dataclass(frozen=True)
class DecimalScore:
    """A value rounded half-even to exactly phi significant digits.

    ``digits`` is the normalized scientific form, e.g. ``"6.93e-1"``;
    it is empty exactly when the kind is AUC_NOT_DEFINED.  Two rounded
    scores are equal iff their strings are equal.
    """

    digits: str
    phi: int
    kind: ScoreKind

    def __post_init__(self) -> None:
        if self.phi < 1:
            raise ValidationError("need at least one significant digit")
        if self.kind is ScoreKind.AUC_NOT_DEFINED:
            if self.digits:
                raise ValidationError("an undefined AUC carries no digits")
        elif not self.digits:
            raise ValidationError("a defined score needs digits")

    def wire(self) -> str:
        return "ND" if self.kind is ScoreKind.AUC_NOT_DEFINED else self.digits


def _format_sci(digits: str, exponent: int) -> str:
    """Normalized scientific notation with a fixed digit count."""
    mantissa = digits[0] if len(digits) == 1 else f"{digits[0]}.{digits[1:]}"
    return f"{mantissa}e{exponent}"


def round_fraction_sig(value: Fraction, phi: int) -> str:
    """Round a nonnegative rational to phi significant digits, half-even, exactly."""
    if phi < 1:
        raise ValidationError("need at least one significant digit")
    if value < 0:
        raise ValidationError("negative values are not produced by these scores")
    if value == 0:
        return _format_sci("0" * phi, 0)
    num, den = value.numerator, value.denominator
    # decimal exponent of the leading digit: 10^e <= value < 10^(e+1)
    e = len(str(num)) - len(str(den))
    if abs(num * 10 ** max(0, -e)) < den * 10 ** max(0, e):
        e -= 1
    while num * 10 ** max(0, -(e + 1)) >= den * 10 ** max(0, e + 1):
        e += 1
    shift = phi - 1 - e
    if shift >= 0:
        q, r = divmod(num * 10**shift, den)
    else:
        q, r = divmod(num, den * 10**-shift)
        den = den * 10**-shift
    if 2 * r > den or (2 * r == den and q % 2 == 1):
        q += 1
    if q == 10**phi:  # rounding carried into the next decade
        q //= 10
        e += 1
    return _format_sci(str(q), e)


def _round_decimal_sig(value: Decimal, phi: int) -> str:
    ctx = Context(prec=phi, rounding=ROUND_HALF_EVEN)
    rounded = ctx.plus(value)
    sign, digits, exp = rounded.as_tuple()
    if sign:
        raise ValidationError("negative values are not produced by these scores")
    text = "".join(str(d) for d in digits)
    if text == "0":
        return _format_sci("0" * phi, 0)
    text = text.ljust(phi, "0")
    exponent = exp + len(digits) - 1
    return _format_sci(text, exponent)


def _ln_positive_int(m: int, prec: int) -> Decimal:
    """ln(m) for m >= 1 under the current decimal context.

    Very wide integers are cut down to a top slice first: with
    m = head * 2^shift * (1 + delta), delta < 2^(1 - kept_bits), so keeping
    a few bits more than prec / log10(2) leaves the truncation far below
    the working ulp.  Decimal(m) on a multi-hundred-megabyte int would
    otherwise do a quadratic base conversion.
    """
    kept = 4 * prec + 32
    if m.bit_length() <= kept:
        return Decimal(m).ln()
    shift = m.bit_length() - kept
    return Decimal(m >> shift).ln() + shift * Decimal(2).ln()


def _ln_fraction(value: Fraction, sig_digits: int) -> Decimal:
    """ln(value) to at least sig_digits significant digits, deterministically.

    Doubles the working precision whenever cancellation between ln(p) and
    ln(q) eats into the guard digits (p/q near 1).
    """
    p, q = value.numerator, value.denominator
    if p == q:
        return Decimal(0)
    magnitude = len(str(p.bit_length() + q.bit_length()))
    prec = sig_digits + 10 + magnitude
    while True:
        with localcontext() as ctx:
            ctx.prec = prec
            lp = _ln_positive_int(p, prec)
            lq = _ln_positive_int(q, prec)
            result = lp - lq
        biggest = max(lp.adjusted(), lq.adjusted(), 0)
        lost = biggest - result.adjusted()
        if prec - lost >= sig_digits + 5:
            return result
        prec = prec * 2 + max(lost, 0)


def exact_score(x: PredictionVector, labels: Labeling) -> ExactScore:
    """The reciprocal of prod_i (x_i if l_i else 1 - x_i), reduced.

    Equal to exp(n * LL(x, labels)); exact for any valid inputs.  The
    numerator/denominator products are accumulated with their powers of
    two split out, so constructions built from powers of two reduce via
    shifts instead of big-integer gcds.
    """
    if len(x) != len(labels):
        raise ValidationError(
            f"vector has {len(x)} entries but labeling has {len(labels)}"
        )
    sel_shift = 0
    sel_odd = 1
    for part, bit in zip(x._factor_parts, labels.bits):
        ns, no, cs, co = part
        if bit:
            sel_shift += ns
            if no > 1:
                sel_odd *= no
        else:
            sel_shift += cs
            if co > 1:
                sel_odd *= co
    den_shift, den_odd = x._denominator_product
    common = min(sel_shift, den_shift)
    sel_shift -= common
    den_shift -= common
    if sel_odd > 1 and den_odd > 1:
        g = math.gcd(sel_odd, den_odd)
        if g > 1:
            sel_odd //= g
            den_odd //= g
    # x << 0 copies; guard so cached huge products are shared, not duplicated
    num = den_odd if den_shift == 0 else den_odd << den_shift
    den = sel_odd if sel_shift == 0 else sel_odd << sel_shift
    return ExactScore(value=coprime_fraction(num, den), n=len(x))


def exact_score_multiclass(v: PredictionMatrix, labels: ClassLabeling) -> ExactScore:
    """Reciprocal of prod_i v[i][l_i], the multi-class exact score."""
    if len(v) != len(labels):
        raise ValidationError(
            f"matrix has {len(v)} rows but labeling has {len(labels)}"
        )
    if v.k != labels.k:
        raise ValidationError(f"matrix has {v.k} classes but labeling says {labels.k}")
    product = Fraction(1)
    for row, c in zip(v.rows, labels.classes):
        product *= row[c - 1]
    return ExactScore(value=1 / product, n=len(v))


def logloss_decimal(x: PredictionVector, labels: Labeling, phi: int) -> DecimalScore:
    """LL(x, labels) rounded half-even to phi significant digits.

    Computed as ln(exact score) / n at a working precision generous enough
    that the single final rounding is the only rounding.
    """
    if phi < 1:
        raise ValidationError("need at least one significant digit")
    score = exact_score(x, labels)
    sig = 2 * phi + 10
    ln_value = _ln_fraction(score.value, sig)
    with localcontext() as ctx:
        ctx.prec = max(sig, ln_value.adjusted() + sig)
        ll = ln_value / score.n
    return DecimalScore(digits=_round_decimal_sig(ll, phi), phi=phi, kind=ScoreKind.LOGLOSS)


def auc_exact(x: PredictionVector, labels: Labeling) -> Fraction | None:
    """Mann-Whitney AUC as an exact rational; None when a class is empty.

    Ties get half credit, computed via midranks over the exact entries.
    """
    if len(x) != len(labels):
        raise ValidationError(
            f"vector has {len(x)} entries but labeling has {len(labels)}"
        )
    n_pos = sum(labels.bits)
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    order = sorted(range(len(labels)), key=lambda i: x.entries[i])
    rank_sum = Fraction(0)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and x.entries[order[j + 1]] == x.entries[order[i]]:
            j += 1
        midrank = Fraction(i + j + 2, 2)  # ranks are 1-based
        for idx in order[i : j + 1]:
            if labels.bits[idx]:
                rank_sum += midrank
        i = j + 1
    u = rank_sum - Fraction(n_pos * (n_pos + 1), 2)
    return u / (n_pos * n_neg)


def auc(x: PredictionVector, labels: Labeling, phi: int) -> DecimalScore:
    """Exact AUC rounded to phi significant digits; AUC_NOT_DEFINED if one-class."""
    value = auc_exact(x, labels)
    if value is None:
        return DecimalScore(digits="", phi=phi, kind=ScoreKind.AUC_NOT_DEFINED)
    return DecimalScore(digits=round_fraction_sig(value, phi), phi=phi, kind=ScoreKind.AUC)


def _allow_int_digits(digits: int) -> None:
    # scores can carry integers past the interpreter's int<->str cap
    # (4300 digits by default); widen it rather than truncate the wire
    try:
        current = sys.get_int_max_str_digits()
    except AttributeError:
        return
    if current and digits > current:
        sys.set_int_max_str_digits(digits + 10)


def parse_rational(text: str) -> Fraction:
    """Parse 'p/q' (or a bare integer) into a positive reduced Fraction."""
    _allow_int_digits(len(text))
    try:
        if "/" in text:
            p_text, q_text = text.split("/", 1)
            value = Fraction(int(p_text), int(q_text))
        else:
            value = Fraction(int(text))
    except (ValueError, ZeroDivisionError):
        raise ValidationError(f"not a rational: {text!r}") from None
    if value <= 0:
        raise ValidationError(f"expected a positive rational, got {text!r}")
    return value


def format_rational(value: Fraction) -> str:
    bits = max(value.numerator.bit_length(), value.denominator.bit_length())
    _allow_int_digits(bits * 302 // 1000 + 3)
    return f"{value.numerator}/{value.denominator}"


def prediction_vector(entries: Iterable[Fraction | str]) -> PredictionVector:
    """Convenience constructor accepting Fractions or 'p/q' strings."""
    parsed: list[Fraction] = []
    for e in entries:
        parsed.append(parse_rational(e) if isinstance(e, str) else e)
    return PredictionVector(tuple(parsed))


_WIRE_SCORE = re.compile(r"(\d)(?:\.(\d+))?e(-?\d+)\Z")


def parse_decimal_score(text: str, phi: int, kind: ScoreKind) -> DecimalScore:
    """Rebuild a DecimalScore from its wire form (inverse of .wire())."""
    if text == "ND":
        if kind is not ScoreKind.LOGLOSS:
            return DecimalScore(digits="", phi=phi, kind=ScoreKind.AUC_NOT_DEFINED)
        raise ValidationError("a log loss is always defined")
    m = _WIRE_SCORE.match(text)
    if m is None:
        raise ValidationError(f"not a rounded score: {text!r}")
    digits = m.group(1) + (m.group(2) or "")
    if len(digits) != phi:
        raise ValidationError(
            f"score {text!r} carries {len(digits)} significant digits, expected {phi}"
        )
    return DecimalScore(digits=text, phi=phi, kind=kind)
