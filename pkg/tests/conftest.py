"""Shared fixtures and independent reference oracles.

The oracles here deliberately avoid the package's own arithmetic paths:
exact scores come from a plain Fraction product, log losses from mpmath
floating point, AUC from literal pair counting.  Tests compare the
package's integer pipelines against these.
"""

from decimal import Context, Decimal, ROUND_HALF_EVEN
from fractions import Fraction

import mpmath as mp
import pytest
from hypothesis import strategies as st


def naive_exact_score(entries, labels) -> Fraction:
    """1 / prod(x_i if l_i else 1 - x_i), straight from the definition."""
    prod = Fraction(1)
    for x, b in zip(entries, labels):
        prod *= x if b else 1 - x
    return 1 / prod


def naive_exact_score_multiclass(rows, classes) -> Fraction:
    prod = Fraction(1)
    for row, c in zip(rows, classes):
        prod *= row[c - 1]
    return 1 / prod


def naive_auc(entries, labels) -> Fraction | None:
    """Pairwise comparison count with half credit for ties."""
    pos = [e for e, b in zip(entries, labels) if b]
    neg = [e for e, b in zip(entries, labels) if not b]
    if not pos or not neg:
        return None
    s = Fraction(0)
    for p in pos:
        for q in neg:
            if p > q:
                s += 1
            elif p == q:
                s += Fraction(1, 2)
    return Fraction(s, len(pos) * len(neg))


def sig_wire(value: Decimal, phi: int) -> str:
    """Reference half-even rounding to phi significant digits, sci form."""
    ctx = Context(prec=phi, rounding=ROUND_HALF_EVEN)
    rounded = ctx.plus(value)
    sign, digits, exp = rounded.as_tuple()
    assert not sign
    text = "".join(str(d) for d in digits)
    if text == "0":
        text, exponent = "0" * phi, 0
    else:
        text = text.ljust(phi, "0")
        exponent = exp + len(digits) - 1
    mantissa = text[0] if len(text) == 1 else f"{text[0]}.{text[1:]}"
    return f"{mantissa}e{exponent}"


def fraction_sig_wire(value: Fraction, phi: int) -> str:
    """Reference rounding for exact rationals.

    Division is exact when the denominator is 2-5-smooth; otherwise no
    decimal representation terminates, so no rounding tie exists and 80
    digits of quotient decide every case.
    """
    if value == 0:
        return sig_wire(Decimal(0), phi)
    ctx = Context(prec=80)
    return sig_wire(
        ctx.divide(Decimal(value.numerator), Decimal(value.denominator)), phi
    )


def mp_logloss_wire(entries, labels, phi: int, dps: int = 50) -> str:
    """Log loss via mpmath, rounded to the package's wire form."""
    with mp.workdps(dps):
        total = mp.mpf(0)
        for x, b in zip(entries, labels):
            # complement taken exactly; in floating point 1 - x underflows
            # to zero for the binary construction's near-one entries
            frac = x if b else 1 - x
            total -= mp.log(mp.mpf(frac.numerator) / mp.mpf(frac.denominator))
        ll = total / len(entries)
        text = mp.nstr(ll, 35)
    return sig_wire(Decimal(text), phi)


def binary_entries(n: int) -> list[Fraction]:
    """alpha/(1+alpha) with alpha = 2^(2^(i-1)), built independently."""
    return [Fraction(2 ** (2**i), 1 + 2 ** (2**i)) for i in range(n)]


# strategies shared across modules

proper_fractions = st.integers(2, 60).flatmap(
    lambda den: st.integers(1, den - 1).map(lambda num: Fraction(num, den))
)

labelings = st.lists(st.integers(0, 1), min_size=1, max_size=12)


@st.composite
def vectors_with_labels(draw, max_size: int = 10):
    n = draw(st.integers(1, max_size))
    entries = draw(st.lists(proper_fractions, min_size=n, max_size=n))
    labels = draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
    return entries, labels


@pytest.fixture(scope="session")
def twin_pairs_100():
    # frozen head of the twin-prime sequence used by the spot checks
    return [(5, 7), (11, 13), (17, 19), (29, 31), (41, 43), (59, 61), (71, 73)]


# one line per acceptance criterion, echoed after the test summary

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
