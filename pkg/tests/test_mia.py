"""Membership-inference simulation: roles, recovery, tamper evidence."""

from fractions import Fraction

import pytest

from lossprobe.core import Labeling, ScoreKind, logloss_decimal, prediction_vector
from lossprobe.errors import DecodeError, ValidationError
from lossprobe.exact import build_twin_prime_vector, decode_twin_prime_value
from lossprobe.mia import (
    AttackMode,
    CandidateSet,
    CuratorOracle,
    MembershipVector,
    ScoringView,
    curator_oracle,
    fixed_precision_attack,
    one_query_attack,
    perturb_prime,
    run_demo,
)
from lossprobe.primes import factor_over, twin_primes

F = Fraction


# candidate sets and membership vectors


def test_candidate_set_numbered():
    cs = CandidateSet.numbered(3)
    assert cs.ids == ("point-0", "point-1", "point-2")
    assert len(cs) == 3
    assert len(CandidateSet.numbered(11).ids[0]) == len("point-00")


def test_candidate_set_validation():
    with pytest.raises(ValidationError):
        CandidateSet(("a", "a"))
    with pytest.raises(ValidationError):
        CandidateSet(())
    with pytest.raises(ValidationError):
        CandidateSet.numbered(0)


def test_membership_vector_seeded():
    a = MembershipVector.random(20, seed=3)
    b = MembershipVector.random(20, seed=3)
    c = MembershipVector.random(20, seed=4)
    assert a == b
    assert a != c
    assert len(a) == 20


# the curator oracle


def test_oracle_counts_queries():
    oracle = curator_oracle(MembershipVector(Labeling((1, 0, 1))))
    assert oracle.n == 3
    assert oracle.queries_used == 0
    vec = build_twin_prime_vector(3)
    oracle.exact_response(vec.entries)
    assert oracle.queries_used == 1
    oracle.decimal_scores([F(1, 5), F(2, 5), F(3, 5)], 2)
    assert oracle.queries_used == 2


def test_oracle_exact_response_value():
    oracle = curator_oracle(MembershipVector(Labeling((1, 0, 1))))
    score = oracle.exact_response(build_twin_prime_vector(3).entries)
    assert score.value == F(1729, 170)
    assert score.n == 3


def test_oracle_subset_queries_line_up_with_indices():
    oracle = curator_oracle(MembershipVector(Labeling((1, 0, 1, 0))))
    entries = [F(1, 5), F(2, 5)]
    # indices (2, 1) selects hidden bits (1, 0)
    ll, auc_score = oracle.decimal_scores(entries, 2, indices=(2, 1))
    direct = logloss_decimal(prediction_vector(entries), Labeling((1, 0)), 2)
    assert ll == direct
    assert auc_score.kind is ScoreKind.AUC


def test_oracle_rejects_malformed_subsets():
    oracle = curator_oracle(MembershipVector(Labeling((1, 0, 1, 0))))
    entries = [F(1, 5), F(2, 5)]
    with pytest.raises(ValidationError):
        oracle.decimal_scores(entries, 2, indices=(0, 0))
    with pytest.raises(ValidationError):
        oracle.decimal_scores(entries, 2, indices=(0, 9))
    with pytest.raises(ValidationError):
        oracle.decimal_scores(entries, 2, indices=(0,))
    with pytest.raises(ValidationError):
        oracle.exact_response(entries)  # length mismatch without indices


def test_assess_counts_matching_bits():
    oracle = curator_oracle(MembershipVector(Labeling((1, 0, 1, 0))))
    assert oracle.assess(MembershipVector(Labeling((1, 0, 1, 0)))) == 1
    assert oracle.assess(MembershipVector(Labeling((1, 0, 1, 1)))) == F(3, 4)
    assert oracle.assess(MembershipVector(Labeling((0, 1, 0, 1)))) == 0
    with pytest.raises(ValidationError):
        oracle.assess(MembershipVector(Labeling((1, 0))))


def test_scoring_view_is_the_whole_adversary_surface():
    oracle = curator_oracle(MembershipVector(Labeling((1, 0, 1))))
    view = oracle.scoring_view()
    assert isinstance(view, ScoringView)
    assert set(vars(view)) == {
        "exact_response",
        "decimal_scores",
        "decimal_scores_for_binary",
    }
    # no hidden state is reachable as data on the view or by mangled name
    assert not hasattr(view, "_CuratorOracle__hidden")
    assert not hasattr(view, "hidden")
    assert not any(isinstance(v, MembershipVector) for v in vars(view).values())
    with pytest.raises(AttributeError):
        oracle.__hidden  # noqa: B018  (mangled away on purpose)


# exact one-query attacks


@pytest.mark.parametrize("mode", [AttackMode.EXACT_TWIN, AttackMode.EXACT_BINARY])
def test_one_query_attack_recovers_everything(mode):
    for seed in range(6):
        n = 5 + seed * 5
        hidden = MembershipVector.random(n, seed)
        oracle = curator_oracle(hidden)
        report = one_query_attack(CandidateSet.numbered(n), oracle, mode)
        assert report.queries_used == 1
        assert report.accuracy == 1
        assert report.recovered == hidden
        assert report.mode is mode
        assert report.phi is None


def test_one_query_attack_rejects_fixed_mode():
    oracle = curator_oracle(MembershipVector.random(4, 0))
    with pytest.raises(ValidationError):
        one_query_attack(CandidateSet.numbered(4), oracle, AttackMode.FIXED_PRECISION)


def test_binary_mode_stops_at_the_size_limit():
    n = 33  # entry 33 would be a 2^32-bit integer
    oracle = curator_oracle(MembershipVector.random(n, 0))
    with pytest.raises(ValidationError):
        one_query_attack(CandidateSet.numbered(n), oracle, AttackMode.EXACT_BINARY)


# fixed-precision attacks


def test_fixed_precision_attack_report():
    hidden = MembershipVector.random(30, seed=9)
    oracle = curator_oracle(hidden)
    report = fixed_precision_attack(CandidateSet.numbered(30), oracle, phi=2)
    assert report.mode is AttackMode.FIXED_PRECISION
    assert report.accuracy == 1
    assert report.recovered == hidden
    assert report.phi == 2
    assert report.plan is not None
    assert report.queries_used == report.plan.planned_queries == 4


def test_attack_report_is_immutable():
    report = run_demo(4, AttackMode.EXACT_TWIN, seed=1)
    with pytest.raises(AttributeError):
        report.accuracy = F(0)


# tamper evidence


def test_perturb_prime_validation():
    base = curator_oracle(MembershipVector.random(3, 2)).exact_response(
        build_twin_prime_vector(3).entries
    )
    with pytest.raises(ValidationError):
        perturb_prime(base, 7, 2)
    with pytest.raises(ValidationError):
        perturb_prime(base, 1, 1)


def test_perturb_prime_changes_the_value():
    base = curator_oracle(MembershipVector(Labeling((1, 0, 1)))).exact_response(
        build_twin_prime_vector(3).entries
    )
    up = perturb_prime(base, 7, 1)
    down = perturb_prime(base, 7, -1)
    assert up.value == base.value * 7
    assert down.value == base.value / 7
    assert up.n == base.n == 3


def test_every_single_prime_perturbation_is_detected():
    table = twin_primes(14)
    relevant = [2, *table.primes, *(p + 2 for p in table.primes)]
    for seed in range(12):
        n = 3 + seed
        hidden = MembershipVector.random(n, seed)
        oracle = curator_oracle(hidden)
        honest = oracle.exact_response(build_twin_prime_vector(n).entries)
        factors = factor_over(
            honest.value.numerator * honest.value.denominator, relevant
        )
        assert factors.leftover == 1
        for p in factors.exponents:
            for delta in (-1, 1):
                tampered = perturb_prime(honest, p, delta)
                with pytest.raises(DecodeError):
                    decode_twin_prime_value(tampered.value)


# the packaged demo


def test_run_demo_deterministic():
    a = run_demo(12, AttackMode.EXACT_TWIN, seed=5)
    b = run_demo(12, AttackMode.EXACT_TWIN, seed=5)
    assert a == b
    assert a.accuracy == 1
    assert a.queries_used == 1


def test_run_demo_modes():
    twin = run_demo(10, AttackMode.EXACT_TWIN, seed=1)
    binary = run_demo(10, AttackMode.EXACT_BINARY, seed=1)
    fixed = run_demo(10, AttackMode.FIXED_PRECISION, seed=1, phi=3)
    assert twin.recovered == binary.recovered == fixed.recovered
    assert twin.queries_used == binary.queries_used == 1
    assert fixed.phi == 3
    assert fixed.accuracy == 1


def test_run_demo_defaults_to_two_digits_for_fixed():
    report = run_demo(9, AttackMode.FIXED_PRECISION, seed=4)
    assert report.phi == 2
    assert report.accuracy == 1


def test_run_demo_rejects_phi_for_exact_modes():
    with pytest.raises(ValidationError):
        run_demo(5, AttackMode.EXACT_TWIN, seed=0, phi=2)
    with pytest.raises(ValidationError):
        run_demo(5, AttackMode.EXACT_BINARY, seed=0, phi=2)


def test_attack_mode_wire_names():
    assert AttackMode.EXACT_TWIN.value == "twin"
    assert AttackMode.EXACT_BINARY.value == "binary"
    assert AttackMode.FIXED_PRECISION.value == "fixed"
