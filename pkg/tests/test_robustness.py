from itertools import combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exceptions import ContractError
from reduction import (feasible_shapes, generate_random_satsm, reduce_to_poset,
                       synthesize_preferences)
from robustness import (RobustnessQuery, SupermatchChecker, all_ab_supermatches,
                        exists_ab_supermatch, is_11_supermatch_familyF, is_ab_supermatch,
                        nearest_repair, nonfixed_men)
from rotation_poset import enumerate_closed_subsets, enumerate_stable_matchings, find_rotations
from sm_core import Matching, distance, fixed_pairs, parse_instance
from strategies import sm_instances

ONE_ONE = RobustnessQuery(1, 1)


@pytest.fixture
def lattice(sample7):
    return enumerate_stable_matchings(sample7)


def oracle_is_supermatch(matchings, m, a, b):
    """Direct scan of every broken set against every stable matching"""
    fixed = fixed_pairs(None, matchings)
    for broken in combinations(sorted(m.pairs - fixed), a):
        costs = [distance(m, c) - a for c in matchings if not c.pairs & set(broken)]
        if not costs or min(costs) > b:
            return False
    return True


def test_query_validation():
    with pytest.raises(ContractError):
        RobustnessQuery(0, 1)
    with pytest.raises(ContractError):
        RobustnessQuery(1, -1)


def test_m2_is_not_a_supermatch(sample7, stable_rows, lattice):
    holds, witness = is_ab_supermatch(sample7, lattice, stable_rows['M2'], ONE_ONE)
    assert not holds
    assert witness.broken == frozenset({(1, 5)})
    assert witness.repair == stable_rows['M1']
    assert witness.cost == 2
    assert witness.consistent_with(stable_rows['M2'], ONE_ONE)
    assert not witness.within_budget(ONE_ONE)
    assert witness.within_budget(RobustnessQuery(1, 2))


def test_m2_breaking_pair_33_needs_four_changes(stable_rows, lattice):
    repair, d = nearest_repair(lattice, stable_rows['M2'], [(3, 3)])
    assert d == 4
    assert repair == stable_rows['M4']


def test_m6_is_a_supermatch(sample7, stable_rows, lattice):
    assert is_ab_supermatch(sample7, lattice, stable_rows['M6'], ONE_ONE) == (True, None)


def test_exists_returns_m6(sample7, stable_rows):
    assert exists_ab_supermatch(sample7, ONE_ONE) == stable_rows['M6']


def test_checker_agrees_with_oracle(sample7, stable_rows, lattice):
    matchings = [m for _, m in lattice]
    checker = SupermatchChecker(sample7, lattice)
    for a in (1, 2):
        for b in (0, 1, 2, 3):
            q = RobustnessQuery(a, b)
            for m in matchings:
                holds, witness = checker.check(m, q)
                assert holds == oracle_is_supermatch(matchings, m, a, b)
                if not holds:
                    assert witness.consistent_with(m, q)
                    assert not witness.within_budget(q)


def test_vectorized_repair_matches_reference(sample7, stable_rows, lattice):
    checker = SupermatchChecker(sample7, lattice)
    for m in stable_rows.values():
        for pair in sorted(m.pairs):
            assert checker.nearest_repair(m, [pair])[1] == nearest_repair(lattice, m, [pair])[1]


def test_all_supermatches_in_enumeration_order(sample7, stable_rows):
    found = all_ab_supermatches(sample7, ONE_ONE)
    assert found[0] == stable_rows['M6']
    assert stable_rows['M2'] not in found


def test_checker_rejects_unknown_matching(sample7, lattice):
    m = Matching.from_pairs([(0, 5), (1, 4), (2, 6), (3, 3), (4, 1), (5, 2), (6, 0)])
    with pytest.raises(ContractError):
        SupermatchChecker(sample7, lattice).check(m, ONE_ONE)


def test_vacuous_success_is_flagged():
    inst = parse_instance("1\n0\n0\n")
    lattice = enumerate_stable_matchings(inst)
    holds, witness = is_ab_supermatch(inst, lattice, lattice[0][1], ONE_ONE)
    assert holds
    assert witness.vacuous
    assert witness.broken == frozenset()


def test_single_rotation_repair_costs_one():
    # one rotation swaps both couples
    inst = parse_instance("2\n0 1\n1 0\n1 0\n0 1\n")
    lattice = enumerate_stable_matchings(inst)
    assert len(lattice) == 2
    checker = SupermatchChecker(inst, lattice)
    m0 = lattice[0][1]
    holds, witness = checker.check(m0, RobustnessQuery(1, 0))
    assert not holds
    assert witness.broken == frozenset({(0, 0)})
    assert witness.cost == 1
    assert checker.check(m0, ONE_ONE) == (True, None)
    assert checker.check(m0, RobustnessQuery(2, 0)) == (True, None)


def test_nonfixed_men(sample7):
    assert nonfixed_men(find_rotations(sample7)) == set(range(7))


def test_family_f_coverage_agrees_with_oracle(diamond):
    poset = reduce_to_poset(diamond)
    reduced = synthesize_preferences(poset)
    lattice = enumerate_closed_subsets(find_rotations(reduced))
    checker = SupermatchChecker(reduced, lattice)
    men = nonfixed_men(poset)
    for subset, m in enumerate_closed_subsets(poset):
        assert is_11_supermatch_familyF(poset, subset, men) == checker.check(m, ONE_ONE)[0]


def test_family_f_coverage_rejects_sample7(sample7):
    poset = find_rotations(sample7)
    with pytest.raises(ContractError):
        is_11_supermatch_familyF(poset, [], nonfixed_men(poset))


def test_family_f_coverage_agrees_on_generated_instances():
    for seed, (x, n) in enumerate(feasible_shapes(12, 8)):
        poset = reduce_to_poset(generate_random_satsm(x, n, seed=seed))
        reduced = synthesize_preferences(poset)
        checker = SupermatchChecker(reduced, enumerate_closed_subsets(find_rotations(reduced)))
        men = nonfixed_men(poset)
        for subset, m in enumerate_closed_subsets(poset):
            assert is_11_supermatch_familyF(poset, subset, men) == checker.check(m, ONE_ONE)[0]


@settings(max_examples=60, deadline=None)
@given(sm_instances(max_n=5), st.integers(min_value=1, max_value=2))
def test_supermatch_is_monotone_in_b(inst, a):
    lattice = enumerate_stable_matchings(inst)
    checker = SupermatchChecker(inst, lattice)
    for _, m in lattice:
        holds = [checker.check(m, RobustnessQuery(a, b))[0] for b in range(5)]
        assert holds == sorted(holds)
