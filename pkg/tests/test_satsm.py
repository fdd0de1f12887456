import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import fixture_path
from exceptions import (ContractError, InstanceParseError, ResourceLimitError,
                        SatSmValidationError, SolverError, StructuralAuditError)
from reduction import feasible_shapes, generate_random_satsm
from satsm import (GROUPS, Assignment, Clause, Cnf, CnfVariable, SatSmInstance, audit_schaefer,
                   build_cnf, decode, encode, evaluate, from_dimacs_model, parse_satsm,
                   serialize_satsm, solve, solve_external, to_dimacs, truth_table_satisfiable,
                   unsatisfied_clauses, validate_instance)
from strategies import cnfs


def y(e):
    return CnfVariable('Y', e).index(4)


def s(e):
    return CnfVariable('S', e).index(4)


def p(e):
    return CnfVariable('P', e).index(4)


def generated(count=40):
    shapes = feasible_shapes(12, 8)
    return [generate_random_satsm(*shapes[seed % len(shapes)], seed=seed) for seed in range(count)]


def test_parse_and_serialize(diamond):
    assert diamond.universe_size == 4
    assert diamond.lists == ((1, 2), (1, 3), (2, 4), (3, 4))
    assert parse_satsm(serialize_satsm(diamond)) == diamond


@pytest.mark.parametrize('text', ["4\n1 2\n", "4 2\n1 2\n", "2 1\n1 x\n", ""])
def test_parse_errors(text):
    with pytest.raises(InstanceParseError):
        parse_satsm(text)


def test_diamond_is_valid(diamond):
    assert validate_instance(diamond).ok


def test_rule1_violation(rule1_violation):
    report = validate_instance(rule1_violation)
    assert report.kinds() == frozenset({'rule-1'})
    assert 'list 1 position 1' in report.summary()


def test_acyclicity_violation():
    with open(fixture_path('cyclic.satsm')) as handle:
        report = validate_instance(parse_satsm(handle.read()))
    assert 'acyclicity' in report.kinds()


@pytest.mark.parametrize('universe_size, lists, kind', [
    (3, [[1], [1, 2, 3], [2, 3]], 'list-length'),
    (2, [[1, 5], [1, 2]], 'out-of-range'),
    (2, [[1, 1, 2], [2]], 'repeat'),
    (3, [[1, 2], [1, 2], [3, 3]], 'occurrence'),
    (3, [[1, 2], [1, 2]], 'total-length'),
])
def test_list_conditions(universe_size, lists, kind):
    report = validate_instance(SatSmInstance.from_lists(universe_size, lists))
    assert kind in report.kinds()
    assert not report.ok


def test_build_cnf_rejects_invalid(rule1_violation):
    with pytest.raises(SatSmValidationError) as info:
        build_cnf(rule1_violation)
    assert info.value.report.kinds() == frozenset({'rule-1'})


def test_diamond_cnf_groups(diamond):
    cnf = build_cnf(diamond)
    assert cnf.num_vars == 12
    assert cnf.group_counts() == {'A': 4, 'B': 4, 'C1': 8, 'C2': 4, 'D': 12}
    assert cnf.raw_group_counts()['C1'] == 12
    literals = {frozenset(c.literals): c.group for c in cnf.clauses}
    assert literals[frozenset({y(1), p(1), y(2), p(2)})] == 'A'
    assert literals[frozenset({-s(4), y(4)})] == 'C2'
    assert literals[frozenset({s(1), p(1)})] == 'D'
    assert literals[frozenset({-y(1), -s(2)})] == 'C1'


def test_diamond_dimacs(diamond):
    text = to_dimacs(build_cnf(diamond))
    lines = text.splitlines()
    assert lines[0] == "p cnf 12 32"
    assert [line for line in lines if line.startswith('c group')] == \
        [f"c group {g}" for g in GROUPS]
    assert all(line.endswith(' 0') for line in lines if line[0] not in 'cp')


def test_dimacs_literal_numbering():
    cnf = Cnf(12, (Clause((y(1), p(2))),), 4)
    assert to_dimacs(cnf).splitlines()[1] == "1 10 0"


def test_model_parsing():
    asg = from_dimacs_model("s SATISFIABLE\nv 1 5 -2 0\n", num_vars=12, universe_size=4)
    assert asg[CnfVariable('Y', 1)] and asg[CnfVariable('S', 1)]
    assert not asg[CnfVariable('Y', 2)]
    assert not asg[12]
    assert from_dimacs_model("s UNSATISFIABLE\n") is None
    with pytest.raises(InstanceParseError):
        from_dimacs_model("v 1 two 0\n")


def test_diamond_audit(diamond):
    cnf = build_cnf(diamond)
    report = audit_schaefer(cnf, diamond)
    assert report.a_clause_lengths == (4, 4, 4, 4)
    assert report.c1_negative_binary == 4
    assert not any(report.schaefer_classes.values())


def test_audit_catches_negative_literal_in_group_a(diamond):
    cnf = build_cnf(diamond)
    first = cnf.clauses[0]
    broken = Clause((-first.literals[0],) + first.literals[1:], 'A')
    faulty = Cnf(cnf.num_vars, (broken,) + cnf.clauses[1:], cnf.universe_size, cnf.raw_counts)
    with pytest.raises(StructuralAuditError):
        audit_schaefer(faulty, diamond)


def test_audit_on_generated_instances():
    for inst in generated():
        cnf = build_cnf(inst)
        report = audit_schaefer(cnf, inst)
        consecutive = sum(len(lst) - 1 for lst in inst.lists)
        assert all(length >= 4 for length in report.a_clause_lengths)
        assert report.raw_group_counts['C1'] == 2 * consecutive + inst.n
        assert report.c1_negative_binary > 0


def test_solve_diamond(diamond):
    cnf = build_cnf(diamond)
    model = solve(cnf)
    assert model is not None
    assert evaluate(cnf, model)


def test_hand_checked_diamond_models(diamond):
    cnf = build_cnf(diamond)
    first = encode(diamond, {1}, {1}, {2, 3})
    assert evaluate(cnf, first)
    assert decode(diamond, first) == (frozenset({1}), frozenset({1}), frozenset({2, 3}))
    second = encode(diamond, {1, 2, 3}, {2, 3}, {4})
    assert evaluate(cnf, second)
    assert decode(diamond, second) == (frozenset({1, 2, 3}), frozenset({2, 3}), frozenset({4}))


def test_encode_roots_only(diamond):
    asg = encode(diamond, set(), set(), {1})
    assert asg[CnfVariable('P', 1)]
    assert not any(asg[CnfVariable('S', e)] for e in diamond.universe)


def test_encode_full_set_satisfies_closure_and_neighbor_groups(diamond):
    cnf = build_cnf(diamond)
    asg = encode(diamond, {1, 2, 3, 4}, {4}, set())
    failing = {c.group for c in unsatisfied_clauses(cnf, asg)}
    assert not failing & {'B', 'D'}


def test_decode_all_false(diamond):
    asg = encode(diamond, set(), set(), set())
    assert decode(diamond, asg) == (frozenset(), frozenset(), frozenset())


def test_unsat_and_empty():
    assert solve(Cnf.from_lists(1, [[1], [-1]])) is None
    empty = solve(Cnf.from_lists(0, []))
    assert empty is not None and empty.values == {}


def test_conflict_limit():
    # pigeonhole: three pigeons, two holes
    var = {(i, h): 2 * i + h + 1 for i in range(3) for h in range(2)}
    clauses = [[var[(i, 0)], var[(i, 1)]] for i in range(3)]
    clauses += [[-var[(i, h)], -var[(j, h)]] for h in range(2)
                for i in range(3) for j in range(i + 1, 3)]
    cnf = Cnf.from_lists(6, clauses)
    assert solve(cnf) is None
    with pytest.raises(ResourceLimitError):
        solve(cnf, conflict_limit=1)


def test_evaluate_requires_total_assignment():
    with pytest.raises(ContractError):
        evaluate(Cnf.from_lists(2, [[1, 2]]), Assignment({1: True}))


def test_cnf_rejects_out_of_range_literal():
    with pytest.raises(ContractError):
        Cnf.from_lists(1, [[2]])


def test_external_solver_missing_binary(diamond):
    with pytest.raises(SolverError):
        solve_external(build_cnf(diamond), '/nonexistent/solver', timeout=5)


@settings(max_examples=100, deadline=None)
@given(cnfs())
def test_solver_agrees_with_truth_table(cnf):
    model = solve(cnf)
    assert (model is not None) == truth_table_satisfiable(cnf)
    if model is not None:
        assert evaluate(cnf, model)


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_solver_models_respect_the_clause_groups(seed):
    shapes = feasible_shapes(12, 8)
    inst = generate_random_satsm(*shapes[seed % len(shapes)], seed=seed)
    model = solve(build_cnf(inst))
    if model is None:
        return
    s_set, leaves, neighbors = decode(inst, model)
    arcs = inst.arcs()
    # closure under predecessors
    assert all(x in s_set for x, nxt in arcs if nxt in s_set)
    # leaves are members with no successor inside S
    assert leaves <= s_set
    assert not any(x in leaves and nxt in s_set for x, nxt in arcs)
    # neighbors are outside S with every predecessor inside
    assert not neighbors & s_set
    assert all(x in s_set for x, nxt in arcs if nxt in neighbors)
    # every list meets L or N
    assert all(set(lst) & (leaves | neighbors) for lst in inst.lists)
