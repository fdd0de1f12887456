import json
import os

from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

import cli
from cli import EXIT_ERROR, EXIT_LIMIT, EXIT_NO, EXIT_OK, run
from conftest import fixture_path

SAMPLE = fixture_path('sample7.sm')
DIAMOND = fixture_path('diamond.satsm')
BAD_RULE1 = fixture_path('bad_rule1.satsm')


def run_json(*argv):
    outcome = run(list(argv) + ['--json'])
    return outcome.exit_code, json.loads(outcome.payload)


def test_enumerate_sample7():
    outcome = run(['enumerate', SAMPLE])
    assert outcome.exit_code == EXIT_OK
    assert outcome.payload.startswith('11 stable matchings')
    code, data = run_json('enumerate', SAMPLE)
    assert data['count'] == 11
    assert data['matchings'][0]['pairs'] == [[0, 5], [1, 4], [2, 6], [3, 3], [4, 1], [5, 0], [6, 2]]


def test_enumerate_limit_exit_code():
    assert run(['enumerate', SAMPLE, '--limit', '3']).exit_code == EXIT_LIMIT


def test_check_supermatch_finds_m6():
    code, data = run_json('check-supermatch', SAMPLE, '--a', '1', '--b', '1')
    assert code == EXIT_OK
    assert data['supermatch'] == [[0, 4], [1, 5], [2, 0], [3, 3], [4, 1], [5, 2], [6, 6]]
    assert data['rotations'] == [0, 1, 2, 4]


def test_check_supermatch_none():
    outcome = run(['check-supermatch', SAMPLE, '--a', '1', '--b', '0'])
    assert outcome.exit_code == EXIT_NO
    assert outcome.payload.startswith('no (1,0)-supermatch')


def test_check_given_matching():
    code, data = run_json('check-supermatch', SAMPLE, '--a', '1', '--b', '1',
                          '--matching', fixture_path('sample7_m2.matching'))
    assert code == EXIT_NO
    assert data['supermatch'] is False
    assert data['witness']['broken'] == [[1, 5]]
    assert data['witness']['cost'] == 2
    code, data = run_json('check-supermatch', SAMPLE, '--a', '1', '--b', '1',
                          '--matching', fixture_path('sample7_m6.matching'))
    assert code == EXIT_OK
    assert data['supermatch'] is True


def test_solve_and_parse():
    code, data = run_json('solve', SAMPLE, '--side', 'women')
    assert code == EXIT_OK
    assert data['matching'] == [[0, 1], [1, 3], [2, 0], [3, 5], [4, 4], [5, 2], [6, 6]]
    outcome = run(['parse', SAMPLE])
    assert outcome.payload.splitlines()[1] == '0 6 5 2 4 1 3'


def test_poset_outputs(tmp_path):
    code, data = run_json('poset', SAMPLE)
    assert code == EXIT_OK
    assert len(data['rotations']) == 6
    dot = run(['poset', SAMPLE, '--dot'])
    assert dot.payload.startswith('digraph rotation_poset')
    figure = tmp_path / 'poset.json'
    lattice = tmp_path / 'lattice.json'
    outcome = run(['poset', SAMPLE, '--plotly', str(figure), '--lattice-plotly', str(lattice)])
    assert outcome.exit_code == EXIT_OK
    assert 'data' in json.loads(figure.read_text())
    assert 'data' in json.loads(lattice.read_text())


def test_satsm_solve_rejects_rule1_violation():
    outcome = run(['satsm-solve', BAD_RULE1])
    assert outcome.exit_code == EXIT_ERROR
    assert '[rule-1]' in outcome.payload
    code, data = run_json('satsm-solve', BAD_RULE1)
    assert code == EXIT_ERROR
    assert data['type'] == 'SatSmValidationError'
    assert data['report']['violations'][0]['kind'] == 'rule-1'


def test_satsm_validate():
    assert run(['satsm-validate', DIAMOND]).exit_code == EXIT_OK
    assert run(['satsm-validate', BAD_RULE1]).exit_code == EXIT_ERROR


def test_satsm_cnf(tmp_path):
    code, data = run_json('satsm-cnf', DIAMOND)
    assert code == EXIT_OK
    assert data['num_clauses'] == 32
    assert data['audit']['group_counts']['D'] == 12
    target = tmp_path / 'diamond.cnf'
    assert run(['satsm-cnf', DIAMOND, '--dimacs', str(target)]).exit_code == EXIT_OK
    assert target.read_text().startswith('p cnf 12 32\nc group A\n')
    assert run(['satsm-cnf', DIAMOND, '--dimacs', '-']).payload.startswith('p cnf 12 32')


def test_satsm_solve_diamond():
    code, data = run_json('satsm-solve', DIAMOND)
    assert code == EXIT_OK
    assert data['satisfiable']
    assert set(data['L']) <= set(data['S'])


def test_reduce_bundle(tmp_path):
    out = tmp_path / 'bundle'
    code, data = run_json('reduce', DIAMOND, '--out', str(out))
    assert code == EXIT_OK
    assert data['verdict']['agrees']
    assert sorted(os.listdir(out)) == ['cnf.dimacs', 'instance.txt', 'poset.json',
                                       'report.json', 'satsm.txt']
    assert (out / 'instance.txt').read_text().startswith('4\n0 1 2\n')


def test_gen_satsm_is_deterministic():
    first = run(['gen-satsm', '--x', '9', '--n', '6', '--seed', '11'])
    second = run(['gen-satsm', '--x', '9', '--n', '6', '--seed', '11'])
    assert first.exit_code == EXIT_OK
    assert first.payload == second.payload
    assert first.payload.splitlines()[0] == '9 6'
    assert run(['gen-satsm', '--x', '3', '--n', '4']).exit_code == EXIT_ERROR


def test_verify_equivalence_small():
    code, data = run_json('verify-equivalence', '--count', '5', '--max-x', '9',
                          '--max-n', '6', '--workers', '1', '--seed', '1')
    assert code == EXIT_OK
    assert data['count'] == 5
    assert data['all_agree']


def test_usage_errors():
    assert run([]).exit_code == EXIT_ERROR
    assert run(['frobnicate']).exit_code == EXIT_ERROR
    outcome = run(['enumerate', SAMPLE, '--bogus'])
    assert outcome.exit_code == EXIT_ERROR
    assert 'usage:' in outcome.payload
    assert run(['check-supermatch', SAMPLE, '--a', '0', '--b', '1']).exit_code == EXIT_ERROR
    assert run(['enumerate', '/nonexistent/file.sm']).exit_code == EXIT_ERROR


def test_help_exits_cleanly():
    assert run(['--help']).exit_code == EXIT_OK


@settings(max_examples=50, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.text(alphabet='0123456789 -#\nx', max_size=60))
def test_fuzzed_instance_files_never_crash(tmp_path_factory, text):
    path = tmp_path_factory.mktemp('fuzz') / 'input.sm'
    path.write_text(text)
    for command in ('parse', 'enumerate', 'satsm-validate', 'satsm-solve'):
        assert run([command, str(path)]).exit_code in (EXIT_OK, EXIT_NO, EXIT_ERROR)


def test_unexpected_error_is_logged(monkeypatch, caplog):
    def broken_parser(text):
        raise RuntimeError('parser exploded')

    monkeypatch.setattr(cli, 'parse_instance', broken_parser)
    outcome = run(['parse', SAMPLE])
    assert outcome.exit_code == EXIT_ERROR
    assert 'parser exploded' in outcome.payload
    assert any(record.levelname == 'ERROR' and 'parser exploded' in record.getMessage()
               for record in caplog.records)
