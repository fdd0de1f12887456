"""
Command-line entry point for the supermatch toolkit
"""
import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import pandas as pd

from config import get_config
from equivalence import check_instance, verify_equivalence
from exceptions import (EnumerationLimitError, ResourceLimitError, SatSmValidationError,
                        SupermatchError, UsageError)
from reduction import (generate_random_satsm, reduce_to_poset, synthesize_preferences,
                       validate_family_f)
from robustness import RepairWitness, RobustnessQuery, SupermatchChecker
from rotation_poset import enumerate_closed_subsets, find_rotations, poset_to_json, to_dot
from satsm import (GROUPS, audit_schaefer, build_cnf, decode, parse_satsm, serialize_satsm,
                   solve, solve_external, to_dimacs, validate_instance)
from sm_core import (MEN_PROPOSING, WOMEN_PROPOSING, Instance, Matching, deferred_acceptance,
                     matching_to_json, parse_instance, parse_matching, serialize_instance)
from visualizations import PosetVisualizer

EXIT_OK = 0
EXIT_NO = 1
EXIT_ERROR = 2
EXIT_LIMIT = 3

LOG_LEVELS = ('DEBUG', 'INFO', 'WARNING', 'ERROR')


@dataclass
class CommandOutcome:
    """Exit code plus the text or JSON written for the caller"""
    exit_code: int
    payload: str = ''
    is_error: bool = False


class CliArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _positive_int(raw: str) -> int:
    try:
        value = int(raw)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got '{raw}'")
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _read(path: str) -> str:
    with open(path) as handle:
        return handle.read()


def _write(path: str, text: str):
    with open(path, 'w') as handle:
        handle.write(text)
    logging.info(f"Wrote {path}")


def _table(frame: pd.DataFrame) -> str:
    return frame.to_string(index=False)


def _emit(args, data: Dict, text: str, exit_code: int = EXIT_OK) -> CommandOutcome:
    if args.json:
        return CommandOutcome(exit_code, json.dumps(data, indent=2))
    return CommandOutcome(exit_code, text)


def _pairs_text(pairs) -> str:
    return ' '.join(f"({m},{w})" for m, w in sorted(pairs))


def _instance_json(inst: Instance) -> Dict:
    return {'n': inst.n,
            'men': [list(p) for p in inst.men_prefs],
            'women': [list(p) for p in inst.women_prefs]}


def _matching_frame(m: Matching) -> pd.DataFrame:
    return pd.DataFrame(matching_to_json(m), columns=['man', 'woman'])


def _witness_text(witness: Optional[RepairWitness]) -> str:
    if witness is None:
        return ''
    if witness.vacuous:
        return "vacuous: fewer than a non-fixed pairs to break"
    broken = _pairs_text(witness.broken)
    if witness.repair is None:
        return f"broken {broken}: no stable matching avoids these pairs"
    return (f"broken {broken}: nearest repair changes {witness.cost} further men\n"
            f"repair {_pairs_text(witness.repair.pairs)}")


def cmd_parse(args, cfg) -> CommandOutcome:
    inst = parse_instance(_read(args.instance))
    return _emit(args, _instance_json(inst), serialize_instance(inst).rstrip('\n'))


def cmd_solve(args, cfg) -> CommandOutcome:
    inst = parse_instance(_read(args.instance))
    m = deferred_acceptance(inst, args.side)
    data = {'side': args.side, 'matching': matching_to_json(m)}
    return _emit(args, data, _table(_matching_frame(m)))


def cmd_enumerate(args, cfg) -> CommandOutcome:
    inst = parse_instance(_read(args.instance))
    lattice = enumerate_closed_subsets(find_rotations(inst), args.limit)

    rows = []
    for k, (subset, m) in enumerate(lattice):
        row = {'matching': f"M{k}",
               'rotations': ','.join(str(r) for r in subset.sort_key) or '-'}
        for man in range(inst.n):
            partner = m.partner_of_man(man)
            row[f"m{man}"] = '-' if partner is None else partner
        rows.append(row)

    data = {'count': len(lattice),
            'matchings': [{'index': k, 'rotations': list(subset.sort_key),
                           'pairs': matching_to_json(m)}
                          for k, (subset, m) in enumerate(lattice)]}
    text = f"{len(lattice)} stable matchings\n{_table(pd.DataFrame(rows))}"
    return _emit(args, data, text)


def cmd_poset(args, cfg) -> CommandOutcome:
    inst = parse_instance(_read(args.instance))
    poset = find_rotations(inst)

    visualizer = PosetVisualizer()
    if args.plotly:
        _write(args.plotly, visualizer.create_poset_figure(poset))
    if args.lattice_plotly:
        lattice = enumerate_closed_subsets(poset, args.limit)
        _write(args.lattice_plotly, visualizer.create_lattice_figure(poset, lattice))

    if args.dot:
        return CommandOutcome(EXIT_OK, to_dot(poset).rstrip('\n'))

    rotations = pd.DataFrame([
        {'rotation': f"rho{rho.id}",
         'cycle': ' '.join(f"({m},{w})" for m, w in rho.cycle),
         'predecessors': ','.join(str(r) for r in sorted(poset.predecessors(rho.id))) or '-'}
        for rho in sorted(poset.rotations, key=lambda r: r.id)],
        columns=['rotation', 'cycle', 'predecessors'])
    edges = pd.DataFrame(sorted(poset.edges), columns=['from', 'to', 'type'])
    text = (f"{len(poset.rotations)} rotations\n{_table(rotations)}\n\n"
            f"{len(poset.edges)} edges\n{_table(edges)}")
    return _emit(args, poset_to_json(poset), text)


def cmd_check_supermatch(args, cfg) -> CommandOutcome:
    inst = parse_instance(_read(args.instance))
    q = RobustnessQuery(args.a, args.b)
    lattice = enumerate_closed_subsets(find_rotations(inst), args.limit)
    checker = SupermatchChecker(inst, lattice)
    subsets = {m: subset for subset, m in lattice}
    label = f"({q.a},{q.b})-supermatch"

    if args.matching:
        m = parse_matching(_read(args.matching))
        holds, witness = checker.check(m, q)
        data = {'a': q.a, 'b': q.b, 'matching': matching_to_json(m),
                'rotations': list(subsets[m].sort_key), 'supermatch': holds,
                'witness': None if witness is None else witness.to_json_dict()}
        text = f"{label}: {'yes' if holds else 'no'}"
        detail = _witness_text(witness)
        if detail:
            text += f"\n{detail}"
        return _emit(args, data, text, EXIT_OK if holds else EXIT_NO)

    found = checker.first_supermatch(q)
    if found is None:
        data = {'a': q.a, 'b': q.b, 'supermatch': None, 'lattice_size': len(lattice)}
        return _emit(args, data, f"no {label} among {len(lattice)} stable matchings", EXIT_NO)

    rotations = list(subsets[found].sort_key)
    data = {'a': q.a, 'b': q.b, 'supermatch': matching_to_json(found),
            'rotations': rotations, 'lattice_size': len(lattice)}
    text = (f"{label} found (rotations {rotations}):\n"
            f"{_table(_matching_frame(found))}")
    return _emit(args, data, text)


def cmd_satsm_validate(args, cfg) -> CommandOutcome:
    inst = parse_satsm(_read(args.instance))
    report = validate_instance(inst)
    if not report.ok:
        raise SatSmValidationError(report)
    return _emit(args, report.to_dict(),
                 f"valid SAT-SM instance: |X|={inst.universe_size}, n={inst.n}")


def cmd_satsm_cnf(args, cfg) -> CommandOutcome:
    inst = parse_satsm(_read(args.instance))
    cnf = build_cnf(inst)
    audit = audit_schaefer(cnf, inst)
    dimacs = to_dimacs(cnf)
    if args.dimacs == '-':
        return CommandOutcome(EXIT_OK, dimacs.rstrip('\n'))
    if args.dimacs:
        _write(args.dimacs, dimacs)

    counts = cnf.group_counts()
    raw = cnf.raw_group_counts()
    frame = pd.DataFrame({'group': list(GROUPS),
                          'clauses': [counts[g] for g in GROUPS],
                          'before_dedup': [raw.get(g, 0) for g in GROUPS]})
    data = {'num_vars': cnf.num_vars, 'num_clauses': len(cnf.clauses),
            'audit': audit.to_dict(), 'dimacs': args.dimacs}
    text = f"p cnf {cnf.num_vars} {len(cnf.clauses)}\n{_table(frame)}"
    return _emit(args, data, text)


def cmd_satsm_solve(args, cfg) -> CommandOutcome:
    inst = parse_satsm(_read(args.instance))
    cnf = build_cnf(inst)
    if args.external_solver:
        model = solve_external(cnf, args.external_solver, cfg.EXTERNAL_SOLVER_TIMEOUT)
    else:
        model = solve(cnf, args.conflict_limit)
    if model is None:
        return _emit(args, {'satisfiable': False}, 'UNSAT', EXIT_NO)

    s, leaves, neighbors = decode(inst, model)
    true_vars = [str(var) for var, value in model.as_variables().items() if value]
    data = {'satisfiable': True, 'S': sorted(s), 'L': sorted(leaves),
            'N': sorted(neighbors), 'true_variables': true_vars}
    text = '\n'.join(['SAT',
                      f"S = {sorted(s)}",
                      f"L = {sorted(leaves)}",
                      f"N = {sorted(neighbors)}",
                      f"true: {' '.join(true_vars)}"])
    return _emit(args, data, text)


def cmd_reduce(args, cfg) -> CommandOutcome:
    inst = parse_satsm(_read(args.instance))
    poset = reduce_to_poset(inst)
    family = validate_family_f(poset)
    reduced = synthesize_preferences(poset)
    verdict = check_instance(inst, args.conflict_limit)

    if args.out:
        os.makedirs(args.out, exist_ok=True)
        _write(os.path.join(args.out, 'satsm.txt'), serialize_satsm(inst))
        _write(os.path.join(args.out, 'instance.txt'), serialize_instance(reduced))
        _write(os.path.join(args.out, 'poset.json'),
               json.dumps(poset_to_json(poset), indent=2))
        _write(os.path.join(args.out, 'cnf.dimacs'), to_dimacs(build_cnf(inst)))
        _write(os.path.join(args.out, 'report.json'),
               json.dumps({'family_f': family.to_dict(), 'verdict': verdict.to_dict()}, indent=2))

    data = {'instance': _instance_json(reduced), 'poset': poset_to_json(poset),
            'family_f': family.to_dict(), 'verdict': verdict.to_dict(), 'out': args.out}
    text = '\n'.join([
        serialize_instance(reduced).rstrip('\n'),
        f"# rotations: {len(poset.rotations)}, family F: {'pass' if family.passed else 'fail'}",
        f"# SAT: {verdict.satisfiable}, (1,1)-supermatch: {verdict.supermatch_exists}, "
        f"agree: {verdict.agrees}",
    ])
    return _emit(args, data, text, EXIT_OK if verdict.agrees else EXIT_NO)


def cmd_gen_satsm(args, cfg) -> CommandOutcome:
    inst = generate_random_satsm(args.x, args.n, args.seed, cfg.GENERATION_ATTEMPTS)
    data = {'universe_size': inst.universe_size, 'lists': [list(lst) for lst in inst.lists],
            'seed': args.seed}
    return _emit(args, data, serialize_satsm(inst).rstrip('\n'))


def cmd_verify_equivalence(args, cfg) -> CommandOutcome:
    summary = verify_equivalence(args.count, args.max_x, args.seed,
                                 max_lists=args.max_n, workers=args.workers)
    frame = summary.frame()
    shapes = (frame.groupby(['universe_size', 'list_count'])
              .agg(instances=('agrees', 'size'),
                   satisfiable=('satisfiable', 'sum'),
                   agree=('agrees', 'sum'))
              .reset_index())
    disagreements = int((~frame['agrees']).sum())
    text = (f"{len(frame)} instances, {int(frame['satisfiable'].sum())} satisfiable, "
            f"{disagreements} disagreements\n{_table(shapes)}")
    return _emit(args, summary.to_dict(), text, EXIT_OK if summary.all_agree else EXIT_NO)


def build_parser(cfg) -> CliArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--json', action='store_true', help='emit JSON instead of tables')
    common.add_argument('--log-level', choices=LOG_LEVELS, default=None,
                        help='logging level for stderr')

    parser = CliArgumentParser(
        prog='supermatch',
        description='Stable matching robustness and SAT-SM reduction toolkit')
    sub = parser.add_subparsers(dest='command', metavar='COMMAND')
    sub.required = True

    def command(name: str, handler, help_text: str, takes_instance: bool = True):
        p = sub.add_parser(name, parents=[common], help=help_text)
        if takes_instance:
            p.add_argument('instance', help='instance file')
        p.set_defaults(handler=handler)
        return p

    command('parse', cmd_parse, 'parse and normalize an SM instance')

    p = command('solve', cmd_solve, 'run deferred acceptance')
    p.add_argument('--side', choices=(MEN_PROPOSING, WOMEN_PROPOSING), default=MEN_PROPOSING)

    p = command('enumerate', cmd_enumerate, 'list every stable matching')
    p.add_argument('--limit', type=_positive_int, default=cfg.ENUMERATION_LIMIT)

    p = command('poset', cmd_poset, 'rotation poset as a table, JSON or DOT')
    p.add_argument('--dot', action='store_true', help='print DOT source')
    p.add_argument('--plotly', metavar='PATH', help='write the poset figure as plotly JSON')
    p.add_argument('--lattice-plotly', metavar='PATH',
                   help='write the lattice figure as plotly JSON')
    p.add_argument('--limit', type=_positive_int, default=cfg.ENUMERATION_LIMIT)

    p = command('check-supermatch', cmd_check_supermatch, '(a,b)-supermatch check or search')
    p.add_argument('--a', type=int, required=True)
    p.add_argument('--b', type=int, required=True)
    p.add_argument('--matching', metavar='FILE', help='check this matching instead of searching')
    p.add_argument('--limit', type=_positive_int, default=cfg.ENUMERATION_LIMIT)

    command('satsm-validate', cmd_satsm_validate, 'check list conditions and Rule 1')

    p = command('satsm-cnf', cmd_satsm_cnf, 'build and audit the CNF')
    p.add_argument('--dimacs', metavar='PATH', help="write DIMACS to PATH ('-' for stdout)")

    p = command('satsm-solve', cmd_satsm_solve, 'solve the CNF')
    p.add_argument('--external-solver', metavar='PATH', help='DIMACS solver binary')
    p.add_argument('--conflict-limit', type=_positive_int, default=cfg.SOLVER_CONFLICT_LIMIT)

    p = command('reduce', cmd_reduce, 'reduce SAT-SM to a family-F SM instance')
    p.add_argument('--out', metavar='DIR', help='write the reduction bundle here')
    p.add_argument('--conflict-limit', type=_positive_int, default=cfg.SOLVER_CONFLICT_LIMIT)

    p = command('gen-satsm', cmd_gen_satsm, 'generate a random valid SAT-SM instance',
                takes_instance=False)
    p.add_argument('--x', type=_positive_int, required=True, help='universe size |X|')
    p.add_argument('--n', type=_positive_int, required=True, help='number of lists')
    p.add_argument('--seed', type=int, default=0)

    p = command('verify-equivalence', cmd_verify_equivalence,
                'cross-check SAT answers against the supermatch oracle', takes_instance=False)
    p.add_argument('--count', type=_positive_int, default=200)
    p.add_argument('--max-x', type=_positive_int, default=12)
    p.add_argument('--max-n', type=_positive_int, default=cfg.EQUIVALENCE_MAX_LISTS)
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--workers', type=_positive_int, default=cfg.EQUIVALENCE_WORKERS)

    return parser


def _failure(exit_code: int, error: Exception, as_json: bool) -> CommandOutcome:
    if as_json:
        data = {'error': str(error), 'type': type(error).__name__}
        if isinstance(error, SatSmValidationError):
            data['report'] = error.report.to_dict()
        return CommandOutcome(exit_code, json.dumps(data, indent=2))

    if isinstance(error, SatSmValidationError):
        lines = [f"  [{v.kind}] {v.message}" for v in error.report.violations]
        return CommandOutcome(exit_code, '\n'.join(['invalid SAT-SM instance:'] + lines), True)
    if isinstance(error, UsageError):
        return CommandOutcome(exit_code, str(error), True)
    return CommandOutcome(exit_code, f"error: {str(error)}", True)


def run(argv: Optional[Sequence[str]] = None) -> CommandOutcome:
    """
    Parse arguments and dispatch to a subcommand

    Args:
        argv: arguments without the program name; defaults to sys.argv[1:]

    Returns:
        CommandOutcome: 0 success, 1 negative answer, 2 usage or input error, 3 resource limit
    """
    argv: List[str] = list(sys.argv[1:] if argv is None else argv)
    as_json = '--json' in argv
    cfg = get_config()
    parser = build_parser(cfg)
    try:
        args = parser.parse_args(argv)
        if args.log_level:
            logging.getLogger().setLevel(args.log_level)
        return args.handler(args, cfg)
    except SystemExit as e:
        # --help
        return CommandOutcome(e.code if isinstance(e.code, int) else EXIT_OK)
    except (EnumerationLimitError, ResourceLimitError) as e:
        return _failure(EXIT_LIMIT, e, as_json)
    except (SupermatchError, OSError) as e:
        return _failure(EXIT_ERROR, e, as_json)
    except Exception as e:
        logging.error(f"Unexpected error: {str(e)}")
        return _failure(EXIT_ERROR, e, as_json)


def main(argv: Optional[Sequence[str]] = None) -> int:
    cfg = get_config()
    logging.basicConfig(level=getattr(logging, cfg.LOG_LEVEL.upper(), logging.WARNING),
                        stream=sys.stderr,
                        format='%(asctime)s %(levelname)s %(message)s')
    outcome = run(argv)
    if outcome.payload:
        print(outcome.payload, file=sys.stderr if outcome.is_error else sys.stdout)
    return outcome.exit_code


if __name__ == '__main__':
    sys.exit(main())
