"""
SAT-SM instances: list validation, CNF generation, DIMACS, DPLL solving and structural audits
"""
import logging
import os
import subprocess
import tempfile
from collections import Counter, deque
from dataclasses import dataclass, field
from functools import cached_property
from itertools import islice
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np

from config import get_config
from exceptions import (ContractError, InstanceParseError, ResourceLimitError,
                        SatSmValidationError, SolverError, StructuralAuditError)

KINDS = ('Y', 'S', 'P')
GROUPS = ('A', 'B', 'C1', 'C2', 'D')

Occurrence = Tuple[int, int]  # (list index, position), both 0-based


@dataclass(frozen=True)
class SatSmInstance:
    """Ordered lists over the universe X = [1, universe_size]"""
    universe_size: int
    lists: Tuple[Tuple[int, ...], ...]

    @classmethod
    def from_lists(cls, universe_size: int, lists: Sequence[Sequence[int]]) -> 'SatSmInstance':
        return cls(universe_size, tuple(tuple(lst) for lst in lists))

    @property
    def n(self) -> int:
        return len(self.lists)

    @property
    def universe(self) -> range:
        return range(1, self.universe_size + 1)

    @cached_property
    def occurrences(self) -> Dict[int, List[Occurrence]]:
        found: Dict[int, List[Occurrence]] = {}
        for a, lst in enumerate(self.lists):
            for i, value in enumerate(lst):
                found.setdefault(value, []).append((a, i))
        return found

    def arcs(self) -> List[Tuple[int, int]]:
        return [(x, y) for lst in self.lists for x, y in zip(lst, lst[1:])]


def parse_satsm(text: str) -> SatSmInstance:
    """
    Parse a SAT-SM instance file

    Args:
        text (str): "|X| n" header followed by n lists of elements

    Returns:
        SatSmInstance: parsed (not yet validated) instance
    """
    content = [(i, line.strip()) for i, line in enumerate(text.splitlines(), start=1)]
    content = [(i, line) for i, line in content if line and not line.startswith('#')]
    if not content:
        raise InstanceParseError("malformed header: empty input")

    header_line, header = content[0]
    tokens = header.split()
    try:
        universe_size, n = (int(t) for t in tokens)
    except ValueError:
        raise InstanceParseError(f"malformed header '{header}', expected '|X| n'", header_line)
    if universe_size < 0 or n < 0:
        raise InstanceParseError("malformed header: negative size", header_line)

    body = content[1:]
    if len(body) != n:
        raise InstanceParseError(f"expected {n} lists, found {len(body)}", header_line)

    lists = []
    for line_no, raw in body:
        try:
            lists.append(tuple(int(t) for t in raw.split()))
        except ValueError:
            raise InstanceParseError(f"non-integer element in '{raw}'", line_no)
    return SatSmInstance(universe_size, tuple(lists))


def serialize_satsm(inst: SatSmInstance) -> str:
    lines = [f"{inst.universe_size} {inst.n}"]
    lines.extend(' '.join(str(x) for x in lst) for lst in inst.lists)
    return '\n'.join(lines) + '\n'


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str
    lists: Tuple[int, ...] = ()
    values: Tuple[int, ...] = ()

    def to_dict(self) -> Dict:
        return {'kind': self.kind, 'message': self.message,
                'lists': list(self.lists), 'values': list(self.values)}


@dataclass(frozen=True)
class ValidationReport:
    violations: Tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> FrozenSet[str]:
        return frozenset(v.kind for v in self.violations)

    def summary(self) -> str:
        if self.ok:
            return "ok"
        return '; '.join(v.message for v in self.violations)

    def to_dict(self) -> Dict:
        return {'ok': self.ok, 'violations': [v.to_dict() for v in self.violations]}


def _rule_one_violations(inst: SatSmInstance) -> List[Violation]:
    """Paths from (m,i) to (m,j), j > i, that leave list m and come back"""
    lists = inst.lists
    occ = inst.occurrences

    def jump(a: int, i: int) -> Occurrence:
        first, second = occ[lists[a][i]]
        return second if first == (a, i) else first

    violations = []
    for a, lst in enumerate(lists):
        for i in range(len(lst)):
            # state: list, position, last move was a jump, a jump was followed by a step
            start = (a, i, False, False)
            seen = {start}
            queue = deque([start])
            hit = None
            while queue and hit is None:
                b, j, jumped, crossed = queue.popleft()
                if b == a and j > i and crossed:
                    hit = j
                    break
                moves = []
                if j + 1 < len(lists[b]):
                    moves.append((b, j + 1, False, crossed or jumped))
                if not jumped:
                    c, k = jump(b, j)
                    moves.append((c, k, True, crossed))
                for state in moves:
                    if state not in seen:
                        seen.add(state)
                        queue.append(state)
            if hit is not None:
                violations.append(Violation(
                    'rule-1',
                    f"Rule 1: list {a + 1} position {i + 1} (value {lst[i]}) reaches "
                    f"position {hit + 1} (value {lst[hit]}) through another list",
                    (a + 1,), (lst[i], lst[hit])))
                break
    return violations


def validate_instance(cand: SatSmInstance) -> ValidationReport:
    """
    Check the list conditions, acyclicity and Rule 1

    Args:
        cand (SatSmInstance): candidate instance

    Returns:
        ValidationReport: every violated condition with its lists and values
    """
    violations: List[Violation] = []
    for a, lst in enumerate(cand.lists, start=1):
        if len(lst) < 2:
            violations.append(Violation('list-length', f"list {a} has length {len(lst)} < 2", (a,)))
        outside = [x for x in lst if not 1 <= x <= cand.universe_size]
        if outside:
            violations.append(Violation(
                'out-of-range', f"list {a} has elements outside [1, {cand.universe_size}]",
                (a,), tuple(outside)))
        repeated = sorted(x for x, c in Counter(lst).items() if c > 1)
        if repeated:
            violations.append(Violation('repeat', f"list {a} repeats {repeated}",
                                        (a,), tuple(repeated)))

    present = sorted(v for v in cand.occurrences if 1 <= v <= cand.universe_size)
    for value in present:
        holders = sorted({a + 1 for a, _ in cand.occurrences[value]})
        count = len(cand.occurrences[value])
        if count != 2 or len(holders) != 2:
            violations.append(Violation(
                'occurrence', f"value {value} appears {count} times in lists {holders}, "
                              f"expected once in each of two lists",
                tuple(holders), (value,)))
    if len(present) < cand.universe_size:
        missing = tuple(islice((v for v in cand.universe if v not in cand.occurrences), 10))
        violations.append(Violation(
            'occurrence', f"{cand.universe_size - len(present)} values never appear, "
                          f"starting with {list(missing)}",
            (), missing))

    total = sum(len(lst) for lst in cand.lists)
    if total != 2 * cand.universe_size:
        violations.append(Violation(
            'total-length', f"total list length {total} != 2|X| = {2 * cand.universe_size}"))

    arcs = nx.DiGraph(cand.arcs())
    if not nx.is_directed_acyclic_graph(arcs):
        cycle = nx.find_cycle(arcs)
        values = tuple(u for u, _ in cycle)
        violations.append(Violation('acyclicity', f"arcs form a cycle through {list(values)}",
                                    (), values))

    if not violations or all(v.kind == 'acyclicity' for v in violations):
        violations.extend(_rule_one_violations(cand))

    return ValidationReport(tuple(violations))


def require_valid(inst: SatSmInstance) -> None:
    report = validate_instance(inst)
    if not report.ok:
        raise SatSmValidationError(report)


@dataclass(frozen=True, order=True)
class CnfVariable:
    """y_e, s_e or p_e"""
    kind: str
    element: int

    def index(self, universe_size: int) -> int:
        """DIMACS number: y_e -> e, s_e -> |X|+e, p_e -> 2|X|+e"""
        return KINDS.index(self.kind) * universe_size + self.element

    @classmethod
    def from_index(cls, index: int, universe_size: int) -> 'CnfVariable':
        kind, element = divmod(index - 1, universe_size)
        return cls(KINDS[kind], element + 1)

    def __str__(self) -> str:
        return f"{self.kind.lower()}{self.element}"


@dataclass(frozen=True)
class Clause:
    literals: Tuple[int, ...]
    group: str = ''


@dataclass(frozen=True)
class Cnf:
    """Clauses over DIMACS-numbered variables 1..num_vars"""
    num_vars: int
    clauses: Tuple[Clause, ...]
    universe_size: int = 0
    raw_counts: Tuple[Tuple[str, int], ...] = ()

    def __post_init__(self):
        for clause in self.clauses:
            for lit in clause.literals:
                if lit == 0 or abs(lit) > self.num_vars:
                    raise ContractError(f"literal {lit} outside 1..{self.num_vars}")

    @classmethod
    def from_lists(cls, num_vars: int, clauses: Iterable[Sequence[int]]) -> 'Cnf':
        return cls(num_vars, tuple(Clause(tuple(c)) for c in clauses))

    def group_counts(self) -> Dict[str, int]:
        counts = Counter(c.group for c in self.clauses)
        return {g: counts.get(g, 0) for g in GROUPS}

    def raw_group_counts(self) -> Dict[str, int]:
        return dict(self.raw_counts)

    def group(self, name: str) -> List[Clause]:
        return [c for c in self.clauses if c.group == name]


@dataclass(frozen=True)
class Assignment:
    """Total truth assignment, keyed by DIMACS variable number"""
    values: Dict[int, bool] = field(default_factory=dict)
    universe_size: int = 0

    def __getitem__(self, var: Union[int, CnfVariable]) -> bool:
        if isinstance(var, CnfVariable):
            var = var.index(self.universe_size)
        return self.values[var]

    def true_variables(self) -> List[int]:
        return sorted(v for v, value in self.values.items() if value)

    def as_variables(self) -> Dict[CnfVariable, bool]:
        return {CnfVariable.from_index(v, self.universe_size): value
                for v, value in sorted(self.values.items())}


def build_cnf(inst: SatSmInstance) -> Cnf:
    """
    Generate the clause groups A, B, C1, C2 and D

    Args:
        inst (SatSmInstance): valid instance

    Returns:
        Cnf: deduplicated clauses tagged with their group, 3|X| variables
    """
    require_valid(inst)
    size = inst.universe_size
    lists = inst.lists

    def y(e): return e
    def s(e): return size + e
    def p(e): return 2 * size + e

    emitted: List[Tuple[str, List[int]]] = []

    for lst in lists:
        emitted.append(('A', [lit for e in lst for lit in (y(e), p(e))]))

    for lst in lists:
        for x, nxt in zip(lst, lst[1:]):
            emitted.append(('B', [s(x), -s(nxt)]))

    for lst in lists:
        for i, e in enumerate(lst):
            emitted.append(('C1', [-y(e), s(e)]))
            if i + 1 < len(lst):
                emitted.append(('C1', [-y(e), -s(lst[i + 1])]))

    for e in inst.universe:
        nexts = [lists[a][i + 1] for a, i in inst.occurrences[e] if i + 1 < len(lists[a])]
        emitted.append(('C2', [-s(e), y(e)] + [s(x) for x in nexts]))

    for e in inst.universe:
        prevs = [lists[a][i - 1] for a, i in inst.occurrences[e] if i > 0]
        if prevs:
            for x in prevs:
                emitted.append(('D', [-p(e), s(x)]))
            emitted.append(('D', [s(e)] + [-s(x) for x in prevs] + [p(e)]))
        else:
            emitted.append(('D', [s(e), p(e)]))
        emitted.append(('D', [-p(e), -s(e)]))

    seen = set()
    clauses = []
    for group, literals in emitted:
        literals = tuple(dict.fromkeys(literals))
        key = frozenset(literals)
        if key in seen:
            continue
        seen.add(key)
        clauses.append(Clause(literals, group))

    raw = Counter(group for group, _ in emitted)
    cnf = Cnf(3 * size, tuple(clauses), size, tuple((g, raw.get(g, 0)) for g in GROUPS))
    logging.info(f"Built CNF with {cnf.num_vars} variables and {len(clauses)} clauses "
                 f"({len(emitted)} before deduplication)")
    return cnf


@dataclass(frozen=True)
class AuditReport:
    group_counts: Dict[str, int]
    raw_group_counts: Dict[str, int]
    a_clause_lengths: Tuple[int, ...]
    c1_negative_binary: int
    non_affine_witness: Tuple[int, ...]
    schaefer_classes: Dict[str, bool]

    def to_dict(self) -> Dict:
        return {
            'group_counts': self.group_counts,
            'raw_group_counts': self.raw_group_counts,
            'a_clause_lengths': list(self.a_clause_lengths),
            'c1_negative_binary': self.c1_negative_binary,
            'non_affine_witness': list(self.non_affine_witness),
            'schaefer_classes': self.schaefer_classes,
        }


def schaefer_classes(cnf: Cnf) -> Dict[str, bool]:
    """Which tractable Schaefer classes the clause set falls into"""
    clauses = [c.literals for c in cnf.clauses]
    positives = [sum(1 for lit in c if lit > 0) for c in clauses]
    negatives = [len(c) - k for c, k in zip(clauses, positives)]
    return {
        'zero_valid': all(k > 0 for k in negatives),
        'one_valid': all(k > 0 for k in positives),
        'horn': all(k <= 1 for k in positives),
        'dual_horn': all(k <= 1 for k in negatives),
        'bijunctive': all(len(c) <= 2 for c in clauses),
        # an all-positive clause of size >= 2 is not an affine relation
        'affine': not any(len(c) >= 2 and k == 0 for c, k in zip(clauses, negatives)),
    }


def audit_schaefer(cnf: Cnf, inst: Optional[SatSmInstance] = None) -> AuditReport:
    """
    Assert the structural facts that keep the CNF outside every tractable class

    Args:
        cnf (Cnf): output of build_cnf
        inst (SatSmInstance): optional source instance for exact A-clause lengths

    Returns:
        AuditReport: counts per group and the Schaefer class flags
    """
    problems = []
    a_clauses = cnf.group('A')
    lengths = tuple(len(c.literals) for c in a_clauses)

    for c in a_clauses:
        if any(lit < 0 for lit in c.literals):
            problems.append(f"group A clause {list(c.literals)} has a negative literal")
        if len(c.literals) < 4:
            problems.append(f"group A clause {list(c.literals)} is shorter than 4")
    if inst is not None:
        expected = tuple(2 * len(lst) for lst in inst.lists)
        if lengths != expected:
            problems.append(f"group A lengths {list(lengths)} != {list(expected)}")

    raw = cnf.raw_group_counts()
    # raw group B count is the number of consecutive pairs, sum(k - 1)
    if raw.get('C1', 0) < 2 * raw.get('B', 0):
        problems.append(f"group C1 has {raw.get('C1', 0)} clauses before deduplication, "
                        f"expected at least {2 * raw.get('B', 0)}")
    negative_binary = sum(1 for c in cnf.group('C1')
                          if len(c.literals) == 2 and all(lit < 0 for lit in c.literals))
    if negative_binary == 0:
        problems.append("group C1 has no binary all-negative clause")

    witness = next((c.literals for c in cnf.clauses
                    if len(c.literals) >= 2 and all(lit > 0 for lit in c.literals)), ())
    if not witness:
        problems.append("no all-positive clause of size >= 2 (non-affine witness)")

    classes = schaefer_classes(cnf)
    tractable = [name for name, holds in classes.items() if holds]
    if tractable:
        problems.append(f"CNF falls into tractable classes {tractable}")

    if problems:
        raise StructuralAuditError('; '.join(problems))
    return AuditReport(cnf.group_counts(), raw, lengths, negative_binary, tuple(witness), classes)


def evaluate(cnf: Cnf, asg: Assignment) -> bool:
    return not unsatisfied_clauses(cnf, asg)


def unsatisfied_clauses(cnf: Cnf, asg: Assignment) -> List[Clause]:
    missing = [v for v in range(1, cnf.num_vars + 1) if v not in asg.values]
    if missing:
        raise ContractError(f"assignment is missing variables {missing[:5]}")
    return [c for c in cnf.clauses
            if not any(asg.values[abs(lit)] == (lit > 0) for lit in c.literals)]


class DpllSolver:
    """Unit propagation plus chronological backtracking; lowest variable, false first"""

    def __init__(self, conflict_limit: Optional[int] = None):
        if conflict_limit is None:
            conflict_limit = get_config().SOLVER_CONFLICT_LIMIT
        self.conflict_limit = conflict_limit
        self.conflicts = 0

    def _propagate(self, clauses, value, trail) -> bool:
        changed = True
        while changed:
            changed = False
            for clause in clauses:
                free_lit = None
                free_count = 0
                satisfied = False
                for lit in clause:
                    current = value[abs(lit)]
                    if current is None:
                        free_count += 1
                        free_lit = lit
                    elif current == (lit > 0):
                        satisfied = True
                        break
                if satisfied:
                    continue
                if free_count == 0:
                    return False
                if free_count == 1:
                    value[abs(free_lit)] = free_lit > 0
                    trail.append((abs(free_lit), False))
                    changed = True
        return True

    def solve(self, cnf: Cnf) -> Optional[Assignment]:
        """
        Search for a satisfying assignment

        Args:
            cnf (Cnf): formula

        Returns:
            Assignment: verified total model, or None when unsatisfiable
        """
        clauses = [c.literals for c in cnf.clauses]
        value: List[Optional[bool]] = [None] * (cnf.num_vars + 1)
        # (variable, decision that may still be flipped)
        trail: List[Tuple[int, bool]] = []
        self.conflicts = 0

        while True:
            if self._propagate(clauses, value, trail):
                var = next((v for v in range(1, cnf.num_vars + 1) if value[v] is None), None)
                if var is None:
                    break
                value[var] = False
                trail.append((var, True))
                continue

            self.conflicts += 1
            if self.conflicts > self.conflict_limit:
                raise ResourceLimitError(f"conflict limit {self.conflict_limit} reached")
            while trail:
                var, open_decision = trail.pop()
                value[var] = None
                if open_decision:
                    break
            else:
                logging.info(f"UNSAT after {self.conflicts} conflicts")
                return None
            value[var] = True
            trail.append((var, False))

        model = Assignment({v: bool(value[v]) for v in range(1, cnf.num_vars + 1)},
                           cnf.universe_size)
        if not evaluate(cnf, model):
            raise SolverError("model fails clause evaluation")
        logging.info(f"SAT after {self.conflicts} conflicts")
        return model


def solve(cnf: Cnf, conflict_limit: Optional[int] = None
          ) -> Optional[Assignment]:
    return DpllSolver(conflict_limit).solve(cnf)


def truth_table_satisfiable(cnf: Cnf) -> bool:
    """Exhaustive 2^v check; small formulas only"""
    v = cnf.num_vars
    if v > 22:
        raise ContractError(f"truth table over {v} variables is too large")
    rows = np.arange(2 ** v, dtype=np.int64)
    bits = ((rows[:, None] >> np.arange(v)) & 1).astype(bool)
    ok = np.ones(2 ** v, dtype=bool)
    for clause in cnf.clauses:
        sat = np.zeros(2 ** v, dtype=bool)
        for lit in clause.literals:
            column = bits[:, abs(lit) - 1]
            sat |= column if lit > 0 else ~column
        ok &= sat
    return bool(ok.any())


def decode(inst: SatSmInstance, asg: Assignment
           ) -> Tuple[FrozenSet[int], FrozenSet[int], FrozenSet[int]]:
    """Read S, L and N off the s, y and p variables"""
    size = inst.universe_size

    def pick(kind: str) -> FrozenSet[int]:
        return frozenset(e for e in inst.universe
                         if asg.values.get(CnfVariable(kind, e).index(size), False))

    return pick('S'), pick('Y'), pick('P')


def encode_sets(universe_size: int, s: Iterable[int], leaves: Iterable[int],
                neighbors: Iterable[int]) -> Assignment:
    chosen = {'S': set(s), 'Y': set(leaves), 'P': set(neighbors)}
    values = {}
    for kind in KINDS:
        for e in range(1, universe_size + 1):
            values[CnfVariable(kind, e).index(universe_size)] = e in chosen[kind]
    return Assignment(values, universe_size)


def encode(inst: SatSmInstance, s: Iterable[int], leaves: Iterable[int],
           neighbors: Iterable[int]) -> Assignment:
    return encode_sets(inst.universe_size, s, leaves, neighbors)


def to_dimacs(cnf: Cnf) -> str:
    lines = [f"p cnf {cnf.num_vars} {len(cnf.clauses)}"]
    group = None
    for clause in cnf.clauses:
        if clause.group and clause.group != group:
            lines.append(f"c group {clause.group}")
        group = clause.group
        lines.append(' '.join(str(lit) for lit in clause.literals) + ' 0')
    return '\n'.join(lines) + '\n'


def from_dimacs_model(text: str, num_vars: Optional[int] = None,
                      universe_size: int = 0) -> Optional[Assignment]:
    """
    Parse a solver model ("s"/"v" lines or a bare literal list)

    Args:
        text (str): solver output
        num_vars (int): variables absent from the model default to false up to this bound
        universe_size (int): |X| for CnfVariable lookups

    Returns:
        Assignment, or None when the solver reports UNSAT
    """
    values: Dict[int, bool] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line[0] == 'c':
            continue
        if line[0] == 's' or line in ('SAT', 'UNSAT', 'SATISFIABLE', 'UNSATISFIABLE'):
            if 'UNSAT' in line:
                return None
            continue
        tokens = line[1:].split() if line[0] == 'v' else line.split()
        for token in tokens:
            try:
                lit = int(token)
            except ValueError:
                raise InstanceParseError(f"malformed model token '{token}'", line_no)
            if lit != 0:
                values[abs(lit)] = lit > 0
    if num_vars is not None:
        for v in range(1, num_vars + 1):
            values.setdefault(v, False)
    return Assignment(values, universe_size)


def solve_external(cnf: Cnf, solver_path: str,
                   timeout: Optional[int] = None) -> Optional[Assignment]:
    """Run a DIMACS solver binary and re-verify its model"""
    if timeout is None:
        timeout = get_config().EXTERNAL_SOLVER_TIMEOUT
    with tempfile.NamedTemporaryFile('w', suffix='.cnf', delete=False) as handle:
        handle.write(to_dimacs(cnf))
        path = handle.name
    try:
        completed = subprocess.run([solver_path, path], capture_output=True,
                                   text=True, timeout=timeout)
    except subprocess.TimeoutExpired:
        raise ResourceLimitError(f"external solver exceeded {timeout}s")
    except OSError as e:
        raise SolverError(f"cannot run external solver: {str(e)}")
    finally:
        os.unlink(path)

    logging.info(f"External solver exited with code {completed.returncode}")
    model = from_dimacs_model(completed.stdout, cnf.num_vars, cnf.universe_size)
    if model is None:
        return None
    if not evaluate(cnf, model):
        raise SolverError("external solver model fails clause evaluation")
    return model
