"""
SAT-SM to Stable Marriage reduction: poset construction, preference synthesis,
family-F validation, solution mapping and random instance generation
"""
import logging
import random
from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import networkx as nx

from config import get_config
from exceptions import ConstructionError, ContractError, GenerationError, MappingError
from rotation_poset import (TYPE_PRODUCES, ClosedSubset, Rotation, RotationPoset,
                            leaf_and_neighbor, matching_of)
from satsm import (Assignment, SatSmInstance, decode, encode_sets, require_valid,
                   validate_instance)
from sm_core import Instance, Matching, blocking_pairs


def reduce_to_poset(inst: SatSmInstance) -> RotationPoset:
    """
    Build the family-F rotation poset of a valid SAT-SM instance

    Value e becomes rotation e; list a becomes man a (0-based) whose first
    rotation holds woman a. Remaining women flow along the lists breadth first.

    Args:
        inst (SatSmInstance): valid instance

    Returns:
        RotationPoset: two-pair rotations joined by type-1 arcs
    """
    require_valid(inst)
    lists = inst.lists
    slots: Dict[Tuple[int, int], int] = {}  # (value, man) -> woman

    def fill(value: int, man: int, woman: int):
        current = slots.get((value, man))
        if current is not None and current != woman:
            raise ConstructionError(
                f"rotation {value}: man {man} already holds woman {current}, not {woman}")
        slots[(value, man)] = woman

    def men(value: int) -> List[int]:
        return sorted(a for a, _ in inst.occurrences[value])

    def successor(value: int, man: int) -> Optional[int]:
        position = dict(inst.occurrences[value])[man]
        lst = lists[man]
        return lst[position + 1] if position + 1 < len(lst) else None

    def complete(value: int) -> bool:
        return all((value, man) in slots for man in men(value))

    for a, lst in enumerate(lists):
        fill(lst[0], a, a)

    queue = deque(v for v in inst.universe if complete(v))
    queued = set(queue)
    while queue:
        value = queue.popleft()
        first, second = men(value)
        steps = []
        nxt = successor(value, first)
        if nxt is not None:
            steps.append((nxt, first, slots[(value, second)]))
        nxt = successor(value, second)
        if nxt is not None:
            steps.append((nxt, second, slots[(value, first)]))
        for nxt, man, woman in sorted(steps):
            fill(nxt, man, woman)
            if nxt not in queued and complete(nxt):
                queued.add(nxt)
                queue.append(nxt)

    missing = [v for v in inst.universe if not complete(v)]
    if missing:
        raise ConstructionError(f"rotations {missing} never received both women")

    try:
        rotations = tuple(Rotation.from_cycle(e, [(m, slots[(e, m)]) for m in men(e)])
                          for e in inst.universe)
    except ContractError as e:
        raise ConstructionError(str(e))
    edges = frozenset((x, y, TYPE_PRODUCES) for x, y in inst.arcs())
    m0 = Matching.from_pairs((a, a) for a in range(inst.n))
    logging.info(f"Reduced SAT-SM instance to {len(rotations)} rotations over {inst.n} men")
    return RotationPoset(rotations, edges, m0)


def synthesize_preferences(poset: RotationPoset) -> Instance:
    """
    Preference lists whose rotation poset is the given one

    Each man starts with his man-optimal partner and appends the women his
    rotations hand him; each woman ends with her man-optimal partner and puts
    every later suitor on top.
    """
    people = set(poset.m0.wife) | set(poset.m0.husband)
    for rho in poset.rotations:
        for man, woman in rho.cycle:
            people.update((man, woman))
    n = max(people) + 1 if people else 0

    men_prefs: List[List[int]] = [[] for _ in range(n)]
    women_prefs: List[List[int]] = [[] for _ in range(n)]
    for man, woman in poset.m0.sorted_pairs():
        men_prefs[man].append(woman)
        women_prefs[woman].append(man)

    for rid in nx.lexicographical_topological_sort(poset.graph):
        for man, woman in poset.by_id[rid].produced():
            if woman in men_prefs[man] or man in women_prefs[woman]:
                raise ConstructionError(f"pair ({man}, {woman}) would be listed twice")
            men_prefs[man].append(woman)
            women_prefs[woman].insert(0, man)

    try:
        return Instance.from_lists(men_prefs, women_prefs)
    except ContractError as e:
        raise ConstructionError(str(e))


@dataclass
class FamilyFReport:
    """Per-property outcome of the family-F checks, with witnesses"""
    pairs_per_rotation: Dict[int, int] = field(default_factory=dict)
    predecessor_degree: Dict[int, int] = field(default_factory=dict)
    successor_degree: Dict[int, int] = field(default_factory=dict)
    edge_types: Dict[Tuple[int, int], int] = field(default_factory=dict)
    man_rotation_counts: Dict[int, int] = field(default_factory=dict)
    checks: Dict[str, bool] = field(default_factory=dict)
    failures: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> Dict:
        return {
            'passed': self.passed,
            'checks': self.checks,
            'failures': self.failures,
            'pairs_per_rotation': {str(k): v for k, v in self.pairs_per_rotation.items()},
            'predecessor_degree': {str(k): v for k, v in self.predecessor_degree.items()},
            'successor_degree': {str(k): v for k, v in self.successor_degree.items()},
            'edge_types': [[u, v, t] for (u, v), t in sorted(self.edge_types.items())],
            'man_rotation_counts': {str(k): v for k, v in self.man_rotation_counts.items()},
        }


def _pair_reuse_failures(poset: RotationPoset) -> List[str]:
    """Each pair is produced and eliminated at most once, production before elimination"""
    produced_by = defaultdict(list)
    eliminated_by = defaultdict(list)
    for rho in poset.rotations:
        for pair in rho.cycle:
            eliminated_by[pair].append(rho.id)
        for pair in rho.produced():
            produced_by[pair].append(rho.id)

    failures = []
    for pair, rids in sorted(produced_by.items()):
        if len(rids) > 1 or pair in poset.m0.pairs:
            failures.append(f"pair {pair} is produced again by rotations {rids}")
    for pair, rids in sorted(eliminated_by.items()):
        if len(rids) > 1:
            failures.append(f"pair {pair} is eliminated by rotations {rids}")
        if pair in poset.m0.pairs:
            continue
        producers = produced_by.get(pair, [])
        if not any(poset.precedes(p, r) for p in producers for r in rids):
            failures.append(f"pair {pair} is eliminated without being produced earlier")
    return failures


def validate_family_f(poset: RotationPoset) -> FamilyFReport:
    """
    Check the family-F properties P1-P4 and that no pair is reused

    Args:
        poset (RotationPoset): any rotation poset

    Returns:
        FamilyFReport: failures carry their witnesses
    """
    report = FamilyFReport()
    for rho in poset.rotations:
        report.pairs_per_rotation[rho.id] = len(rho.cycle)
        report.predecessor_degree[rho.id] = len(poset.predecessors(rho.id))
        report.successor_degree[rho.id] = len(poset.successors(rho.id))
    report.edge_types = {(u, v): t for u, v, t in poset.edges}
    counts = {man: 0 for man in poset.men}
    for rho in poset.rotations:
        for man in rho.men:
            counts[man] += 1
    report.man_rotation_counts = counts

    def record(name: str, failures: List[str]):
        report.checks[name] = not failures
        report.failures.extend(f"{name}: {msg}" for msg in failures)

    record('P1', [f"rotation {r} has {k} pairs"
                  for r, k in sorted(report.pairs_per_rotation.items()) if k != 2])
    record('P2', [f"rotation {r} has {report.predecessor_degree[r]} predecessors and "
                  f"{report.successor_degree[r]} successors"
                  for r in sorted(report.pairs_per_rotation)
                  if report.predecessor_degree[r] > 2 or report.successor_degree[r] > 2])
    record('P3', [f"edge {u}->{v} has type {t}"
                  for (u, v), t in sorted(report.edge_types.items()) if t != TYPE_PRODUCES])
    record('P4', [f"man {m} is in {k} rotations" for m, k in sorted(counts.items()) if k < 2])

    try:
        synthesize_preferences(poset)
        record('preference_lists', [])
    except ConstructionError as e:
        record('preference_lists', [str(e)])
    record('pair_reuse', _pair_reuse_failures(poset))

    if not report.passed:
        logging.info(f"Family-F validation failed: {report.failures}")
    return report


def map_solution_forward(inst: SatSmInstance, asg: Assignment, reduced: Instance) -> Matching:
    """Stable matching of the closed subset a satisfying assignment selects"""
    s, _, _ = decode(inst, asg)
    poset = reduce_to_poset(inst)
    if not poset.is_closed(s):
        raise MappingError(f"decoded set {sorted(s)} is not predecessor-closed")
    m = matching_of(poset, ClosedSubset(s))
    if blocking_pairs(reduced, m):
        raise MappingError("mapped matching is not stable in the reduced instance")
    return m


def map_solution_backward(poset: RotationPoset, s) -> Assignment:
    """Assignment with s, y and p true on S, L(S) and N(S)"""
    members = s.members if isinstance(s, ClosedSubset) else frozenset(s)
    leaves, neighbors = leaf_and_neighbor(poset, members)
    return encode_sets(len(poset.rotations), members, leaves, neighbors)


def _layerings(universe_size: int, list_count: int) -> List[Tuple[int, int]]:
    """(rows, columns) grids that fit |X| cells with at least two per row and column"""
    return [(rows, list_count - rows) for rows in range(2, list_count - 1)
            if 2 * max(rows, list_count - rows) <= universe_size <= rows * (list_count - rows)]


def _max_universe(list_count: int) -> int:
    # two lists share at most one value and sharing lists never close a triangle
    return (list_count // 2) * ((list_count + 1) // 2)


def feasible_shapes(max_x: int, max_lists: int) -> List[Tuple[int, int]]:
    """(|X|, n) pairs for which a valid instance exists"""
    return [(x, n) for n in range(4, max_lists + 1)
            for x in range(n, min(max_x, _max_universe(n)) + 1)]


def _grid_lists(rng: random.Random, universe_size: int,
                layerings: List[Tuple[int, int]]) -> Optional[List[List[int]]]:
    """Values are cells; a value's lists are its row and its column"""
    rows, cols = rng.choice(layerings)
    grid = [(r, c) for r in range(rows) for c in range(cols)]
    cells = set(rng.sample(grid, universe_size))
    row_sizes = [sum(1 for c in range(cols) if (r, c) in cells) for r in range(rows)]
    col_sizes = [sum(1 for r in range(rows) if (r, c) in cells) for c in range(cols)]
    if min(row_sizes) < 2 or min(col_sizes) < 2:
        return None

    labels = list(range(1, universe_size + 1))
    rng.shuffle(labels)
    value = dict(zip(sorted(cells), labels))
    lists = [[value[(r, c)] for c in range(cols) if (r, c) in cells] for r in range(rows)]
    lists += [[value[(r, c)] for r in range(rows) if (r, c) in cells] for c in range(cols)]
    return lists


def _path_lists(rng: random.Random, universe_size: int,
                list_count: int) -> Optional[List[List[int]]]:
    """
    Each value joins two random lists; every list reads its values in one
    random topological order of X
    """
    lengths = [2] * list_count
    for _ in range(2 * (universe_size - list_count)):
        open_lists = [a for a in range(list_count) if lengths[a] < list_count - 1]
        if not open_lists:
            return None
        lengths[rng.choice(open_lists)] += 1

    slots = [a for a in range(list_count) for _ in range(lengths[a])]
    rng.shuffle(slots)
    labels = list(range(1, universe_size + 1))
    rng.shuffle(labels)

    lists: List[List[int]] = [[] for _ in range(list_count)]
    for rank, label in enumerate(labels):
        lists[slots[2 * rank]].append(label)
        lists[slots[2 * rank + 1]].append(label)
    return lists


def generate_random_satsm(universe_size: int, list_count: int, seed: int,
                          attempts: Optional[int] = None) -> SatSmInstance:
    """
    Random valid SAT-SM instance

    Each attempt either lays the values out on a row/column grid or assigns
    every value to two random lists along a random topological order. Candidates
    failing validate_instance (Rule 1 included) are rejected.

    Args:
        universe_size (int): |X|
        list_count (int): n
        seed (int): random seed
        attempts (int): rejection budget

    Returns:
        SatSmInstance: instance passing validate_instance
    """
    if list_count < 4 or not list_count <= universe_size <= _max_universe(list_count):
        raise GenerationError(
            f"no valid instance has |X|={universe_size} and n={list_count} lists; "
            f"need n >= 4 and n <= |X| <= floor(n/2)*ceil(n/2)")

    if attempts is None:
        attempts = get_config().GENERATION_ATTEMPTS
    layerings = _layerings(universe_size, list_count)
    rng = random.Random(seed)
    rejected = 0
    for attempt in range(attempts):
        if layerings and rng.random() < 0.5:
            lists = _grid_lists(rng, universe_size, layerings)
        else:
            lists = _path_lists(rng, universe_size, list_count)
        if lists is None:
            continue

        rng.shuffle(lists)
        candidate = SatSmInstance.from_lists(universe_size, lists)
        if validate_instance(candidate).ok:
            logging.info(f"Generated SAT-SM instance |X|={universe_size} n={list_count} "
                         f"seed={seed} after {attempt + 1} attempts ({rejected} rejected)")
            return candidate
        rejected += 1

    raise GenerationError(f"rejection budget of {attempts} attempts exhausted for "
                          f"|X|={universe_size}, n={list_count}; try different parameters")
