"""
Rotations, the rotation poset and the closed-subset / stable-matching bijection
"""
import logging
from collections import defaultdict, deque
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

import networkx as nx
from graphviz import Digraph

from config import get_config
from exceptions import ContractError, EnumerationLimitError, ExposureError
from sm_core import (MEN_PROPOSING, Instance, Matching, Pair,
                     deferred_acceptance, is_stable)


Edge = Tuple[int, int, int]

TYPE_PRODUCES = 1
TYPE_REORDERS = 2


def _normalize_cycle(pairs: Sequence[Pair]) -> Tuple[Pair, ...]:
    start = min(range(len(pairs)), key=lambda i: pairs[i][0])
    return tuple(pairs[start:]) + tuple(pairs[:start])


@dataclass(frozen=True)
class Rotation:
    """Cyclic list of pairs; eliminating it gives man k_i the partner of man k_{i+1}"""
    id: int
    cycle: Tuple[Pair, ...]

    def __post_init__(self):
        if len(self.cycle) < 2:
            raise ContractError(f"rotation {self.id} needs at least two pairs")
        men = [m for m, _ in self.cycle]
        women = [w for _, w in self.cycle]
        if len(set(men)) != len(men) or len(set(women)) != len(women):
            raise ContractError(f"rotation {self.id} repeats a person")

    @classmethod
    def from_cycle(cls, rotation_id: int, pairs: Sequence[Pair]) -> 'Rotation':
        return cls(rotation_id, _normalize_cycle([tuple(p) for p in pairs]))

    @property
    def men(self) -> FrozenSet[int]:
        return frozenset(m for m, _ in self.cycle)

    def produced(self) -> List[Pair]:
        """Pairs created by eliminating this rotation, in cycle order"""
        k = len(self.cycle)
        return [(self.cycle[i][0], self.cycle[(i + 1) % k][1]) for i in range(k)]

    def new_partner(self, man: int) -> Optional[int]:
        for m, w in self.produced():
            if m == man:
                return w
        return None


@dataclass(frozen=True)
class ClosedSubset:
    """Predecessor-closed set of rotation ids"""
    members: FrozenSet[int]

    @classmethod
    def of(cls, ids: Iterable[int]) -> 'ClosedSubset':
        return cls(frozenset(ids))

    @property
    def sort_key(self) -> Tuple[int, ...]:
        return tuple(sorted(self.members))


@dataclass(frozen=True)
class RotationPoset:
    """Rotations plus the typed transitive reduction of their precedence relation"""
    rotations: Tuple[Rotation, ...]
    edges: FrozenSet[Edge]
    m0: Matching

    def __post_init__(self):
        ids = [r.id for r in self.rotations]
        if len(set(ids)) != len(ids):
            raise ContractError("duplicate rotation id")
        for u, v, kind in self.edges:
            if u not in self.by_id or v not in self.by_id:
                raise ContractError(f"edge ({u}, {v}) names an unknown rotation")
            if kind not in (TYPE_PRODUCES, TYPE_REORDERS):
                raise ContractError(f"edge ({u}, {v}) has unknown type {kind}")
        if not nx.is_directed_acyclic_graph(self.graph):
            raise ContractError("precedence relation has a cycle")

    @cached_property
    def by_id(self) -> Dict[int, Rotation]:
        return {r.id: r for r in self.rotations}

    @cached_property
    def ids(self) -> List[int]:
        return sorted(self.by_id)

    @cached_property
    def graph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(self.ids)
        for u, v, kind in self.edges:
            g.add_edge(u, v, type=kind)
        return g

    @cached_property
    def closure(self) -> nx.DiGraph:
        return nx.transitive_closure(self.graph, reflexive=False)

    def predecessors(self, rotation_id: int) -> Set[int]:
        return set(self.graph.predecessors(rotation_id))

    def successors(self, rotation_id: int) -> Set[int]:
        return set(self.graph.successors(rotation_id))

    def precedes(self, first: int, second: int) -> bool:
        return self.closure.has_edge(first, second)

    def is_closed(self, members: Iterable[int]) -> bool:
        members = set(members)
        return all(self.predecessors(r) <= members for r in members)

    @property
    def men(self) -> Set[int]:
        return set(self.m0.wife) | men_of(self.rotations)


def exposed_rotations(inst: Instance, m: Matching) -> List[Rotation]:
    """
    Rotations exposed on a stable matching, read off the next-man graph

    Args:
        inst (Instance): instance
        m (Matching): stable matching

    Returns:
        List[Rotation]: exposed rotations (id -1) ordered by their first man
    """
    next_man: Dict[int, int] = {}
    for man, woman in m.pairs:
        prefs = inst.men_prefs[man]
        for candidate in prefs[inst.men_rank[man][woman] + 1:]:
            holder = m.partner_of_woman(candidate)
            if inst.woman_prefers(candidate, man, holder):
                if holder is not None:
                    next_man[man] = holder
                break

    cycles = []
    visited: Set[int] = set()
    for start in sorted(next_man):
        if start in visited:
            continue
        position: Dict[int, int] = {}
        path: List[int] = []
        node = start
        while node is not None and node not in visited and node not in position:
            position[node] = len(path)
            path.append(node)
            node = next_man.get(node)
        if node is not None and node in position:
            cycle_men = path[position[node]:]
            cycles.append(Rotation.from_cycle(-1, [(x, m.wife[x]) for x in cycle_men]))
        visited.update(path)
    return sorted(cycles, key=lambda r: r.cycle[0][0])


def eliminate(m: Matching, rho: Rotation, inst: Optional[Instance] = None) -> Matching:
    """
    Eliminate a rotation from a matching exposing it

    Args:
        m (Matching): matching containing every pair of rho
        rho (Rotation): rotation to eliminate
        inst (Instance): optional instance; when given the result must be stable

    Returns:
        Matching: m/rho
    """
    missing = [p for p in rho.cycle if p not in m.pairs]
    if missing:
        raise ExposureError(f"rotation {rho.id} is not exposed: {missing} not in matching")
    pairs = (set(m.pairs) - set(rho.cycle)) | set(rho.produced())
    result = Matching(frozenset(pairs))
    if inst is not None and not is_stable(inst, result):
        raise ExposureError(f"eliminating rotation {rho.id} gives an unstable matching")
    return result


def _precedence_edges(inst: Instance, rotations: Sequence[Rotation]) -> FrozenSet[Edge]:
    produced_by: Dict[Pair, int] = {}
    # woman -> [(rotation id, man she leaves, man she gets)]
    moves: Dict[int, List[Tuple[int, int, int]]] = defaultdict(list)
    for rho in rotations:
        k = len(rho.cycle)
        for i, (man, _) in enumerate(rho.cycle):
            next_man, next_woman = rho.cycle[(i + 1) % k]
            produced_by[(man, next_woman)] = rho.id
            moves[next_woman].append((rho.id, next_man, man))

    typed: Dict[Tuple[int, int], int] = {}

    def add(u: int, v: int, kind: int):
        if typed.get((u, v), kind + 1) > kind:
            typed[(u, v)] = kind

    for rho in rotations:
        k = len(rho.cycle)
        for i, (man, woman) in enumerate(rho.cycle):
            if (man, woman) in produced_by:
                add(produced_by[(man, woman)], rho.id, TYPE_PRODUCES)
            next_woman = rho.cycle[(i + 1) % k][1]
            ranks = inst.men_rank[man]
            for skipped in inst.men_prefs[man][ranks[woman] + 1:ranks[next_woman]]:
                her_ranks = inst.women_rank[skipped]
                his_rank = her_ranks[man]
                for rid, old, new in moves[skipped]:
                    if rid != rho.id and her_ranks[new] < his_rank < her_ranks[old]:
                        add(rid, rho.id, TYPE_REORDERS)

    g = nx.DiGraph()
    g.add_nodes_from(r.id for r in rotations)
    g.add_edges_from(typed)
    reduced = nx.transitive_reduction(g)
    return frozenset((u, v, typed[(u, v)]) for u, v in reduced.edges())


def find_rotations(inst: Instance) -> RotationPoset:
    """
    Discover every rotation and the typed precedence edges

    Walks one maximal elimination chain from the man-optimal matching, always
    eliminating the exposed rotation whose cycle starts with the smallest man.
    Ids follow discovery order.

    Args:
        inst (Instance): instance

    Returns:
        RotationPoset: rotation poset with the man-optimal matching attached
    """
    m0 = deferred_acceptance(inst, MEN_PROPOSING)
    current = m0
    rotations: List[Rotation] = []
    while True:
        exposed = exposed_rotations(inst, current)
        if not exposed:
            break
        rho = Rotation(len(rotations), exposed[0].cycle)
        rotations.append(rho)
        current = eliminate(current, rho)

    edges = _precedence_edges(inst, rotations)
    logging.info(f"Found {len(rotations)} rotations and {len(edges)} cover edges")
    return RotationPoset(tuple(rotations), edges, m0)


def closed_subset_of(poset: RotationPoset, m: Matching) -> ClosedSubset:
    """Closed subset whose elimination from M0 yields m"""
    eliminator = {pair: rho.id for rho in poset.rotations for pair in rho.cycle}
    members: Set[int] = set()
    for man in sorted(set(poset.m0.wife) | set(m.wife)):
        target = m.partner_of_man(man)
        partner = poset.m0.partner_of_man(man)
        while partner != target:
            rid = eliminator.get((man, partner))
            if rid is None:
                raise ContractError(f"matching is not stable: man {man} cannot reach {target}")
            members.add(rid)
            partner = poset.by_id[rid].new_partner(man)

    subset = ClosedSubset(frozenset(members))
    if not poset.is_closed(members) or matching_of(poset, subset) != m:
        raise ContractError("matching is not stable in this lattice")
    return subset


def matching_of(poset: RotationPoset, s, m0: Optional[Matching] = None) -> Matching:
    """
    Stable matching of a closed subset

    Args:
        poset (RotationPoset): rotation poset
        s (ClosedSubset or iterable of ids): predecessor-closed rotation set
        m0 (Matching): man-optimal matching, defaults to the poset's own

    Returns:
        Matching: result of eliminating s in topological order
    """
    members = s.members if isinstance(s, ClosedSubset) else frozenset(s)
    unknown = members - set(poset.by_id)
    if unknown:
        raise ContractError(f"unknown rotation ids {sorted(unknown)}")
    if not poset.is_closed(members):
        raise ContractError(f"subset {sorted(members)} is not predecessor-closed")
    current = poset.m0 if m0 is None else m0
    for rid in nx.lexicographical_topological_sort(poset.graph.subgraph(members)):
        current = eliminate(current, poset.by_id[rid])
    return current


def leaf_and_neighbor(poset: RotationPoset, s) -> Tuple[FrozenSet[int], FrozenSet[int]]:
    """L(S): members without a successor in S; N(S): outsiders whose predecessors are all in S"""
    members = s.members if isinstance(s, ClosedSubset) else frozenset(s)
    leaves = frozenset(r for r in members if not poset.successors(r) & members)
    neighbors = frozenset(r for r in poset.ids
                          if r not in members and poset.predecessors(r) <= members)
    return leaves, neighbors


def enumerate_closed_subsets(poset: RotationPoset,
                             limit: Optional[int] = None
                             ) -> List[Tuple[ClosedSubset, Matching]]:
    """All closed subsets with their matchings, sorted by their member ids"""
    if limit is None:
        limit = get_config().ENUMERATION_LIMIT
    start: FrozenSet[int] = frozenset()
    table: Dict[FrozenSet[int], Matching] = {start: poset.m0}
    queue = deque([start])
    while queue:
        members = queue.popleft()
        _, neighbors = leaf_and_neighbor(poset, members)
        for rid in sorted(neighbors):
            grown = members | {rid}
            if grown in table:
                continue
            table[grown] = eliminate(table[members], poset.by_id[rid])
            if len(table) > limit:
                raise EnumerationLimitError(f"more than {limit} stable matchings")
            queue.append(grown)
    ordered = sorted(table.items(), key=lambda item: tuple(sorted(item[0])))
    return [(ClosedSubset(members), m) for members, m in ordered]


def enumerate_stable_matchings(inst: Instance,
                               limit: Optional[int] = None
                               ) -> List[Tuple[ClosedSubset, Matching]]:
    poset = find_rotations(inst)
    lattice = enumerate_closed_subsets(poset, limit)
    logging.info(f"Enumerated {len(lattice)} stable matchings")
    return lattice


def men_of(rotations: Iterable[Rotation]) -> Set[int]:
    return {man for rho in rotations for man, _ in rho.cycle}


def _rotation_label(rho: Rotation) -> str:
    pairs = ' '.join(f"({m},{w})" for m, w in rho.cycle)
    return f"rho{rho.id}: {pairs}"


def to_dot(poset: RotationPoset) -> str:
    """DOT digraph source; nodes carry the cycle, edges carry the type"""
    dot = Digraph('rotation_poset')
    for rho in sorted(poset.rotations, key=lambda r: r.id):
        dot.node(str(rho.id), _rotation_label(rho))
    for u, v, kind in sorted(poset.edges):
        dot.edge(str(u), str(v), label=f"type {kind}")
    return dot.source


def poset_to_json(poset: RotationPoset) -> Dict:
    return {
        'rotations': [{'id': rho.id, 'cycle': [[m, w] for m, w in rho.cycle]}
                      for rho in sorted(poset.rotations, key=lambda r: r.id)],
        'edges': [[u, v, kind] for u, v, kind in sorted(poset.edges)],
    }


def isomorphic(p: RotationPoset, q: RotationPoset) -> bool:
    """Same cycles and same typed edges up to rotation-id relabeling"""
    p_keys = {rho.cycle: rho.id for rho in p.rotations}
    q_keys = {rho.cycle: rho.id for rho in q.rotations}
    if set(p_keys) != set(q_keys):
        return False
    relabel = {p_keys[cycle]: q_keys[cycle] for cycle in p_keys}
    mapped = {(relabel[u], relabel[v], kind) for u, v, kind in p.edges}
    return mapped == set(q.edges)
