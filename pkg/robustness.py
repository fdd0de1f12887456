"""
(a,b)-supermatch checks: brute-force oracle over the lattice and the family-F coverage test
"""
import logging
from dataclasses import dataclass
from itertools import combinations
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from exceptions import ContractError
from reduction import validate_family_f
from rotation_poset import (RotationPoset, enumerate_stable_matchings,
                            leaf_and_neighbor, men_of)
from sm_core import Instance, Matching, Pair, distance, fixed_pairs, matching_to_json


@dataclass(frozen=True)
class RobustnessQuery:
    """Break a non-fixed pairs, repair with at most b further changes"""
    a: int
    b: int

    def __post_init__(self):
        if self.a < 1:
            raise ContractError(f"a must be at least 1, got {self.a}")
        if self.b < 0:
            raise ContractError(f"b must be non-negative, got {self.b}")


@dataclass(frozen=True)
class RepairWitness:
    """Broken pair set with its nearest avoiding stable matching"""
    broken: FrozenSet[Pair]
    repair: Optional[Matching]
    cost: Optional[int]
    vacuous: bool = False

    def consistent_with(self, m: Matching, q: RobustnessQuery) -> bool:
        """
        Repair avoids every broken pair and its cost is d(m, repair) - a

        The budget is not part of this check: a failing witness carries the
        nearest repair, whose cost exceeds b. See within_budget.
        """
        if self.repair is None:
            return self.cost is None
        if self.repair.pairs & self.broken:
            return False
        return self.cost == distance(m, self.repair) - q.a

    def within_budget(self, q: RobustnessQuery) -> bool:
        return self.cost is not None and self.cost <= q.b

    def to_json_dict(self) -> Dict:
        return {
            'broken': [[m, w] for m, w in sorted(self.broken)],
            'repair': None if self.repair is None else matching_to_json(self.repair),
            'cost': self.cost,
            'vacuous': self.vacuous,
        }


def _matchings(lattice) -> List[Matching]:
    return [entry[1] if isinstance(entry, tuple) else entry for entry in lattice]


def nearest_repair(lattice, m: Matching,
                   broken: Iterable[Pair]) -> Tuple[Optional[Matching], Optional[int]]:
    """
    Closest stable matching that avoids every broken pair

    Args:
        lattice: stable matchings, or (ClosedSubset, Matching) entries
        m (Matching): matching being repaired
        broken: pairs that may not survive

    Returns:
        Tuple: (repair, distance), or (None, None) when every matching keeps a broken pair
    """
    broken = frozenset(broken)
    candidates = [c for c in _matchings(lattice) if not c.pairs & broken]
    if not candidates:
        return None, None
    best = min(candidates, key=lambda c: distance(m, c))
    return best, distance(m, best)


class SupermatchChecker:
    """Decides (a,b)-supermatch membership against one complete lattice"""

    def __init__(self, inst: Instance, lattice):
        self.inst = inst
        self.lattice = _matchings(lattice)
        if not self.lattice:
            raise ContractError("lattice is empty")
        self.fixed = fixed_pairs(inst, self.lattice)
        self.rows = {m: row for row, m in enumerate(self.lattice)}

        # partners[row, man] = woman, -1 when single
        self.partners = np.full((len(self.lattice), inst.n), -1, dtype=np.int64)
        for row, m in enumerate(self.lattice):
            for man, woman in m.pairs:
                self.partners[row, man] = woman

    def _row(self, m: Matching) -> int:
        row = self.rows.get(m)
        if row is None:
            raise ContractError("matching is not stable (absent from the lattice)")
        return row

    def nearest_repair(self, m: Matching,
                       broken: Sequence[Pair]) -> Tuple[Optional[Matching], Optional[int]]:
        row = self._row(m)
        avoids = np.ones(len(self.lattice), dtype=bool)
        for man, woman in broken:
            avoids &= self.partners[:, man] != woman
        if not avoids.any():
            return None, None
        distances = (self.partners != self.partners[row]).sum(axis=1)
        masked = np.where(avoids, distances, np.iinfo(np.int64).max)
        best = int(np.argmin(masked))
        return self.lattice[best], int(distances[best])

    def check(self, m: Matching,
              q: RobustnessQuery) -> Tuple[bool, Optional[RepairWitness]]:
        """
        Check one matching

        Args:
            m (Matching): stable matching from the lattice
            q (RobustnessQuery): a and b

        Returns:
            Tuple: (holds, witness); the witness names the first irreparable
            broken set in lexicographic order, or flags a vacuous success
        """
        self._row(m)
        nonfixed = sorted(m.pairs - self.fixed)
        if len(nonfixed) < q.a:
            logging.warning(f"Matching has {len(nonfixed)} non-fixed pairs, fewer than a={q.a}; "
                            f"supermatch holds vacuously")
            return True, RepairWitness(frozenset(), None, None, vacuous=True)

        for broken in combinations(nonfixed, q.a):
            repair, d = self.nearest_repair(m, broken)
            if repair is None:
                return False, RepairWitness(frozenset(broken), None, None)
            if d - q.a > q.b:
                return False, RepairWitness(frozenset(broken), repair, d - q.a)
        return True, None

    def first_supermatch(self, q: RobustnessQuery) -> Optional[Matching]:
        for m in self.lattice:
            if self.check(m, q)[0]:
                return m
        return None

    def supermatches(self, q: RobustnessQuery) -> List[Matching]:
        return [m for m in self.lattice if self.check(m, q)[0]]


def is_ab_supermatch(inst: Instance, lattice, m: Matching,
                     q: RobustnessQuery) -> Tuple[bool, Optional[RepairWitness]]:
    return SupermatchChecker(inst, lattice).check(m, q)


def exists_ab_supermatch(inst: Instance, q: RobustnessQuery,
                         limit: Optional[int] = None) -> Optional[Matching]:
    """First (a,b)-supermatch in enumeration order, or None"""
    checker = SupermatchChecker(inst, enumerate_stable_matchings(inst, limit))
    found = checker.first_supermatch(q)
    logging.info(f"({q.a},{q.b})-supermatch {'found' if found else 'not found'} "
                 f"among {len(checker.lattice)} stable matchings")
    return found


def all_ab_supermatches(inst: Instance, q: RobustnessQuery,
                        limit: Optional[int] = None) -> List[Matching]:
    return SupermatchChecker(inst, enumerate_stable_matchings(inst, limit)).supermatches(q)


def nonfixed_men(poset: RotationPoset) -> Set[int]:
    """Men moved by at least one rotation"""
    return men_of(poset.rotations)


def is_11_supermatch_familyF(poset: RotationPoset, s,
                             nonfixed_men: Iterable[int]) -> bool:
    """
    Coverage test for family-F posets: every non-fixed man sits in L(S) or N(S)

    Args:
        poset (RotationPoset): poset satisfying the family-F properties
        s (ClosedSubset): closed subset
        nonfixed_men: men that must be covered

    Returns:
        bool: True when the matching of s is a (1,1)-supermatch
    """
    report = validate_family_f(poset)
    if not report.passed:
        raise ContractError(f"poset is not in family F: {'; '.join(report.failures)}")
    leaves, neighbors = leaf_and_neighbor(poset, s)
    covered = men_of(poset.by_id[r] for r in leaves | neighbors)
    return set(nonfixed_men) <= covered
