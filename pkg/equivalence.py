"""
Executable check that a SAT-SM instance is satisfiable exactly when its reduced
Stable Marriage instance has a (1,1)-supermatch
"""
import logging
import random
from dataclasses import asdict, dataclass
from multiprocessing import Pool
from typing import Dict, List, Optional, Tuple

import pandas as pd

from config import get_config
from exceptions import GenerationError
from reduction import (feasible_shapes, generate_random_satsm, map_solution_backward,
                       map_solution_forward, reduce_to_poset, synthesize_preferences,
                       validate_family_f)
from robustness import RobustnessQuery, SupermatchChecker
from rotation_poset import closed_subset_of, enumerate_closed_subsets, find_rotations, isomorphic
from satsm import SatSmInstance, audit_schaefer, build_cnf, evaluate, solve

ONE_ONE = RobustnessQuery(1, 1)


@dataclass
class EquivalenceVerdict:
    """Outcome of every cross-check on one instance"""
    universe_size: int
    list_count: int
    satisfiable: bool
    supermatch_exists: bool
    family_f: bool
    round_trip: bool
    forward_ok: bool
    backward_ok: bool
    lattice_size: int
    seed: Optional[int] = None

    @property
    def agrees(self) -> bool:
        return (self.satisfiable == self.supermatch_exists and self.family_f
                and self.round_trip and self.forward_ok and self.backward_ok)

    def to_dict(self) -> Dict:
        data = asdict(self)
        data['agrees'] = self.agrees
        return data


def check_instance(inst: SatSmInstance,
                   conflict_limit: Optional[int] = None
                   ) -> EquivalenceVerdict:
    """
    Run the full reduction and compare the SAT answer with the supermatch oracle

    Args:
        inst (SatSmInstance): valid instance
        conflict_limit (int): DPLL conflict cap

    Returns:
        EquivalenceVerdict: per-check results
    """
    cnf = build_cnf(inst)
    audit_schaefer(cnf, inst)
    model = solve(cnf, conflict_limit)

    poset = reduce_to_poset(inst)
    family = validate_family_f(poset)
    reduced = synthesize_preferences(poset)
    found = find_rotations(reduced)
    round_trip = isomorphic(poset, found)

    lattice = enumerate_closed_subsets(found)
    checker = SupermatchChecker(reduced, lattice)
    supermatches = checker.supermatches(ONE_ONE)

    forward_ok = True
    if model is not None:
        forward_ok = checker.check(map_solution_forward(inst, model, reduced), ONE_ONE)[0]

    backward_ok = all(
        evaluate(cnf, map_solution_backward(poset, closed_subset_of(poset, m)))
        for m in supermatches)

    verdict = EquivalenceVerdict(
        universe_size=inst.universe_size,
        list_count=inst.n,
        satisfiable=model is not None,
        supermatch_exists=bool(supermatches),
        family_f=family.passed,
        round_trip=round_trip,
        forward_ok=forward_ok,
        backward_ok=backward_ok,
        lattice_size=len(lattice),
    )
    if not verdict.agrees:
        logging.warning(f"Equivalence check disagrees: {verdict.to_dict()}")
    return verdict


def _run_task(task: Tuple[int, int, int]) -> EquivalenceVerdict:
    universe_size, list_count, seed = task
    verdict = check_instance(generate_random_satsm(universe_size, list_count, seed))
    verdict.seed = seed
    return verdict


@dataclass
class EquivalenceSummary:
    verdicts: List[EquivalenceVerdict]

    @property
    def all_agree(self) -> bool:
        return all(v.agrees for v in self.verdicts)

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame([v.to_dict() for v in self.verdicts])

    def to_dict(self) -> Dict:
        return {
            'count': len(self.verdicts),
            'satisfiable': sum(v.satisfiable for v in self.verdicts),
            'disagreements': sum(not v.agrees for v in self.verdicts),
            'all_agree': self.all_agree,
            'verdicts': [v.to_dict() for v in self.verdicts],
        }


def plan_tasks(count: int, max_x: int, max_lists: int, seed: int) -> List[Tuple[int, int, int]]:
    """Deterministic (|X|, n, seed) triples drawn from the feasible shapes"""
    shapes = feasible_shapes(max_x, max_lists)
    if not shapes:
        raise GenerationError(f"no feasible instance shape with |X| <= {max_x}, n <= {max_lists}")
    rng = random.Random(seed)
    tasks = []
    for _ in range(count):
        universe_size, list_count = rng.choice(shapes)
        tasks.append((universe_size, list_count, rng.randrange(2 ** 31)))
    return tasks


def verify_equivalence(count: int, max_x: int, seed: int,
                       max_lists: Optional[int] = None,
                       workers: int = 1) -> EquivalenceSummary:
    """
    Check many random instances, optionally across worker processes

    Args:
        count (int): number of instances
        max_x (int): largest universe size
        seed (int): master seed
        max_lists (int): largest list count
        workers (int): process count; 1 runs inline

    Returns:
        EquivalenceSummary: verdicts in task order
    """
    if max_lists is None:
        max_lists = get_config().EQUIVALENCE_MAX_LISTS
    tasks = plan_tasks(count, max_x, max_lists, seed)
    if workers > 1:
        with Pool(processes=workers) as pool:
            verdicts = pool.map(_run_task, tasks)
    else:
        verdicts = [_run_task(task) for task in tasks]
    summary = EquivalenceSummary(verdicts)
    logging.info(f"Checked {count} instances: "
                 f"{sum(not v.agrees for v in verdicts)} disagreements")
    return summary
