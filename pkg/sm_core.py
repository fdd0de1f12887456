"""
Stable Marriage instances, matchings, deferred acceptance and stability checks
"""
import logging
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from exceptions import ContractError, InstanceParseError


Pair = Tuple[int, int]

MEN_PROPOSING = 'men'
WOMEN_PROPOSING = 'women'

EMPTY_LIST_MARKER = '-'


@dataclass(frozen=True)
class Instance:
    """Stable Marriage instance with n men and n women, possibly incomplete lists"""
    n: int
    men_prefs: Tuple[Tuple[int, ...], ...]
    women_prefs: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        if self.n < 0:
            raise ContractError(f"instance size must be non-negative, got {self.n}")
        if len(self.men_prefs) != self.n or len(self.women_prefs) != self.n:
            raise ContractError(f"expected {self.n} lists per side")
        for side, lists in (('man', self.men_prefs), ('woman', self.women_prefs)):
            for person, prefs in enumerate(lists):
                if len(set(prefs)) != len(prefs):
                    raise ContractError(f"{side} {person} has a duplicate entry")
                if any(not 0 <= other < self.n for other in prefs):
                    raise ContractError(f"{side} {person} lists an id out of range")
        for man, prefs in enumerate(self.men_prefs):
            for woman in prefs:
                if man not in self.women_rank[woman]:
                    raise ContractError(f"non-mutual acceptability: ({man}, {woman})")
        for woman, prefs in enumerate(self.women_prefs):
            for man in prefs:
                if woman not in self.men_rank[man]:
                    raise ContractError(f"non-mutual acceptability: ({man}, {woman})")

    @classmethod
    def from_lists(cls, men_prefs: Sequence[Sequence[int]],
                   women_prefs: Sequence[Sequence[int]]) -> 'Instance':
        return cls(len(men_prefs),
                   tuple(tuple(p) for p in men_prefs),
                   tuple(tuple(p) for p in women_prefs))

    @cached_property
    def men_rank(self) -> Tuple[Dict[int, int], ...]:
        return tuple({w: r for r, w in enumerate(p)} for p in self.men_prefs)

    @cached_property
    def women_rank(self) -> Tuple[Dict[int, int], ...]:
        return tuple({m: r for r, m in enumerate(p)} for p in self.women_prefs)

    def acceptable(self, man: int, woman: int) -> bool:
        return 0 <= man < self.n and woman in self.men_rank[man]

    def man_prefers(self, man: int, first: int, second: Optional[int]) -> bool:
        """True when man ranks woman `first` above `second` (None = single)"""
        if second is None:
            return first in self.men_rank[man]
        return self.men_rank[man][first] < self.men_rank[man][second]

    def woman_prefers(self, woman: int, first: int, second: Optional[int]) -> bool:
        """True when woman ranks man `first` above `second` (None = single)"""
        if second is None:
            return first in self.women_rank[woman]
        return self.women_rank[woman][first] < self.women_rank[woman][second]


@dataclass(frozen=True)
class Matching:
    """Injective partial assignment of men to women"""
    pairs: FrozenSet[Pair]

    def __post_init__(self):
        men = [m for m, _ in self.pairs]
        women = [w for _, w in self.pairs]
        if len(set(men)) != len(men) or len(set(women)) != len(women):
            raise ContractError("a person appears in more than one pair")

    @classmethod
    def from_pairs(cls, pairs: Iterable[Pair]) -> 'Matching':
        return cls(frozenset((int(m), int(w)) for m, w in pairs))

    @cached_property
    def wife(self) -> Dict[int, int]:
        return dict(self.pairs)

    @cached_property
    def husband(self) -> Dict[int, int]:
        return {w: m for m, w in self.pairs}

    def partner_of_man(self, man: int) -> Optional[int]:
        return self.wife.get(man)

    def partner_of_woman(self, woman: int) -> Optional[int]:
        return self.husband.get(woman)

    def sorted_pairs(self) -> List[Pair]:
        return sorted(self.pairs)

    def __len__(self) -> int:
        return len(self.pairs)

    def __contains__(self, pair) -> bool:
        return pair in self.pairs


def _parse_ids(raw: str, line_no: int, n: int, side: str) -> Tuple[int, ...]:
    if raw == EMPTY_LIST_MARKER:
        return ()
    ids = []
    for token in raw.split():
        try:
            value = int(token)
        except ValueError:
            raise InstanceParseError(f"non-integer id '{token}'", line_no)
        if not 0 <= value < n:
            raise InstanceParseError(f"id {value} out of range [0, {n})", line_no)
        if value in ids:
            raise InstanceParseError(f"duplicate {side} id {value} in list", line_no)
        ids.append(value)
    return tuple(ids)


def parse_instance(text: str) -> Instance:
    """
    Parse an SM instance file

    Args:
        text (str): header line with n, then n men's lists and n women's lists

    Returns:
        Instance: validated instance
    """
    content = [(i, line.strip()) for i, line in enumerate(text.splitlines(), start=1)]
    content = [(i, line) for i, line in content if line and not line.startswith('#')]
    if not content:
        raise InstanceParseError("malformed header: empty input")

    header_line, header = content[0]
    try:
        n = int(header)
    except ValueError:
        raise InstanceParseError(f"malformed header '{header}'", header_line)
    if n < 0:
        raise InstanceParseError(f"malformed header: negative size {n}", header_line)

    body = content[1:]
    if len(body) != 2 * n:
        raise InstanceParseError(
            f"expected {2 * n} preference lines, found {len(body)}", header_line)

    men = [_parse_ids(raw, i, n, 'woman') for i, raw in body[:n]]
    women = [_parse_ids(raw, i, n, 'man') for i, raw in body[n:]]

    for man, (line_no, _) in enumerate(body[:n]):
        for woman in men[man]:
            if man not in women[woman]:
                raise InstanceParseError(
                    f"non-mutual acceptability: man {man} lists woman {woman} "
                    f"but she omits him", line_no)
    for woman, (line_no, _) in enumerate(body[n:]):
        for man in women[woman]:
            if woman not in men[man]:
                raise InstanceParseError(
                    f"non-mutual acceptability: woman {woman} lists man {man} "
                    f"but he omits her", line_no)

    inst = Instance(n, tuple(men), tuple(women))
    logging.info(f"Parsed instance with n={n}")
    return inst


def serialize_instance(inst: Instance) -> str:
    lines = [str(inst.n)]
    for prefs in inst.men_prefs + inst.women_prefs:
        lines.append(' '.join(str(x) for x in prefs) if prefs else EMPTY_LIST_MARKER)
    return '\n'.join(lines) + '\n'


def parse_matching(text: str) -> Matching:
    """Parse a matching file: one "man woman" pair per line"""
    pairs = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith('#'):
            continue
        tokens = line.split()
        if len(tokens) != 2:
            raise InstanceParseError("expected 'man woman'", line_no)
        try:
            pairs.append((int(tokens[0]), int(tokens[1])))
        except ValueError:
            raise InstanceParseError(f"non-integer pair '{line}'", line_no)
    try:
        return Matching.from_pairs(pairs)
    except ContractError as e:
        raise InstanceParseError(str(e))


def matching_to_json(m: Matching) -> List[List[int]]:
    return [[man, woman] for man, woman in m.sorted_pairs()]


def _propose(proposer_prefs: Sequence[Sequence[int]],
             receiver_rank: Sequence[Dict[int, int]]) -> Dict[int, int]:
    """Gale-Shapley with incomplete lists; returns receiver -> proposer"""
    next_choice = [0] * len(proposer_prefs)
    held: Dict[int, int] = {}
    free = deque(range(len(proposer_prefs)))
    while free:
        proposer = free.popleft()
        prefs = proposer_prefs[proposer]
        while next_choice[proposer] < len(prefs):
            receiver = prefs[next_choice[proposer]]
            next_choice[proposer] += 1
            current = held.get(receiver)
            if current is None:
                held[receiver] = proposer
                break
            ranks = receiver_rank[receiver]
            if ranks[proposer] < ranks[current]:
                held[receiver] = proposer
                free.append(current)
                break
    return held


def deferred_acceptance(inst: Instance, side: str = MEN_PROPOSING) -> Matching:
    """
    Run deferred acceptance

    Args:
        inst (Instance): instance
        side (str): 'men' for the man-optimal matching, 'women' for the woman-optimal one

    Returns:
        Matching: stable matching
    """
    if side == MEN_PROPOSING:
        held = _propose(inst.men_prefs, inst.women_rank)
        return Matching.from_pairs((m, w) for w, m in held.items())
    if side == WOMEN_PROPOSING:
        held = _propose(inst.women_prefs, inst.men_rank)
        return Matching.from_pairs(held.items())
    raise ContractError(f"unknown proposing side '{side}'")


def blocking_pairs(inst: Instance, m: Matching) -> List[Pair]:
    """
    List every acceptable pair that blocks a matching

    Args:
        inst (Instance): instance
        m (Matching): matching over acceptable pairs

    Returns:
        List: blocking (man, woman) pairs, sorted; empty iff m is stable
    """
    for man, woman in m.pairs:
        if not inst.acceptable(man, woman):
            raise ContractError(f"pair ({man}, {woman}) is not acceptable")

    blocking = []
    for man, prefs in enumerate(inst.men_prefs):
        current = m.partner_of_man(man)
        better = prefs if current is None else prefs[:inst.men_rank[man][current]]
        for woman in better:
            if inst.woman_prefers(woman, man, m.partner_of_woman(woman)):
                blocking.append((man, woman))
    return sorted(blocking)


def is_stable(inst: Instance, m: Matching) -> bool:
    return not blocking_pairs(inst, m)


def fixed_pairs(inst: Instance, all_matchings: Sequence[Matching]) -> FrozenSet[Pair]:
    """Pairs present in every stable matching"""
    if not all_matchings:
        raise ContractError("fixed pairs need at least one stable matching")
    common = set(all_matchings[0].pairs)
    for m in all_matchings[1:]:
        common &= m.pairs
    return frozenset(common)


def distance(m1: Matching, m2: Matching) -> int:
    """Number of men whose partner (or single status) differs"""
    men = set(m1.wife) | set(m2.wife)
    return sum(1 for man in men if m1.partner_of_man(man) != m2.partner_of_man(man))


def brute_force_stable_matchings(inst: Instance) -> List[Matching]:
    """Exhaustive search over all partial matchings; small instances only"""
    found: List[Matching] = []
    used = set()
    pairs: List[Pair] = []

    def extend(man: int):
        if man == inst.n:
            candidate = Matching(frozenset(pairs))
            if is_stable(inst, candidate):
                found.append(candidate)
            return
        extend(man + 1)
        for woman in inst.men_prefs[man]:
            if woman in used:
                continue
            used.add(woman)
            pairs.append((man, woman))
            extend(man + 1)
            pairs.pop()
            used.discard(woman)

    extend(0)
    return found
