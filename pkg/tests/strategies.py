"""Hypothesis strategies shared by the property tests"""
from hypothesis import strategies as st

from satsm import Cnf
from sm_core import Instance


@st.composite
def sm_instances(draw, max_n: int = 5, complete: bool = False):
    """Instances with mutual acceptability; incomplete lists unless complete=True"""
    n = draw(st.integers(min_value=1, max_value=max_n))
    if complete:
        acceptable = [[True] * n for _ in range(n)]
    else:
        acceptable = [[draw(st.booleans()) for _ in range(n)] for _ in range(n)]
    men = [draw(st.permutations([w for w in range(n) if acceptable[m][w]])) for m in range(n)]
    women = [draw(st.permutations([m for m in range(n) if acceptable[m][w]])) for w in range(n)]
    return Instance.from_lists(men, women)


@st.composite
def cnfs(draw, max_vars: int = 15, max_clauses: int = 40):
    num_vars = draw(st.integers(min_value=1, max_value=max_vars))
    literal = st.integers(min_value=1, max_value=num_vars).flatmap(
        lambda v: st.sampled_from([v, -v]))
    clause = st.lists(literal, min_size=1, max_size=4, unique_by=abs)
    return Cnf.from_lists(num_vars, draw(st.lists(clause, max_size=max_clauses)))
