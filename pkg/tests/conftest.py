import os

import pytest

from satsm import SatSmInstance, parse_satsm
from sm_core import Matching, parse_instance

FIXTURES = os.path.join(os.path.dirname(__file__), 'fixtures')

SAMPLE_ROWS = {
    'M0': [(0, 5), (1, 4), (2, 6), (3, 3), (4, 1), (5, 0), (6, 2)],
    'M1': [(0, 2), (1, 4), (2, 6), (3, 3), (4, 1), (5, 0), (6, 5)],
    'M2': [(0, 2), (1, 5), (2, 6), (3, 3), (4, 1), (5, 4), (6, 0)],
    'M3': [(0, 2), (1, 5), (2, 0), (3, 3), (4, 1), (5, 4), (6, 6)],
    'M4': [(0, 2), (1, 3), (2, 0), (3, 5), (4, 1), (5, 4), (6, 6)],
    'M5': [(0, 4), (1, 5), (2, 6), (3, 3), (4, 1), (5, 2), (6, 0)],
    'M6': [(0, 4), (1, 5), (2, 0), (3, 3), (4, 1), (5, 2), (6, 6)],
    'M7': [(0, 4), (1, 3), (2, 0), (3, 5), (4, 1), (5, 2), (6, 6)],
    'M8': [(0, 1), (1, 5), (2, 6), (3, 3), (4, 4), (5, 2), (6, 0)],
    'M9': [(0, 1), (1, 5), (2, 0), (3, 3), (4, 4), (5, 2), (6, 6)],
    'M10': [(0, 1), (1, 3), (2, 0), (3, 5), (4, 4), (5, 2), (6, 6)],
}

# rotation id -> cycle, in discovery order from M0
SAMPLE_ROTATIONS = {
    0: ((0, 5), (6, 2)),
    1: ((1, 4), (6, 5), (5, 0)),
    2: ((0, 2), (5, 4)),
    3: ((0, 4), (4, 1)),
    4: ((2, 6), (6, 0)),
    5: ((1, 5), (3, 3)),
}

SAMPLE_EDGES = {(0, 1, 1), (1, 2, 1), (1, 4, 1), (2, 3, 1), (4, 5, 2)}

# closed subset of each stable row
SAMPLE_SUBSETS = {
    'M0': (), 'M1': (0,), 'M2': (0, 1), 'M3': (0, 1, 4), 'M4': (0, 1, 4, 5),
    'M5': (0, 1, 2), 'M6': (0, 1, 2, 4), 'M7': (0, 1, 2, 4, 5), 'M8': (0, 1, 2, 3),
    'M9': (0, 1, 2, 3, 4), 'M10': (0, 1, 2, 3, 4, 5),
}

# stable rows in lexicographic closed-subset order
ENUMERATION_ORDER = ['M0', 'M1', 'M2', 'M5', 'M8', 'M9', 'M10', 'M6', 'M7', 'M3', 'M4']


def fixture_path(name: str) -> str:
    return os.path.join(FIXTURES, name)


@pytest.fixture
def sample7():
    with open(fixture_path('sample7.sm')) as handle:
        return parse_instance(handle.read())


@pytest.fixture
def stable_rows():
    return {name: Matching.from_pairs(pairs) for name, pairs in SAMPLE_ROWS.items()}


@pytest.fixture
def diamond():
    with open(fixture_path('diamond.satsm')) as handle:
        return parse_satsm(handle.read())


@pytest.fixture
def rule1_violation():
    return SatSmInstance.from_lists(2, [[1, 2], [1, 2]])


@pytest.fixture(autouse=True, scope='session')
def testing_profile():
    """Run the suite under TestingConfig"""
    previous = os.environ.get('SUPERMATCH_ENV')
    os.environ['SUPERMATCH_ENV'] = 'testing'
    yield
    if previous is None:
        del os.environ['SUPERMATCH_ENV']
    else:
        os.environ['SUPERMATCH_ENV'] = previous
