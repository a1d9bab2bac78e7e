import logging

import pytest
from hypothesis import strategies as st

from cfgraph.graph import Dag


@pytest.fixture(autouse=True)
def _quiet_identify_warnings(caplog):
    # dropped-source warnings are expected in random suites
    caplog.set_level(logging.ERROR, logger="cfgraph.identify")


@st.composite
def dags(draw, min_nodes=1, max_nodes=8):
    n = draw(st.integers(min_nodes, max_nodes))
    names = [f"N{k}" for k in range(n)]
    order = draw(st.permutations(names))
    pairs = [(order[i], order[j]) for i in range(n) for j in range(i + 1, n)]
    mask = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    return Dag(names, [p for p, keep in zip(pairs, mask) if keep])


def disjoint_triple(rng, nodes, max_z=None):
    """Random non-empty x, y and possibly empty z, pairwise disjoint."""
    nodes = list(nodes)
    perm = [nodes[k] for k in rng.permutation(len(nodes))]
    cut1 = int(rng.integers(1, len(perm) - 1 + 1)) if len(perm) > 2 else 1
    x = perm[:cut1]
    rest = perm[cut1:]
    cut2 = int(rng.integers(1, len(rest) + 1))
    y = rest[:cut2]
    pool = rest[cut2:]
    z = [v for v in pool if rng.random() < 0.5]
    return set(x), set(y), set(z)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in RESULTS.values():
        terminalreporter.write_line(line)
