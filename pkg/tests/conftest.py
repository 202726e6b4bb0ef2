import pytest
from hypothesis import settings
from hypothesis import strategies as st

from topoadvice.families import random_connected
from topoadvice.graph import build_graph

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


def path_graph(n):
    """Path 0-1-...-(n-1); each inner node uses port 0 backwards, port 1 forwards."""
    return build_graph(n, [(i, 1 if i else 0, i + 1, 0) for i in range(n - 1)])


@pytest.fixture
def edge():
    return build_graph(2, [(0, 0, 1, 0)])


@pytest.fixture
def triangle():
    return build_graph(3, [(0, 0, 1, 0), (1, 1, 2, 0), (2, 1, 0, 1)])


def graphs(min_n=2, max_n=10, max_degree=5):
    return st.builds(
        random_connected,
        n=st.integers(min_n, max_n),
        max_degree=st.integers(2, max_degree),
        seed=st.integers(0, 2**31),
    )
