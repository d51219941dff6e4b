import pytest

from quasibasis.pipeline import prepare_system
from quasibasis.scenario import load_bundled

DEMO_NAMES = ("cube", "two-intervals", "four-squares", "commensurable-intervals")


@pytest.fixture(scope="session")
def demo_system():
    """Factory returning the prepared system for a bundled demo, cached."""
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = prepare_system(load_bundled(name))
        return cache[name]

    return get


@pytest.fixture(scope="session")
def demo_scenario():
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = load_bundled(name)
        return cache[name]

    return get
