import pytest
from hypothesis import HealthCheck, settings

from cgspc.document import load_document

settings.register_profile(
    "default", max_examples=60, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def example1():
    """p is true iff both agents set it; q follows agent 2."""
    return load_document("bundled:example1").structure


@pytest.fixture
def example2():
    """p is true iff some agent sets it; q follows agent 2."""
    return load_document("bundled:example2").structure


def S(*atoms):
    return frozenset(atoms)
