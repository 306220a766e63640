"""Shared fixtures and hypothesis settings for the test suite."""

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "suite",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def c17():
    from gpdesign.instances import bundled_bench
    from gpdesign.netlist import parse_bench
    return parse_bench(bundled_bench("c17"))


@pytest.fixture(scope="session")
def c499():
    from gpdesign.instances import bundled_bench
    from gpdesign.netlist import parse_bench
    return parse_bench(bundled_bench("c499"))


@pytest.fixture(scope="session")
def demo():
    from gpdesign.instances import demo_graph
    return demo_graph()


@pytest.fixture(scope="session")
def sizing7():
    """Seeded sizing instance on the bundled 6-gate circuit."""
    from gpdesign.instances import seeded_sizing
    return seeded_sizing(7)


@pytest.fixture(scope="session")
def tree7():
    """Seeded five-segment RC tree instance."""
    from gpdesign.instances import seeded_interconnect
    return seeded_interconnect(7)
