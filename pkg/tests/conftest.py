import pytest

from rnddpm import MarketParams, build_schedule


@pytest.fixture(scope="session")
def default_schedule():
    return build_schedule()


@pytest.fixture(scope="session")
def baseline_params():
    from rnddpm import baseline_rate

    return MarketParams(s0=100.0, mu=0.10, r=baseline_rate(), sigma=0.2,
                        dt=1.0 / 252, horizon=21)


@pytest.fixture(scope="session")
def stress_params():
    return MarketParams(s0=100.0, mu=0.15, r=0.01, sigma=0.2,
                        dt=1.0 / 252, horizon=63)
