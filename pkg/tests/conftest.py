import pytest

from catrust.world import DynamicsConfig, WorldConfig


@pytest.fixture
def small_world_config():
    return WorldConfig(rounds=30, n_good=2, n_ordinary=4, n_intermittent=1, n_bad=5,
                       n_consumers=24)


@pytest.fixture
def busy_dynamics():
    return DynamicsConfig(p_cpc=0.1, p_ppc=0.1, p_clc=0.2, p_plc=0.2, delta_phi_max=0.3,
                          p_mu_c=0.2, drift_magnitude=1.0, p_profile_switch=0.05)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
