import numpy as np
import pytest

from grouprl.config import ExperimentConfig, config_from_dict
from grouprl.sim import DEFAULT_BASIC_BETAS, UserModel, make_population, run_micro_randomized_trial

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def group1_user():
    return UserModel(0, np.array(DEFAULT_BASIC_BETAS[0]), 0, p=3, sigma_s=0.0, sigma_r=0.0)


@pytest.fixture
def small_trajectories():
    """Ten users from two true groups, 20 tuples each."""
    rng = np.random.default_rng(7)
    pop = make_population(DEFAULT_BASIC_BETAS[:2], 2, 5, 0.01, 1.0, 1.0, 3, rng)
    return [run_micro_randomized_trial(u, 20, np.eye(3), rng) for u in pop.users]


def tiny_config(**overrides) -> ExperimentConfig:
    data = {
        "population": {"M": 2, "N_m": 3, "basic_betas": [list(b) for b in DEFAULT_BASIC_BETAS[:2]]},
        "grid": {"T_list": [10], "gamma_list": [0.0, 0.6], "methods": ["pooled", "separate", "grouped"], "K_list": [2], "seeds": [1, 2]},
        "evaluation": {"horizon": 300, "burn_in": 100},
    }
    for section, values in overrides.items():
        data.setdefault(section, {}).update(values)
    return config_from_dict(data)
