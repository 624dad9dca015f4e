import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

from cred.grid import AttackProfile, DroopSchedule, SystemModel, build_state_space
from cred.scenario import scenario_from_dict
from cred.systems import single_area_toy, three_area_system

settings.register_profile("repro", derandomize=True, deadline=None)
settings.load_profile("repro")


@pytest.fixture
def one_area_model() -> SystemModel:
    """M=1, stiffness 5, damping 2: eigenvalues -1 +- 2j."""
    return SystemModel(
        areas=1,
        inertia_sg=[1.0],
        inertia_ibr=[0.0],
        damping=[0.0],
        gov_integral=[5.0],
        gov_proportional=[2.0],
        susceptance=[[0.0]],
        secure_load=[7.0],
        vulnerable_load=[3.0],
        ibr_max_power=[4.0],
        omega_max=0.5,
    )


@pytest.fixture
def one_area_ss(one_area_model):
    return build_state_space(
        one_area_model, AttackProfile.none(1), DroopSchedule.none(1)
    )


@pytest.fixture
def toy_bundle():
    return scenario_from_dict(single_area_toy())


@pytest.fixture
def desk_bundle():
    return scenario_from_dict(three_area_system())


@pytest.fixture
def rng():
    return np.random.RandomState(20240803)
