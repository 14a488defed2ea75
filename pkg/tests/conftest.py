"""Shared fixtures for the truncem test suite"""

import numpy as np
import pytest

from truncem.harness import ExperimentConfig
from truncem.model import SfdeModel, make_cubic_volatility_model, make_linear_delay_model
from truncem.truncation import make_policy


@pytest.fixture
def cubic_model():
    return make_cubic_volatility_model(3.0, 10.0, 53.0)


@pytest.fixture
def cubic_policy(cubic_model):
    return make_policy(cubic_model)


@pytest.fixture
def linear_model():
    return make_linear_delay_model(-1.0, 0.3, 0.1, 0.5)


@pytest.fixture
def frozen_model():
    """Factory for scalar models with constant drift and diffusion"""

    def build(drift=0.0, diffusion=0.0, xi=0.0, tau=1.0, model_id="frozen"):
        initial = xi if callable(xi) else (lambda theta: np.array([xi]))
        return SfdeModel(
            model_id=model_id,
            dim_state=1,
            dim_noise=1,
            tau=tau,
            drift=lambda seg: np.array([drift]),
            diffusion=lambda seg: np.array([[diffusion]]),
            initial=initial,
        )

    return build


@pytest.fixture
def small_linear_config():
    """Linear-delay experiment small enough for the default test run"""
    return ExperimentConfig(
        model_id="linear-delay",
        horizon_t=1.0,
        ref_exp=7,
        step_exps=[3, 4, 5],
        samples=12,
        base_seed=7,
        error_norm="segment-sup",
    )
