import numpy as np
import pytest

from rdetail.model import ModelSpec, QLaw, RotationLaw, ScaleLaw

# analytic constants for the two-point model M in {2, 1/2} w.p. {0.3, 0.7}
KAPPA_TWO_POINT = np.log(7.0 / 3.0) / np.log(2.0)   # root of 0.3u + 0.7/u = 1
BETA_TWO_POINT = -0.4 * np.log(2.0)
ALPHA_TWO_POINT = 0.4 * np.log(2.0)


def rng_for(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


@pytest.fixture
def two_point() -> ModelSpec:
    return ModelSpec.scalar_two_point([2.0, 0.5], [0.3, 0.7])


@pytest.fixture
def two_point_mixed() -> ModelSpec:
    # same |M| atoms with a sign flip: the direction chain actually moves
    return ModelSpec.scalar_two_point([2.0, -0.5], [0.3, 0.7])


@pytest.fixture
def scalar_lognormal() -> ModelSpec:
    # kappa = -2 mu / sigma^2 = 1
    return ModelSpec.scalar_lognormal(-0.25, np.sqrt(0.5))


@pytest.fixture
def similarity_haar() -> ModelSpec:
    # A lognormal(-0.5, 1), Haar rotation: kappa = 1, alpha = 1/2
    return ModelSpec.similarity(
        2, ScaleLaw(kind="lognormal", log_mean=-0.5, log_sd=1.0),
        RotationLaw(kind="haar"), kappa0=2.0)


@pytest.fixture
def gaussian_2d() -> ModelSpec:
    return ModelSpec.gaussian_perturbed([[0.9, 0.0], [0.0, 0.9]], 0.5,
                                        kappa0=2.0)
