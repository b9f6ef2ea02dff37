import numpy as np
import pytest

from latent_muzero.custom_errors import ShapeMismatchError
from latent_muzero.enums.EnvironmentName import EnvironmentName
from latent_muzero.support_functions import (
    SUPPORT_RANGES,
    environment_anchors,
    make_anchors,
    scalar_to_support,
    support_to_scalar,
)


@pytest.mark.parametrize("support_size", [15, 20])
@pytest.mark.parametrize("environment_name", [EnvironmentName.CARTPOLE, EnvironmentName.MOUNTAINCAR])
def test_support_round_trip(support_size, environment_name):
    rng = np.random.default_rng(seed=support_size)
    for anchors in environment_anchors(environment_name=environment_name, support_size=support_size):
        scalars = rng.uniform(low=anchors[0], high=anchors[-1], size=100_000)
        distributions = scalar_to_support(x=scalars, anchors=anchors)
        assert distributions.shape == (100_000, support_size), f"Unexpected shape {distributions.shape}"
        assert np.all(distributions >= 0), "Support distributions must be nonnegative"
        assert np.allclose(distributions.sum(axis=-1), 1.0, atol=1e-12), "Support distributions must sum to 1"
        assert np.count_nonzero(distributions, axis=-1).max() <= 2, "Mass must sit on at most two adjacent anchors"
        error = np.abs(support_to_scalar(probabilities=distributions, anchors=anchors) - scalars).max()
        assert error < 1e-9, f"Round-trip error {error} for {environment_name} with S={support_size}"


def test_support_clips_and_hits_anchors():
    anchors = make_anchors(low=0.0, high=350.0, support_size=15)
    clipped = scalar_to_support(x=np.array([-10.0, 1000.0]), anchors=anchors)
    assert clipped[0, 0] == 1.0 and clipped[1, -1] == 1.0, f"Out-of-range scalars were not clipped: {clipped}"
    exact = scalar_to_support(x=anchors[3], anchors=anchors)
    assert abs(exact[3] - 1.0) < 1e-12, f"A scalar on an anchor must put all mass there: {exact}"


def test_support_ranges_and_errors():
    value_anchors, reward_anchors = environment_anchors(environment_name=EnvironmentName.MOUNTAINCAR, support_size=20)
    assert (value_anchors[0], value_anchors[-1]) == SUPPORT_RANGES[EnvironmentName.MOUNTAINCAR]["value"]
    assert (reward_anchors[0], reward_anchors[-1]) == (-1.0, 0.0), f"MountainCar reward anchors are {reward_anchors}"
    assert np.all(np.diff(value_anchors) > 0), "Anchors must be strictly increasing"
    with pytest.raises(ValueError):
        make_anchors(low=1.0, high=1.0, support_size=5)
    with pytest.raises(ValueError):
        make_anchors(low=0.0, high=1.0, support_size=1)
    with pytest.raises(ShapeMismatchError):
        support_to_scalar(probabilities=np.full(4, 0.25), anchors=value_anchors)
