import pytest

from latent_muzero.enums.Algorithm import Algorithm
from latent_muzero.enums.DiscrepancyFunction import DiscrepancyFunction
from latent_muzero.enums.EnvironmentName import EnvironmentName
from latent_muzero.enums.RegularizerMode import RegularizerMode
from latent_muzero.enums.TrajectorySource import TrajectorySource


def test_members_list():
    assert set(EnvironmentName.members_list()) == {"cartpole", "mountaincar"}
    assert set(Algorithm.members_list()) == {"muzero", "muzero_contrastive", "muzero_decoder", "alphazero"}
    assert list(RegularizerMode.members_list()) == [RegularizerMode.NONE, RegularizerMode.CONTRASTIVE, RegularizerMode.DECODER]


def test_discrepancy_function_has_its_own_module():
    assert DiscrepancyFunction.__module__ == "latent_muzero.enums.DiscrepancyFunction"
    assert [str(member) for member in DiscrepancyFunction] == ["squared_error", "cosine"]
    assert not hasattr(RegularizerMode, "COSINE"), "Regularizer modes and discrepancy functions are separate enums"


def test_get_member_from_string():
    assert EnvironmentName.get_member_from_string(value=" MountainCar ") is EnvironmentName.MOUNTAINCAR
    assert Algorithm.get_member_from_string(value="AlphaZero") is Algorithm.ALPHAZERO
    assert DiscrepancyFunction.get_member_from_string(value="cosine") is DiscrepancyFunction.COSINE
    for enum_class in (EnvironmentName, Algorithm, DiscrepancyFunction):
        with pytest.raises(ValueError):
            enum_class.get_member_from_string(value="atari")


def test_string_values():
    assert str(EnvironmentName.CARTPOLE) == "cartpole" and str(Algorithm.MUZERO_DECODER) == "muzero_decoder"
    assert str(TrajectorySource.UNROLLED_G) == "unrolled_g" and str(DiscrepancyFunction.SQUARED_ERROR) == "squared_error"
    assert EnvironmentName.make_pretty_string(environment_name=EnvironmentName.MOUNTAINCAR) == "MountainCar"


@pytest.mark.parametrize(
    "algorithm, uses_learned_model, needs_decoder, regularizer",
    [
        (Algorithm.MUZERO, True, False, RegularizerMode.NONE),
        (Algorithm.MUZERO_CONTRASTIVE, True, False, RegularizerMode.CONTRASTIVE),
        (Algorithm.MUZERO_DECODER, True, True, RegularizerMode.DECODER),
        (Algorithm.ALPHAZERO, False, False, RegularizerMode.NONE),
    ],
)
def test_algorithm_properties(algorithm, uses_learned_model, needs_decoder, regularizer):
    assert algorithm.uses_learned_model == uses_learned_model
    assert algorithm.needs_decoder == needs_decoder
    assert algorithm.regularizer is regularizer, f"{algorithm} maps to {algorithm.regularizer}"


def test_trajectory_colors():
    assert TrajectorySource.get_plot_colors_dict() == {"embedded_h": "#1F77B4", "unrolled_g": "#2CA02C"}
