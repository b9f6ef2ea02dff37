"""Analysis of the learned latent space.

PCA is fitted on latents embedded by h and every latent, embedded or unrolled through g, is projected
into that one basis. The divergence between the two trajectories of the same action sequence measures
how far the dynamics drift away from the observation embeddings.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import polars as pl
from numpy.typing import NDArray

from latent_muzero.checkpoint_functions import load_checkpoint
from latent_muzero.custom_errors import InsufficientDataError, TrajectoryLengthMismatchError
from latent_muzero.data_saving_and_loading import save_csv
from latent_muzero.enums.EnvironmentName import EnvironmentName
from latent_muzero.enums.TrajectorySource import TrajectorySource
from latent_muzero.model_functions import represent, unroll
from latent_muzero.models.LatentTrajectory import LatentTrajectory
from latent_muzero.models.MuZeroParams import MuZeroParams
from latent_muzero.models.PcaModel import PcaModel
from latent_muzero.models.TrajectoryRecord import TrajectoryRecord
from latent_muzero.nn_functions import value_of
from latent_muzero.paths_functions import get_visualization_directory
from latent_muzero.svg_functions import PlotSeries, PlotStyle, render_plot, write_svg
from latent_muzero.training_functions import run_self_play

JACOBI_TOLERANCE: float = 1e-12
JACOBI_MAX_SWEEPS: int = 100
PROJECTION_COLUMNS: tuple[str, ...] = ("pc1", "pc2", "pc3")

LATENTS_FILE_NAME: str = "latents.csv"
PROJECTIONS_FILE_NAME: str = "projections.csv"
DIVERGENCE_FILE_NAME: str = "divergence.csv"
SCATTER_FILE_NAME: str = "embedded_latents.svg"
TRAJECTORIES_FILE_NAME: str = "latent_trajectories.svg"


################################ PCA #########################################
def jacobi_eigh(
    matrix: NDArray[np.float64],
    tolerance: float = JACOBI_TOLERANCE,
    max_sweeps: int = JACOBI_MAX_SWEEPS,
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps over every (p, q) pair above the diagonal and zeroes it with one plane rotation until the
    off-diagonal Frobenius norm drops below `tolerance` times the norm of the matrix.

    Returns:
        tuple[NDArray[np.float64], NDArray[np.float64]]: Eigenvalues in descending order and the matching
        eigenvectors as columns.
    """
    a = np.array(matrix, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"jacobi_eigh needs a square matrix, got shape {a.shape}")
    n = a.shape[0]
    v = np.eye(n, dtype=np.float64)
    threshold = tolerance * max(float(np.linalg.norm(a)), 1e-300)

    for _ in range(max_sweeps):
        off_diagonal = np.sqrt(max(float((a * a).sum() - (np.diag(a) ** 2).sum()), 0.0))
        if off_diagonal <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if a[p, q] == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * a[p, q])
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                column_p, column_q = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * column_p - s * column_q
                a[:, q] = s * column_p + c * column_q
                row_p, row_q = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0
                column_p, column_q = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * column_p - s * column_q
                v[:, q] = s * column_p + c * column_q

    eigenvalues = np.diag(a).copy()
    order = np.argsort(-eigenvalues, kind="stable")
    return eigenvalues[order], v[:, order]


def fit_pca(data, n_components: int = 3) -> PcaModel:
    """Fits principal components to the rows of `data` (n x L).

    The covariance is the unbiased one of the mean-centred data. Each component is flipped so that its
    entry of largest magnitude is positive (the first such entry on ties).

    Raises:
        InsufficientDataError: If n < 2 or n_components > min(n, L) or n_components < 1.
    """
    x = np.atleast_2d(np.asarray(data, dtype=np.float64))
    n_samples, n_features = x.shape
    if n_samples < 2 or not 1 <= n_components <= min(n_samples, n_features):
        raise InsufficientDataError(n_samples=n_samples, n_features=n_features, n_components=n_components)

    mean = x.mean(axis=0)
    centred = x - mean
    covariance = centred.T @ centred / (n_samples - 1)
    eigenvalues, eigenvectors = jacobi_eigh(matrix=covariance)
    eigenvalues = np.maximum(eigenvalues, 0.0)

    components = eigenvectors[:, :n_components].T.copy()
    for component in components:
        if component[np.argmax(np.abs(component))] < 0:
            component *= -1.0
    total_variance = float(eigenvalues.sum())
    ratios = eigenvalues[:n_components] / total_variance if total_variance > 0 else np.zeros(n_components)
    return PcaModel(
        mean=mean,
        components=components,
        explained_variance=eigenvalues[:n_components].copy(),
        explained_variance_ratio=ratios,
    )


################################ Trajectories #########################################
def embed_trajectory(params: MuZeroParams, trajectory: TrajectoryRecord) -> LatentTrajectory:
    """h applied to every observation o_0..o_T."""
    points = np.stack(
        [value_of(represent(params=params, observation=observation)) for observation in trajectory.observations]
    )
    return LatentTrajectory(points=points, source=TrajectorySource.EMBEDDED_H, actions=trajectory.actions)


def unroll_trajectory(params: MuZeroParams, observation: NDArray[np.float64], actions) -> LatentTrajectory:
    """h(o_0) followed by g chained over the whole action sequence, without looking at later observations."""
    output = unroll(params=params, observation=np.asarray(observation, dtype=np.float64), actions=np.asarray(actions, dtype=np.int64))
    points = np.stack([value_of(latent) for latent in output.latents])
    return LatentTrajectory(points=points, source=TrajectorySource.UNROLLED_G, actions=actions)


@dataclass
class DivergenceReport:
    per_step: NDArray[np.float64]
    mean: float
    max: float


def trajectory_divergence(first: LatentTrajectory, second: LatentTrajectory) -> DivergenceReport:
    """Euclidean distance between paired latents at every step.

    Raises:
        TrajectoryLengthMismatchError: If the trajectories differ in length.
    """
    if len(first) != len(second):
        raise TrajectoryLengthMismatchError(first_length=len(first), second_length=len(second))
    per_step = np.linalg.norm(first.points - second.points, axis=1)
    return DivergenceReport(per_step=per_step, mean=float(per_step.mean()), max=float(per_step.max()))


################################ Tables #########################################
def latent_rows(
    trajectory_id: int, trajectory: TrajectoryRecord, latent_trajectory: LatentTrajectory
) -> dict[str, list]:
    obs_dim = trajectory.observations.shape[1]
    steps = len(latent_trajectory)
    columns: dict[str, list] = {
        "traj_id": [trajectory_id] * steps,
        "step": list(range(steps)),
        "source": [str(latent_trajectory.source)] * steps,
    }
    for index in range(obs_dim):
        columns[f"obs_{index}"] = trajectory.observations[:steps, index].tolist()
    for index in range(latent_trajectory.latent_size):
        columns[f"z_{index}"] = latent_trajectory.points[:, index].tolist()
    return columns


def _concat(frames: Sequence[pl.DataFrame]) -> pl.DataFrame:
    return pl.concat(frames, how="vertical") if frames else pl.DataFrame()


def latents_frame(
    trajectories: Sequence[TrajectoryRecord], latent_pairs: Sequence[tuple[LatentTrajectory, LatentTrajectory]]
) -> pl.DataFrame:
    """One row per (trajectory, source, step): traj_id, step, source, obs_0.., z_0.."""
    frames = [
        pl.DataFrame(data=latent_rows(trajectory_id=trajectory_id, trajectory=trajectory, latent_trajectory=latent))
        for trajectory_id, (trajectory, pair) in enumerate(zip(trajectories, latent_pairs))
        for latent in pair
    ]
    return _concat(frames)


def projections_frame(
    model: PcaModel, latent_pairs: Sequence[tuple[LatentTrajectory, LatentTrajectory]]
) -> pl.DataFrame:
    """traj_id, step, source, pc1, pc2, pc3; components beyond the fitted ones are written as 0."""
    frames = []
    for trajectory_id, pair in enumerate(latent_pairs):
        for latent in pair:
            coordinates = padded_projection(model=model, points=latent.points)
            frames.append(
                pl.DataFrame(
                    data={
                        "traj_id": [trajectory_id] * len(latent),
                        "step": list(range(len(latent))),
                        "source": [str(latent.source)] * len(latent),
                        **{name: coordinates[:, index].tolist() for index, name in enumerate(PROJECTION_COLUMNS)},
                    }
                )
            )
    return _concat(frames)


def divergence_frame(reports: Sequence[DivergenceReport]) -> pl.DataFrame:
    frames = [
        pl.DataFrame(
            data={
                "traj_id": [trajectory_id] * len(report.per_step),
                "step": list(range(len(report.per_step))),
                "distance": report.per_step.tolist(),
            }
        )
        for trajectory_id, report in enumerate(reports)
    ]
    return _concat(frames)


def padded_projection(model: PcaModel, points) -> NDArray[np.float64]:
    coordinates = model.project(points=points)
    padded = np.zeros((len(coordinates), len(PROJECTION_COLUMNS)), dtype=np.float64)
    padded[:, : coordinates.shape[1]] = coordinates[:, : len(PROJECTION_COLUMNS)]
    return padded


def export_latents(
    params: MuZeroParams,
    trajectories: Sequence[TrajectoryRecord],
    file_path: str | Path,
) -> pl.DataFrame:
    """Writes the latent CSV (both sources) for the given trajectories and returns it."""
    pairs = [latent_pair(params=params, trajectory=trajectory) for trajectory in trajectories]
    frame = latents_frame(trajectories=trajectories, latent_pairs=pairs)
    save_csv(dataframe=frame, file_path=file_path)
    return frame


def latent_pair(params: MuZeroParams, trajectory: TrajectoryRecord) -> tuple[LatentTrajectory, LatentTrajectory]:
    return (
        embed_trajectory(params=params, trajectory=trajectory),
        unroll_trajectory(params=params, observation=trajectory.observations[0], actions=trajectory.actions),
    )


################################ Pipeline #########################################
@dataclass
class VisualizationResult:
    output_directory: Path
    latents_path: Path
    projections_path: Path
    divergence_path: Path
    svg_paths: list[Path]
    pca: PcaModel
    mean_divergence: float


def visualize_latents(
    params: MuZeroParams,
    trajectories: Sequence[TrajectoryRecord],
    output_directory: str | Path,
    title: str = "",
    logger: logging.Logger = logging.getLogger(name=__name__),
) -> VisualizationResult:
    """Embeds and unrolls every trajectory, fits PCA on the embedded latents and writes CSVs and SVGs.

    Raises:
        InsufficientDataError: If the trajectories hold fewer than two embedded latents.
    """
    output_directory = Path(output_directory)
    pairs = [latent_pair(params=params, trajectory=trajectory) for trajectory in trajectories]
    embedded_points = np.concatenate([embedded.points for embedded, _ in pairs], axis=0) if pairs else np.zeros((0, 0))
    n_components = min(len(PROJECTION_COLUMNS), params.latent_size, len(embedded_points))
    if len(embedded_points) < 2:
        raise InsufficientDataError(
            n_samples=len(embedded_points), n_features=params.latent_size, n_components=n_components
        )
    pca = fit_pca(data=embedded_points, n_components=n_components)
    reports = [trajectory_divergence(first=embedded, second=unrolled) for embedded, unrolled in pairs]

    latents_path = save_csv(
        dataframe=latents_frame(trajectories=trajectories, latent_pairs=pairs),
        file_path=output_directory / LATENTS_FILE_NAME,
    )
    projections_path = save_csv(
        dataframe=projections_frame(model=pca, latent_pairs=pairs), file_path=output_directory / PROJECTIONS_FILE_NAME
    )
    divergence_path = save_csv(dataframe=divergence_frame(reports=reports), file_path=output_directory / DIVERGENCE_FILE_NAME)

    dimension = 3 if n_components >= 3 else 2
    scatter = padded_projection(model=pca, points=embedded_points)[:, :dimension]
    svg_paths = [
        write_svg(
            document=render_plot(points=scatter, style=PlotStyle(title=f"{title} embedded latents".strip())),
            file_path=output_directory / SCATTER_FILE_NAME,
        )
    ]
    series = [
        PlotSeries(
            coordinates=padded_projection(model=pca, points=latent.points)[:, :dimension],
            source=latent.source,
            label=f"trajectory {trajectory_id} ({latent.source})",
        )
        for trajectory_id, pair in enumerate(pairs)
        for latent in pair
    ]
    svg_paths.append(
        write_svg(
            document=render_plot(trajectories=series, style=PlotStyle(title=f"{title} h vs g trajectories".strip())),
            file_path=output_directory / TRAJECTORIES_FILE_NAME,
        )
    )

    mean_divergence = float(np.mean([report.mean for report in reports]))
    logger.info(
        msg=(
            f"Latent visualization of {len(trajectories)} trajectories written to {output_directory}: "
            f"explained variance ratio {np.round(pca.explained_variance_ratio, 4).tolist()}, "
            f"mean h/g divergence {mean_divergence:.4f}"
        )
    )
    return VisualizationResult(
        output_directory=output_directory,
        latents_path=latents_path,
        projections_path=projections_path,
        divergence_path=divergence_path,
        svg_paths=svg_paths,
        pca=pca,
        mean_divergence=mean_divergence,
    )


def visualize_checkpoint(
    checkpoint_path: str | Path,
    n_trajectories: int,
    seed: Optional[int] = None,
    output_directory: Optional[str | Path] = None,
    logger: logging.Logger = logging.getLogger(name=__name__),
) -> VisualizationResult:
    """Plays fresh self-play episodes with the checkpointed weights and visualizes their latents.

    Args:
        checkpoint_path: Checkpoint to read; it is not modified.
        n_trajectories: Number of episodes to sample.
        seed: Seed of the episode sampler, the configured seed when None.
        output_directory: Defaults to `<run>/visualization/<checkpoint stem>`.
        logger: Injected logger.

    Raises:
        ValueError: For AlphaZero checkpoints, which have no latent space, or n_trajectories < 1.
    """
    if n_trajectories < 1:
        raise ValueError(f"Need at least one trajectory to visualize, got {n_trajectories}")
    checkpoint = load_checkpoint(file_path=checkpoint_path, logger=logger)
    if checkpoint.params.is_alphazero:
        raise ValueError("AlphaZero checkpoints have no learned latent space to visualize")
    config = checkpoint.config
    rng = np.random.default_rng(seed=config.seed if seed is None else seed)
    trajectories = run_self_play(
        params=checkpoint.params,
        config=config,
        self_play_iteration=checkpoint.iteration,
        rng=rng,
        episodes=n_trajectories,
    )
    return visualize_latents(
        params=checkpoint.params,
        trajectories=trajectories,
        output_directory=get_visualization_directory(checkpoint_path=Path(checkpoint_path))
        if output_directory is None
        else output_directory,
        title=f"{EnvironmentName.make_pretty_string(environment_name=config.env)} {config.algorithm}",
        logger=logger,
    )
