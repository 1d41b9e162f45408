"""
Gráficas fuera de línea de una corrida terminada (backend Agg, solo archivos PNG).
"""

import logging
from pathlib import Path
from typing import List

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

logger = logging.getLogger(__name__)


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    logger.debug("imagen %s", path)
    return path


def plot_snapshots(directory: Path) -> Path:
    """Densidad de todas las instantáneas de un directorio en una sola figura."""
    index = pd.read_csv(directory / "snapshots.csv")
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for path in sorted(directory.glob("snapshot_*.csv")):
        frame = pd.read_csv(path)
        t = float(index.loc[int(path.stem.split("_")[1]), "t"])
        ax.plot(frame["x"], frame["rho"], label=f"t={t:g}")
    ax.set_xlabel("x")
    ax.set_ylabel("ρ")
    ax.set_title(directory.name)
    ax.legend(fontsize="small")
    return _save(fig, directory / "density.png")


def plot_curves(paths: List[Path], column: str, ylabel: str, out: Path) -> Path:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for path in paths:
        frame = pd.read_csv(path)
        ax.plot(frame["rho"], frame[column], label=path.stem)
    ax.axhline(0.0, color="gray", linewidth=0.8)
    ax.set_xlabel("ρ")
    ax.set_ylabel(ylabel)
    ax.legend(fontsize="small")
    return _save(fig, out)


def plot_trajectories(path: Path) -> Path:
    frame = pd.read_csv(path)
    fig, ax = plt.subplots(figsize=(7, 5))
    points = ax.scatter(frame["x"], frame["t"], c=frame["v"], s=2, cmap="RdYlGn", vmin=0.0, vmax=1.0)
    fig.colorbar(points, ax=ax, label="v")
    ax.set_xlabel("x")
    ax.set_ylabel("t")
    return _save(fig, path.with_suffix(".png"))


def render_run(run_dir) -> List[Path]:
    """Recorre la corrida y dibuja cada familia de CSV que reconoce."""
    run_dir = Path(run_dir)
    images = []
    for index in sorted(run_dir.rglob("snapshots.csv")):
        images.append(plot_snapshots(index.parent))
    fd = sorted(run_dir.glob("fd_*.csv"))
    if fd:
        images.append(plot_curves(fd, "F_eq", "F_eq(ρ)", run_dir / "fundamental_diagram.png"))
    mu = sorted(run_dir.glob("mu_*.csv"))
    if mu:
        images.append(plot_curves(mu, "mu", "μ(ρ)", run_dir / "diffusion.png"))
    for trajectory in sorted(run_dir.rglob("trajectory.csv")):
        images.append(plot_trajectories(trajectory))
    logger.info("%d imágenes generadas en %s", len(images), run_dir)
    return images
