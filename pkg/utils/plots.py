# utils/plots.py: optional SVG line plots over the exported frames
from pathlib import Path
from typing import Sequence

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd

from utils.logging_setup import get_logger

logger = get_logger("plots")


def line_plot(frame: pd.DataFrame, x: str, ys: Sequence[str], path, xlabel: str = None,
              ylabel: str = None, title: str = None) -> str:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for col in ys:
        ax.plot(frame[x], frame[col], label=col)
    ax.set_xlabel(xlabel or x)
    if ylabel:
        ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if len(ys) > 1:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    logger.info(f"artifact.svg path={path}")
    return str(path)


def matrix_plot(matrix, extent, path, title: str = None) -> str:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(4.5, 4.0))
    im = ax.imshow(matrix, origin="lower", extent=extent, aspect="auto")
    fig.colorbar(im, ax=ax)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    logger.info(f"artifact.svg path={path}")
    return str(path)
