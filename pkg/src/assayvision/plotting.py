"""Figures and annotated overlays written alongside the reports.

Figures are drawn on an Agg canvas directly (no pyplot state) so repeated runs
produce identical files.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib as mpl
import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure
from PIL import Image, ImageDraw

from .blobdetect import ContourSet
from .quantify import CHANNELS, AnalysisReport

STYLE = {
    "font.size": 9,
    "axes.labelsize": 10,
    "axes.titlesize": 10,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "xtick.direction": "out",
    "ytick.direction": "out",
    "legend.frameon": False,
    "legend.fontsize": 8,
    "savefig.dpi": 120,
    "svg.hashsalt": "assayvision",
}

BAR_COLORS = {"base": "#9e9e9e", "exposed": "#e0a800", "delta": "#3b6ea5"}
CHANNEL_COLORS = {"blue": "#1f4e9c", "green": "#2e7d32", "red": "#b71c1c"}

OUTLINE = (255, 0, 255)
LABEL = (255, 255, 255)
LABEL_BG = (0, 0, 0)


def plot_channel_bars(report: AnalysisReport, path: str | Path) -> Path:
    """Base, exposed and delta per assay, one panel per channel (blue, green, red)."""
    path = Path(path)
    idx = np.array([a.index for a in report.assays])
    width = 0.27
    with mpl.rc_context(STYLE):
        fig = Figure(figsize=(10, 3.4))
        FigureCanvasAgg(fig)
        axes = fig.subplots(1, 3, sharey=True)
        for ax, ch in zip(axes, CHANNELS):
            series = {
                "base": [a.base.means.as_dict()[ch] for a in report.assays],
                "exposed": [a.exposed.means.as_dict()[ch] for a in report.assays],
                "delta": [a.delta.as_dict()[ch] for a in report.assays],
            }
            for k, (name, values) in enumerate(series.items()):
                ax.bar(idx + (k - 1) * width, values, width, label=name, color=BAR_COLORS[name])
            ax.axhline(0, color="black", lw=0.6)
            ax.set_xticks(idx)
            ax.set_xticklabels([f"assay {i}" for i in idx])
            ax.set_title(ch, color=CHANNEL_COLORS[ch])
        axes[0].set_ylabel("mean intensity")
        axes[0].legend(loc="upper right")
        fig.tight_layout()
        fig.savefig(path, format="png", metadata={"Software": None})
    return path


def plot_sweep(labels: list[str], errors: list[float], path: str | Path) -> Path:
    """Mean absolute delta error per sweep condition."""
    path = Path(path)
    with mpl.rc_context(STYLE):
        fig = Figure(figsize=(max(4, 0.8 * len(labels)), 3))
        FigureCanvasAgg(fig)
        ax = fig.subplots()
        ax.bar(range(len(labels)), errors, color=BAR_COLORS["delta"])
        ax.set_xticks(range(len(labels)))
        ax.set_xticklabels(labels, rotation=30, ha="right")
        ax.set_ylabel("mean |delta error|")
        fig.tight_layout()
        fig.savefig(path, format="png", metadata={"Software": None})
    return path


def _scale_for(img: np.ndarray) -> int:
    # small captures are upscaled so the labels stay readable
    return max(1, 480 // max(img.shape[:2]))


def draw_overlay(img: np.ndarray, contours: ContourSet, notes: dict[int, str] | None = None) -> np.ndarray:
    """Contour outlines with canonical index labels and optional per-assay notes."""
    s = _scale_for(img)
    out = np.repeat(np.repeat(img, s, axis=0), s, axis=1).copy()
    for c in contours:
        bx, by = c.boundary[:, 0], c.boundary[:, 1]
        for dy in range(s):
            for dx in range(s):
                out[by * s + dy, bx * s + dx] = OUTLINE
    canvas = Image.fromarray(out)
    draw = ImageDraw.Draw(canvas)
    for i, c in enumerate(contours, start=1):
        cx, cy = c.centroid
        text = str(i)
        if notes and i in notes:
            text += "\n" + notes[i]
        x, y = int(cx * s) + 2, int((c.bbox.y + c.bbox.h) * s) + 2
        box = draw.multiline_textbbox((x, y), text)
        draw.rectangle(box, fill=LABEL_BG)
        draw.multiline_text((x, y), text, fill=LABEL)
    return np.array(canvas)


def delta_notes(report: AnalysisReport) -> dict[int, str]:
    return {
        a.index: f"dB {a.delta.delta_blue:+.1f}\ndG {a.delta.delta_green:+.1f}\ndR {a.delta.delta_red:+.1f}"
        for a in report.assays
    }
