"""Figure assembly: violation growth panels and protection-scaling panels.

Two figure kinds cover the archive layouts:

  time     log-log violation vs time, one curve per run, optional second
           panel with the condensate on a linear-log axis; the guide line
           slope is fitted to the reference curve inside fit_window.
  scaling  violation at a fixed readout time against the swept parameter,
           log-log, with the fitted power law drawn and annotated.

Rendering is read-only over its inputs and style is pinned, so identical
inputs give identical image bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .inputs import LABEL_PATHS, Series, SpecError, discover_series

FIGURE_KINDS = ("time", "scaling")

STYLE = {
    "figure.dpi": 120,
    "savefig.dpi": 120,
    "font.size": 9.0,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.4,
    "legend.fontsize": 8.0,
    "svg.hashsalt": "gaugefigs",
}


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    patterns: tuple[str, ...]
    label_key: str
    title: str = ""
    fit_window: tuple[float, float] = (0.1, 2.0)
    condensate_panel: bool = False
    t_fix: float = 2.0
    guide_slope: float | None = None  # None = fit from the data

    @classmethod
    def from_dict(cls, doc: dict) -> "FigureSpec":
        if not isinstance(doc, dict):
            raise SpecError("figure spec must be a JSON object")
        kind = doc.get("kind")
        if kind not in FIGURE_KINDS:
            raise SpecError(f"kind: expected one of {FIGURE_KINDS}, got {kind!r}")
        raw = doc.get("csv")
        if isinstance(raw, str):
            patterns = (raw,)
        elif isinstance(raw, list) and raw and all(isinstance(p, str) for p in raw):
            patterns = tuple(raw)
        else:
            raise SpecError("csv: expected a glob string or a nonempty list of them")
        label_key = doc.get("label_key")
        if label_key not in LABEL_PATHS:
            raise SpecError(
                f"label_key: expected one of {sorted(LABEL_PATHS)}, got {label_key!r}"
            )
        window = doc.get("fit_window", [0.1, 2.0])
        if (
            not isinstance(window, list)
            or len(window) != 2
            or not all(isinstance(w, (int, float)) for w in window)
            or not window[0] < window[1]
        ):
            raise SpecError("fit_window: expected [lo, hi] with lo < hi")
        guide = doc.get("guide_slope")
        if guide is not None and not isinstance(guide, (int, float)):
            raise SpecError("guide_slope: expected a number or omitted")
        t_fix = doc.get("t_fix", 2.0)
        if not isinstance(t_fix, (int, float)) or t_fix <= 0:
            raise SpecError("t_fix: expected a positive number")
        return cls(
            kind=kind,
            patterns=patterns,
            label_key=label_key,
            title=str(doc.get("title", "")),
            fit_window=(float(window[0]), float(window[1])),
            condensate_panel=bool(doc.get("condensate_panel", False)),
            t_fix=float(t_fix),
            guide_slope=None if guide is None else float(guide),
        )


@dataclass
class RenderResult:
    out_path: Path
    n_series: int
    skipped: list[dict] = field(default_factory=list)
    guide_slope: float | None = None


def load_spec(path: Path) -> tuple[FigureSpec, Path]:
    """Spec plus the base directory its relative globs resolve against."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: invalid JSON: {exc}") from exc
    return FigureSpec.from_dict(doc), Path(path).resolve().parent


def _loglog_fit(xs: np.ndarray, ys: np.ndarray) -> float | None:
    mask = (xs > 0) & (ys > 0)
    if np.count_nonzero(mask) < 3:
        return None
    slope = np.polyfit(np.log(xs[mask]), np.log(ys[mask]), 1)[0]
    return float(slope)


def _guide_through(ax, x0: float, y0: float, slope: float, span: float, text: str):
    xs = np.array([x0 / span, x0 * span])
    ys = y0 * (xs / x0) ** slope
    ax.plot(xs, ys, color="0.35", linestyle="--", linewidth=1.0)
    ax.annotate(
        text,
        (xs[1], ys[1]),
        textcoords="offset points",
        xytext=(2, 2),
        fontsize=8,
        color="0.25",
    )


def _render_time(spec: FigureSpec, series: list[Series], out_path: Path) -> float | None:
    want_condensate = spec.condensate_panel and any(
        s.condensate is not None for s in series
    )
    if want_condensate:
        fig, (ax, ax2) = plt.subplots(1, 2, figsize=(8.0, 3.4))
    else:
        fig, ax = plt.subplots(figsize=(4.6, 3.4))
        ax2 = None
    for s in series:
        mask = (s.times > 0) & (s.epsilon > 0)
        ax.loglog(s.times[mask], s.epsilon[mask], label=s.label)
        if ax2 is not None and s.condensate is not None:
            ax2.semilogx(s.times[s.times > 0], s.condensate[s.times > 0])
    ax.set_xlabel(r"$t\,J$")
    ax.set_ylabel(r"$\varepsilon(t)$")
    if spec.title:
        ax.set_title(spec.title)
    ax.legend(loc="upper left")

    lo, hi = spec.fit_window
    ref = series[0]
    win = (ref.times >= lo) & (ref.times <= hi)
    slope = spec.guide_slope
    if slope is None:
        slope = _loglog_fit(ref.times[win], ref.epsilon[win])
    if slope is not None:
        anchor_t = np.sqrt(lo * hi)
        anchor_e = np.interp(anchor_t, ref.times, ref.epsilon) * 2.5
        _guide_through(
            ax, anchor_t, anchor_e, slope, 3.0, rf"$\propto t^{{{slope:.2f}}}$"
        )
    if ax2 is not None:
        ax2.set_xlabel(r"$t\,J$")
        ax2.set_ylabel("condensate")
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)
    return slope


def _render_scaling(spec: FigureSpec, series: list[Series], out_path: Path) -> float | None:
    values = np.array([s.value for s in series])
    eps = np.array(
        [np.interp(spec.t_fix, s.times, s.epsilon) for s in series]
    )
    fig, ax = plt.subplots(figsize=(4.6, 3.4))
    ax.loglog(values, eps, "o", color="C0")
    slope = spec.guide_slope
    if slope is None:
        slope = _loglog_fit(values, eps)
    if slope is not None and np.all(eps > 0):
        anchor = values[len(values) // 2]
        level = np.exp(np.interp(np.log(anchor), np.log(values), np.log(eps)))
        _guide_through(
            ax,
            anchor,
            level,
            slope,
            float(values.max() / values.min()) ** 0.5,
            rf"$\propto {spec.label_key}^{{{slope:.2f}}}$",
        )
    ax.set_xlabel(rf"${spec.label_key}/J$" if spec.label_key == "V" else spec.label_key)
    ax.set_ylabel(rf"$\varepsilon(t = {spec.t_fix:g}/J)$")
    if spec.title:
        ax.set_title(spec.title)
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)
    return slope


def render(spec: FigureSpec, base: Path, out_path: Path) -> RenderResult:
    """Render one figure; skips unusable inputs, fails only if none remain."""
    series, skipped = discover_series(list(spec.patterns), base, spec.label_key)
    result = RenderResult(out_path=Path(out_path), n_series=len(series), skipped=skipped)
    if not series:
        return result
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context(STYLE):
        if spec.kind == "time":
            result.guide_slope = _render_time(spec, series, out_path)
        else:
            result.guide_slope = _render_scaling(spec, series, out_path)
    return result
