"""Render fairadd report artifacts (JSON) as SVG/PNG figures.

Strictly a view layer: nothing numeric is derived here, and no computed
number is ever drawn as text. Every numeral that appears in a figure is a
verbatim string from the input artifact (cell labels, correlation labels,
table labels, source tokens). Tick labels are suppressed for the same
reason. Null cells render as hatched boxes.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.fonttype"] = "none"  # keep text as text nodes

import matplotlib.pyplot as plt
from matplotlib.patches import Rectangle

KINDS = ("heatmap", "scatter", "pareto", "bmw-table")
_ARTIFACT_KIND = {"heatmap": "heatmap", "scatter": "scatter",
                  "pareto": "pareto", "bmw-table": "bmw"}
_SCHEMA_PREFIX = "fairadd."


class RenderError(ValueError):
    pass


@dataclass(frozen=True)
class FigureRequest:
    input_path: Path
    kind: str
    output_path: Path
    color_bounds: tuple[float, float] | None = None
    axis_labels: tuple[str, str] | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise RenderError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")


def load_artifact(req: FigureRequest) -> dict:
    doc = json.loads(Path(req.input_path).read_text())
    expected = _ARTIFACT_KIND[req.kind]
    schema = doc.get("schema_version", "")
    if doc.get("kind") != expected:
        raise RenderError(
            f"kind mismatch: artifact is {doc.get('kind')!r}, requested {req.kind!r}"
        )
    if not schema.startswith(_SCHEMA_PREFIX + expected + "."):
        raise RenderError(f"schema mismatch: {schema!r} is not a {expected} document")
    return doc


def _strip_ticks(ax):
    ax.set_xticks([])
    ax.set_yticks([])


def render_heatmap(doc: dict, req: FigureRequest):
    cells = doc["cells"]
    labels = doc.get("cell_labels") or [[None] * len(doc["added"])] * len(doc["targets"])
    n_rows, n_cols = len(doc["targets"]), len(doc["added"])
    matrix = [[v if v is not None else 0.0 for v in row] for row in cells]
    fig, ax = plt.subplots(figsize=(1.2 * n_cols + 2, 0.9 * n_rows + 2))
    bounds = req.color_bounds or (None, None)
    ax.imshow(matrix, cmap="RdBu", vmin=bounds[0], vmax=bounds[1], aspect="auto")
    for i in range(n_rows):
        for j in range(n_cols):
            if cells[i][j] is None:
                ax.add_patch(Rectangle((j - 0.5, i - 0.5), 1, 1, hatch="///",
                                       fill=True, facecolor="white",
                                       edgecolor="grey"))
            else:
                ax.text(j, i, labels[i][j], ha="center", va="center", fontsize=8)
            if doc["targets"][i] == doc["added"][j]:
                ax.add_patch(Rectangle((j - 0.5, i - 0.5), 1, 1, fill=False,
                                       edgecolor="black", linewidth=1.5))
    _strip_ticks(ax)
    for i, token in enumerate(doc["targets"]):
        ax.text(-0.7, i, token, ha="right", va="center", fontsize=9)
    for j, token in enumerate(doc["added"]):
        ax.text(j, -0.7, token, ha="center", va="bottom", fontsize=9)
    ax.set_xlabel("added source")
    ax.set_ylabel("target source")
    ax.set_title(f"change in {doc['metric']} / {doc['subgroup']}")
    return fig


def render_scatter(doc: dict, req: FigureRequest):
    fig, ax = plt.subplots(figsize=(7, 5))
    for group in doc["groups"]:
        xs = [p["x"] for p in group["points"]]
        ys = [p["y"] for p in group["points"]]
        corr = group.get("correlation")
        label = group["subgroup"]
        if corr and corr.get("label"):
            label = f"{label} ({corr['label']})"
        ax.scatter(xs, ys, label=label, alpha=0.7)
    _strip_ticks(ax)
    xlabel, ylabel = req.axis_labels or (doc["x"], doc["y"])
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.axhline(0.0, color="grey", linewidth=0.6)
    ax.axvline(0.0, color="grey", linewidth=0.6)
    ax.legend(fontsize=8)
    ax.set_title(f"{doc['y']} vs {doc['x']}")
    return fig


def render_pareto(doc: dict, req: FigureRequest):
    fig, ax = plt.subplots(figsize=(6, 5))
    xs = [p["x"] for p in doc["points"]]
    ys = [p["y"] for p in doc["points"]]
    ax.scatter(xs, ys, alpha=0.6, label="additions")
    fx = [p["x"] for p in doc["frontier"]]
    fy = [p["y"] for p in doc["frontier"]]
    ax.plot(fx, fy, marker="o", color="crimson", label="frontier")
    _strip_ticks(ax)
    xlabel, ylabel = req.axis_labels or ("overall change", f"{doc['subgroup']} change")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend(fontsize=8)
    ax.set_title(f"overall vs {doc['subgroup']} accuracy change")
    return fig


def render_bmw(doc: dict, req: FigureRequest):
    blocks = dict(doc["subgroups"])
    if doc.get("overall"):
        blocks["(overall)"] = doc["overall"]
    columns, header = [], []
    for token, block in blocks.items():
        for arm, arm_label in (("without_calibration", "w/o cal."),
                               ("with_calibration", "with cal.")):
            header.append(f"{token}\n{arm_label}")
            columns.append([block[arm][rank]["label"] for rank in ("best", "median", "worst")])
    rows = list(zip(*columns)) if columns else []
    fig, ax = plt.subplots(figsize=(1.6 * max(1, len(header)) + 1, 2.5))
    ax.axis("off")
    table = ax.table(
        cellText=[list(r) for r in rows],
        rowLabels=["best", "median", "worst"],
        colLabels=header,
        loc="center",
    )
    table.auto_set_font_size(False)
    table.set_fontsize(8)
    ax.set_title("best / median / worst additions")
    return fig


_RENDERERS = {
    "heatmap": render_heatmap,
    "scatter": render_scatter,
    "pareto": render_pareto,
    "bmw-table": render_bmw,
}


def render(req: FigureRequest) -> Path:
    """Render the requested figure and write it to the output path."""
    doc = load_artifact(req)
    fig = _RENDERERS[req.kind](doc, req)
    out = Path(req.output_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    suffix = out.suffix.lower() or ".svg"
    if suffix not in (".svg", ".png"):
        raise RenderError(f"unsupported output format {suffix!r}; use .svg or .png")
    fig.savefig(out, format=suffix.lstrip("."))
    plt.close(fig)
    return out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plotkit", description="render fairadd report artifacts as figures"
    )
    parser.add_argument("--input", required=True, help="artifact JSON path")
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--out", required=True, help="output image path (.svg or .png)")
    parser.add_argument("--vmin", type=float, help="heatmap color scale lower bound")
    parser.add_argument("--vmax", type=float, help="heatmap color scale upper bound")
    args = parser.parse_args(argv)
    bounds = None
    if args.vmin is not None or args.vmax is not None:
        bounds = (args.vmin, args.vmax)
    try:
        req = FigureRequest(
            input_path=Path(args.input),
            kind=args.kind,
            output_path=Path(args.out),
            color_bounds=bounds,
        )
        path = render(req)
    except (RenderError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"plotkit: error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
