"""Artifact writers: result JSON, CSV tables, a gnuplot script and a PNG preview."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np


def _plain(x):
    """Convert numpy scalars and arrays into JSON-ready Python objects."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        return {"re": float(x.real), "im": float(x.imag)}
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if np.isnan(x):
            return "nan"
        if np.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return x


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(_plain(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(dumps(obj), encoding="utf-8")
    return path


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (complex, np.complexfloating)):
        return repr(complex(v))
    return str(v)


def write_csv(path, header, rows) -> Path:
    """Header row, comma separated, UTF-8, ``.`` decimal."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_cell(v) for v in r])
    return path


def _numeric(rows, col: int) -> bool:
    try:
        [float(r[col]) for r in rows]
    except (TypeError, ValueError):
        return False
    return True


def gnuplot_script(plots: list, tables: dict, png_name: str | None = None) -> str:
    """Plain-text gnuplot script that reads the CSV tables written alongside it."""
    lines = ["# gnuplot script; run with: gnuplot plot.gp", "set datafile separator ','", "set key autotitle columnhead"]
    if png_name:
        lines += ["set terminal pngcairo size 800,600", f"set output '{png_name}'"]
    style = {"points": "points pt 7", "linespoints": "linespoints pt 7", "lines": "lines"}
    for p in plots:
        header = tables[p["table"]]["header"]
        xc = header.index(p["x"]) + 1
        lines.append(f"set title '{p['title']}'")
        lines.append(f"set xlabel '{p['x']}'")
        lines.append("set logscale y" if p.get("logy") else "unset logscale y")
        parts = [f"'{p['table']}.csv' using {xc}:{header.index(y) + 1} with {style.get(p.get('style'), 'linespoints')} title '{y}'" for y in p["y"]]
        lines.append("plot " + ", \\\n     ".join(parts))
    return "\n".join(lines) + "\n"


def render_png(path, plots: list, tables: dict) -> Path | None:
    """Static preview of the first plot with the Agg backend (no display needed)."""
    plots = [p for p in plots if _numeric(tables[p["table"]]["rows"], tables[p["table"]]["header"].index(p["x"]))]
    if not plots:
        return None
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(len(plots), 1, figsize=(7, 4 * len(plots)), squeeze=False)
    for ax, p in zip(axes[:, 0], plots):
        tab = tables[p["table"]]
        h = tab["header"]
        x = np.array([float(r[h.index(p["x"])]) for r in tab["rows"]])
        for y in p["y"]:
            yv = np.array([float(r[h.index(y)]) for r in tab["rows"]])
            if p.get("logy"):
                yv = np.where(yv > 0, yv, np.nan)
            ls = "none" if p.get("style") == "points" else "-"
            ax.plot(x, yv, marker="o", linestyle=ls, label=y)
        if p.get("logy"):
            ax.set_yscale("log")
        ax.set_title(p["title"])
        ax.set_xlabel(p["x"])
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=90, metadata={"Software": None})
    plt.close(fig)
    return Path(path)


def write_artifacts(out_dir, result: dict, tables: dict, plots: list, png: bool = True) -> dict:
    """Write ``result.json``, one CSV per table, ``plot.gp`` and optionally ``plot.png``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {}
    for name, tab in tables.items():
        files[name] = write_csv(out / f"{name}.csv", tab["header"], tab["rows"]).name
    (out / "plot.gp").write_text(gnuplot_script(plots, tables, "plot_gnuplot.png"), encoding="utf-8")
    files["plot_script"] = "plot.gp"
    if png and render_png(out / "plot.png", plots, tables) is not None:
        files["plot_png"] = "plot.png"
    result = dict(result, files=files)
    write_json(out / "result.json", result)
    return result
