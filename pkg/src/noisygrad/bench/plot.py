"""SVG figures from sweep and IAT outputs, each written next to a tidy CSV with the plotted numbers."""

import csv
import io
import json
import math
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from ..exceptions import ConfigError  # noqa: E402
from .iat import IAT_COLUMNS  # noqa: E402
from .sweep import read_sweep_csv  # noqa: E402

PLOT_KINDS = ("mse_curves", "heatmap", "iat_scaling")

# fixed hash salt and no timestamp keep SVG output reproducible
plt.rcParams["svg.hashsalt"] = "noisygrad"
_SVG_META = {"Date": None, "Creator": None}


def _write_csv(path, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def _g(x):
    return "" if x is None or (isinstance(x, float) and math.isnan(x)) else format(float(x), ".12g")


def _load_sweeps(paths):
    """Read sweep outputs from result directories; all must share one model."""
    rows, cells, hashes = [], [], set()
    for p in paths:
        p = Path(p)
        base = p if p.is_dir() else p.parent
        summary_path = base / "summary.json"
        if not summary_path.exists():
            raise ConfigError(f"{base} has no summary.json; is it a sweep output directory?")
        summary = json.loads(summary_path.read_text(encoding="utf-8"))
        hashes.add(summary["model_hash"])
        cells.extend(summary["cells"])
        rows.extend(read_sweep_csv(base / "sweep.csv"))
    if len(hashes) > 1:
        raise ConfigError(f"results come from different models ({sorted(hashes)}); plot them separately")
    return rows, cells


def _mse_curves(rows):
    obs = rows[0]["observable"]
    groups = defaultdict(lambda: defaultdict(list))
    for r in rows:
        if r["observable"] == obs and r["stable"]:
            groups[(r["method"], r["h"], r["n"])][r["epoch"]].append(r["mse"])
    if not groups:
        raise ConfigError("no stable checkpoints to plot")
    table = []
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    for (method, h, n), by_epoch in sorted(groups.items()):
        epochs = sorted(by_epoch)
        mse = [float(np.mean(by_epoch[e])) for e in epochs]
        ax.loglog(epochs, mse, label=f"{method} h={h:g} n={n}")
        table.extend([method, _g(h), str(n), obs, _g(e), _g(m), str(len(by_epoch[e]))]
                     for e, m in zip(epochs, mse))
    ax.set_xlabel("epochs")
    ax.set_ylabel(f"MSE ({obs})")
    ax.legend(fontsize="small")
    header = ("method", "h", "n", "observable", "epoch", "mse", "chains")
    return fig, header, table


def _heatmap(cells):
    if not cells:
        raise ConfigError("no cells to plot")
    obs = sorted(cells[0]["final_mse"])[0] if cells[0]["final_mse"] else "variance"
    agg = defaultdict(list)
    for c in cells:
        agg[(c["method"], c["h"], c["n"])].append(c)
    methods = sorted({k[0] for k in agg})
    hs = sorted({k[1] for k in agg})
    ns = sorted({k[2] for k in agg})
    table = []
    fig, axes = plt.subplots(1, len(methods), figsize=(3.2 * len(methods), 3.2), squeeze=False)
    cmap = plt.get_cmap("viridis").copy()
    cmap.set_bad("white")
    grids = {}
    for m in methods:
        grid = np.full((len(hs), len(ns)), np.nan)
        for i, h in enumerate(hs):
            for j, n in enumerate(ns):
                group = agg.get((m, h, n))
                if not group:
                    continue
                stable = all(c["stable"] for c in group)
                vals = [c["final_mse"].get(obs) for c in group]
                value = float(np.mean(vals)) if stable and None not in vals else math.nan
                grid[i, j] = value
                table.append([m, _g(h), str(n), obs, _g(value), "1" if stable else "0"])
        grids[m] = np.log10(grid)
    finite = np.concatenate([g[np.isfinite(g)] for g in grids.values()])
    vmin, vmax = (finite.min(), finite.max()) if finite.size else (0.0, 1.0)
    for ax, m in zip(axes[0], methods):
        im = ax.imshow(np.ma.masked_invalid(grids[m]), cmap=cmap, vmin=vmin, vmax=vmax,
                       origin="lower", aspect="auto")
        ax.set_title(m)
        ax.set_xticks(range(len(ns)), [str(n) for n in ns])
        ax.set_yticks(range(len(hs)), [f"{h:g}" for h in hs])
        ax.set_xlabel("n")
        ax.set_ylabel("h")
    fig.colorbar(im, ax=axes[0].tolist(), label=f"log10 final MSE ({obs})")
    header = ("method", "h", "n", "observable", "final_mse", "stable")
    return fig, header, table


def _iat_scaling(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != IAT_COLUMNS:
            raise ConfigError(f"{path} is not an IAT table")
        raw = list(reader)
    if not raw:
        raise ConfigError("IAT table is empty")

    def num(v):
        return float(v) if v != "" else math.nan

    data = [{k: num(v) for k, v in r.items()} for r in raw]
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    for key in sorted({(d["h"], d["gamma"]) for d in data}):
        sel = sorted((d for d in data if (d["h"], d["gamma"]) == key), key=lambda d: d["sigma2"])
        s2 = [d["sigma2"] for d in sel]
        label = f"h={key[0]:g} gamma={key[1]:g}"
        ax.loglog(s2, [d["oracle_tau"] for d in sel], "-", label=f"oracle {label}")
        emp = [(d["sigma2"], d["empirical_tau"]) for d in sel if not math.isnan(d["empirical_tau"])]
        if emp:
            ax.loglog(*zip(*emp), "o", label=f"empirical {label}")
        ax.loglog(s2, [d["asymptotic_tau"] for d in sel], ":", label=f"4/h^2+C^2-1 {label}")
    ax.set_xlabel("gradient noise variance C^2")
    ax.set_ylabel("integrated autocorrelation time")
    ax.legend(fontsize="small")
    table = [[_g(d[k]) if k not in ("steps", "chains") else str(int(d[k])) for k in IAT_COLUMNS] for d in data]
    return fig, IAT_COLUMNS, table


def make_plot(paths, kind, out_dir=None):
    """Render ``kind`` from result paths; returns ``(svg_path, csv_path)``.

    ``mse_curves`` and ``heatmap`` take sweep output directories; ``iat_scaling``
    takes the CSV written by the ``iat-oracle`` command. Nothing is written
    when the inputs hold no plottable data.
    """
    if kind not in PLOT_KINDS:
        raise ConfigError(f"plot kind must be one of {PLOT_KINDS}, got {kind!r}")
    paths = [Path(p) for p in (paths if isinstance(paths, (list, tuple)) else [paths])]
    if not paths:
        raise ConfigError("no result paths given")
    if kind == "iat_scaling":
        if len(paths) != 1:
            raise ConfigError("iat_scaling takes a single IAT table")
        fig, header, table = _iat_scaling(paths[0])
        default_dir = paths[0].parent
    else:
        rows, cells = _load_sweeps(paths)
        if kind == "mse_curves":
            if not rows:
                raise ConfigError("results contain no checkpoints")
            fig, header, table = _mse_curves(rows)
        else:
            fig, header, table = _heatmap(cells)
        default_dir = paths[0] if paths[0].is_dir() else paths[0].parent
    out = Path(out_dir) if out_dir is not None else default_dir / "plots"
    out.mkdir(parents=True, exist_ok=True)
    svg_path, csv_path = out / f"{kind}.svg", out / f"{kind}.csv"
    fig.savefig(svg_path, format="svg", metadata=_SVG_META)
    plt.close(fig)
    _write_csv(csv_path, header, table)
    return svg_path, csv_path
