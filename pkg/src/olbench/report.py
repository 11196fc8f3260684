"""Report rendering: comment-headed CSV, aligned text tables, and companion
matplotlib figures written next to the delimited output."""

from __future__ import annotations

import csv
import io
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def format_value(fmt: str | None, value) -> str:
    if fmt is None:
        return str(value)
    return fmt % value


def render_rows(columns, rows) -> list[list[str]]:
    """Apply each column's printf format; columns are (name, fmt|None) pairs."""
    out = []
    for row in rows:
        out.append([format_value(fmt, v) for (_name, fmt), v in zip(columns, row, strict=True)])
    return out


def meta_lines(meta: dict) -> list[str]:
    return [f"# {key} = {value}" for key, value in meta.items()]


def render_csv(meta: dict, columns, rows) -> str:
    buf = io.StringIO()
    for line in meta_lines(meta):
        buf.write(line + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([name for name, _fmt in columns])
    writer.writerows(render_rows(columns, rows))
    return buf.getvalue()


def _merge_mean_std(columns, cells):
    """Collapse adjacent *_mean/*_std column pairs into single 'm ± s' cells."""
    names = [name for name, _ in columns]
    merged_names: list[str] = []
    merged_rows: list[list[str]] = [[] for _ in cells]
    i = 0
    while i < len(names):
        name = names[i]
        if (
            name.endswith("_mean")
            and i + 1 < len(names)
            and names[i + 1] == name[: -len("_mean")] + "_std"
        ):
            merged_names.append(name[: -len("_mean")])
            for r, row in enumerate(cells):
                merged_rows[r].append(f"{row[i]} ± {row[i + 1]}")
            i += 2
        else:
            merged_names.append(name)
            for r, row in enumerate(cells):
                merged_rows[r].append(row[i])
            i += 1
    return merged_names, merged_rows


def render_table(meta: dict, columns, rows) -> str:
    names, cells = _merge_mean_std(columns, render_rows(columns, rows))
    widths = [
        max(len(names[i]), *(len(row[i]) for row in cells)) if cells else len(names[i])
        for i in range(len(names))
    ]
    lines = meta_lines(meta)
    lines.append("  ".join(n.ljust(widths[i]) for i, n in enumerate(names)).rstrip())
    lines.append("  ".join("-" * w for w in widths))
    for row in cells:
        lines.append("  ".join(row[i].ljust(widths[i]) for i in range(len(names))).rstrip())
    return "\n".join(lines) + "\n"


def render(meta: dict, columns, rows, fmt: str) -> str:
    if fmt == "csv":
        return render_csv(meta, columns, rows)
    if fmt == "table":
        return render_table(meta, columns, rows)
    raise ValueError(f"unknown format {fmt!r}")


def figure_path(out_path) -> Path:
    return Path(out_path).with_suffix(".png")


def _save(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def figure_eval_online(rows, path) -> None:
    """Horizontal bars of mean error per algorithm, best at the top."""
    names = [r[0] for r in rows][::-1]
    means = [r[1] for r in rows][::-1]
    stds = [r[2] for r in rows][::-1]
    fig, ax = plt.subplots(figsize=(7, 0.35 * len(rows) + 1.5))
    ax.barh(names, means, xerr=stds, color="tab:blue", alpha=0.85, capsize=3)
    ax.set_xlabel("mean error rate")
    ax.set_title("Online classifiers, prequential error")
    _save(fig, path)


def figure_incremental(rows, path, algorithm: str) -> None:
    """Error rate and per-chunk CPU against cumulative record count."""
    records = [r[0] for r in rows]
    err = [r[1] for r in rows]
    err_std = [r[2] for r in rows]
    cpu = [r[5] for r in rows]
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    ax1.errorbar(records, err, yerr=err_std, marker="o", capsize=3, color="tab:blue")
    ax1.set_ylabel("error rate")
    ax1.set_title(f"{algorithm}: error and cost vs training records")
    ax2.plot(records, cpu, marker="s", color="tab:orange")
    ax2.set_ylabel("cpu seconds per chunk")
    ax2.set_xlabel("records seen")
    _save(fig, path)


def figure_sweep(rows, path, x_label: str, title: str) -> None:
    xs = [r[0] for r in rows]
    means = [r[1] for r in rows]
    stds = [r[2] for r in rows]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.errorbar(xs, means, yerr=stds, marker="o", capsize=3, color="tab:green")
    ax.set_xlabel(x_label)
    ax.set_ylabel("test accuracy")
    ax.set_title(title)
    _save(fig, path)
