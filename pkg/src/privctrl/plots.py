"""Headless figure output: a CSV data file plus a gnuplot script that renders it."""

from pathlib import Path

from .io import format_number


def write_table(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else format_number(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def residual_plot(stem, series, threshold=None, title="closed-loop residual"):
    """``series`` maps a label to a residual-norm sequence (all the same length)."""
    stem = Path(stem)
    labels = list(series)
    length = len(next(iter(series.values())))
    rows = []
    for t in range(length):
        row = [float(t)] + [float(series[k][t]) for k in labels]
        if threshold is not None:
            row.append(float(threshold))
        rows.append(row)
    header = ["t"] + labels + (["threshold"] if threshold is not None else [])
    write_table(stem.with_suffix(".csv"), header, rows)

    plots = [
        f"'{stem.name}.csv' using 1:{i + 2} with lines title '{label}'"
        for i, label in enumerate(labels)
    ]
    if threshold is not None:
        plots.append(
            f"'{stem.name}.csv' using 1:{len(labels) + 2} with lines dt 2 lc 'black' "
            "title 'threshold'"
        )
    script = [
        "set datafile separator ','",
        "set key autotitle columnhead",
        f"set title '{title}'",
        "set xlabel 't'",
        "set ylabel '||r(t)||'",
        "set terminal pngcairo size 900,500",
        f"set output '{stem.name}.png'",
        "plot " + ", \\\n     ".join(plots),
    ]
    stem.with_suffix(".gp").write_text("\n".join(script) + "\n")


def heatmap(stem, row_labels, col_labels, values, title):
    """Fractions per (bin, column) written as a labelled matrix plus an image-plot script."""
    stem = Path(stem)
    header = ["bin"] + [str(c) for c in col_labels]
    rows = [[label] + [float(v) for v in values[i]] for i, label in enumerate(row_labels)]
    write_table(stem.with_suffix(".csv"), header, rows)
    ytics = ", ".join(f"'{label}' {i}" for i, label in enumerate(row_labels))
    xtics = ", ".join(f"'{c}' {j}" for j, c in enumerate(col_labels))
    script = [
        "set datafile separator ','",
        f"set title '{title}'",
        f"set xtics ({xtics})",
        f"set ytics ({ytics})",
        "set xlabel 'd_max'",
        "set ylabel 'gamma bin'",
        "set terminal pngcairo size 900,600",
        f"set output '{stem.name}.png'",
        f"plot '{stem.name}.csv' matrix rowheaders columnheaders using ($1-1):2:3 "
        "with image notitle",
    ]
    stem.with_suffix(".gp").write_text("\n".join(script) + "\n")
