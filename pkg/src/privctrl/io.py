"""Plain-text matrix files and the client/cloud exchange directory.

Matrix file format: one header line ``# <name> <rows> <cols>``, then ``rows`` lines
of comma-separated values written with 17 significant digits (row-major), so a
write/read round trip is exact.
"""

from pathlib import Path

import numpy as np

from .linalg import as_matrix

#: files the cloud may see; anything else in an exchange directory is an error
CLOUD_INPUTS = ("X0", "X1", "V0", "Delta")
CLOUD_OUTPUTS = ("P", "Y", "K")
SECRET_NAMES = ("A_star", "B_star", "U0", "D0", "F1", "G1", "F2", "G2")


def format_number(x):
    return format(float(x), ".17g")


def write_matrix(path, M, name=None):
    path = Path(path)
    M = as_matrix(M)
    name = name or path.stem
    lines = [f"# {name} {M.shape[0]} {M.shape[1]}"]
    lines += [",".join(format_number(v) for v in row) for row in M]
    path.write_text("\n".join(lines) + "\n")


def read_matrix(path):
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().split()
        if len(header) != 4 or header[0] != "#":
            raise ValueError(f"{path}: malformed header {' '.join(header)!r}")
        rows, cols = int(header[2]), int(header[3])
        data = [line.strip() for line in fh if line.strip()]
    if len(data) != rows:
        raise ValueError(f"{path}: expected {rows} rows, found {len(data)}")
    M = np.array([[float(v) for v in line.split(",")] for line in data]).reshape(rows, cols)
    return M


def write_kv(path, mapping):
    lines = [f"{k} = {v}" for k, v in mapping.items()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_kv(path):
    out = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{path}: expected 'key = value', got {raw!r}")
        out[key.strip()] = value.strip()
    return out


def write_exchange_inputs(directory, masked, Delta=None):
    """What the client uploads: the masked data and, for noisy data, the disturbance bound."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_matrix(d / "X0.csv", masked.X0)
    write_matrix(d / "X1.csv", masked.X1)
    write_matrix(d / "V0.csv", masked.V0)
    if Delta is not None:
        write_matrix(d / "delta.csv", Delta, name="Delta")
    write_kv(d / "manifest.txt", {
        "n": masked.X0.shape[0],
        "m": masked.V0.shape[0],
        "T": masked.X0.shape[1],
        "mode": "noisy" if Delta is not None else "clean",
    })


def read_exchange_inputs(directory):
    d = Path(directory)
    manifest = read_kv(d / "manifest.txt")
    X0 = read_matrix(d / "X0.csv")
    X1 = read_matrix(d / "X1.csv")
    V0 = read_matrix(d / "V0.csv")
    Delta = read_matrix(d / "delta.csv") if (d / "delta.csv").exists() else None
    n, m = int(manifest["n"]), int(manifest["m"])
    if X0.shape[0] != n or V0.shape[0] != m:
        raise ValueError(f"{d}: manifest dimensions disagree with the matrices")
    return X0, X1, V0, Delta


def write_exchange_outputs(directory, outcome):
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    (d / "status.txt").write_text(outcome.status.value + "\n")
    (d / "gamma.txt").write_text(format_number(outcome.gamma_bar) + "\n")
    if outcome.feasible:
        write_matrix(d / "P.csv", outcome.P)
        write_matrix(d / "Y.csv", outcome.Y)
        write_matrix(d / "K.csv", outcome.K)


def read_exchange_outputs(directory):
    d = Path(directory)
    status = (d / "status.txt").read_text().strip()
    gamma = float((d / "gamma.txt").read_text())
    K = read_matrix(d / "K.csv") if (d / "K.csv").exists() else None
    return status, gamma, K


def exchange_leaks(directory):
    """Names of files in an exchange directory that are not cloud-visible."""
    allowed = {f"{n}.csv" for n in ("X0", "X1", "V0", "delta") + CLOUD_OUTPUTS}
    allowed |= {"manifest.txt", "gamma.txt", "status.txt"}
    return sorted(p.name for p in Path(directory).iterdir() if p.name not in allowed)
