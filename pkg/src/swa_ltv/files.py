"""Self-describing output files.

Text files start with ``# key: value`` header lines followed by
whitespace-delimited numbers. Binary files are raw little-endian float64
in row-major order, with the same header in a ``.hdr`` sidecar.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

FORMAT_VERSION = "1"
VELOCITY_CONVENTION = "away-positive: a positive speed increases the transmitter-receiver distance"


def _header_lines(header: dict) -> list[str]:
    lines = []
    for key, val in header.items():
        if isinstance(val, np.generic):
            val = val.item()
        text = repr(val) if isinstance(val, float) else str(val).replace("\n", " ")
        lines.append(f"# {key}: {text}")
    return lines


def base_header(cfg_digest: str, command: str, fs: float) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "command": command,
        "config_sha256": cfg_digest,
        "units": "SI (m, s, Hz, m/s); amplitudes are linear pressure ratios",
        "velocity_convention": VELOCITY_CONVENTION,
        "time_mapping": f"t = n / fs with fs = {float(fs)!r} Hz",
    }


def write_table(path: str | Path, header: dict, columns: dict, fmt: str = "text") -> Path:
    """Write equal-length columns; returns the data file path."""
    path = Path(path)
    names = list(columns)
    data = np.column_stack([np.asarray(columns[k], dtype=float) for k in names])
    header = dict(header, columns=", ".join(names), shape=f"{data.shape[0]}x{data.shape[1]}")
    return _write(path, header, data, fmt)


def write_matrix(path: str | Path, header: dict, row_name: str, row_values, lag_start_s: float,
                 lag_step_s: float, matrix, fmt: str = "text") -> Path:
    """Rows are labelled by ``row_values`` (first column); columns are lags."""
    matrix = np.asarray(matrix, dtype=float)
    data = np.column_stack([np.asarray(row_values, dtype=float), matrix])
    header = dict(header, layout=f"first column {row_name}; remaining columns lag m",
                  lag_start_s=repr(float(lag_start_s)), lag_step_s=repr(float(lag_step_s)),
                  n_lags=matrix.shape[1], shape=f"{data.shape[0]}x{data.shape[1]}")
    return _write(path, header, data, fmt)


def _write(path: Path, header: dict, data: np.ndarray, fmt: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        if fmt == "binary":
            path = path.with_suffix(".f64")
            data.astype("<f8").tofile(path)
            Path(str(path) + ".hdr").write_text("\n".join(_header_lines(header)) + "\n")
        elif fmt == "text":
            path = path.with_suffix(".txt")
            with open(path, "w") as fh:
                fh.write("\n".join(_header_lines(header)) + "\n")
                np.savetxt(fh, data, fmt="%.17g")
        else:
            raise ValueError(f"unknown output format {fmt!r}")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def read_header(path: str | Path) -> dict:
    path = Path(path)
    src = Path(str(path) + ".hdr") if path.suffix == ".f64" else path
    header = {}
    with open(src) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            key, _, val = line[1:].strip().partition(":")
            header[key.strip()] = val.strip()
    return header


def read_data(path: str | Path) -> tuple[dict, np.ndarray]:
    path = Path(path)
    header = read_header(path)
    if path.suffix == ".f64":
        rows, cols = (int(v) for v in header["shape"].split("x"))
        data = np.fromfile(path, dtype="<f8").reshape(rows, cols)
    else:
        data = np.loadtxt(path, comments="#", ndmin=2)
    return header, data


def read_matrix(path: str | Path):
    """Returns ``(header, row_values, lags_s, matrix)``."""
    header, data = read_data(path)
    start = float(header["lag_start_s"])
    step = float(header["lag_step_s"])
    lags = start + step * np.arange(int(header["n_lags"]))
    return header, data[:, 0], lags, data[:, 1:]


def read_waveform(path: str | Path, sample_rate: float | None = None) -> tuple[np.ndarray, float]:
    """Single-channel waveform from a text file (one value per line) or a raw ``.f64`` stream.

    The sample rate comes from a ``sample_rate_hz`` header entry (text file
    or ``.hdr`` sidecar) or from ``sample_rate``.
    """
    path = Path(path)
    header = {}
    if path.suffix == ".f64":
        side = Path(str(path) + ".hdr")
        if side.exists():
            header = read_header(path)
        x = np.fromfile(path, dtype="<f8")
    else:
        header = read_header(path)
        x = np.loadtxt(path, comments="#", ndmin=1)
        if x.ndim > 1:
            x = x[:, -1]
    rate = header.get("sample_rate_hz")
    rate = float(rate) if rate is not None else sample_rate
    if rate is None:
        raise ValueError(f"{path}: no sample rate declared")
    if sample_rate is not None and rate != sample_rate:
        raise ValueError(f"{path}: declared rate {rate} Hz disagrees with {sample_rate} Hz")
    return np.asarray(x, dtype=float), rate


def write_waveform(path: str | Path, x, sample_rate: float) -> Path:
    path = Path(path)
    with open(path, "w") as fh:
        fh.write(f"# sample_rate_hz: {sample_rate!r}\n")
        np.savetxt(fh, np.asarray(x, dtype=float), fmt="%.17g")
    return path
