"""File formats: realization sidecars, coefficient dumps and result tables.

A realization is a JSON header next to a raw binary file of row-major
little-endian float64 values.  All JSON is written with sorted keys and a
trailing newline, and all floats in CSV files use ``repr``, so that output
bytes depend only on the values.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from pathlib import Path

import numpy as np

from .errors import OSGRFError
from .synthesis import FieldRealization, FieldSpec, Variogram
from .wavelet import DiagonalAnisotropy, WaveletCoefficientSet

__all__ = [
    "FormatError",
    "write_json",
    "read_json",
    "realization_paths",
    "write_realization",
    "read_realization",
    "write_manifest",
    "read_manifest",
    "write_variogram_csv",
    "write_coefficients_csv",
    "write_coefficients_binary",
    "read_coefficients_binary",
    "write_estimate",
    "write_search_result",
    "list_headers",
    "ensure_dir",
]

DTYPE = "<f8"


class FormatError(OSGRFError, ValueError):
    """Malformed or truncated input file."""


def _clean(obj):
    # JSON has no inf/nan; encode them as strings
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n")
    return path


def read_json(path) -> dict:
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from exc



def _write_csv(path, header, rows) -> Path:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    path = Path(path)
    path.write_text(buf.getvalue())
    return path


# ---------------------------------------------------------------------------
# realizations


def realization_paths(directory, replicate: int) -> tuple[Path, Path]:
    stem = Path(directory) / f"realization_{int(replicate):05d}"
    return stem.with_suffix(".json"), stem.with_suffix(".bin")


def write_realization(directory, real: FieldRealization) -> tuple[Path, Path]:
    """Write ``realization_NNNNN.json`` and ``.bin`` into ``directory``."""
    head, binary = realization_paths(directory, real.replicate_index)
    spec = real.spec
    header = {
        "format": "osgrf-realization",
        "d": spec.d,
        "grid": list(spec.shape),
        "spacing": list(spec.spacing),
        "E0": spec.E0.tolist(),
        "H0": spec.H0,
        "pseudonorm": spec.rho.to_dict(),
        "seed": spec.seed,
        "replicate": real.replicate_index,
        "endianness": "little",
        "dtype": "f64",
        "data": binary.name,
        "spec": spec.to_dict(),
    }
    binary.write_bytes(np.ascontiguousarray(real.values, dtype=DTYPE).tobytes(order="C"))
    write_json(head, header)
    return head, binary


def read_realization(header_path) -> FieldRealization:
    """Load a realization from its JSON header; the binary must match exactly."""
    header_path = Path(header_path)
    h = read_json(header_path)
    try:
        if h.get("endianness") != "little" or h.get("dtype") != "f64":
            raise FormatError(f"{header_path}: unsupported encoding {h.get('endianness')}/{h.get('dtype')}")
        shape = tuple(int(n) for n in h["grid"])
        binary = header_path.parent / h.get("data", header_path.with_suffix(".bin").name)
        spec = FieldSpec.from_dict(h["spec"]) if "spec" in h else FieldSpec.from_dict(
            {"E0": h["E0"], "H0": h["H0"], "pseudonorm": h["pseudonorm"], "grid": h["grid"],
             "spacing": h["spacing"], "seed": h["seed"]})
        replicate = int(h["replicate"])
    except (KeyError, TypeError) as exc:
        raise FormatError(f"{header_path}: malformed header ({exc})") from exc
    if not binary.exists():
        raise FormatError(f"{binary}: binary file missing")
    raw = binary.read_bytes()
    expected = 8 * int(np.prod(shape))
    if len(raw) != expected:
        raise FormatError(f"{binary}: expected {expected} bytes for grid {shape}, found {len(raw)} (truncated?)")
    values = np.frombuffer(raw, dtype=DTYPE).reshape(shape).astype(float)
    if not np.all(np.isfinite(values)):
        raise FormatError(f"{binary}: non-finite values")
    return FieldRealization(values, spec, replicate)


def write_manifest(directory, spec: FieldSpec, files, replicates) -> Path:
    entries = [{"header": Path(h).name, "data": Path(b).name, "replicate": int(r)}
               for (h, b), r in zip(files, replicates)]
    return write_json(Path(directory) / "manifest.json",
                      {"spec_hash": spec.spec_hash(), "spec": spec.to_dict(), "seed": spec.seed,
                       "replicates": [int(r) for r in replicates], "files": entries})


def read_manifest(directory) -> dict:
    return read_json(Path(directory) / "manifest.json")


def write_variogram_csv(path, vg: Variogram) -> Path:
    lags = np.atleast_2d(np.asarray(vg.lags, dtype=float))
    d = lags.shape[1]
    rows = [[*map(float, h), float(v), float(s)] for h, v, s in zip(lags, vg.v, vg.stderr)]
    return _write_csv(path, [f"h_{i + 1}" for i in range(d)] + ["v", "stderr"], rows)


# ---------------------------------------------------------------------------
# coefficients


def _join(values) -> str:
    return " ".join(str(int(v)) for v in values)


def write_coefficients_csv(path, coeffs: WaveletCoefficientSet) -> Path:
    """One row per coefficient: ``j, G, gamma, k, value``.

    ``G`` is the F/M string and the vectors ``gamma, k`` are space separated.
    """
    buf = io.StringIO()
    buf.write("j,G,gamma,k,value\n")
    for key in sorted(coeffs.coefficients):
        j, G, gamma = key
        arr = coeffs.coefficients[key]
        prefix = f"{j},{''.join(G)},{_join(gamma)},"
        for k in np.ndindex(arr.shape):
            buf.write(f"{prefix}{_join(k)},{float(arr[k])!r}\n")
    path = Path(path)
    path.write_text(buf.getvalue())
    return path


def write_coefficients_binary(directory, coeffs: WaveletCoefficientSet) -> Path:
    """Grid-per-branch format: ``coefficients.json`` plus one ``.bin`` per branch."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    branches = []
    for key in sorted(coeffs.coefficients):
        j, G, gamma = key
        arr = coeffs.coefficients[key]
        name = f"branch_j{j:02d}_{''.join(G)}_{'_'.join(str(g) for g in gamma)}.bin"
        (directory / name).write_bytes(np.ascontiguousarray(arr, dtype=DTYPE).tobytes())
        branches.append({"j": j, "G": "".join(G), "gamma": list(gamma), "shape": list(arr.shape),
                         "file": name})
    return write_json(directory / "coefficients.json", {
        "format": "osgrf-coefficients", "anisotropy": list(coeffs.anisotropy.lam),
        "filter_order": coeffs.filter_order, "grid": list(coeffs.grid_shape),
        "spacing": list(coeffs.spacing), "boundary": coeffs.boundary,
        "source_grid": list(coeffs.source_shape or coeffs.grid_shape),
        "endianness": "little", "dtype": "f64", "branches": branches})


def read_coefficients_binary(directory) -> WaveletCoefficientSet:
    directory = Path(directory)
    h = read_json(directory / "coefficients.json")
    coeffs = {}
    try:
        for b in h["branches"]:
            f = directory / b["file"]
            shape = tuple(b["shape"])
            raw = f.read_bytes() if f.exists() else b""
            if len(raw) != 8 * int(np.prod(shape)):
                raise FormatError(f"{f}: expected {8 * int(np.prod(shape))} bytes, found {len(raw)}")
            coeffs[(int(b["j"]), tuple(b["G"]), tuple(int(g) for g in b["gamma"]))] = (
                np.frombuffer(raw, dtype=DTYPE).reshape(shape).astype(float))
        return WaveletCoefficientSet(DiagonalAnisotropy(tuple(h["anisotropy"])), int(h["filter_order"]),
                                     coeffs, tuple(h["grid"]), tuple(h["spacing"]), h["boundary"],
                                     tuple(h["source_grid"]))
    except (KeyError, TypeError) as exc:
        raise FormatError(f"{directory}: malformed coefficient header ({exc})") from exc


# ---------------------------------------------------------------------------
# results


def write_estimate(stem, est) -> tuple[Path, Path]:
    """``<stem>.json`` with the estimate and ``<stem>_log2S.csv`` with ``(j, log2_Sj)``."""
    stem = Path(stem)
    js = write_json(stem.with_suffix(".json"), est.to_dict())
    table = stem.parent / f"{stem.name}_log2S.csv"
    _write_csv(table, ["j", "log2_Sj"], [(j, float(v)) for j, v in est.log2_table])
    return js, table


def write_search_result(stem, result) -> tuple[Path, Path]:
    """``<stem>.json`` and the curve ``<stem>_curve.csv``."""
    stem = Path(stem)
    js = write_json(stem.with_suffix(".json"), result.to_dict())
    table = stem.parent / f"{stem.name}_curve.csv"
    _write_csv(table, ["lambda", "alpha_hat", "stderr", "alpha_predicted"],
               [(float(l), float(a), float(s), float(p)) for l, a, s, p in result.curve])
    return js, table


def list_headers(directory) -> list[Path]:
    """Realization headers in ``directory``, sorted by name."""
    return sorted(p for p in Path(directory).glob("realization_*.json") if p.is_file())


def ensure_dir(path) -> Path:
    path = Path(path)
    os.makedirs(path, exist_ok=True)
    return path
