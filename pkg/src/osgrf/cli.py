"""Command-line front end: ``simulate``, ``analyze``, ``estimate``, ``selftest``.

Exit codes are shared by all commands: 0 success, 1 self-test failure,
2 bad input, 3 I/O failure.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import io as fio
from .besov import critical_exponent_estimate
from .errors import OSGRFError
from .estimate import CandidateFamily, anisotropy_search, candidate_grid
from .synthesis import FieldSpec, synthesize_many, variogram_estimate
from .wavelet import DiagonalAnisotropy, anisotropic_wavelet_transform

__all__ = ["main", "RunConfig", "EXIT_OK", "EXIT_SELFTEST", "EXIT_INPUT", "EXIT_IO"]

EXIT_OK, EXIT_SELFTEST, EXIT_INPUT, EXIT_IO = 0, 1, 2, 3

DEFAULT_SPEC = {"E0": [[1.0, 0.0], [0.0, 1.0]], "H0": 0.5, "pseudonorm": "euclidean", "grid": 256}
DEFAULT_FAMILY = {"lambda_lo": 0.6, "lambda_hi": 1.4, "step": 0.1, "d": 2}


class InputError(Exception):
    """Bad command-line input; maps to exit code 2."""


@dataclass
class RunConfig:
    command: str
    spec: Path | None
    out: Path
    input: Path | None
    replicates: int
    seed: int | None
    parallelism: int
    family: Path | None
    p: float
    q: float
    jrange: tuple[int, int] | None
    anisotropy: tuple[float, ...] | None
    coefficients_csv: bool
    fault: str | None


def _parallelism(value: str) -> int:
    if value == "auto":
        return max(1, os.cpu_count() or 1)
    try:
        n = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer or 'auto', got {value!r}")
    if n < 1:
        raise argparse.ArgumentTypeError("parallelism must be >= 1")
    return n


def _positive(value: str) -> int:
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return n


def _seed(value: str) -> int:
    n = int(value)
    if not 0 <= n < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return n


def _jrange(value: str) -> tuple[int, int]:
    try:
        lo, hi = (int(v) for v in value.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO:HI, got {value!r}")
    if lo < 0 or hi < lo:
        raise argparse.ArgumentTypeError(f"bad scale range {value!r}")
    return lo, hi


def _pq(value: str) -> float:
    v = math.inf if value in ("inf", "Inf", "INF") else float(value)
    if not v >= 1:
        raise argparse.ArgumentTypeError("p and q must lie in [1, inf]")
    return v


def _floats(value: str) -> tuple[float, ...]:
    return tuple(float(v) for v in value.split(","))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="osgrf", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, need_out=True):
        sp.add_argument("--out", type=Path, required=need_out, help="output directory")
        sp.add_argument("--parallelism", type=_parallelism, default=1, help="worker threads, N or 'auto'")

    sp = sub.add_parser("simulate", help="synthesize realizations")
    common(sp)
    sp.add_argument("--spec", type=Path, help="FieldSpec JSON (default: isotropic, H0 = 0.5, 256x256)")
    sp.add_argument("--replicates", type=_positive, default=1)
    sp.add_argument("--seed", type=_seed, help="overrides the seed in the spec")

    for name, helptext in [("analyze", "wavelet coefficients, variogram and exponent of each realization"),
                           ("estimate", "anisotropy search over a candidate family")]:
        sp = sub.add_parser(name, help=helptext)
        common(sp)
        sp.add_argument("--input", type=Path, required=True, help="directory of realization files")
        sp.add_argument("--p", type=_pq, default=2.0)
        sp.add_argument("--q", type=_pq, default=2.0)
        sp.add_argument("--jrange", type=_jrange, help="fit scales LO:HI (inclusive)")
        if name == "analyze":
            sp.add_argument("--anisotropy", type=_floats,
                            help="analysing exponents l1,l2,... (default: diagonal part of E0)")
            sp.add_argument("--coefficients-csv", action="store_true",
                            help="also write every coefficient as CSV (large)")
        else:
            sp.add_argument("--family", type=Path, help="candidate family JSON (default: lambda 0.6..1.4 step 0.1)")

    sp = sub.add_parser("selftest", help="run the invariant checks")
    common(sp, need_out=False)
    sp.add_argument("--inject-fault", choices=["filter-tap"], help="deliberately break a component")
    return parser


def _config(ns) -> RunConfig:
    return RunConfig(ns.command, getattr(ns, "spec", None), getattr(ns, "out", None), getattr(ns, "input", None),
                     getattr(ns, "replicates", 1), getattr(ns, "seed", None), ns.parallelism,
                     getattr(ns, "family", None), getattr(ns, "p", 2.0), getattr(ns, "q", 2.0),
                     getattr(ns, "jrange", None), getattr(ns, "anisotropy", None),
                     getattr(ns, "coefficients_csv", False), getattr(ns, "inject_fault", None))


def _read_input_json(path: Path) -> dict:
    if not path.is_file():
        raise InputError(f"{path}: no such file")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})")


def _load_realizations(directory: Path | None):
    if directory is None or not directory.is_dir():
        raise InputError(f"{directory}: input directory does not exist")
    headers = fio.list_headers(directory)
    if not headers:
        raise InputError(f"{directory}: no realization files found")
    reals = [fio.read_realization(h) for h in headers]
    hashes = {r.spec.spec_hash() for r in reals}
    if len(hashes) > 1:
        raise InputError(f"{directory}: realizations come from different specs")
    return reals


# ---------------------------------------------------------------------------
# commands


def simulate_cmd(cfg: RunConfig) -> int:
    data = dict(DEFAULT_SPEC) if cfg.spec is None else _read_input_json(cfg.spec)
    if cfg.seed is not None:
        data["seed"] = cfg.seed
    spec = FieldSpec.from_dict(data)
    out = fio.ensure_dir(cfg.out)
    reals = synthesize_many(spec, cfg.replicates, cfg.parallelism)
    files = [fio.write_realization(out, r) for r in reals]
    fio.write_manifest(out, spec, files, [r.replicate_index for r in reals])
    print(f"wrote {len(files)} realization(s) to {out}")
    return EXIT_OK


def _analysis_anisotropy(cfg: RunConfig, spec: FieldSpec) -> DiagonalAnisotropy:
    if cfg.anisotropy is not None:
        lam = cfg.anisotropy
    else:
        lam = np.diag(spec.E0.real_diagonalizable_part)
    return DiagonalAnisotropy.normalized(lam)


def _axis_lags(spec: FieldSpec, count: int = 8) -> np.ndarray:
    lags = [np.zeros(spec.d)]
    for r in range(spec.d):
        for m in sorted({int(v) for v in np.geomspace(1, spec.shape[r] // 4, count)}):
            h = np.zeros(spec.d)
            h[r] = m * spec.spacing[r]
            lags.append(h)
    return np.array(lags)


def analyze_cmd(cfg: RunConfig) -> int:
    reals = _load_realizations(cfg.input)
    spec = reals[0].spec
    D = _analysis_anisotropy(cfg, spec)
    out = fio.ensure_dir(cfg.out)
    alphas, ses = [], []
    for real in reals:
        coeffs = anisotropic_wavelet_transform(real, D, boundary="symmetric")
        tag = f"realization_{real.replicate_index:05d}"
        fio.write_coefficients_binary(out / "coefficients" / tag, coeffs)
        if cfg.coefficients_csv:
            fio.write_coefficients_csv(out / f"{tag}_coefficients.csv", coeffs)
        est = critical_exponent_estimate(coeffs, cfg.p, cfg.q, cfg.jrange)
        fio.write_estimate(out / f"{tag}_estimate", est)
        alphas.append(est.alpha_hat)
        ses.append(est.slope_stderr)
    if len(reals) >= 2:
        vg = variogram_estimate(reals, _axis_lags(spec))
        fio.write_variogram_csv(out / "variogram.csv", vg)
    a = np.array(alphas)
    summary = {
        "anisotropy": list(D.lam), "p": cfg.p, "q": cfg.q, "boundary": "symmetric",
        "alpha_hat": float(a.mean()),
        "stderr": float(a.std(ddof=1) / math.sqrt(a.size)) if a.size > 1 else ses[0],
        "per_realization": [{"replicate": r.replicate_index, "alpha_hat": float(v), "slope_stderr": float(s)}
                            for r, v, s in zip(reals, alphas, ses)],
        "spec_hash": spec.spec_hash(),
    }
    fio.write_json(out / "estimate.json", summary)
    print(f"alpha_hat = {summary['alpha_hat']:.4f} +- {summary['stderr']:.4f} over {a.size} realization(s)")
    return EXIT_OK


def estimate_cmd(cfg: RunConfig) -> int:
    reals = _load_realizations(cfg.input)
    spec = reals[0].spec
    data = DEFAULT_FAMILY if cfg.family is None else _read_input_json(cfg.family)
    try:
        family = CandidateFamily.from_dict(data)
    except (KeyError, TypeError) as exc:
        raise InputError(f"{cfg.family}: malformed candidate family ({exc})")
    truth = None
    if spec.E0.is_diagonal and spec.d == 2:
        truth = (tuple(np.diag(spec.E0.entries)), spec.H0)
    result = anisotropy_search(reals, family, cfg.p, cfg.q, cfg.jrange, truth=truth,
                               parallelism=cfg.parallelism)
    out = fio.ensure_dir(cfg.out)
    fio.write_search_result(out / "search", result)
    print(f"argmax lambda = {result.argmax_lambda:g}, H_hat = {result.H_hat:.4f}"
          + (f" [{'; '.join(result.flags)}]" if result.flags else ""))
    return EXIT_OK


def selftest_cmd(cfg: RunConfig) -> int:
    from .selftest import run_selftest
    report = run_selftest(cfg.fault)
    text = report.to_text()
    sys.stdout.write(text)
    if cfg.out is not None:
        out = fio.ensure_dir(cfg.out)
        (out / "selftest.txt").write_text(text)
        fio.write_json(out / "selftest.json", report.to_dict())
    if not report.passed:
        print(f"self-test FAILED: {', '.join(report.failures)}", file=sys.stderr)
        return EXIT_SELFTEST
    return EXIT_OK


COMMANDS = {"simulate": simulate_cmd, "analyze": analyze_cmd, "estimate": estimate_cmd, "selftest": selftest_cmd}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    cfg = _config(ns)
    try:
        return COMMANDS[cfg.command](cfg)
    except (InputError, OSGRFError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
