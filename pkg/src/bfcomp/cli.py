"""Command-line front end: ``bfcomp {hom,verify,haar,distribution,qfi}``.

Exit codes: 0 when every check passes, 1 when a residual exceeds its
tolerance, 2 for usage or input errors. Reports always embed the seed,
the tolerance and the library version.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time

import numpy as np

from . import __version__
from .algebra import GramMatrix, UnitaryMatrix, equal_overlap_gram, haar_unitary, random_gram
from .errors import BfcompError
from .haar_stats import QUANTITIES, haar_monte_carlo
from .identities import (
    ProbabilityCache,
    verify_bf_complementarity,
    verify_classical_complementarity,
    verify_classical_convolution,
)
from .interference import Species, compositions, dominated, full_distribution, occupation, transition_probability
from .metrology import covariance_brute_force, covariance_closed_form, qfi_report, verify_covariance_sum_rule
from .thermal import verify_macmahon, verify_muir, verify_principal_minors

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

DEFAULT_TOLERANCE = {
    "hom": 1e-12,
    "complementarity": 1e-10,
    "classical": 1e-10,
    "covariance": 1e-10,
    "muir": 1e-10,
    "macmahon": 1e-9,
    "haar": 4.0,  # bound on |z|
    "distribution": 1e-10,
    "qfi": 1e-10,
}
MACMAHON_CAPS = 16
MACMAHON_RADIUS = 0.4
MACMAHON_NORM = 0.5


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- file formats


def load_matrix(path: str) -> np.ndarray:
    """Read a ``{"rows", "cols", "entries": [[re, im], ...]}`` JSON matrix (row-major)."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read matrix file {path}: {exc}") from exc
    try:
        rows, cols, entries = int(doc["rows"]), int(doc["cols"]), doc["entries"]
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"{path}: expected keys rows, cols, entries") from exc
    if len(entries) != rows * cols:
        raise UsageError(f"{path}: {len(entries)} entries for a {rows}x{cols} matrix")
    try:
        arr = np.array([complex(float(re), float(im)) for re, im in entries], dtype=np.complex128)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"{path}: entries must be [re, im] pairs") from exc
    if not np.all(np.isfinite(arr)):
        raise UsageError(f"{path}: entries must be finite")
    return arr.reshape(rows, cols)


def dump_matrix(matrix) -> dict:
    a = np.asarray(matrix, dtype=np.complex128)
    return {
        "rows": a.shape[0],
        "cols": a.shape[1],
        "entries": [[float(z.real), float(z.imag)] for z in a.ravel()],
    }


def parse_grid(spec: str) -> np.ndarray:
    """``start:stop:steps`` (inclusive, ``steps`` points) or a comma list of overlaps."""
    try:
        if ":" in spec:
            start, stop, steps = spec.split(":")
            steps = int(steps)
            if steps < 1:
                raise ValueError
            grid = np.linspace(float(start), float(stop), steps)
        else:
            grid = np.array([float(v) for v in spec.split(",")])
    except ValueError as exc:
        raise UsageError(f"bad grid {spec!r}; use start:stop:steps or a comma list") from exc
    if np.any(grid < 0.0) or np.any(grid > 1.0):
        raise UsageError("overlaps must lie in [0, 1]")
    return grid


def parse_occupation(spec: str) -> tuple[int, ...]:
    try:
        return occupation([int(v) for v in spec.split(",")])
    except ValueError as exc:
        raise UsageError(f"bad occupation {spec!r}; use e.g. 1,1,0") from exc


def fmt(value) -> str:
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(value)
    if isinstance(value, (float, np.floating)):
        return "%.17g" % value
    return str(value)


def write_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return value if math.isfinite(value) else str(value)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def emit(args, text: str) -> None:
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def emit_report(args, report: dict, header=None, rows=None) -> None:
    report = {**report, "seed": args.seed, "version": __version__}
    if args.format == "csv" and header is not None:
        emit(args, write_csv(header, rows))
    else:
        emit(args, json.dumps(_jsonable(report), indent=2) + "\n")
    status = "PASS" if report.get("passed", True) else "FAIL"
    detail = report.get("max_residual")
    extra = f" max_residual={detail:.3e}" if isinstance(detail, float) else ""
    print(f"[{status}] {report.get('suite', args.command)}{extra}", file=sys.stderr)


def _tolerance(args, key: str) -> float:
    return DEFAULT_TOLERANCE[key] if args.tolerance is None else args.tolerance


def _gram_arg(args, m: int):
    if getattr(args, "gram", None):
        return GramMatrix(load_matrix(args.gram)).matrix
    x = getattr(args, "overlap", None)
    if x is None:
        return np.eye(m)
    if not 0.0 <= x <= 1.0:
        raise UsageError("overlap must lie in [0, 1]")
    return equal_overlap_gram(m, x).matrix


def unbiased_unitary(m: int) -> np.ndarray:
    """Normalised discrete Fourier matrix, so every ``|U[a, b]|**2 = 1/m``."""
    a = np.arange(m)
    return np.exp(2j * np.pi * np.outer(a, a) / m) / math.sqrt(m)


def beam_splitter(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, s], [-s, c]], dtype=np.complex128)


# -------------------------------------------------------------------- commands


def cmd_hom(args) -> int:
    tol = _tolerance(args, "hom")
    u = beam_splitter(args.theta)
    header = ["x", "B_coincidence", "F_coincidence", "P_coincidence", "B_bunch", "F_bunch", "sum_rule_residual"]
    rows = []
    for x in parse_grid(args.overlap_grid):
        s = np.array([[1.0, x], [x, 1.0]])
        vals = {}
        for out, tag in (((1, 1), "coincidence"), ((2, 0), "bunch")):
            for sp, short in ((Species.BOSON, "B"), (Species.FERMION, "F"), (Species.CLASSICAL, "P")):
                vals[f"{short}_{tag}"] = transition_probability(u, s, (1, 1), out, sp)
        res = max(abs(vals[f"B_{t}"] + vals[f"F_{t}"] - 2.0 * vals[f"P_{t}"]) for t in ("coincidence", "bunch"))
        rows.append([float(x)] + [vals[h] for h in header[1:-1]] + [res])
    max_res = max(r[-1] for r in rows)
    report = {
        "suite": "hom",
        "theta": args.theta,
        "tolerance": tol,
        "cases": [dict(zip(header, r)) for r in rows],
        "max_residual": max_res,
        "passed": max_res <= tol,
    }
    fmt_args = argparse.Namespace(**{**vars(args), "format": args.format or "csv"})
    emit_report(fmt_args, report, header, rows)
    return EXIT_OK if report["passed"] else EXIT_FAIL


def _suite_complementarity(args, rng):
    cases = []
    for trial in range(args.trials):
        u = haar_unitary(args.modes, rng).matrix
        s = random_gram(args.modes, rng).matrix
        cache = ProbabilityCache(u, s)
        worst, count = 0.0, 0
        for n in range(args.max_total + 1):
            for k in compositions(n, args.modes):
                for i in compositions(n, args.modes):
                    worst = max(worst, verify_bf_complementarity(u, s, k, i, cache).residual)
                    count += 1
        cases.append({"trial": trial, "pairs": count, "residual": worst})
    return cases


def _suite_classical(args, rng):
    cases = []
    for trial in range(args.trials):
        u = haar_unitary(args.modes, rng).matrix
        cache = ProbabilityCache(u)
        worst_comp = worst_conv = 0.0
        for n in range(args.max_total + 1):
            for k in compositions(n, args.modes):
                for i in compositions(n, args.modes):
                    worst_comp = max(worst_comp, verify_classical_complementarity(u, k, i, cache).residual)
                    for split in dominated(k):
                        worst_conv = max(worst_conv, verify_classical_convolution(u, k, i, split).residual)
        cases.append({"trial": trial, "complementarity": worst_comp, "convolution": worst_conv,
                      "residual": max(worst_comp, worst_conv)})
    return cases


def _suite_covariance(args, rng):
    cases = []
    for trial in range(args.trials):
        u = haar_unitary(args.modes, rng).matrix
        s = random_gram(args.modes, rng).matrix
        worst_rule = worst_closed = 0.0
        for n in range(args.modes + 1):
            for k in compositions(n, args.modes):
                if max(k, default=0) > 1:
                    continue
                worst_rule = max(worst_rule, verify_covariance_sum_rule(u, s, k).residual)
                for sp in (Species.BOSON, Species.FERMION):
                    diff = covariance_closed_form(u, s, k, sp).entries - covariance_brute_force(u, s, k, sp).entries
                    worst_closed = max(worst_closed, float(np.abs(diff).max()) if diff.size else 0.0)
        cases.append({"trial": trial, "sum_rule": worst_rule, "closed_vs_brute": worst_closed,
                      "residual": max(worst_rule, worst_closed)})
    return cases


def _suite_muir(args, rng):
    cases = []
    for trial in range(args.trials):
        u = haar_unitary(args.modes, rng).matrix
        x = rng.uniform(0.0, 0.9, args.modes)
        for n in range(args.max_total + 1):
            for j in compositions(n, args.modes):
                rep = verify_muir(u, x, j)
                cases.append({"trial": trial, "j": list(j), "thermal": rep.residual, "raw": rep.raw_residual,
                              "residual": max(rep.residual, rep.raw_residual)})
    return cases


def _suite_macmahon(args, rng):
    cases = []
    m = args.modes
    for trial in range(args.trials):
        a = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
        a *= MACMAHON_NORM / np.linalg.norm(a, 2)
        rep = verify_macmahon(a, [MACMAHON_CAPS] * m, MACMAHON_RADIUS)
        minors = verify_principal_minors(a)
        perm_res = max(rep["perm"].values())
        det_res = max(rep["det"].values())
        cases.append({"trial": trial, "perm": perm_res, "det": det_res, "principal_minors": max(minors.values()),
                      "residual": max(perm_res, det_res, *minors.values())})
    return cases


SUITES = {
    "complementarity": _suite_complementarity,
    "classical": _suite_classical,
    "covariance": _suite_covariance,
    "muir": _suite_muir,
    "macmahon": _suite_macmahon,
}


def cmd_verify(args) -> int:
    if args.modes < 1 or args.trials < 1 or args.max_total < 0:
        raise UsageError("--modes and --trials must be >= 1, --max-total >= 0")
    if args.suite in ("complementarity", "classical") and args.max_total > 4:
        raise UsageError("--max-total is limited to 4 for convolution sweeps")
    if args.suite == "covariance" and args.modes > 5:
        raise UsageError("--modes is limited to 5 for the covariance suite")
    if args.suite == "macmahon" and args.modes > 4:
        raise UsageError("--modes is limited to 4 for the macmahon suite")
    tol = _tolerance(args, args.suite)
    rng = np.random.default_rng(args.seed)
    start = time.perf_counter()
    cases = SUITES[args.suite](args, rng)
    wall_ms = (time.perf_counter() - start) * 1e3
    max_res = max((c["residual"] for c in cases), default=0.0)
    report = {
        "suite": args.suite,
        "modes": args.modes,
        "max_total": args.max_total,
        "trials": args.trials,
        "tolerance": tol,
        "cases": cases,
        "max_residual": max_res,
        "passed": max_res <= tol,
        "wall_ms": wall_ms,
    }
    header = list(cases[0].keys()) if cases else ["residual"]
    rows = [[";".join(map(str, c[h])) if isinstance(c[h], list) else c[h] for h in header] for c in cases]
    emit_report(args, report, header, rows)
    return EXIT_OK if report["passed"] else EXIT_FAIL


def cmd_haar(args) -> int:
    tol = _tolerance(args, "haar")
    if not 0.0 <= args.overlap <= 1.0:
        raise UsageError("overlap must lie in [0, 1]")
    start = time.perf_counter()
    est = haar_monte_carlo(args.quantity, args.overlap, args.samples, args.seed)
    report = {
        "suite": "haar",
        "quantity": est.quantity,
        "overlap": args.overlap,
        "samples": est.samples,
        "mean": est.mean,
        "std_error": est.std_error,
        "exact": est.exact,
        "z_score": est.z_score,
        "complementarity_residual": est.complementarity_residual,
        "tolerance": tol,
        "passed": abs(est.z_score) <= tol,
        "wall_ms": (time.perf_counter() - start) * 1e3,
    }
    emit_report(args, report)
    return EXIT_OK if report["passed"] else EXIT_FAIL


def cmd_distribution(args) -> int:
    tol = _tolerance(args, "distribution")
    u = UnitaryMatrix(load_matrix(args.unitary)).matrix
    m = u.shape[0]
    k = parse_occupation(args.input)
    if len(k) != m:
        raise UsageError(f"input has {len(k)} modes, the unitary has {m}")
    s = _gram_arg(args, m)
    species = list(Species) if args.species == "all" else [Species.parse(args.species)]
    dists = {sp: full_distribution(u, s, k, sp) for sp in species}
    short = {Species.BOSON: "B", Species.FERMION: "F", Species.CLASSICAL: "P"}
    header = [f"n{a}" for a in range(m)] + [short[sp] for sp in species]
    outs = list(dists[species[0]].probabilities.keys())
    rows = [list(out) + [dists[sp][out] for sp in species] for out in outs]
    totals = [dists[sp].total() for sp in species]
    rows.append(["total"] + [""] * (m - 1) + totals)
    defect = max(dists[sp].normalization_defect for sp in species)
    report = {
        "suite": "distribution",
        "input": list(k),
        "tolerance": tol,
        "cases": [dict(zip(header, r)) for r in rows],
        "max_residual": defect,
        "passed": defect <= tol,
    }
    fmt_args = argparse.Namespace(**{**vars(args), "format": args.format or "csv"})
    emit_report(fmt_args, report, header, rows)
    return EXIT_OK if report["passed"] else EXIT_FAIL


def cmd_qfi(args) -> int:
    tol = _tolerance(args, "qfi")
    k = parse_occupation(args.input)
    u = UnitaryMatrix(load_matrix(args.unitary)).matrix if args.unitary else unbiased_unitary(len(k))
    m = u.shape[0]
    if len(k) != m:
        raise UsageError(f"input has {len(k)} modes, the unitary has {m}")
    if max(k, default=0) > 1:
        raise UsageError("qfi needs a binary input")
    if args.measurements < 1:
        raise UsageError("--measurements must be >= 1")
    short = {Species.BOSON: "B", Species.FERMION: "F", Species.CLASSICAL: "cl"}
    header = ["x"]
    for tag in ("qfi", "floor"):
        header += [f"{tag}_{short[sp]}_{a}" for sp in Species for a in range(m)]
    header.append("sum_rule_residual")
    rows = []
    for x in parse_grid(args.gram_sweep):
        s = equal_overlap_gram(m, x).matrix
        reps = {sp: qfi_report(u, s, k, sp, args.measurements) for sp in Species}
        row = [float(x)]
        row += [v for sp in Species for v in reps[sp].per_mode_qfi]
        row += [v for sp in Species for v in reps[sp].cramer_rao_floor]
        qb, qf, qc = (reps[sp].per_mode_qfi for sp in (Species.BOSON, Species.FERMION, Species.CLASSICAL))
        row.append(float(np.abs(qb + qf - 2.0 * qc).max()) if m else 0.0)
        rows.append(row)
    max_res = max(r[-1] for r in rows)
    report = {
        "suite": "qfi",
        "input": list(k),
        "measurements": args.measurements,
        "tolerance": tol,
        "cases": [dict(zip(header, r)) for r in rows],
        "max_residual": max_res,
        "passed": max_res <= tol,
    }
    fmt_args = argparse.Namespace(**{**vars(args), "format": args.format or "csv"})
    emit_report(fmt_args, report, header, rows)
    return EXIT_OK if report["passed"] else EXIT_FAIL


# ---------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="RNG seed (recorded in every report)")
    common.add_argument("--tolerance", type=float, default=None, help="override the pass/fail tolerance")
    common.add_argument("--out", default=None, help="output path (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default=None, help="output format")

    parser = argparse.ArgumentParser(prog="bfcomp", description="Boson/fermion complementarity toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("hom", parents=[common], help="two-particle beam-splitter scan over overlaps")
    p.add_argument("--overlap-grid", default="0:1:11")
    p.add_argument("--theta", type=float, default=math.pi / 4, help="beam-splitter angle (pi/4 is 50:50)")
    p.set_defaults(func=cmd_hom)

    p = sub.add_parser("verify", parents=[common], help="run an identity verification suite")
    p.add_argument("--suite", choices=sorted(SUITES), required=True)
    p.add_argument("--modes", type=int, default=3)
    p.add_argument("--max-total", type=int, default=3)
    p.add_argument("--trials", type=int, default=5)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("haar", parents=[common], help="Monte Carlo Haar average against the exact value")
    p.add_argument("--quantity", choices=sorted(QUANTITIES), required=True)
    p.add_argument("--overlap", type=float, default=0.0)
    p.add_argument("--samples", type=int, default=100_000)
    p.set_defaults(func=cmd_haar)

    p = sub.add_parser("distribution", parents=[common], help="full output distributions")
    p.add_argument("--unitary", required=True, help="MatrixFile JSON")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--gram", help="MatrixFile JSON")
    group.add_argument("--overlap", type=float, help="equal pairwise overlap shorthand")
    p.add_argument("--input", required=True, help='occupation such as "1,1,0"')
    p.add_argument("--species", choices=("all", "boson", "fermion", "classical"), default="all")
    p.set_defaults(func=cmd_distribution)

    p = sub.add_parser("qfi", parents=[common], help="per-mode quantum Fisher information over an overlap sweep")
    p.add_argument("--unitary", help="MatrixFile JSON (default: unbiased Fourier matrix)")
    p.add_argument("--gram-sweep", default="0:1:11")
    p.add_argument("--input", required=True)
    p.add_argument("--measurements", type=int, default=1)
    p.set_defaults(func=cmd_qfi)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, BfcompError, ValueError) as exc:
        print(f"bfcomp {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
