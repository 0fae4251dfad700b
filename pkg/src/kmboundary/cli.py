"""Command-line driver: ``kmboundary {analyze,boundary,check,verify-residue}``.

Reports are JSON on stdout (or ``--out``). Rationals are written as ``"p/q"``
strings and floats are rounded to the configured number of significant
digits, so the same configuration always yields byte-identical output.

Exit status: 0 when every asserted identity holds, 1 when a check fails,
2 on configuration or mathematical input errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

from . import __version__
from .boundary import CuspContribution, GeneratingSeriesInput, assemble, z_minus_type_ii, z_minus_type_iii
from .config import JobConfig, load_config
from .degeneration import TRIVIAL, TYPE_II, DegenerationData, degenerate, invariants
from .errors import ConfigError, KMBoundaryError
from .orbitlab import orbit_model, residue_slope
from .quadlattice import discriminant_group
from .thetaforms import frac_str

SCHEMA = 1
THREADS_ENV = "KMB_THREADS"


def _round(x: float, digits: int):
    return float(f"{x:.{digits}g}")


def _threads() -> int:
    raw = os.environ.get(THREADS_ENV, "")
    try:
        return max(1, int(raw))
    except ValueError:
        return min(4, os.cpu_count() or 1)


def _map_cusps(fn, cusps):
    """Run fn per cusp in a thread pool; results come back in label order."""
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        results = list(pool.map(fn, cusps))
    return sorted(results, key=lambda r: r[0])


def _degenerations(job: JobConfig):
    def work(c):
        return c.label, c, degenerate(job.lattice, c.T)

    return _map_cusps(work, job.cusps)


def _analyze_one(job: JobConfig, c, D: DegenerationData) -> tuple[dict, list]:
    warnings = []
    entry = {
        "label": c.label,
        "type": D.kind,
        "filtration_ranks": [len(W) for W in D.W],
        "cover_degree": D.cover_degree,
        "hypothesis": {"unipotent": D.cover_degree == 1, "nontrivial": D.kind != TRIVIAL},
    }
    if D.cover_degree != 1:
        warnings.append(f"{c.label}: monodromy is quasi-unipotent; passed to the degree {D.cover_degree} cover")
    if D.kind == TRIVIAL:
        warnings.append(f"{c.label}: trivial monodromy, variation is extendable across puncture")
        return entry, warnings
    inv = invariants(D)
    names = ("r1", "disc31", "degQ3") if D.kind == TYPE_II else ("r2", "disc40", "Vol4")
    entry.update(dict(zip(names, (inv.r, inv.disc, inv.size))))
    entry["prefactor_squared"] = frac_str(inv.prefactor_squared)
    entry["checks"] = dict(sorted(inv.checks.items()))
    return entry, warnings


def cmd_analyze(job: JobConfig) -> tuple[dict, bool]:
    cusps, warnings = [], []
    for _, c, D in _degenerations(job):
        entry, w = _analyze_one(job, c, D)
        cusps.append(entry)
        warnings += w
    A = discriminant_group(job.lattice)
    report = {
        "lattice": {"rank": job.lattice.rank, "det": job.lattice.det, "discriminant_orders": list(A.orders)},
        "cusps": cusps,
        "warnings": warnings,
    }
    ok = all(all(e.get("checks", {}).values()) for e in cusps)
    return report, ok


def _boundary_terms(job: JobConfig) -> tuple[list[CuspContribution], list[str]]:
    warnings = []

    def work(item):
        label, c, D = item
        if D.kind == TRIVIAL:
            return label, None
        if D.kind == TYPE_II:
            return label, z_minus_type_ii(D, job.m_max, label)
        return label, z_minus_type_iii(D, job.m_max, job.w_max, label, tol=1e-12, y_min=_y_min(job))

    out = []
    for label, contrib in _map_cusps(work, _degenerations(job)):
        if contrib is None:
            warnings.append(f"{label}: trivial monodromy, variation is extendable across puncture")
        else:
            out.append(contrib)
    return out, warnings


def _y_min(job: JobConfig) -> float:
    ys = [t.imag for t in job.tau_samples] or [1.0]
    # S maps τ to -1/τ, so both heights matter
    ys += [t.imag / abs(t) ** 2 for t in job.tau_samples]
    return min(0.5, min(ys))


def cmd_boundary(job: JobConfig) -> tuple[dict, bool]:
    terms, warnings = _boundary_terms(job)
    cusps = []
    for t in terms:
        entry = {"label": t.label, "type": t.kind, "provenance": _jsonable(t.provenance), "z_minus": t.expansion.to_report()}
        if t.exact_table:
            entry["inv_4pi_y_multiples"] = [
                {"m": frac_str(m), "class": c, "value": frac_str(v)} for (m, c), v in sorted(t.exact_table.items(), key=lambda kv: (kv[0][1], kv[0][0]))
            ]
        cusps.append(entry)
    return {"m_max": frac_str(job.m_max), "cusps": cusps, "warnings": warnings}, True


def cmd_check(job: JobConfig) -> tuple[dict, bool]:
    terms, warnings = _boundary_terms(job)
    weight = Fraction(job.lattice.rank, 2)
    if job.zplus is None:
        zplus = None
        label = "Z+ = 0 (no generating-series input given)"
    else:
        dim = discriminant_group(job.lattice).size
        zplus = GeneratingSeriesInput(dim, {(m, c): v for m, c, v in job.zplus}).expansion(weight, job.m_max)
        label = "Z+ + sum of Z-"
    series = assemble(zplus, terms, job.lattice)
    residuals = series.residuals(job.tau_samples, ("S", "T"))
    passed = all(r < job.tol for r in residuals.values())
    report = {
        "series": label,
        "parts": [name for name, _ in series.parts],
        "tau_samples": [[t.real, t.imag] for t in job.tau_samples],
        "tol": job.tol,
        "residuals": residuals,
        "passed": passed,
        "warnings": warnings,
    }
    return report, passed


def cmd_verify_residue(job: JobConfig) -> tuple[dict, bool]:
    opts = job.residue
    rows, warnings = [], []

    def work(item):
        label, c, D = item
        if D.kind == TRIVIAL:
            return label, None
        if c.e21 is None and c.e22 is None:
            return label, "no orbit model"
        model = orbit_model(D, e21=c.e21, e22=c.e22)
        return label, residue_slope(model, opts.y, opts.m, opts.cls, opts.Ys)

    passed = True
    for label, res in _map_cusps(work, _degenerations(job)):
        if res is None:
            warnings.append(f"{label}: trivial monodromy, variation is extendable across puncture")
            continue
        if isinstance(res, str):
            warnings.append(f"{label}: skipped, {res}")
            continue
        ok = res.rel_error < opts.tol
        passed &= ok
        rows.append({"label": label, **res.to_report(), "tol": opts.tol, "passed": ok})
    return {"residue": rows, "passed": passed, "warnings": warnings}, passed


COMMANDS = {
    "analyze": cmd_analyze,
    "boundary": cmd_boundary,
    "check": cmd_check,
    "verify-residue": cmd_verify_residue,
}


def _jsonable(x):
    if isinstance(x, Fraction):
        return frac_str(x)
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def _round_floats(x, digits: int):
    if isinstance(x, float):
        return _round(x, digits)
    if isinstance(x, dict):
        return {k: _round_floats(v, digits) for k, v in x.items()}
    if isinstance(x, list):
        return [_round_floats(v, digits) for v in x]
    return x


def _parse_tau(text: str) -> complex:
    try:
        x, y = (float(p) for p in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected x,y but got {text!r}") from exc
    if y <= 0:
        raise argparse.ArgumentTypeError("tau needs y > 0")
    return complex(x, y)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kmboundary", description="Boundary terms of Kudla-Millson generating series at cusps.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, help="YAML job file")
        s.add_argument("--m-max", type=Fraction, default=None, help="truncation order for q-expansions")
        s.add_argument("--tol", type=float, default=None, help="tolerance for asserted identities")
        s.add_argument("--tau", type=_parse_tau, action="append", default=None, help="sample point x,y (repeatable)")
        s.add_argument("--out", default=None, help="write the report here instead of stdout")
    return p


def run(argv=None) -> tuple[dict | None, int]:
    args = build_parser().parse_args(argv)
    try:
        job = load_config(args.config)
        if args.m_max is not None:
            job.m_max = args.m_max
        if args.tol is not None:
            job.tol = args.tol
        if args.tau:
            job.tau_samples = args.tau
        body, ok = COMMANDS[args.command](job)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return None, 2
    except (KMBoundaryError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return None, 2
    report = {"schema": SCHEMA, "command": args.command, "precision": job.precision, **body}
    report = _round_floats(_jsonable(report), job.precision)
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return report, 0 if ok else 1


def main(argv=None) -> int:
    return run(argv)[1]


if __name__ == "__main__":
    sys.exit(main())
