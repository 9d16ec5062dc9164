"""Command-line front end: ``phmap <command> [options]``.

Every command writes its data files plus ``<out>.manifest.json`` recording
the arguments and build. ``phmap rerun MANIFEST`` repeats the run and checks
that every data file is byte-identical.

Exit codes: 0 ok, 2 usage or parameter error, 3 numerical failure,
4 required event not found.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import subprocess
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .critpoints import critical_points, infinity_angle
from .exceptions import EventNotFoundError, InvalidInputError, PHMapError, StiffnessError, SingularDenominatorError
from .integrate import IntegratorConfig, integrate, integrate_backward_from_saddle
from .model import Params, PlanarState, PoincareState, RadialPoint
from .solutions import (
    alpha0,
    asymptotic_checks,
    canonical_global,
    classify_solution,
    minimizer,
    oscillation_analysis,
    profile_from_state,
    variational_minimizer,
)

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_EVENT = 0, 2, 3, 4

P_FIG12 = 1 + math.sqrt(3) / 3
FIGURE_DEFAULT_P = {1: P_FIG12, 2: P_FIG12, 3: 3.0, 4: 2.1, 5: 2.0, 6: 2.0}


# ---------------------------------------------------------------------------
# output helpers

def _fmt(x):
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _git_describe():
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"],
                             cwd=Path(__file__).resolve().parent, capture_output=True,
                             text=True, timeout=5)
        return out.stdout.strip() or "unknown"
    except (OSError, subprocess.SubprocessError):
        return "unknown"


def _now():
    return datetime.now(timezone.utc).isoformat()


def _stem(out, default):
    p = Path(out) if out else Path(default)
    return p.with_suffix("") if p.suffix in (".csv", ".json") else p


def _threads():
    raw = os.environ.get("PHMAP_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = os.cpu_count() or 1
    return max(1, n)


# ---------------------------------------------------------------------------
# commands; each returns (report dict, list of written data files)

def _config(args, t_max):
    return IntegratorConfig(rtol=args.rtol, atol=args.atol, t_max=t_max)


def cmd_solve(args):
    stem = _stem(args.out, "solve")
    radial = args.h0 is not None or args.dh0 is not None
    if radial:
        if args.h0 is None or args.dh0 is None:
            raise InvalidInputError("radial runs need both --h0 and --dh0")
        r_end = args.rmax if args.rmax is not None else 100.0
        traj = integrate(args.p, "radial", RadialPoint(args.r0, args.h0, args.dh0), _config(args, r_end))
        rows = [(t, a, b) for t, (a, b) in zip(traj.t, traj.y)]
        csv = write_csv(stem.with_suffix(".csv"), ("r", "h", "dh"), rows)
    else:
        if args.w0 is None or args.k0 is None:
            raise InvalidInputError("phase-plane runs need --w0 and --k0 (or --h0/--dh0 for radial)")
        t_end = args.tmax if args.tmax is not None else 50.0
        traj = integrate(args.p, args.direction, PlanarState(args.w0, args.k0), _config(args, t_end))
        w, k = traj.planar()
        rows = [(t, a, b, c) for t, a, b, c in zip(traj.t, w, k, traj.charts)]
        csv = write_csv(stem.with_suffix(".csv"), ("t", "w", "k", "chart"), rows)
    report = {"termination": traj.termination, "samples": len(traj),
              "switches": [{"t": s.t, "to": s.chart_after} for s in traj.switches]}
    js = write_json(stem.with_suffix(".json"), report)
    return report, [csv, js]


def cmd_minimize(args):
    stem = _stem(args.out, "minimize")
    prm = Params(args.p, args.l)
    prof = minimizer(prm, n_samples=args.n_samples, r_search=args.r_search)
    report = {"p": args.p, "l": args.l, "energy": prof.metadata["energy"], "r_star": prof.metadata["r_star"],
              "crossing_slope": prof.metadata["crossing_slope"]}
    if "reflection" in prof.metadata:
        report["reflection"] = prof.metadata["reflection"]
    if args.oracle:
        var = variational_minimizer(prm, grid_n=args.grid_n)
        report["oracle_distance"] = float(np.max(np.abs(prof(var.r) - var.h)))
        report["oracle_energy"] = var.metadata["discrete_energy"]
        report["oracle_iterations"] = var.metadata["iterations"]
    csv = write_csv(stem.with_suffix(".csv"), ("r", "h", "dh"), zip(prof.r, prof.h, prof.dh))
    js = write_json(stem.with_suffix(".json"), report)
    return report, [csv, js]


def cmd_critical_points(args):
    stem = _stem(args.out, "critical_points")
    systems = ("forward", "reversed") if args.system == "both" else (args.system,)
    reports = [r.to_dict() for s in systems for r in critical_points(args.p, s)]
    if args.format == "json":
        path = write_json(stem.with_suffix(".json"), reports)
    else:
        rows = []
        for r in reports:
            where = r["angle_or_origin"]
            phi = "origin" if where == "origin" else _fmt(where["phi"])
            (a, b), (c, d) = r["eigenvalues"]
            rows.append((r["system"], r["label"], phi, r["class"], a, b, c, d))
        path = write_csv(stem.with_suffix(".csv"),
                         ("system", "label", "phi", "class", "eig1_re", "eig1_im", "eig2_re", "eig2_im"), rows)
    return {"points": len(reports)}, [path]


def _profile_rows(prof, r):
    h, dh = prof.evaluate(r)
    return zip(r, h, dh)


def _figure_profiles(fig, p):
    """(name, profile, global radii, zoom radii) for the profile figures."""
    if fig == 1:
        prof = canonical_global(p, 1e3, refine=False)
        return [("global", prof, np.geomspace(1e-3, 1e3, 3000)), ("zoom", prof, np.linspace(1e-3, 5.0, 1000))]
    if fig == 2:
        a0 = alpha0(p, study=False).value
        prof = profile_from_state(p, (0.0, -0.8 * a0), 1e-3, 1e3)
        lo, hi = prof.metadata["r_reached"]
        return [("global", prof, np.geomspace(lo, hi, 3000)),
                ("zoom", prof, np.linspace(lo, min(hi, 5.0), 1000))]
    if fig == 3:
        left = canonical_global(p, 1e3, refine=False)
        lo_r, hi_r = 1e-3, left.metadata["r_max"]
        slope = minimizer(p, math.pi / 2).metadata["crossing_slope"]
        right = profile_from_state(p, (0.0, -2.0 * slope), 1e-3, 1e3)
        lo, hi = right.metadata["r_reached"]
        return [("left", left, np.geomspace(lo_r, min(hi_r, float(left.r[-1])), 3000)),
                ("right", right, np.geomspace(lo, hi, 3000))]
    if fig == 4:
        # the spiral grows like r^((p-2)/2), so escape needs a wide radius range
        prof = profile_from_state(p, (0.0, -0.01), 1e-30, 1e80, n_samples=6000)
        lo, hi = prof.metadata["r_reached"]
        return [("global", prof, np.geomspace(lo, hi, 3000)),
                ("zoom", prof, np.geomspace(lo, 1.0, 1000))]
    raise InvalidInputError(f"unknown figure {fig}")


def _portrait_orbits(p, zoom):
    """Seeds for a reversed-system phase portrait: (name, kind, data)."""
    orbits = []
    if not zoom:
        for which in ("P1", "P1*", "P2", "P2*"):
            orbits.append((f"manifold-{which}", "saddle", which))
        radii = (0.5, 2.0, 8.0)
    else:
        radii = (0.05, 0.2, 0.6)
    for R in radii:
        for j in range(8):
            ang = 2 * math.pi * (j + 0.5) / 8
            orbits.append((f"seed-R{R:g}-{j}", "seed", (R * math.cos(ang), R * math.sin(ang))))
    return orbits


def _run_orbit(p, spec, horizon):
    name, kind, data = spec
    pieces = []
    try:
        if kind == "saddle":
            phi = infinity_angle(p, "reversed", data)
            trajs = [integrate_backward_from_saddle(p, "reversed", PoincareState(1.0, phi), (1.0, 0.0),
                                                    config=IntegratorConfig(t_max=horizon))]
        else:
            start = PlanarState(*data)
            trajs = [integrate(p, "reversed", start, IntegratorConfig(t_max=-horizon)),
                     integrate(p, "reversed", start, IntegratorConfig(t_max=horizon))]
    except (StiffnessError, SingularDenominatorError) as err:
        trajs = [err.trajectory] if err.trajectory is not None else []
    for tr in trajs:
        w, k = tr.planar()
        rho, phi = tr.poincare()
        order = np.argsort(tr.t)
        pieces.append([(name, tr.t[i], w[i], k[i], rho[i], phi[i], tr.charts[i]) for i in order])
    # backward piece first so rows run in increasing t
    rows = []
    for piece in pieces:
        rows.extend(piece)
    rows.sort(key=lambda row: row[1])
    return rows


def cmd_figures(args):
    fig = args.figure
    if fig not in FIGURE_DEFAULT_P:
        raise InvalidInputError(f"unknown figure id {fig}; expected 1-6")
    p = args.p if args.p is not None else FIGURE_DEFAULT_P[fig]
    out_dir = Path(args.out_dir)
    files = []
    report = {"figure": fig, "p": p}
    if fig <= 4:
        for name, prof, radii in _figure_profiles(fig, p):
            files.append(write_csv(out_dir / f"figure{fig}_{name}.csv", ("r", "h", "dh"),
                                   _profile_rows(prof, radii)))
            report[name] = {k: v for k, v in prof.metadata.items() if k not in ("critical_radii", "half_pi_crossings")}
    else:
        orbits = _portrait_orbits(p, zoom=(fig == 6))
        horizon = 30.0
        with ThreadPoolExecutor(max_workers=_threads()) as pool:
            results = list(pool.map(lambda s: _run_orbit(p, s, horizon), orbits))
        rows = [row for res in results for row in res]
        files.append(write_csv(out_dir / f"figure{fig}_portrait.csv",
                               ("orbit", "t", "w", "k", "rho", "phi", "chart"), rows))
        crit = [r.to_dict() for r in critical_points(p, "reversed")]
        files.append(write_json(out_dir / f"figure{fig}_critical_points.json", crit))
        report["orbits"] = [o[0] for o in orbits]
    files.append(write_json(out_dir / f"figure{fig}.json", report))
    return report, files


def cmd_oscillations(args):
    stem = _stem(args.out, "oscillations")
    prof = canonical_global(args.p, args.rmax, refine=False)
    rep = oscillation_analysis(prof)
    rows = [(n, r, h, kind, a) for n, (r, h, kind, a) in
            enumerate(zip(rep.critical_radii, rep.values, rep.kinds, rep.amplitudes))]
    csv = write_csv(stem.with_suffix(".csv"), ("n", "r_n", "h_n", "kind", "amplitude"), rows)
    report = {"p": args.p, "rmax": args.rmax, "n0": rep.n0, "max_index": rep.max_index,
              "max_at_first": rep.max_at_first, "alternating": rep.alternating,
              "gsign_index": rep.gsign_index, "decreasing_index": rep.decreasing_index,
              "h_at_rmax": float(prof(np.array([args.rmax]))[0])}
    js = write_json(stem.with_suffix(".json"), report)
    return report, [csv, js]


def cmd_classify(args):
    stem = _stem(args.out, "classify")
    if args.origin:
        initial = "P1"
    else:
        if args.w0 is None or args.k0 is None:
            raise InvalidInputError("classify needs --w0 and --k0, or --origin")
        initial = PlanarState(args.w0, args.k0)
    sc = classify_solution(args.p, initial, horizon=args.horizon, system=args.direction)
    report = {"label": sc.label, "evidence": sc.evidence}
    return report, [write_json(stem.with_suffix(".json"), report)]


def cmd_alpha0(args):
    stem = _stem(args.out, "alpha0")
    a = alpha0(args.p, offset=args.offset)
    report = {"p": a.p, "alpha0": a.value, "t0": a.t0, "offset": a.offset, "study": a.study}
    return report, [write_json(stem.with_suffix(".json"), report)]


def cmd_checks(args):
    stem = _stem(args.out, "checks")
    report = asymptotic_checks(args.p)
    return report, [write_json(stem.with_suffix(".json"), report)]


COMMANDS = {
    "solve": cmd_solve,
    "minimize": cmd_minimize,
    "critical-points": cmd_critical_points,
    "figures": cmd_figures,
    "oscillations": cmd_oscillations,
    "classify": cmd_classify,
    "alpha0": cmd_alpha0,
    "checks": cmd_checks,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="phmap", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, p_required=True):
        sp.add_argument("--p", type=float, required=p_required, help="exponent p > 1")
        sp.add_argument("--out", default=None, help="output path stem (CSV/JSON/manifest)")

    sp = sub.add_parser("solve", help="integrate a phase-plane or radial initial value problem")
    common(sp)
    sp.add_argument("--w0", type=float)
    sp.add_argument("--k0", type=float)
    sp.add_argument("--h0", type=float)
    sp.add_argument("--dh0", type=float)
    sp.add_argument("--r0", type=float, default=0.01)
    sp.add_argument("--direction", choices=("forward", "reversed"), default="reversed")
    sp.add_argument("--rmax", type=float)
    sp.add_argument("--tmax", type=float)
    sp.add_argument("--rtol", type=float, default=1e-10)
    sp.add_argument("--atol", type=float, default=1e-12)

    sp = sub.add_parser("minimize", help="minimizer with boundary value l")
    common(sp)
    sp.add_argument("--l", type=float, required=True)
    sp.add_argument("--oracle", action="store_true", help="also run the variational oracle")
    sp.add_argument("--grid-n", type=int, default=2000)
    sp.add_argument("--n-samples", type=int, default=1000)
    sp.add_argument("--r-search", type=float, default=1e8,
                    help="largest radius searched for the crossing h = l")

    sp = sub.add_parser("critical-points", help="critical points and linearisations")
    common(sp)
    sp.add_argument("--system", choices=("forward", "reversed", "both"), default="both")
    sp.add_argument("--format", choices=("json", "csv"), default="json")

    sp = sub.add_parser("figures", help="data behind the solution plots and phase portraits")
    sp.add_argument("--p", type=float, default=None)
    sp.add_argument("--figure", type=int, required=True)
    sp.add_argument("--out-dir", default=".")

    sp = sub.add_parser("oscillations", help="critical radii of the canonical solution")
    common(sp)
    sp.add_argument("--rmax", type=float, default=1e3)

    sp = sub.add_parser("classify", help="taxonomy label of a solution")
    common(sp)
    sp.add_argument("--w0", type=float)
    sp.add_argument("--k0", type=float)
    sp.add_argument("--origin", action="store_true", help="classify the solution leaving the origin like C r")
    sp.add_argument("--direction", choices=("forward", "reversed"), default="reversed")
    sp.add_argument("--horizon", type=float, default=200.0)

    sp = sub.add_parser("alpha0", help="critical slope alpha_0 (1 < p < 2)")
    common(sp)
    sp.add_argument("--offset", type=float, default=1e-8)

    sp = sub.add_parser("checks", help="asymptotic spot checks")
    common(sp)

    sp = sub.add_parser("rerun", help="repeat a run from its manifest and compare outputs")
    sp.add_argument("manifest")
    return parser


def _manifest_path(args, files):
    if args.command == "figures":
        return Path(args.out_dir) / f"figure{args.figure}.manifest.json"
    return Path(str(_stem(args.out, args.command.replace("-", "_")))).with_suffix(".manifest.json")


def _validate_common(args):
    if getattr(args, "p", None) is not None:
        Params(args.p)


def run(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "rerun":
        return _rerun(args.manifest)
    started = _now()
    _validate_common(args)
    report, files = COMMANDS[args.command](args)
    manifest = {
        "command": args.command,
        "argv": list(argv),
        "params": {k: v for k, v in vars(args).items() if k != "command"},
        "version": __version__,
        "git_describe": _git_describe(),
        "started": started,
        "finished": _now(),
        "outputs": [{"path": str(f), "sha256": _sha256(f)} for f in files],
    }
    write_json(_manifest_path(args, files), manifest)
    return report


def _rerun(manifest_path):
    try:
        manifest = json.loads(Path(manifest_path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise InvalidInputError(f"cannot read manifest {manifest_path}: {exc}") from None
    before = {o["path"]: o["sha256"] for o in manifest["outputs"]}
    run(manifest["argv"])
    mismatched = [p for p, h in before.items() if not Path(p).exists() or _sha256(p) != h]
    if mismatched:
        raise ReproducibilityError(f"outputs differ from manifest: {mismatched}")
    return {"reproduced": sorted(before)}


class ReproducibilityError(PHMapError):
    pass


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        run(argv)
    except SystemExit as exc:  # argparse usage errors
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    except EventNotFoundError as exc:
        print(f"phmap: {exc}", file=sys.stderr)
        return EXIT_EVENT
    except InvalidInputError as exc:
        print(f"phmap: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PHMapError as exc:
        print(f"phmap: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
