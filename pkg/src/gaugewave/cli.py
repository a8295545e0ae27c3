"""Batch command line: evolve runs, invariant check suites, norm reports.

Users are scripts and CI.  Every command reads its scenario from a config
file (see :mod:`gaugewave.config`), writes machine-readable artifacts, and
communicates through its exit code:

====  =========================================================
code  meaning
====  =========================================================
0     clean completion, every hard assertion passed
1     config error, unknown suite, or unreadable input file
2     blow-up detected during time stepping
3     a check suite ran but a hard assertion failed
====  =========================================================

``GAUGEWAVE_THREADS`` caps the BLAS/FFT thread pools; it is applied before
numpy is first imported, so it only takes effect through this entry point
(one command = one process).
"""
import os

_threads = os.environ.get("GAUGEWAVE_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                 "VECLIB_MAXIMUM_THREADS", "NUMEXPR_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

import argparse
import json
import sys

import numpy as np

from . import analysis, evolve, mcsh, mkg
from .config import ConfigError, RunConfig, load_config, write_state_files
from .gauge import (GaugeFunction, coulomb_fix, gauge_transform_mcsh,
                    gauge_transform_mkg, gauss_residual_mcsh, gauss_residual_mkg,
                    make_admissible_mcsh, make_admissible_mkg,
                    random_gauge_function)
from .snapshots import read_field
from .spectral import (VectorField, check_current_projection_identity,
                       check_gradient_coupling_identity, divergence,
                       helmholtz_split, l2_norm, zero_mean)

SUITES = ("identities", "gauge", "bounds", "weights", "crossval")


def _jfloat(x):
    x = float(x)
    return x if np.isfinite(x) else None


def _emit(report: dict, outdir: str, filename: str) -> None:
    text = json.dumps(report, indent=2, sort_keys=True)
    print(text)
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, filename), "w") as fh:
        fh.write(text + "\n")


def _transform(state, chi: GaugeFunction, p):
    if isinstance(state, mkg.MkgState):
        return gauge_transform_mkg(state, chi)
    return gauge_transform_mcsh(state, chi, p)


def _residual_l2(state, p) -> float:
    if isinstance(state, mkg.MkgState):
        return l2_norm(gauss_residual_mkg(state))
    return l2_norm(gauss_residual_mcsh(state, p))


def _suite_seeds(cfg: RunConfig, count: int) -> range:
    base = cfg.data["seed"] if cfg.data["kind"] == "random" else 0
    return range(base, base + count)


def _draw_state(cfg: RunConfig, seed: int):
    amplitude = cfg.data.get("amplitude", 0.5)
    if cfg.system == "mkg":
        return make_admissible_mkg(cfg.grid, seed=seed, amplitude=amplitude)
    return make_admissible_mcsh(cfg.grid, seed=seed, p=cfg.p, amplitude=amplitude)


# ---------------------------------------------------------------------------
# check suites
# ---------------------------------------------------------------------------


def _suite_identities(cfg: RunConfig):
    """Bilinear null-form identities: calibration stable, residual tiny."""
    if cfg.grid.dim != 3:
        raise ValueError("the identities suite checks 3D null forms; "
                         "point it at an mkg config")
    rows = []
    alphas = {"gradient-coupling": [], "current-projection": []}
    for seed in _suite_seeds(cfg, 8):
        state = _draw_state(cfg, seed)
        A_df, _ = helmholtz_split(state.A)
        A_df = VectorField(tuple(zero_mean(c) for c in A_df))
        for rep in (check_gradient_coupling_identity(A_df, state.phi),
                    check_current_projection_identity(state.phi)):
            alphas[rep.name].append(rep.alpha)
            rows.append({"seed": seed, "name": rep.name, "alpha": rep.alpha,
                         "residual": rep.residual,
                         "raw_residual": rep.raw_residual})
    spread = {name: float(np.ptp(vals)) for name, vals in alphas.items()}
    passed = (all(r["residual"] <= 1e-10 for r in rows)
              and all(v <= 1e-10 for v in spread.values()))
    return passed, {"alpha_spread": spread,
                    "alpha_mean": {k: float(np.mean(v)) for k, v in alphas.items()},
                    "checks": rows}


def _suite_gauge(cfg: RunConfig):
    """Residual gauge freedom: fixing, roundtrips, observable invariance."""
    rows = []
    for seed in _suite_seeds(cfg, 5):
        state = _draw_state(cfg, seed)
        rng = np.random.default_rng(seed + 1)
        chi = random_gauge_function(cfg.grid, rng, amplitude=0.1)
        fixed, fix_chi = coulomb_fix(state.A)
        refixed, _ = coulomb_fix(fixed)
        inv = GaugeFunction(chi.chi * (-1.0))
        back = _transform(_transform(state, chi, cfg.p), inv, cfg.p)
        roundtrip = max(l2_norm(back.A - state.A), l2_norm(back.phi - state.phi),
                        l2_norm(back.dA - state.dA), l2_norm(back.dphi - state.dphi))
        moved = _transform(state, chi, cfg.p)
        rows.append({
            "seed": seed,
            "coulomb_div": l2_norm(divergence(fixed)),
            "coulomb_idempotence": max(l2_norm(a - b) for a, b in zip(refixed, fixed)),
            "roundtrip": roundtrip,
            "residual_shift": abs(_residual_l2(moved, cfg.p) - _residual_l2(state, cfg.p)),
            "observable_defect": evolve.cross_validate(state, moved, cfg.p).max_defect,
        })
    passed = all(r["coulomb_div"] <= 1e-12 and r["coulomb_idempotence"] <= 1e-12
                 and r["roundtrip"] <= 1e-12 and r["residual_shift"] <= 1e-10
                 and r["observable_defect"] <= 1e-9 for r in rows)
    return passed, {"checks": rows}


def _suite_bounds(cfg: RunConfig):
    """Evolve the configured scenario and check every growth-bound slack."""
    record = evolve.run(cfg.initial_state(), cfg.system, cfg.integrator, cfg.p)
    reports = analysis.growth_bound_check(record, cfg.system)
    worst = {}
    for rep in reports:
        cur = worst.get(rep.name)
        if cur is None or rep.slack < cur:
            worst[rep.name] = rep.slack
    passed = all(slack >= -1e-9 for slack in worst.values())
    return passed, {"rows": len(record.rows),
                    "worst_slack": {k: _jfloat(v) for k, v in worst.items()}}


def _suite_weights(cfg: RunConfig):
    """Exhaustive dispersive-weight comparisons on the space-time lattice."""
    rows = []
    for s in (0.0, 1.0):
        for b in (-1.0, -0.5, 0.0, 0.5, 1.0, 2.0):
            rep = analysis.weight_inequality_check(s=s, b=b, grid=cfg.grid, n_t=64)
            tau, xi, sign = rep.worst_node
            rows.append({"s": s, "b": b, "passed": bool(rep),
                         "worst_margin": rep.worst_margin,
                         "worst_node": {"tau": tau, "xi": xi, "sign": sign}})
    return all(r["passed"] for r in rows), {"n_t": 64, "checks": rows}


def _suite_crossval(cfg: RunConfig):
    """Raw vs decomposed twin runs at dt and dt/2: defects small and shrinking."""
    state = cfg.initial_state()
    defects = []
    for dt in (cfg.integrator.dt, 0.5 * cfg.integrator.dt):
        finals = []
        for formulation in ("raw", "decomposed"):
            icfg = evolve.IntegratorConfig(
                dt=dt, t_final=cfg.integrator.t_final, scheme=cfg.integrator.scheme,
                snapshot_every=10 ** 9, formulation=formulation)
            finals.append(evolve.run(state, cfg.system, icfg, cfg.p).final_state)
        defects.append(evolve.cross_validate(finals[0], finals[1], cfg.p).max_defect)
    order = float(np.log2(defects[0] / defects[1])) if min(defects) > 0 else None
    passed = defects[1] <= defects[0] / 2.8 + 1e-10
    return passed, {"dt": cfg.integrator.dt, "defect_dt": defects[0],
                    "defect_half_dt": defects[1], "order": order}


_SUITE_FUNCS = {
    "identities": _suite_identities,
    "gauge": _suite_gauge,
    "bounds": _suite_bounds,
    "weights": _suite_weights,
    "crossval": _suite_crossval,
}


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_evolve(config_path: str) -> int:
    try:
        cfg = load_config(config_path)
        state = cfg.initial_state()
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    os.makedirs(cfg.outdir, exist_ok=True)
    code = 0
    try:
        record = evolve.run(state, cfg.system, cfg.integrator, cfg.p)
    except evolve.BlowupError as exc:
        print(f"blow-up: {exc.diagnostic}", file=sys.stderr)
        record = exc.record
        code = 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if "csv" in cfg.formats:
        path = os.path.join(cfg.outdir, "run.csv")
        record.write_csv(path)
        print(path)
    if "json" in cfg.formats:
        path = os.path.join(cfg.outdir, "run.jsonl")
        record.write_json_lines(path)
        print(path)
    if record.final_state is not None:
        for path in write_state_files(record.final_state,
                                      os.path.join(cfg.outdir, "final")):
            print(path)
    return code


def cmd_check(suite: str, config_path: str) -> int:
    if suite not in SUITES:
        print(f"error: unknown suite {suite!r}; choose from {', '.join(SUITES)}",
              file=sys.stderr)
        return 1
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        passed, body = _SUITE_FUNCS[suite](cfg)
    except evolve.BlowupError as exc:
        print(f"blow-up: {exc.diagnostic}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    report = {"suite": suite, "system": cfg.system, "passed": passed}
    report.update(body)
    _emit(report, cfg.outdir, f"check_{suite}.json")
    if not passed:
        print(f"check failed: {suite}", file=sys.stderr)
        return 3
    return 0


def cmd_norms(snapshot_path: str, s_values, b_values) -> int:
    try:
        field, name = read_field(snapshot_path)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    g = field.grid
    report = {
        "snapshot": snapshot_path,
        "field": name,
        "grid": {"dim": g.dim, "n": g.n, "box_length": g.box_length},
        "l2": l2_norm(field),
        "reports": [{"s": s, "b": b, "sobolev": analysis.sobolev_norm(field, s)}
                    for s in s_values for b in b_values],
    }
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0


def cmd_report(csv_path: str, outdir) -> int:
    from . import report as report_mod
    try:
        paths = report_mod.render_record_figures(csv_path, outdir)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in paths:
        print(path)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="gaugewave",
        description="Pseudospectral gauge-field evolutions and invariant checks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_evolve = sub.add_parser("evolve", help="run one configured scenario")
    p_evolve.add_argument("config")

    p_check = sub.add_parser("check", help="run one invariant suite")
    p_check.add_argument("suite")
    p_check.add_argument("config")

    p_norms = sub.add_parser("norms", help="Sobolev norms of a field snapshot")
    p_norms.add_argument("snapshot")
    p_norms.add_argument("--s", nargs="+", type=float, required=True)
    p_norms.add_argument("--b", nargs="+", type=float, required=True)

    p_report = sub.add_parser("report", help="render figures from a run CSV")
    p_report.add_argument("csv")
    p_report.add_argument("--outdir", default=None)

    args = parser.parse_args(argv)
    if args.command == "evolve":
        return cmd_evolve(args.config)
    if args.command == "check":
        return cmd_check(args.suite, args.config)
    if args.command == "norms":
        return cmd_norms(args.snapshot, args.s, args.b)
    return cmd_report(args.csv, args.outdir)


if __name__ == "__main__":
    sys.exit(main())
