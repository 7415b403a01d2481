"""Command-line entry point.

Keeps BLAS single-threaded (set before numpy is first imported) so results
do not depend on the host's thread configuration; Monte Carlo parallelism
is handled explicitly via numba and the --threads knob.
"""

from __future__ import annotations

import os

for _var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, "1")

import argparse
import dataclasses
import json
import math
import sys
import time
from importlib import resources

import numpy as np

from . import __version__, activity, csvio, harness, lindblad, meanfield, trajectories
from .dicke import DickeSpace, spin_coherent_state
from .lindblad import PositivityError
from .meanfield import ModelParams

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_VIOLATION = 3

PRESETS = ("fig2", "fig3", "figS1", "smoke")


class UsageError(Exception):
    pass


def _out_dir(args) -> str:
    d = args.out_dir or os.environ.get("BTCKUR_OUTDIR") or "."
    os.makedirs(d, exist_ok=True)
    return d


def _load_config(args) -> dict:
    cfg = {}
    if getattr(args, "preset", None):
        if args.preset not in PRESETS:
            raise UsageError(f"unknown preset {args.preset!r}; choose from {PRESETS}")
        text = resources.files("btckur.presets").joinpath(args.preset + ".json").read_text()
        cfg.update(json.loads(text))
    if getattr(args, "config", None):
        with open(args.config) as f:
            cfg.update(json.load(f))
    for key in ("omega", "kappa", "tau", "n_traj", "seed", "theta", "phi",
                "n_spins", "checkpoint_spacing", "dt"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[_CONFIG_ALIASES.get(key, key)] = val
    return cfg


_CONFIG_ALIASES = {
    "omega": "omegas",
    "seed": "master_seed",
    "theta": "theta_bloch",
    "dt": "dt_mc",
}


def _experiment_config(kind: str, cfg: dict) -> harness.ExperimentConfig:
    known = {f.name for f in dataclasses.fields(harness.ExperimentConfig)}
    unknown = set(cfg) - known
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    cfg = dict(cfg)
    for key in ("omegas", "n_spins"):
        if key in cfg:
            v = cfg[key]
            cfg[key] = tuple(v) if isinstance(v, (list, tuple)) else (v,)
    try:
        return harness.ExperimentConfig(kind=kind, **cfg)
    except (TypeError, ValueError) as e:
        raise UsageError(str(e)) from e


def _set_threads(args) -> None:
    import numba

    want = args.threads or numba.config.NUMBA_NUM_THREADS
    numba.set_num_threads(max(1, min(want, numba.config.NUMBA_NUM_THREADS)))


def _manifest(path, config, outputs, seed, t0) -> None:
    entries = []
    for f in outputs:
        with open(f, "rb") as fh:
            import hashlib

            digest = hashlib.sha256(fh.read()).hexdigest()
        entries.append({"path": os.path.basename(f), "sha256": digest})
    csvio.write_manifest(path, {
        "version": __version__,
        "config": config,
        "master_seed": seed,
        "started": t0,
        "finished": time.strftime("%Y-%m-%dT%H:%M:%S"),
        "outputs": entries,
    })


def _parse_m0(text: str) -> np.ndarray:
    try:
        parts = [float(x) for x in text.split(",")]
    except ValueError as e:
        raise UsageError(f"bad --m0 {text!r}") from e
    if len(parts) != 3:
        raise UsageError("--m0 needs three comma-separated components")
    m = np.asarray(parts)
    if abs(float(m @ m) - 1.0) > 1e-9:
        raise UsageError(f"--m0 must lie on the unit sphere, got |m|^2 = {m @ m}")
    return m


def cmd_meanfield(args) -> int:
    m0 = _parse_m0(args.m0)
    out = os.path.join(_out_dir(args), "meanfield.csv")
    if args.dry_run:
        return EXIT_OK
    if args.tau == 0.0:
        csvio.write_csv(out, ["t", "mx", "my", "mz"],
                        [[0.0], [m0[0]], [m0[1]], [m0[2]]])
        return EXIT_OK
    p = ModelParams(omega=args.omega, kappa=args.kappa, n_spins=2,
                    tau=args.tau, dt=args.dt or 1e-3 / args.kappa)
    traj = meanfield.integrate_mean_field(m0, p)
    stride = max(1, int(round(args.sample_spacing / p.dt)))
    sl = slice(None, None, stride)
    csvio.write_csv(out, ["t", "mx", "my", "mz"],
                    [traj.times[sl], traj.m[sl, 0], traj.m[sl, 1], traj.m[sl, 2]])
    return EXIT_OK


def cmd_trajectories(args) -> int:
    if args.dry_run:
        return EXIT_OK
    p_probe = ModelParams(args.omega, args.kappa, args.n_spins, args.tau, 1e-3)
    dt = args.dt or trajectories.default_jump_dt(p_probe)
    p = ModelParams(args.omega, args.kappa, args.n_spins, args.tau, dt)
    ctx = lindblad.make_context(p)
    psi0 = spin_coherent_state(DickeSpace(args.n_spins), args.theta, args.phi)
    n_ck = int(round(args.tau / args.checkpoint_spacing))
    cks = args.checkpoint_spacing * np.arange(1, n_ck + 1)
    stats = trajectories.run_ensemble(
        psi0, ctx, args.tau, dt, cks, args.n_traj, args.seed
    )
    out = os.path.join(_out_dir(args), "trajectories.csv")
    csvio.write_csv(
        out,
        ["tau", "mean_nj", "var_nj", "se_mean", "se_var"],
        [stats.checkpoint_times, stats.mean, stats.var, stats.se_mean, stats.se_var],
    )
    return EXIT_OK


_BOUND_KEYS = ("a", "j0", "jub", "bmb", "bmbub")


def cmd_bounds(args) -> int:
    only = [s.strip().lower() for s in args.only.split(",")] if args.only else list(_BOUND_KEYS)
    bad = set(only) - set(_BOUND_KEYS)
    if bad:
        raise UsageError(f"unknown quantities {sorted(bad)}; choose from {_BOUND_KEYS}")
    want_exact = "j0" in only or "jub" in only
    if want_exact and args.n_spins > activity.EXACT_N_LIMIT:
        raise UsageError(
            f"exact J0/Jub needs a dense {args.n_spins + 1}^2-dimensional superoperator; "
            f"refusing above N = {activity.EXACT_N_LIMIT}. "
            "Request only mean-field quantities (--only bmb,bmbub) for large N."
        )
    if args.dry_run:
        return EXIT_OK

    p = ModelParams(args.omega, args.kappa, args.n_spins, args.tau, 1e-3 / args.kappa)
    taus = a = j0 = jub = bmb = bn = bp = None
    if want_exact or "a" in only:
        ctx = lindblad.make_context(p)
        psi0 = spin_coherent_state(DickeSpace(args.n_spins), args.theta, args.phi)
        exact = activity.exact_activity(
            ctx, psi0, args.tau, spacing=args.spacing,
            compute_j0="j0" in only, compute_jub="jub" in only,
        )
        taus, a, j0, jub = exact.taus, exact.a, exact.j0, exact.jub
        if "a" not in only:
            a = None
    if "bmb" in only or "bmbub" in only:
        traj = meanfield.integrate_mean_field(
            harness.ExperimentConfig(
                kind="verification", theta_bloch=args.theta, phi=args.phi
            ).initial_magnetization(),
            p,
        )
        traj = meanfield.fundamental_propagator(traj, p)
        if taus is None:
            n_pts = int(round(args.tau / args.spacing))
            taus = args.spacing * np.arange(0, n_pts + 1)
        idx = np.round(taus / p.dt).astype(int)
        if "bmb" in only:
            bmb = activity.b_mb(traj, p)[idx]
        if "bmbub" in only:
            bn = activity.b_mb_ub(traj, p, "nested")[idx]
            bp = activity.b_mb_ub(traj, p, "product")[idx]

    out = os.path.join(_out_dir(args), "bounds.csv")
    csvio.write_csv(
        out,
        ["tau", "A", "J0", "Jub", "Bmb", "BmbUb_nested", "BmbUb_product"],
        [taus, a, j0, jub, bmb, bn, bp],
    )
    return EXIT_OK


def _write_kur_table(path, table: harness.KurTable) -> None:
    csvio.write_csv(
        path,
        ["tau", "mean_nj", "var_nj", "se_mean", "se_var", "denom",
         "rel_fluct", "se_rel_fluct", "rel_fluct_mc_denom", "inv_bmb", "inv_bmb_ub"],
        [table.tau, table.mean_nj, table.var_nj, table.se_mean, table.se_var,
         table.denom, table.rel_fluct, table.se_rel_fluct,
         table.rel_fluct_mc_denom, table.inv_bmb, table.inv_bmb_ub],
    )


def cmd_kur(args) -> int:
    kind = {"time-sweep": "time_sweep", "size-sweep": "size_sweep",
            "verify": "verification"}[args.experiment]
    cfg_dict = _load_config(args)
    cfg = _experiment_config(kind, cfg_dict)
    if args.dry_run:
        return EXIT_OK
    out_dir = _out_dir(args)
    t0 = time.strftime("%Y-%m-%dT%H:%M:%S")
    outputs = []
    exit_code = EXIT_OK
    extra = {}

    if kind == "time_sweep":
        tables = harness.run_time_sweep(cfg)
        reports = {}
        for omega, table in tables.items():
            path = os.path.join(out_dir, f"time_sweep_omega{omega:g}.csv")
            _write_kur_table(path, table)
            outputs.append(path)
            rep = harness.check_inequality_chain(table, cfg.kappa_tau_floor, cfg.kappa)
            reports[f"{omega:g}"] = dataclasses.asdict(rep)
            if not rep.passed:
                exit_code = EXIT_VIOLATION
        extra["chain_reports"] = reports
    elif kind == "size_sweep":
        results = harness.run_size_sweep(cfg)
        slopes = {}
        for omega, res in results.items():
            path = os.path.join(out_dir, f"size_sweep_omega{omega:g}.csv")
            csvio.write_csv(
                path,
                ["n_spins", "rel_fluct", "se_rel_fluct", "inv_bmb", "inv_bmb_ub"],
                [res.n_values, res.rel_fluct, res.se_rel_fluct,
                 res.inv_bmb, res.inv_bmb_ub],
            )
            outputs.append(path)
            slopes[f"{omega:g}"] = {
                "mc": res.slope_mc, "bmb": res.slope_bmb, "bmb_ub": res.slope_bmb_ub,
            }
            if np.any(res.rel_fluct < res.inv_bmb):
                exit_code = EXIT_VIOLATION
        extra["slopes"] = slopes
    else:
        reports = harness.run_verification(cfg)
        meta = {}
        for omega, rep in reports.items():
            path = os.path.join(out_dir, f"bounds_omega{omega:g}.csv")
            csvio.write_csv(
                path,
                ["tau", "A", "J0", "Jub", "Bmb", "BmbUb_nested", "BmbUb_product"],
                [rep.taus, rep.a, rep.j0, rep.jub, rep.bmb,
                 rep.bmb_ub_nested, rep.bmb_ub_product],
            )
            outputs.append(path)
            meta[f"{omega:g}"] = rep.metadata
            # the rigorous exact-level ordering is the pass/fail signal here
            if rep.j0 is not None and rep.jub is not None:
                if np.any(rep.j0 > rep.jub * (1 + 1e-9)):
                    exit_code = EXIT_VIOLATION
        extra["verification"] = meta

    manifest_path = os.path.join(out_dir, "manifest.json")
    _manifest(manifest_path, {**cfg_dict, "kind": kind, **extra},
              outputs, cfg.master_seed, t0)
    return exit_code


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="btckur",
        description="Collective-spin kinetic uncertainty relation experiments",
    )
    top.add_argument("--out-dir", help="output directory (default: $BTCKUR_OUTDIR or .)")
    top.add_argument("--threads", type=int, help="cap Monte Carlo parallelism")
    top.add_argument("--dry-run", action="store_true", help="validate inputs, compute nothing")
    sub = top.add_subparsers(dest="command", required=True)

    mf = sub.add_parser("meanfield", help="integrate the magnetization equations")
    mf.add_argument("--omega", type=float, required=True)
    mf.add_argument("--kappa", type=float, default=1.0)
    mf.add_argument("--tau", type=float, required=True)
    mf.add_argument("--dt", type=float)
    mf.add_argument("--m0", default="0,0,1", help="initial magnetization, e.g. 0,1,0")
    mf.add_argument("--sample-spacing", type=float, default=0.01)
    mf.set_defaults(func=cmd_meanfield)

    tr = sub.add_parser("trajectories", help="quantum-jump Monte Carlo ensemble")
    tr.add_argument("--omega", type=float, required=True)
    tr.add_argument("--kappa", type=float, default=1.0)
    tr.add_argument("--n-spins", type=int, required=True, dest="n_spins")
    tr.add_argument("--tau", type=float, required=True)
    tr.add_argument("--n-traj", type=int, default=1000, dest="n_traj")
    tr.add_argument("--seed", type=int, default=20260826)
    tr.add_argument("--theta", type=float, default=0.0)
    tr.add_argument("--phi", type=float, default=0.0)
    tr.add_argument("--dt", type=float)
    tr.add_argument("--checkpoint-spacing", type=float, default=0.2)
    tr.set_defaults(func=cmd_trajectories)

    bd = sub.add_parser("bounds", help="activities and precision bounds")
    bd.add_argument("--omega", type=float, required=True)
    bd.add_argument("--kappa", type=float, default=1.0)
    bd.add_argument("--n-spins", type=int, required=True, dest="n_spins")
    bd.add_argument("--tau", type=float, default=10.0)
    bd.add_argument("--theta", type=float, default=math.pi / 2)
    bd.add_argument("--phi", type=float, default=math.pi / 2)
    bd.add_argument("--spacing", type=float, default=0.05)
    bd.add_argument("--only", help="comma list from a,j0,jub,bmb,bmbub (default: all)")
    bd.set_defaults(func=cmd_bounds)

    kur = sub.add_parser("kur", help="paper-scale experiments")
    kur.add_argument("experiment", choices=("time-sweep", "size-sweep", "verify"))
    kur.add_argument("--preset", help=f"one of {', '.join(PRESETS)}")
    kur.add_argument("--config", help="JSON config file (overrides preset)")
    kur.add_argument("--omega", type=float, help="single omega override")
    kur.add_argument("--kappa", type=float)
    kur.add_argument("--tau", type=float)
    kur.add_argument("--n-traj", type=int, dest="n_traj")
    kur.add_argument("--seed", type=int)
    kur.add_argument("--theta", type=float)
    kur.add_argument("--phi", type=float)
    kur.set_defaults(func=cmd_kur)
    return top


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK
    try:
        _set_threads(args)
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (PositivityError, FloatingPointError, np.linalg.LinAlgError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
