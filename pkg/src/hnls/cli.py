"""Command-line experiment runner.

    hnls simulate CONFIG
    hnls identities CONFIG [--identity NAME ...]
    hnls kernel --a A --x-min X0 --x-max X1 [--samples K] [--n N] [--certify]
    hnls decay CONFIG
    hnls stability CONFIG [--perturbation AMP]
    hnls sweep CONFIG --vary KEY=V1,V2,...

Exit codes: 0 success, 2 validation error, 3 numerical abort, 4 I/O error.
HNLS_THREADS caps the sweep worker pool.
"""

import argparse
from concurrent.futures import ProcessPoolExecutor
import dataclasses
import hashlib
import json
import os
from pathlib import Path
import sys
import time

import numpy as np

from hnls import __version__
from hnls._validation import ValidationError
from hnls.config import ExperimentConfig
from hnls.core import Field
from hnls.solver import NumericalAbort, solve

EXIT_OK, EXIT_VALIDATION, EXIT_ABORT, EXIT_IO = 0, 2, 3, 4


def _threads():
    raw = os.environ.get("HNLS_THREADS")
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ValidationError(f"must be a positive integer, got {raw!r}", "HNLS_THREADS") from None
    if n < 1:
        raise ValidationError(f"must be a positive integer, got {raw!r}", "HNLS_THREADS")
    return n


def _load(path):
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError:
        raise ValidationError("config is not UTF-8", "config") from None
    return ExperimentConfig.from_text(text, path.parent.resolve()), data


def _prepare_dir(path):
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_manifest(out, command, cfg, config_bytes, started, files, extra=None):
    manifest = {
        "command": command,
        "library_version": __version__,
        "config": cfg.text,
        "config_sha256": hashlib.sha256(config_bytes).hexdigest(),
        "wall_time_s": time.perf_counter() - started,
        "files": sorted(files),
    }
    if extra:
        manifest.update(extra)
    (out / "config.json").write_bytes(config_bytes)
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


def _run(cfg, u0=None):
    u0 = cfg.initial_field() if u0 is None else u0
    return solve(u0, cfg.params, cfg.damping, cfg.solve)


def _write_series(cfg, traj, out):
    from hnls.diagnostics import energy_series
    from hnls.io import write_csv

    masses = traj.masses()
    if cfg.params.beta != 0:
        energy = energy_series(traj)
        rows = zip(traj.times, masses, energy)
        write_csv(out / "series.csv", ["t", "mass", "energy"], rows)
    else:
        write_csv(out / "series.csv", ["t", "mass"], zip(traj.times, masses))
    return ["series.csv"]


def _write_trajectory(cfg, traj, out):
    from hnls.io import write_trajectory_binary, write_trajectory_csv

    files = []
    if "binary" in cfg.formats:
        write_trajectory_binary(traj, out / "trajectory.bin")
        files.append("trajectory.bin")
    if "csv" in cfg.formats:
        write_trajectory_csv(traj, out / "trajectory.csv")
        files.append("trajectory.csv")
    return files


# --- subcommands -------------------------------------------------------------


def cmd_simulate(args):
    started = time.perf_counter()
    cfg, data = _load(args.config)
    out = _prepare_dir(args.out or cfg.output_dir)
    traj = _run(cfg)
    files = _write_trajectory(cfg, traj, out) + _write_series(cfg, traj, out)
    _write_manifest(out, "simulate", cfg, data, started, files)
    print(f"wrote {len(files)} files to {out}")
    return EXIT_OK


def cmd_identities(args):
    from hnls.diagnostics import IDENTITIES, WEIGHTED, identity_residuals, identity_suite

    started = time.perf_counter()
    cfg, data = _load(args.config)
    names = args.identity or []
    for name in names:
        if name not in IDENTITIES:
            raise ValidationError(f"unknown identity {name!r}; valid: {', '.join(IDENTITIES)}",
                                  "--identity")
        if name == "energy_3_32" and cfg.params.beta == 0:
            raise ValidationError("beta must be nonzero for energy_3_32", "params.beta")
        if name in WEIGHTED and cfg.weight is None:
            raise ValidationError(f"{name} needs a 'weight' section", "weight")
    out = _prepare_dir(args.out or cfg.output_dir)
    traj = _run(cfg)
    if names:
        series = {n: identity_residuals(traj, n, cfg.weight if n in WEIGHTED else None)
                  for n in names}
    else:
        series = identity_suite(traj, cfg.weight)
    files = []
    for name, s in series.items():
        fname = f"identity_{name}.csv"
        s.write_csv(out / fname)
        files.append(fname)
        print(f"{name} max_abs_residual={s.max_abs_residual:.6e}")
    _write_manifest(out, "identities", cfg, data, started, files)
    return EXIT_OK


def cmd_kernel(args):
    from hnls.kernel import certify_envelope, tabulate, write_tabulation

    if not args.x_max > args.x_min:
        raise ValidationError("x range is empty (need x_max > x_min)", "--x-max")
    if args.samples < 1:
        raise ValidationError("must be >= 1", "--samples")
    out = _prepare_dir(args.out)
    xs = np.linspace(args.x_min, args.x_max, args.samples)
    write_tabulation(out / "kernel.csv", tabulate(args.a, xs, args.n))
    print(f"wrote {args.samples} samples to {out / 'kernel.csv'}")
    if args.certify:
        reports = certify_envelope(args.a, args.n, (args.x_min, args.x_max))
        payload = {side: dataclasses.asdict(r) for side, r in reports.items()}
        with open(out / "envelope.json", "w") as fh:
            json.dump(payload, fh, indent=2, default=float)
            fh.write("\n")
        for side, r in reports.items():
            print(f"{side}: rate={r.fitted_rate:.6g} prefactor={r.fitted_prefactor:.6g} "
                  f"r_squared={r.r_squared:.6g}")
    return EXIT_OK


def cmd_decay(args):
    from hnls.diagnostics import decay_fit
    from hnls.io import write_csv

    started = time.perf_counter()
    cfg, data = _load(args.config)
    out = _prepare_dir(args.out or cfg.output_dir)
    traj = _run(cfg)
    report = decay_fit(traj, cfg.damping)
    write_csv(out / "mass.csv", ["t", "mass"], zip(traj.times, traj.masses()))
    with open(out / "decay.json", "w") as fh:
        json.dump(dataclasses.asdict(report), fh, indent=2)
        fh.write("\n")
    _write_manifest(out, "decay", cfg, data, started, ["mass.csv", "decay.json"])
    print(f"gamma_hat={report.gamma_hat:.6g} r_squared={report.r_squared:.6g} "
          f"monotone={report.monotone}")
    return EXIT_OK


def cmd_stability(args):
    from hnls.diagnostics import stability_gap
    from hnls.io import write_csv

    started = time.perf_counter()
    cfg, data = _load(args.config)
    st = cfg.stability
    amp = st["perturbation"] if args.perturbation is None else args.perturbation
    out = _prepare_dir(args.out or cfg.output_dir)
    u0 = cfg.initial_field()
    bump = np.exp(-((u0.grid.x - st["center"]) / st["width"]) ** 2)
    v0 = Field(u0.values + amp * bump, u0.grid)
    tu = _run(cfg, u0)
    tv = tu if amp == 0 else _run(cfg, v0)
    t, gap, ratio = stability_gap(tu, tv, st["alpha"], st["eps"])
    write_csv(out / "gap.csv", ["t", "gap", "ratio"], zip(t, gap, ratio))
    _write_manifest(out, "stability", cfg, data, started, ["gap.csv"],
                    {"perturbation": amp})
    print(f"max_ratio={float(np.max(ratio)):.6g}")
    return EXIT_OK


def _sweep_point(job):
    cfg, data, out = job
    started = time.perf_counter()
    try:
        _prepare_dir(out)
        traj = _run(cfg)
        files = _write_trajectory(cfg, traj, out) + _write_series(cfg, traj, out)
        _write_manifest(out, "sweep", cfg, cfg.text.encode("utf-8"), started, files)
        return "ok"
    except ValidationError as exc:
        return f"validation: {exc}"
    except NumericalAbort as exc:
        return f"abort: {exc}"


def cmd_sweep(args):
    started = time.perf_counter()
    cfg, data = _load(args.config)
    key, sep, values = args.vary.partition("=")
    if not sep or not values:
        raise ValidationError("expected KEY=V1,V2,...", "--vary")
    points = []
    for item in values.split(","):
        try:
            points.append(json.loads(item))
        except json.JSONDecodeError:
            points.append(item)
    root = _prepare_dir(args.out or cfg.output_dir)
    jobs = []
    for val in points:
        point = cfg.with_value(key, val)
        jobs.append((point, data, root / f"{key}={val}"))
    workers = min(_threads(), len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            status = list(pool.map(_sweep_point, jobs))
    else:
        status = [_sweep_point(j) for j in jobs]
    with open(root / "index.csv", "w") as fh:
        fh.write("run_dir,key,value,status\n")
        for (_, _, out), val, st in zip(jobs, points, status):
            fh.write(f"{out.name},{key},{json.dumps(val)},{st}\n")
    _write_manifest(root, "sweep", cfg, data, started, ["index.csv"],
                    {"vary": key, "values": points})
    print(f"{len(jobs)} runs, index at {root / 'index.csv'}")
    return EXIT_OK if all(s == "ok" for s in status) else EXIT_VALIDATION


# --- entry point -------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="hnls", description="Damped higher-order NLS experiments")
    sub = p.add_subparsers(dest="command", required=True)

    def with_config(name, func, help_):
        s = sub.add_parser(name, help=help_)
        s.add_argument("config", help="JSON experiment config")
        s.add_argument("--out", default=None, help="output directory (overrides outputs.directory)")
        s.set_defaults(func=func)
        return s

    with_config("simulate", cmd_simulate, "run the solver and write snapshots")
    s = with_config("identities", cmd_identities, "residuals of the balance laws")
    s.add_argument("--identity", action="append", help="identity name (repeatable)")
    with_config("decay", cmd_decay, "exponential decay fit of the mass")
    s = with_config("stability", cmd_stability, "weighted gap between perturbed runs")
    s.add_argument("--perturbation", type=float, default=None, help="bump amplitude")
    s = with_config("sweep", cmd_sweep, "parameter sweep over one config key")
    s.add_argument("--vary", required=True, help="KEY=V1,V2,... e.g. params.beta=0.5,1,2")

    k = sub.add_parser("kernel", help="tabulate Phi_a and certify its envelope")
    k.add_argument("--a", type=float, default=0.0)
    k.add_argument("--x-min", type=float, required=True)
    k.add_argument("--x-max", type=float, required=True)
    k.add_argument("--samples", type=int, default=101)
    k.add_argument("--n", type=int, default=0, choices=(0, 1))
    k.add_argument("--certify", action="store_true")
    k.add_argument("--out", default="hnls_kernel")
    k.set_defaults(func=cmd_kernel)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalAbort as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
