"""Command-line entry point.

Subcommands: run, verify, dispersion, cdep, sweep, init.  Configuration is
an INI-style file with sections [grid], [potential], [initial], [solver],
[run] and optional experiment sections; unknown sections or keys are
rejected so typos in parameter names fail loudly.  Exit codes: 0 ok,
1 config error, 2 solver failure, 3 verify failure.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from . import diagnostics as diag
from . import grid as gr
from . import initdata, potential, snapshots, stepper
from .errors import ConfigError, EngineError

_SECTIONS = {
    "grid": {"dim", "counts", "lengths", "bc"},
    "potential": {"lambda", "eta", "truncation"},
    "initial": {"kind", "mean", "amplitude", "seed", "mode", "cutoff", "position", "width"},
    "solver": {"scheme", "dt0", "dt_min", "dt_max", "s1", "s2", "energy_tol",
               "growth_factor", "newton_tol", "newton_max_iters", "guard_eps"},
    "run": {"t_end", "max_steps", "snapshot_every"},
    "dispersion": {"k_indices", "length", "samples", "amplitude", "steps", "pairs"},
    "cdep": {"t_end", "mode", "amplitude", "fit_skip"},
    "sweep": {"lambdas", "etas", "truncations", "t_end", "max_steps"},
}


@dataclass
class RunConfig:
    grid: gr.Grid
    params: potential.PotentialParams
    initial: initdata.InitialSpec
    solver: stepper.SolverConfig
    t_end: float
    max_steps: Optional[int]
    snapshot_every: int
    extras: dict


def _floats(text: str) -> list[float]:
    return [float(tok) for tok in text.replace(",", " ").split()]


def _ints(text: str) -> list[int]:
    return [int(tok) for tok in text.replace(",", " ").split()]


def parse_config(path: str | Path, seed_override: Optional[int] = None) -> RunConfig:
    cp = configparser.ConfigParser()
    read = cp.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    for section in cp.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown config section [{section}]")
        unknown = set(cp[section]) - _SECTIONS[section]
        if unknown:
            raise ConfigError(f"unknown keys in [{section}]: {sorted(unknown)}")
    try:
        g = cp["grid"]
        counts = tuple(_ints(g.get("counts", "64")))
        lengths = tuple(_floats(g.get("lengths", "1.0")))
        dim = g.getint("dim", len(counts))
        if dim != len(counts) or dim != len(lengths):
            raise ConfigError("dim must match the number of counts and lengths")
        bc = g.get("bc", "neumann").lower()
        grid = gr.Grid(lengths, counts, bc)

        pot = cp["potential"]
        params = potential.PotentialParams(pot.getfloat("lambda", 0.0),
                                           pot.getfloat("eta", 0.0))
        trunc = None
        if pot.get("truncation", "").strip():
            trunc = potential.TruncationLevel(pot.getint("truncation"))

        ini = cp["initial"] if cp.has_section("initial") else {}
        spec = initdata.InitialSpec(
            kind=ini.get("kind", "constant"),
            mean_m=float(ini.get("mean", 0.0)),
            amplitude=float(ini.get("amplitude", 0.0)),
            seed=seed_override if seed_override is not None else int(ini.get("seed", 0)),
            mode=int(ini.get("mode", 1)),
            cutoff=int(ini.get("cutoff", 8)),
            position=float(ini["position"]) if ini.get("position") else None,
            width=float(ini["width"]) if ini.get("width") else None,
        )

        sol = cp["solver"] if cp.has_section("solver") else {}

        def _opt(key):
            raw = sol.get(key, "").strip() if sol else ""
            return None if raw in ("", "auto") else float(raw)

        solver = stepper.SolverConfig(
            scheme=sol.get("scheme", "imex") if sol else "imex",
            dt0=float(sol.get("dt0", 1e-3)) if sol else 1e-3,
            dt_min=float(sol.get("dt_min", 1e-9)) if sol else 1e-9,
            dt_max=float(sol.get("dt_max", 1e-1)) if sol else 1e-1,
            s1=_opt("s1"),
            s2=_opt("s2"),
            energy_tol=float(sol.get("energy_tol", 1e-10)) if sol else 1e-10,
            growth_factor=float(sol.get("growth_factor", 1.2)) if sol else 1.2,
            newton_tol=float(sol.get("newton_tol", 1e-9)) if sol else 1e-9,
            newton_max_iters=int(sol.get("newton_max_iters", 25)) if sol else 25,
            guard_eps=float(sol.get("guard_eps", 1e-3)) if sol else 1e-3,
            truncation=trunc,
        )

        run = cp["run"] if cp.has_section("run") else {}
        t_end = float(run.get("t_end", 1.0)) if run else 1.0
        max_steps_raw = run.get("max_steps", "").strip() if run else ""
        max_steps = int(max_steps_raw) if max_steps_raw else None
        snapshot_every = int(run.get("snapshot_every", 0)) if run else 0

        extras = {s: dict(cp[s]) for s in ("dispersion", "cdep", "sweep") if cp.has_section(s)}
        return RunConfig(grid, params, spec, solver, t_end, max_steps, snapshot_every, extras)
    except (ValueError, KeyError, EngineError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------------------
# provenance and output helpers


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_provenance(outdir: Path, config_path: Path, outputs: list[Path]) -> None:
    record = {
        "config_sha256": _sha256(config_path),
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "outputs": {str(p.relative_to(outdir)): _sha256(p) for p in outputs},
    }
    (outdir / "provenance.json").write_text(json.dumps(record, indent=1, sort_keys=True) + "\n")


def _json_out(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# subcommands


def cmd_run(cfg: RunConfig, outdir: Path, config_path: Path) -> int:
    u0 = initdata.generate(cfg.initial, cfg.grid)
    if cfg.solver.truncation is not None:
        u0 = initdata.regularize_initial(u0, cfg.solver.truncation)
    ledger = diag.RunLedger(dim=cfg.grid.dim)
    outputs: list[Path] = []

    if cfg.snapshot_every > 0:
        snapdir = outdir / "snapshots"
        snapdir.mkdir(parents=True, exist_ok=True)

        def hook(u, row, index):
            if index % cfg.snapshot_every == 0:
                raw, meta = snapshots.write_snapshot(
                    u, snapdir / f"state_{index:06d}", time=row.t, label=f"step{index}")
                outputs.extend([raw, meta])

        ledger.on_record = hook

    final = stepper.advance(u0, cfg.t_end, cfg.params, cfg.solver,
                            ledger=ledger, max_steps=cfg.max_steps)
    ledger_path = outdir / "ledger.csv"
    ledger.write_csv(ledger_path)
    outputs.append(ledger_path)

    rows = ledger.rows
    summary = {
        "final_time": rows[-1].t,
        "steps": len(rows) - 1,
        "rejections": int(sum(r.rejections for r in rows)),
        "final_energy": rows[-1].energy.total,
        "final_delta_sep": rows[-1].delta_sep,
        "mass_drift": abs(rows[-1].mass - rows[0].mass),
    }
    summary_path = outdir / "summary.json"
    _json_out(summary_path, summary)
    outputs.append(summary_path)
    raw, meta = snapshots.write_snapshot(final, outdir / "final_state",
                                         time=rows[-1].t, label="final")
    outputs.extend([raw, meta])
    _write_provenance(outdir, config_path, outputs)
    print(f"run complete: t={rows[-1].t:g}, {summary['steps']} steps, "
          f"E={summary['final_energy']:.6g}, mass drift {summary['mass_drift']:.3e}")
    return 0


def cmd_init(cfg: RunConfig, outdir: Path, config_path: Path) -> int:
    u0 = initdata.generate(cfg.initial, cfg.grid)
    raw, meta = snapshots.write_snapshot(u0, outdir / "initial_state", time=0.0,
                                         label=cfg.initial.kind)
    _write_provenance(outdir, config_path, [raw, meta])
    print(f"wrote {raw} (mean={gr.mean(u0):.12g}, sup={gr.lp_norm(u0, np.inf):.6g})")
    return 0


def cmd_dispersion(cfg: RunConfig, outdir: Path, config_path: Path) -> int:
    section = cfg.extras.get("dispersion", {})
    k_indices = _ints(section.get("k_indices", "1 2 3 4 5 6 7 8"))
    pairs_raw = section.get("pairs", f"{cfg.params.lam}:{cfg.params.eta}")
    pairs = []
    for tok in pairs_raw.split(","):
        lam_s, eta_s = tok.split(":")
        pairs.append(potential.PotentialParams(float(lam_s), float(eta_s)))
    length = float(section.get("length", 2.0 * np.pi))
    samples = int(section.get("samples", 64))
    steps = int(section.get("steps", 60))

    path = outdir / "dispersion.csv"
    worst = 0.0
    with open(path, "w") as fh:
        fh.write("lambda,eta,k_index,k,measured,predicted,rel_error\n")
        for p in pairs:
            rows = diag.dispersion_experiment(p, k_indices, length=length,
                                              n_samples=samples, steps=steps)
            for r in rows:
                worst = max(worst, r.rel_error)
                fh.write(f"{p.lam!r},{p.eta!r},{r.k_index},{r.k!r},"
                         f"{r.measured!r},{r.predicted!r},{r.rel_error!r}\n")
    _write_provenance(outdir, config_path, [path])
    print(f"dispersion: worst relative rate error {worst:.3e}")
    return 0


def cmd_cdep(cfg: RunConfig, outdir: Path, config_path: Path) -> int:
    section = cfg.extras.get("cdep", {})
    t_end = float(section.get("t_end", cfg.t_end))
    mode = int(section.get("mode", 1))
    amp = float(section.get("amplitude", 1e-6))
    fit_skip = float(section["fit_skip"]) if "fit_skip" in section else None

    u01 = initdata.generate(cfg.initial, cfg.grid)
    bump = initdata.generate(initdata.InitialSpec(kind="mode", mean_m=0.0,
                                                  amplitude=amp, mode=mode), cfg.grid)
    u02 = u01 + bump
    report = diag.cdep_experiment(u01, u02, cfg.params, cfg.solver, t_end,
                                  fit_skip=fit_skip)
    payload = {
        "fitted_C": report.fitted_C,
        "envelope_ok": report.envelope_ok,
        "identical_inputs": report.identical_inputs,
        "times": report.times.tolist(),
        "dual_distance": report.dual_distance.tolist(),
    }
    path = outdir / "cdep.json"
    _json_out(path, payload)
    _write_provenance(outdir, config_path, [path])
    print(f"cdep: fitted C = {report.fitted_C:.6g}, envelope_ok = {report.envelope_ok}")
    return 0


def _sweep_worker(args) -> str:
    config_path, seed, outdir, lam, eta, trunc = args
    cfg = parse_config(config_path, seed_override=seed)
    params = potential.PotentialParams(lam, eta)
    solver = replace(cfg.solver,
                     truncation=potential.TruncationLevel(trunc) if trunc else None)
    sub = Path(outdir) / f"lam{lam:g}_eta{eta:g}_n{trunc or 0}"
    sub.mkdir(parents=True, exist_ok=True)
    sweep = cfg.extras.get("sweep", {})
    t_end = float(sweep.get("t_end", cfg.t_end))
    max_steps_raw = sweep.get("max_steps", "").strip()
    max_steps = int(max_steps_raw) if max_steps_raw else cfg.max_steps
    run_cfg = RunConfig(cfg.grid, params, cfg.initial, solver, t_end, max_steps,
                        cfg.snapshot_every, cfg.extras)
    cmd_run(run_cfg, sub, Path(config_path))
    return str(sub)


def cmd_sweep(cfg: RunConfig, outdir: Path, config_path: Path, threads: int,
              seed: Optional[int]) -> int:
    section = cfg.extras.get("sweep", {})
    lambdas = _floats(section.get("lambdas", str(cfg.params.lam)))
    etas = _floats(section.get("etas", str(cfg.params.eta)))
    truncs_raw = section.get("truncations", "0")
    truncs = [int(tok) for tok in truncs_raw.replace(",", " ").split()]
    jobs = [(str(config_path), seed, str(outdir), lam, eta, n)
            for lam in lambdas for eta in etas for n in truncs]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            done = list(pool.map(_sweep_worker, jobs))
    else:
        done = [_sweep_worker(job) for job in jobs]
    print(f"sweep: {len(done)} runs complete")
    return 0


def cmd_verify(cfg: Optional[RunConfig], outdir: Path,
               config_path: Optional[Path]) -> int:
    from .verify import run_invariant_suite

    results = run_invariant_suite()
    width = max(len(name) for name, _ in results)
    failures = []
    for name, ok in results:
        print(f"{name:<{width}}  {'PASS' if ok else 'FAIL'}")
        if not ok:
            failures.append(name)
    if failures:
        print(f"verify: {len(failures)} failing invariant(s): {', '.join(failures)}")
        return 3
    print(f"verify: all {len(results)} invariant checks passed")
    return 0


# ---------------------------------------------------------------------------


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="sixch",
                                     description="spectral engine for the sixth-order "
                                                 "conserved flow with logarithmic potential")
    parser.add_argument("command",
                        choices=["run", "verify", "dispersion", "cdep", "sweep", "init"])
    parser.add_argument("--config", required=False, help="path to the INI config")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--seed", type=int, default=None)
    args = parser.parse_args(argv)

    if args.command == "verify" and not args.config:
        return cmd_verify(None, Path("."), None)
    if not args.config:
        print("error: --config is required", file=sys.stderr)
        return 1
    config_path = Path(args.config)

    try:
        cfg = parse_config(config_path, seed_override=args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    outdir = Path(args.out) if args.out else config_path.with_suffix("").name + "_out"
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    try:
        if args.command == "run":
            return cmd_run(cfg, outdir, config_path)
        if args.command == "init":
            return cmd_init(cfg, outdir, config_path)
        if args.command == "dispersion":
            return cmd_dispersion(cfg, outdir, config_path)
        if args.command == "cdep":
            return cmd_cdep(cfg, outdir, config_path)
        if args.command == "sweep":
            return cmd_sweep(cfg, outdir, config_path, args.threads, args.seed)
        if args.command == "verify":
            return cmd_verify(cfg, outdir, config_path)
    except EngineError as exc:
        print(f"solver failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
