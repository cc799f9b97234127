"""Command-line entry points: ``simulate``, ``verify``, ``transform``.

Exit codes: 0 success, 1 verification failure, 2 usage/configuration error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import energy as en
from .audit import run_audit
from .config import ConfigError, format_config, parse_config
from .snapshots import read_snapshot, state_fields, write_snapshot

CSV_HEADER = "t,E_free,E_kin,E_grav,E_total,mass,phase,div_residual,vform_residual"


def _diag_row(t, energy, mass, phase, div_res, vform_res) -> str:
    vals = [t, energy.free, energy.kinetic, energy.gravitational, energy.total,
            mass, phase, div_res, vform_res]
    return ",".join(f"{v:.17g}" for v in vals)


def _cmd_simulate(args) -> int:
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot read config {args.config}: {exc}", file=sys.stderr)
        return 2
    try:
        cfg = parse_config(text)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.echo").write_text(format_config(cfg), encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot write to {out}: {exc}", file=sys.stderr)
        return 2

    stepper = cfg.build_stepper()
    state = cfg.initial_state(stepper)
    grid = stepper.grid
    meta = {
        "params": f"rho1={cfg.rho1!r} rho2={cfg.rho2!r} sigma={cfg.sigma!r} epsilon={cfg.epsilon!r}",
        "pressure_choice": "phi-volume",
        "t": repr(state.t),
    }

    def snap_name(step):
        return out / f"snap_{step:06d}.nsch"

    rows = [CSV_HEADER]
    e0 = stepper.total_energy(state)
    div0 = grid.max_abs(grid.div(state.u) - stepper.k.beta * state.gamma)
    rows.append(_diag_row(state.t, e0, grid.integrate(state.rho), grid.integrate(state.phi), div0, 0.0))
    if cfg.snapshot_every:
        write_snapshot(snap_name(0), grid, state_fields(state, grid.dims), meta)

    n = cfg.n_steps()
    for step in range(1, n + 1):
        state, diag = stepper.step(state, cfg.dt)
        if step % cfg.diagnostics_every == 0 or step == n:
            rows.append(
                _diag_row(state.t, diag.energy, diag.mass_total, diag.phase_total,
                          diag.div_constraint_residual, diag.v_form_phase_residual)
            )
        if cfg.snapshot_every and (step % cfg.snapshot_every == 0 or step == n):
            meta["t"] = repr(state.t)
            write_snapshot(snap_name(step), grid, state_fields(state, grid.dims), meta)
    if not cfg.snapshot_every:
        meta["t"] = repr(state.t)
        write_snapshot(snap_name(n), grid, state_fields(state, grid.dims), meta)
    (out / "diagnostics.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")
    print(f"simulate: {n} steps to t = {state.t:.6g}; outputs in {out}")
    return 0


def _cmd_verify(args) -> int:
    report = run_audit(seed=args.seed, nx=args.nx, rho1=args.rho1, rho2=args.rho2)
    sys.stdout.write(report.format_table())
    sys.stdout.write(report.format_records())
    return 0 if report.passed else 1


def _cmd_transform(args) -> int:
    try:
        grid, fields, meta = read_snapshot(args.infile)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if "phi" not in fields or "p" not in fields:
        print(f"error: snapshot {args.infile} lacks phi/p fields", file=sys.stderr)
        return 2

    params = {}
    for item in meta.get("params", "").split():
        key, _, val = item.partition("=")
        if key and val:
            params[key] = float(val)
    for name in ("rho1", "rho2", "sigma", "epsilon"):
        override = getattr(args, name)
        if override is not None:
            params[name] = override
        if name not in params:
            print(f"error: {name} not in snapshot metadata; pass --{name}", file=sys.stderr)
            return 2

    from .mixture import make_constants

    k = make_constants(params["rho1"], params["rho2"])
    ep = en.EnergyParams(sigma=params["sigma"], epsilon=params["epsilon"])
    try:
        fields["p"] = en.transform_pressure(
            args.pressure_from, args.pressure_to, fields["p"], fields["phi"], grid, ep, k
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    meta = dict(meta)
    meta["pressure_choice"] = args.pressure_to
    meta["params"] = (
        f"rho1={params['rho1']!r} rho2={params['rho2']!r} "
        f"sigma={params['sigma']!r} epsilon={params['epsilon']!r}"
    )
    meta.pop("gauge", None)  # rewritten by the writer
    out = args.out if args.out else args.infile + ".transformed"
    try:
        write_snapshot(out, grid, fields, meta)
    except OSError as exc:
        print(f"error: cannot write {out}: {exc}", file=sys.stderr)
        return 2
    print(f"transform: wrote {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nsch", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a configured simulation")
    sim.add_argument("--config", required=True, help="path to a key=value config file")
    sim.add_argument("--out", required=True, help="output directory")
    sim.set_defaults(func=_cmd_simulate)

    ver = sub.add_parser("verify", help="run the identity audit")
    ver.add_argument("--seed", type=int, default=42)
    ver.add_argument("--nx", type=int, default=32)
    ver.add_argument("--rho1", type=float, default=1000.0)
    ver.add_argument("--rho2", type=float, default=1.0)
    ver.set_defaults(func=_cmd_verify)

    tr = sub.add_parser("transform", help="re-express a snapshot's pressure in another modeling choice")
    tr.add_argument("--in", dest="infile", required=True)
    tr.add_argument("--pressure-from", dest="pressure_from", required=True, choices=en.CHOICES)
    tr.add_argument("--pressure-to", dest="pressure_to", required=True, choices=en.CHOICES)
    tr.add_argument("--out", default=None, help="output snapshot path (default: <in>.transformed)")
    tr.add_argument("--rho1", type=float, default=None)
    tr.add_argument("--rho2", type=float, default=None)
    tr.add_argument("--sigma", type=float, default=None)
    tr.add_argument("--epsilon", type=float, default=None)
    tr.set_defaults(func=_cmd_transform)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
