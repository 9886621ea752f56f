"""Command-line driver: ``membrane-iim <command> ...``.

Exit codes: 0 success, 1 a verification check failed or a simulation broke
down numerically, 2 usage error, 3 input error (unreadable or inconsistent
files).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .forces import EnergyModel
from .grid import GridError, MACField, ScalarField
from .io import FieldFormatError, RunWriter, read_field, same_grid, write_field, write_report_csv
from .jumps import jumps_from_fields, write_jumpset_csv
from .levelset import ConfigurationError, LevelSet, extract_interface, reinitialize

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INPUT = 0, 1, 2, 3

log = logging.getLogger("membrane_iim")


class InputError(Exception):
    pass


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# simulate


def _load_config(args):
    from dataclasses import replace

    from .solver import PRESETS, ScenarioConfig, preset

    if args.config and args.preset:
        raise UsageError("give either --config or --preset, not both")
    if args.preset:
        cfg = preset(args.preset)
    elif args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise InputError(f"cannot read config: {exc}") from exc
        cfg = ScenarioConfig.from_text(text)
    else:
        raise UsageError(f"need --config or --preset ({', '.join(sorted(PRESETS))})")
    overrides = {k: v for k, v in (("resolution", args.resolution), ("seed", args.seed),
                                   ("end_time", args.end_time), ("max_steps", args.max_steps),
                                   ("output_every", args.output_every)) if v is not None}
    return replace(cfg, **overrides).validate()


def cmd_simulate(args) -> int:
    from .geometry import DegenerateNormalError
    from .levelset import StepError
    from .solver import ResolutionError, SolverError, run_scenario

    cfg = _load_config(args)
    writer = RunWriter(args.out, binary=args.binary)
    writer.config(cfg)

    def snapshot(step, state, ls, chi, js):
        g = state.u.grid
        t = state.t
        writer.field(ScalarField(g, state.p.values, "cell", "p", t), step)
        writer.field(ScalarField(g, state.u.u, "uface", "u", t), step)
        writer.field(ScalarField(g, state.u.v, "vface", "v", t), step)
        if ls is not None:
            writer.field(ScalarField(g, ls.phi, "node", "phi", t), step)
            writer.field(ScalarField(g, chi, "node", "chi", t), step)
            writer.interface(extract_interface(ls), step)
        if js is not None:
            writer.jumps(js, step)

    try:
        result = run_scenario(cfg, callback=snapshot)
    except (SolverError, ResolutionError, StepError, DegenerateNormalError) as exc:
        print(f"simulation failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    writer.series(result.series)
    last = result.series[-1]
    print(f"{cfg.name}: {len(result.series) - 1} steps to t={last.t:.6g}, "
          f"perimeter={last.perimeter:.6g} area={last.area:.6g} max|u|={last.max_u:.3g}")
    if args.plot:
        from .plotting import PlottingUnavailable, render_run

        try:
            for p in render_run(args.out):
                print(f"wrote {p}")
        except PlottingUnavailable as exc:
            raise UsageError(str(exc)) from exc
    return EXIT_OK


# --------------------------------------------------------------------------
# verify


def cmd_verify(args) -> int:
    from .verify import SUITES, run_suite

    names = list(SUITES) if args.suite == "all" else [args.suite]
    if any(n not in SUITES for n in names):
        print(f"unknown suite {args.suite!r}; choose from: all, {', '.join(SUITES)}", file=sys.stderr)
        return EXIT_USAGE
    records = []
    for name in names:
        checks = run_suite(name)
        records.extend(checks)
        for c in checks:
            log.info("%s", c.line())
    if args.report:
        write_report_csv(args.report, records)
    else:
        write_report_csv(sys.stdout, records)
    return EXIT_OK if all(c.passed for c in records) else EXIT_FAIL


# --------------------------------------------------------------------------
# jumps, reinit, dump


def _read(path, centering: str | None = None) -> ScalarField:
    try:
        f = read_field(path)
    except (OSError, FieldFormatError, GridError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from exc
    if centering and f.centering != centering:
        raise InputError(f"{path}: expected {centering} centering, found {f.centering}")
    return f


def cmd_jumps(args) -> int:
    phi = _read(args.phi, "node")
    chi = _read(args.chi, "node") if args.chi else ScalarField(phi.grid, np.ones_like(phi.values), "node", "chi")
    fields = [phi, chi]
    u = None
    if bool(args.u) != bool(args.v):
        raise UsageError("--u and --v must be given together")
    if args.u:
        fu, fv = _read(args.u, "uface"), _read(args.v, "vface")
        fields += [fu, fv]
    for f in fields[1:]:
        if not same_grid(f.grid, phi.grid):
            raise InputError(f"grid mismatch: {f.name} is {f.grid.nx}x{f.grid.ny} (h={f.grid.h}), "
                             f"phi is {phi.grid.nx}x{phi.grid.ny} (h={phi.grid.h})")
    if args.u:
        u = MACField(phi.grid, fu.values, fv.values)
    model = EnergyModel.from_params(args.sigma, args.k, args.cb)
    ls = LevelSet(phi.grid, phi.values)
    js = jumps_from_fields(ls, chi.values, model, args.Re, u)
    write_jumpset_csv(args.out or sys.stdout, js)
    return EXIT_OK


def cmd_reinit(args) -> int:
    f = _read(args.field, "node")
    ls = reinitialize(LevelSet(f.grid, f.values), n_pseudo_steps=args.steps)
    out = ScalarField(f.grid, ls.phi, "node", f.name, f.t)
    write_field(args.out, out, binary=args.binary)
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_dump(args) -> int:
    f = _read(args.field)
    if args.out:
        write_field(args.out, f, binary=args.binary)
        return EXIT_OK
    v = f.values
    g = f.grid
    print(f"{f.name}: {f.centering} {v.shape[0]}x{v.shape[1]} on {g.nx}x{g.ny} h={g.h!r} t={f.t!r} "
          f"periodic={g.periodic}")
    print(f"min={v.min():.6g} max={v.max():.6g} mean={v.mean():.6g}")
    return EXIT_OK


def cmd_info(args) -> int:
    from dataclasses import fields

    from .solver import PRESETS, ScenarioConfig
    from .verify import SUITES

    print(f"membrane_iim {__version__}")
    print("presets: " + ", ".join(PRESETS))
    print("verify suites: all, " + ", ".join(SUITES))
    print("config keys: " + ", ".join(f.name for f in fields(ScenarioConfig)))
    return EXIT_OK


# --------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="membrane-iim", description="Level-set membrane flows with immersed-interface jumps.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="run a scenario")
    s.add_argument("--config")
    s.add_argument("--preset")
    s.add_argument("--out", default="run")
    s.add_argument("--resolution", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--end-time", type=float)
    s.add_argument("--max-steps", type=int)
    s.add_argument("--output-every", type=int)
    s.add_argument("--binary", action="store_true", help="binary field snapshots")
    s.add_argument("--plot", action="store_true", help="also render PNGs (needs matplotlib)")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("verify", help="run an identity/oracle suite")
    s.add_argument("suite")
    s.add_argument("--report", help="write the CSV report here instead of stdout")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("jumps", help="evaluate the jump set from field files")
    s.add_argument("--phi", required=True)
    s.add_argument("--chi")
    s.add_argument("--u")
    s.add_argument("--v")
    s.add_argument("--sigma", type=float, default=0.0)
    s.add_argument("--k", type=float, default=0.0)
    s.add_argument("--cb", type=float, default=0.0)
    s.add_argument("--Re", type=float, default=1.0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_jumps)

    s = sub.add_parser("reinit", help="reinitialise a level-set field file")
    s.add_argument("field")
    s.add_argument("--out", required=True)
    s.add_argument("--steps", type=int, default=40)
    s.add_argument("--binary", action="store_true")
    s.set_defaults(func=cmd_reinit)

    s = sub.add_parser("dump", help="summarise a field file or convert its encoding")
    s.add_argument("field")
    s.add_argument("--out")
    s.add_argument("--binary", action="store_true")
    s.set_defaults(func=cmd_dump)

    s = sub.add_parser("info", help="list presets, suites and config keys")
    s.set_defaults(func=cmd_info)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s",
                        stream=sys.stderr)
    try:
        return args.func(args)
    except (UsageError, ConfigurationError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
