"""``ringspice`` command line: gen, run, sweep, peak-locus.

Any long option can also come from an INI file given with ``--config``;
keys go in a ``[ringspice]`` section (shared) or a section named after the
subcommand, spelled like the option without leading dashes::

    [ringspice]
    cards = my.cards

    [sweep]
    vdd-list = 3.0, 2.0
    vcont-step = 0.05

Options on the command line win over the file. Exit status: 0 on success,
1 on bad arguments or unreadable inputs, 2 when a simulation fails.
"""

from __future__ import annotations

import argparse
import configparser
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from .analysis import measure_ring
from .engine import ConvergenceError, SolverSettings, transient
from .models import default_cards_path, load_model_cards
from .netlist import (Circuit, InverterStyle, NetlistError, RingConfig, Tran,
                      build_quadrature_ring, parse_netlist, tap_name, write_netlist)
from .sweep import SweepError, SweepSpec, peak_locus, sweep_vcont, tuning_range_report

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_SIMULATION = 2

log = logging.getLogger("ringspice")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad arguments; 2 is reserved for simulation failures here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> List[float]:
    try:
        vals = [float(x) for x in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _ring_options(p: argparse.ArgumentParser) -> None:
    d = RingConfig()
    g = p.add_argument_group("ring")
    g.add_argument("--style", choices=[s.value for s in InverterStyle], default=d.inverter_style.value)
    g.add_argument("--stages", type=int, default=d.stages)
    g.add_argument("--vdd", type=float, default=d.vdd)
    g.add_argument("--vcont", type=float, default=None, help="control voltage (default: vdd)")
    g.add_argument("--wp", type=float, default=d.wp)
    g.add_argument("--wn", type=float, default=d.wn)
    g.add_argument("--l", type=float, default=d.l)
    g.add_argument("--ff-ratio", type=float, default=d.ff_strength_ratio)
    g.add_argument("--c-node", type=float, default=d.c_node)
    g.add_argument("--kick", type=float, default=d.kick)
    g.add_argument("--nmos-model", default=d.nmos_model)
    g.add_argument("--pmos-model", default=d.pmos_model)


def _timing_options(p: argparse.ArgumentParser, hint_default: float) -> None:
    g = p.add_argument_group("timing")
    g.add_argument("--hint", type=float, default=hint_default,
                   help="expected frequency in Hz, sets the time step")
    g.add_argument("--periods", type=int, default=40)
    g.add_argument("--points-per-period", type=int, default=200)


def _sweep_options(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("sweep")
    g.add_argument("--vdd-list", type=_float_list, default=[3.0])
    g.add_argument("--vcont-start", type=float, default=0.0)
    g.add_argument("--vcont-stop", type=float, default=None, help="default: each vdd")
    g.add_argument("--vcont-step", type=float, default=0.025)
    g.add_argument("--small-kick", action="store_true",
                   help="start each point from --kick instead of a vdd/2 antiphase pattern")
    g.add_argument("--jobs", type=int, default=1, help="supplies simulated in parallel")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ringspice", description="Quadrature ring VCO simulator")
    parser.add_argument("--config", type=Path, help="INI file with option defaults")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--cards", type=Path, default=None, help="model-card file")
        return sp

    sp = common("gen", "write the generated ring netlist")
    _ring_options(sp)
    _timing_options(sp, 500e6)
    sp.add_argument("-o", "--out", type=Path, default=None, help="netlist file (default: stdout)")

    sp = common("run", "single transient: waveform CSV and metrics report")
    _ring_options(sp)
    _timing_options(sp, 500e6)
    sp.add_argument("--netlist", type=Path, default=None,
                    help="simulate this netlist instead of a generated ring")
    sp.add_argument("--output", default="ringspice", help="prefix for _wave.csv and _metrics.txt")

    for name, help_ in (("sweep", "control-voltage sweep to a CSV"),
                        ("peak-locus", "frequency peak per supply to a CSV")):
        sp = common(name, help_)
        _ring_options(sp)
        _timing_options(sp, 500e6)
        _sweep_options(sp)
        sp.add_argument("--output", default="ringspice", help="prefix for the CSV files")
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: Sequence[str]) -> None:
    """Turn the ``--config`` file into subparser defaults."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", type=Path)
    known, _ = pre.parse_known_args(argv)
    if known.config is None:
        return
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        with open(known.config) as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        parser.error(f"cannot read config {known.config}: {exc}")
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for section in cp.sections():
        if section != "ringspice" and section not in subparsers.choices:
            parser.error(f"config {known.config}: unknown section [{section}]")
    everywhere = {a.dest for sp in subparsers.choices.values() for a in sp._actions}
    if cp.has_section("ringspice"):
        for key in cp.options("ringspice"):
            if key.replace("-", "_") not in everywhere:
                parser.error(f"config {known.config}: [ringspice] has unknown option {key!r}")
    for name, sp in subparsers.choices.items():
        dests = {a.dest: a for a in sp._actions}
        values = {}
        for section in ("ringspice", name):
            if not cp.has_section(section):
                continue
            for key, raw in cp.items(section):
                dest = key.replace("-", "_")
                if dest not in dests or dest == "help":
                    if section == name:
                        parser.error(f"config {known.config}: [{section}] has unknown option {key!r}")
                    continue
                action = dests[dest]
                if isinstance(action, argparse._StoreTrueAction):
                    values[dest] = cp.getboolean(section, key)
                else:
                    values[dest] = raw
        # string defaults pass through each option's type converter
        sp.set_defaults(**values)


def _models(args):
    path = args.cards or default_cards_path("035")
    try:
        return load_model_cards(path)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot load model cards {path}: {exc}") from None


def _ring(args) -> RingConfig:
    try:
        return RingConfig(stages=args.stages, inverter_style=InverterStyle(args.style), vdd=args.vdd,
                          vcont=args.vdd if args.vcont is None else args.vcont, wp=args.wp,
                          wn=args.wn, l=args.l, ff_strength_ratio=args.ff_ratio,
                          c_node=args.c_node, kick=args.kick, nmos_model=args.nmos_model,
                          pmos_model=args.pmos_model)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _tran(args) -> Tran:
    if not args.hint > 0 or args.periods < 1 or args.points_per_period < 1:
        raise UsageError("--hint, --periods and --points-per-period must be positive")
    return Tran(1.0 / (args.points_per_period * args.hint), args.periods / args.hint)


def _generated(args) -> Circuit:
    try:
        return build_quadrature_ring(_ring(args), _models(args), _tran(args))
    except (ValueError, NetlistError) as exc:
        raise UsageError(str(exc)) from None


def cmd_gen(args) -> int:
    text = write_netlist(_generated(args))
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.write_text(text)
    return EXIT_OK


def cmd_run(args) -> int:
    if args.netlist is not None:
        try:
            circuit = parse_netlist(args.netlist.read_text())
        except OSError as exc:
            raise UsageError(f"cannot read {args.netlist}: {exc}") from None
        except NetlistError as exc:
            raise UsageError(f"{args.netlist}: {exc}") from None
        if circuit.tran is None:
            circuit = circuit.replace(tran=_tran(args))
        vdd = next((el.volts for el in circuit.elements if el.name.lower() == "vdd"), None)
        if vdd is None:
            raise UsageError("netlist has no source named vdd")
    else:
        circuit = _generated(args)
        vdd = args.vdd
    taps = [f"v({tap_name(k)})" for k in range(len(circuit.nodes)) if tap_name(k) in circuit.nodes]
    if len(taps) < 2:
        raise UsageError("no ring taps t0, t1, ... in the circuit")
    w = transient(circuit, SolverSettings())
    metrics = measure_ring(w, taps, vdd)
    w.to_csv(f"{args.output}_wave.csv")
    report = metrics.report()
    Path(f"{args.output}_metrics.txt").write_text(report)
    sys.stdout.write(report)
    return EXIT_OK


def _spec(args) -> SweepSpec:
    try:
        return SweepSpec(ring=_ring(args), vdd_list=tuple(args.vdd_list),
                         vcont_range=(args.vcont_start, args.vcont_stop, args.vcont_step),
                         model_card_file=args.cards, output=args.output,
                         seed_frequency_hint=args.hint, periods=args.periods,
                         points_per_period=args.points_per_period,
                         full_swing_start=not args.small_kick, jobs=args.jobs)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_sweep(args) -> int:
    spec = _spec(args)
    result = sweep_vcont(spec, _models(args))
    for tr in tuning_range_report(result):
        if tr.error is None:
            print(f"vdd={tr.vdd:g} V  f {tr.f_min:.6g} .. {tr.f_max:.6g} Hz  "
                  f"relative range {100 * tr.relative_range:.1f} %")
        else:
            print(tr.error)
    print(f"wrote {spec.output}_sweep.csv")
    return EXIT_OK


def cmd_peak_locus(args) -> int:
    spec = _spec(args)
    try:
        locus, _ = peak_locus(spec, _models(args))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    for row in locus:
        if row.error:
            print(f"vdd={row.vdd:g} V  {row.error}")
        else:
            edge = "  (boundary)" if row.boundary else ""
            print(f"vdd={row.vdd:g} V  vcont*={row.vcont_star:.4f} V  f_max={row.f_max:.6g} Hz{edge}")
    print(f"wrote {spec.output}_sweep.csv and {spec.output}_locus.csv")
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "run": cmd_run, "sweep": cmd_sweep, "peak-locus": cmd_peak_locus}


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"ringspice: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceError, SweepError) as exc:
        print(f"ringspice: simulation failed: {exc}", file=sys.stderr)
        return EXIT_SIMULATION


if __name__ == "__main__":
    sys.exit(main())
