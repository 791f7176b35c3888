"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 engine/numerical error,
3 validation failure.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import __version__
from .closed_forms import closed_form_intensity
from .errors import CavityError, NumericalError, ParameterError, PreconditionError
from .params import SystemParams, load_scenario, params_from_mapping, validate_regime
from .sweep import (
    AXES,
    SweepSpec,
    evaluate_point,
    figure_presets,
    format_number,
    run_sweep,
    write_csv,
    write_plot_script,
)
from .validation import SUITES, run_suites

EXIT_OK, EXIT_USAGE, EXIT_ENGINE, EXIT_VALIDATION = 0, 1, 2, 3

ENGINE_NAMES = {"moment": "moment", "closed-form": "closed_form", "oracle": "oracle"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common(p: argparse.ArgumentParser, engines=True):
    p.add_argument("--config", metavar="PATH", help="scenario file with 'key = value' lines")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override one parameter (rates in units of Gamma); repeatable")
    if engines:
        p.add_argument("--engine", action="append", choices=sorted(ENGINE_NAMES), metavar="ENGINE",
                       help="moment | closed-form | oracle; repeatable (default: moment)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cavity-moments", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"cavity-moments {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    point = sub.add_parser("point", help="observables at a single parameter point")
    _common(point)

    sweep = sub.add_parser("sweep", help="sweep one axis and write CSV")
    _common(sweep)
    sweep.add_argument("--axis", required=True, choices=AXES)
    sweep.add_argument("--from", dest="start", type=float, required=True)
    sweep.add_argument("--to", dest="stop", type=float, required=True)
    sweep.add_argument("--points", type=int, default=50)
    sweep.add_argument("--log", action="store_true", help="log-spaced points")
    sweep.add_argument("--out", metavar="PATH", help="CSV destination (default: stdout)")
    sweep.add_argument("--plot-script", metavar="PATH", help="also write a matplotlib script for the CSV")
    sweep.add_argument("--jobs", type=int, default=1)

    figure = sub.add_parser("figure", help="write the data for a named preset (fig1a, fig1b, fig2a, fig2b)")
    figure.add_argument("--figure", required=True, choices=sorted(figure_presets()))
    figure.add_argument("--out", metavar="PATH")
    figure.add_argument("--plot-script", metavar="PATH")
    figure.add_argument("--jobs", type=int, default=1)

    validate = sub.add_parser("validate", help="run the cross-engine agreement suites")
    validate.add_argument("--full", action="store_true", help="use the full oracle grid (minutes)")
    validate.add_argument("--suite", action="append", help="run only the named suite(s)")
    return parser


def _overrides(items) -> dict:
    out = {}
    for item in items:
        if "=" not in item:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = (s.strip() for s in item.split("=", 1))
        out[key] = value
    return out


def _params(args) -> SystemParams:
    overrides = _overrides(args.set)
    if args.config:
        return load_scenario(args.config, overrides)
    return params_from_mapping(overrides, units="gamma_big")


def _engines(args) -> list[str]:
    names = args.engine or ["moment"]
    seen = []
    for n in names:
        if ENGINE_NAMES[n] not in seen:
            seen.append(ENGINE_NAMES[n])
    return seen


def _check_closed_form(points):
    for p in points:
        if p.epsilon != 0 or p.delta != 0:
            raise UsageError("engine closed-form requires epsilon=0 and delta=0 "
                             f"(got epsilon={p.epsilon:g}, delta={p.delta:g})")
        if p.n_emitters < 1:
            raise UsageError("engine closed-form requires n_emitters >= 1")


def cmd_point(args, out) -> int:
    params = _params(args)
    engines = _engines(args)
    if "closed_form" in engines:
        _check_closed_form([params])
    if "oracle" in engines and closed_form_intensity(params) > 10:
        raise UsageError("engine oracle requires mean photon number <= 10")
    print(f"cavity-moments {__version__}", file=out)
    print(f"params: {params.canonical()}", file=out)
    for w in validate_regime(params):
        print(f"regime: {w}", file=out)
    results = {e: evaluate_point(params, e) for e in engines}
    for engine, res in results.items():
        print(f"[{engine}] status: {res.status}", file=out)
        print(f"  <a+a>       = {format_number(res.intensity)}", file=out)
        print(f"  <a+^2 a^2>  = {format_number(res.two_photon)}", file=out)
        print(f"  g2(0)       = {format_number(res.g2)}", file=out)
    for engine, res in results.items():
        print(f"{engine}.intensity={format_number(res.intensity)}", file=out)
        print(f"{engine}.two_photon={format_number(res.two_photon)}", file=out)
        print(f"{engine}.g2={format_number(res.g2)}", file=out)
        print(f"{engine}.status={res.status}", file=out)
    if len(engines) == 1:
        res = results[engines[0]]
        print(f"g2={format_number(res.g2)}", file=out)
    return EXIT_ENGINE if any(r.failed for r in results.values()) else EXIT_OK


def _emit(spec, rows, args, out, log_axis=False) -> int:
    if args.out:
        write_csv(rows, args.out, spec)
    else:
        write_csv(rows, out, spec)
    if args.plot_script:
        write_plot_script(spec, args.out or "sweep.csv", args.plot_script, log_axis=log_axis)
    bad = [r for r in rows if any(res.failed for res in r.results.values())]
    if bad:
        print(f"error: {len(bad)} of {len(rows)} points had engine errors (see status column)", file=sys.stderr)
        return EXIT_ENGINE
    return EXIT_OK


def cmd_sweep(args, out) -> int:
    params = _params(args)
    engines = _engines(args)
    if args.points < 1:
        raise UsageError("--points must be >= 1")
    if args.log:
        if args.start <= 0 or args.stop <= 0:
            raise UsageError("--log needs positive --from and --to")
        points = np.logspace(np.log10(args.start), np.log10(args.stop), args.points)
    else:
        points = np.linspace(args.start, args.stop, args.points)
    try:
        spec = SweepSpec(params, args.axis, tuple(points), tuple(engines))
    except PreconditionError as exc:
        raise UsageError(str(exc)) from exc
    if "closed_form" in engines:
        _check_closed_form([p for _, _, p in spec.all_params()])
    rows = run_sweep(spec, jobs=args.jobs)
    return _emit(spec, rows, args, out, log_axis=args.log)


def cmd_figure(args, out) -> int:
    spec = figure_presets()[args.figure]
    rows = run_sweep(spec, jobs=args.jobs)
    return _emit(spec, rows, args, out, log_axis=spec.axis == "kappa_over_Gamma")


def cmd_validate(args, out) -> int:
    if args.suite:
        unknown = [s for s in args.suite if s not in SUITES]
        if unknown:
            raise UsageError(f"unknown suite(s): {', '.join(unknown)}; known: {', '.join(SUITES)}")
    print(f"cavity-moments {__version__} validate ({'full' if args.full else 'quick'} oracle grid)", file=out)
    results = run_suites(full_oracle=args.full, names=args.suite, report=lambda line: print(line, file=out))
    failed = [r.name for r in results if not r.passed]
    print(f"summary: {len(results) - len(failed)}/{len(results)} suites passed", file=out)
    return EXIT_VALIDATION if failed else EXIT_OK


COMMANDS = {"point": cmd_point, "sweep": cmd_sweep, "figure": cmd_figure, "validate": cmd_validate}


def run(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("missing command (point, sweep, figure, validate)")
        return COMMANDS[args.command](args, out)
    except (UsageError, ParameterError, PreconditionError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalError, CavityError) as exc:
        print(f"engine error: {exc}", file=sys.stderr)
        return EXIT_ENGINE
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_ENGINE


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
