"""Command-line frontend: ``hyperconc run | sweep | circuit``.

Exit codes: 0 success, 2 invalid input, 3 circuit (DSL) failure,
4 internal invariant breach.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path
from typing import Sequence

from .dsl import CircuitError, Severity, load, run_circuit, validate
from .fock import StateParams
from .measurement import DetectorModel
from .protocols import (
    InvariantError,
    PreconditionError,
    ProtocolId,
    ProtocolReport,
    run_protocol,
    special_grid,
    sweep,
    write_sweep_csv,
)

EXIT_OK, EXIT_INPUT, EXIT_DSL, EXIT_INVARIANT = 0, 2, 3, 4
RUN_PROTOCOLS = ("scheme1-simple", "scheme1-improved", "scheme2")
SWEEP_CHOICES = {
    "both": (ProtocolId.SCHEME1_IMPROVED, ProtocolId.SCHEME2),
    "all": (ProtocolId.SCHEME1_SIMPLE, ProtocolId.SCHEME1_IMPROVED, ProtocolId.SCHEME2),
    "scheme1-simple": (ProtocolId.SCHEME1_SIMPLE,),
    "scheme1-improved": (ProtocolId.SCHEME1_IMPROVED,),
    "scheme2": (ProtocolId.SCHEME2,),
}


class InputError(ValueError):
    pass


def _params(args) -> StateParams:
    phases = {k: getattr(args, f"phase_{k}") for k in ("alpha", "beta", "delta", "eta")
              if getattr(args, f"phase_{k}") is not None}
    try:
        return StateParams.from_squares(args.alpha2, args.delta2, args.beta2, args.eta2,
                                        phases=phases)
    except ValueError as exc:
        raise InputError(f"invalid state parameters: {exc}") from exc


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _report_text(rep: ProtocolReport) -> str:
    lines = [f"protocol            {rep.protocol.value} (N={rep.n}, detectors={rep.detectors.value})"]
    sq = rep.params.squares
    lines.append("params              " + "  ".join(f"{k}={v:.6g}" for k, v in sq.items()))
    lines.append(f"success probability {rep.success_probability:.12g}")
    if rep.expected is not None:
        lines.append(f"closed form         {rep.expected:.12g}")
    for stage, p in rep.stage_probabilities:
        lines.append(f"  stage {stage:<12} {p:.12g}")
    if rep.failure_breakdown is not None:
        mb = rep.failure_breakdown
        lines.append(f"mixture ({mb.model.value})   F0={mb.f0:.12g}  F1={mb.f1:.12g}  F2={mb.f2:.12g}")
    ok = rep.successful
    lines.append(f"successful outcomes {len(ok)} of {len(rep.records)}")
    for r in ok:
        lines.append(f"  {r.label:<40} p={r.probability:.6g}  -> {r.target}")
    lines += [f"note: {n}" for n in rep.notes]
    return "\n".join(lines) + "\n"


def _report_csv(rep: ProtocolReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("pattern", "probability", "conditional_probability", "accepted", "target",
                "fidelity", "success"))
    for r in rep.records:
        w.writerow((r.label, f"{r.probability:.12g}", f"{r.conditional_probability:.12g}",
                    int(r.accepted), r.target or "",
                    "" if r.fidelity is None else f"{r.fidelity:.12g}", int(r.success)))
    return buf.getvalue()


def cmd_run(args) -> int:
    if args.n < 2:
        raise InputError(f"--n must be >= 2, got {args.n}")
    params = _params(args)
    kwargs = {}
    if args.protocol == "scheme2":
        kwargs = {"actor": args.actor, "interferometer": args.interferometer,
                  "long_pols": tuple(args.long_pols.split(","))}
        if len(kwargs["long_pols"]) != 2:
            raise InputError("--long-pols takes two comma-separated polarizations, e.g. H,V")
    try:
        rep = run_protocol(args.protocol, params, args.n, DetectorModel(args.detectors), **kwargs)
    except PreconditionError as exc:
        raise InputError(str(exc)) from exc
    if args.format == "json":
        text = rep.to_json() + "\n"
    elif args.format == "csv":
        text = _report_csv(rep)
    else:
        text = _report_text(rep)
    _emit(text, args.out)
    return EXIT_OK


def _floats(text: str, flag: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise InputError(f"{flag}: expected comma-separated numbers") from exc


def cmd_sweep(args) -> int:
    protocols = SWEEP_CHOICES[args.protocols]
    if args.special:
        if args.steps < 2:
            raise InputError(f"--steps must be >= 2, got {args.steps}")
        grid = list(special_grid(args.steps))
    else:
        if not args.alpha2_values or not args.delta2_values:
            raise InputError("without --special, give --alpha2-values and --delta2-values")
        grid = [(a, d) for a in _floats(args.alpha2_values, "--alpha2-values")
                for d in _floats(args.delta2_values, "--delta2-values")]
        for a, d in grid:
            if not (0 <= a <= 1 and 0 <= d <= 1):
                raise InputError(f"grid point alpha2={a}, delta2={d} outside [0, 1]")
    rows = sweep(protocols, grid, special=args.special, n=args.n, threads=args.threads)
    buf = io.StringIO()
    write_sweep_csv(rows, buf, args.layout)
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def _bindings(items: Sequence[str]) -> dict[str, float]:
    out = {}
    for item in items or ():
        name, sep, value = item.partition("=")
        if not sep or not name:
            raise InputError(f"--bind expects name=value, got {item!r}")
        try:
            out[name.strip()] = float(value)
        except ValueError:
            raise InputError(f"--bind {name}: {value!r} is not a number") from None
    return out


def cmd_circuit(args) -> int:
    path = Path(args.file)
    if not path.is_file():
        raise InputError(f"no such circuit file: {path}")
    bindings = _bindings(args.bind)
    doc = load(path)
    if args.action == "check":
        diags = validate(doc, bindings)
        for d in diags:
            print(d.format(doc.source, str(path)), file=sys.stderr)
        return EXIT_DSL if any(d.severity is Severity.ERROR for d in diags) else EXIT_OK
    rep = run_circuit(doc, bindings, name=path.stem)
    for w in rep.warnings:
        print(w.format(doc.source, str(path)), file=sys.stderr)
    _emit(rep.to_json() + "\n", args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hyperconc",
                                 description="Exact simulation of hyperentanglement concentration.")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a shipped protocol and print its report")
    run.add_argument("--protocol", required=True, choices=RUN_PROTOCOLS)
    run.add_argument("--alpha2", type=float, required=True, help="|alpha|^2")
    run.add_argument("--delta2", type=float, required=True, help="|delta|^2")
    run.add_argument("--beta2", type=float, help="|beta|^2 (default 1 - alpha2)")
    run.add_argument("--eta2", type=float, help="|eta|^2 (default 1 - delta2)")
    for k in ("alpha", "beta", "delta", "eta"):
        run.add_argument(f"--phase-{k}", type=float, metavar="RAD", help=f"phase of {k}")
    run.add_argument("--n", type=int, default=2, help="number of parties (GHZ for N > 2)")
    run.add_argument("--detectors", choices=("threshold", "pnr"), default="pnr")
    run.add_argument("--actor", type=int, default=0, help="scheme2: index of the acting party")
    run.add_argument("--interferometer", choices=("routed", "passive"), default="routed",
                     help="scheme2: polarization-routed (default) or passive 50:50 interferometers")
    run.add_argument("--long-pols", default="H,V",
                     help="scheme2: polarizations delayed on the two arms (default H,V)")
    run.add_argument("--format", choices=("json", "text", "csv"), default="json")
    run.add_argument("--out", help="write to this file instead of stdout")
    run.set_defaults(func=cmd_run)

    sw = sub.add_parser("sweep", help="success probability over a parameter grid (CSV)")
    sw.add_argument("--special", action="store_true",
                    help="special states |alpha|=|delta|, |beta|=|eta|, beta2 in [0, 0.5]")
    sw.add_argument("--steps", type=int, default=51)
    sw.add_argument("--protocols", choices=tuple(SWEEP_CHOICES), default="both")
    sw.add_argument("--alpha2-values", help="comma-separated alpha2 grid (without --special)")
    sw.add_argument("--delta2-values", help="comma-separated delta2 grid (without --special)")
    sw.add_argument("--n", type=int, default=2)
    sw.add_argument("--layout", choices=("long", "wide"), default="long")
    sw.add_argument("--threads", type=int, help="worker threads (default $HYPERCONC_THREADS)")
    sw.add_argument("--out")
    sw.set_defaults(func=cmd_sweep)

    circ = sub.add_parser("circuit", help="parse, validate and run a .hqc circuit")
    circ.add_argument("action", choices=("run", "check"))
    circ.add_argument("file")
    circ.add_argument("--bind", action="append", metavar="NAME=VALUE", default=[])
    circ.add_argument("--out")
    circ.set_defaults(func=cmd_circuit)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CircuitError as exc:
        name = getattr(args, "file", "<circuit>")
        print(exc.report(name), file=sys.stderr)
        return EXIT_DSL
    except InvariantError as exc:
        print(f"internal invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
