"""``irexf`` command-line entry point.

Every subcommand except ``report`` writes one JSON document to stdout.
Exit status is 0 on success, 1 on a domain error (the JSON body is then
``{"error": CODE, "detail": ...}``) and 2 on a usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources

from . import analysis
from .channel import (
    NoiseModel,
    SessionReport,
    TimingModel,
    ambient_study,
    pick_target,
    run_session,
)
from .codec import (
    Phase,
    SessionSchedule,
    base64url_encode,
    build_session,
)
from .errors import IrexfError, NoSuitableTarget
from .ime import load_layout
from .ir_protocol import PulseTrain, SignalDatabase, classify_signal

SCHEMA_VERSION = 1


class InputError(IrexfError):
    code = "INVALID_INPUT"


def _read_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from None


def _layout(args):
    try:
        return load_layout(args.layout)
    except OSError as exc:
        raise InputError(f"cannot read layout: {exc}") from None


def _database(path: str | None) -> SignalDatabase:
    if path:
        return SignalDatabase.from_dict(_read_json(path))
    text = resources.files("irexf.data").joinpath("fingerprints.json").read_text(encoding="utf-8")
    return SignalDatabase.from_dict(json.loads(text))


def _train(data, carrier_hz: float) -> PulseTrain:
    if isinstance(data, dict):
        return PulseTrain.from_dict(data, carrier_hz)
    return PulseTrain(carrier_hz, tuple(tuple(s) for s in data))


def cmd_encode(args) -> dict:
    layout = _layout(args)
    payload = args.payload
    if args.base64:
        payload = base64url_encode(payload.encode("utf-8"))
    schedule = build_session(layout, args.prefix, payload, reset_every=args.reset_every)
    return schedule.to_dict()


def cmd_simulate(args) -> dict:
    layout = _layout(args)
    schedule = SessionSchedule.from_dict(_read_json(args.schedule))
    timing = TimingModel.from_dict(_read_json(args.timing)) if args.timing else TimingModel()
    noise_data = _read_json(args.noise) if args.noise else {}
    if args.seed is not None:
        noise_data = {**noise_data, "rng_seed": args.seed}
    noise = NoiseModel.from_dict(noise_data)
    report = run_session(schedule, layout, timing, noise, recovery_enabled=not args.no_recovery)
    return report.to_dict()


def cmd_study(args) -> dict:
    db = _database(args.db)
    data = _read_json(args.observations)
    rows = data["observations"] if isinstance(data, dict) else data
    observed = [(float(o["time_s"]), _train(o, args.carrier_hz)) for o in rows]
    inventory = ambient_study(observed, db)
    out = inventory.to_dict()
    try:
        out["target"] = pick_target(inventory)
    except NoSuitableTarget:
        out["target"] = None
    return out


def cmd_classify(args) -> dict:
    db = _database(args.db)
    train = _train(_read_json(args.train), args.carrier_hz)
    return {"schema_version": SCHEMA_VERSION, **classify_signal(train, db).to_dict()}


def cmd_analyze(args) -> dict:
    layout = _layout(args)
    cost = analysis.cost_matrix(layout)
    uniform = analysis.uniform_average(cost)
    if args.corpus:
        try:
            with open(args.corpus, encoding="utf-8") as fh:
                texts = analysis.corpus_texts(fh.read())
        except OSError as exc:
            raise InputError(f"cannot read corpus: {exc.strerror}") from None
        source = analysis.markov_from_corpus(texts)
        entropy = analysis.entropy_bits(source.symbol_probs)
        moves = analysis.expected_moves(source, cost)
    else:
        entropy = analysis.entropy_bits([1.0 / analysis.N_SYMBOLS] * analysis.N_SYMBOLS)
        moves = analysis.expected_moves(analysis.SourceModel.uniform(), cost)
    rate = analysis.channel_rate(analysis.RateQuery(1, entropy, moves * args.per_command_s))
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(cost.to_csv())
    return {
        "schema_version": SCHEMA_VERSION,
        "cost_matrix": cost.counts.tolist(),
        "uniform_average": uniform,
        "max_cost": int(cost.counts.max()),
        "entropy_bits": entropy,
        "expected_moves": moves,
        "per_command_s": args.per_command_s,
        "rate_bps": rate,
    }


def format_report(report: SessionReport) -> str:
    lines = ["IREXF session report", f"{'phase':<10}{'duration_s':>12}{'commands':>10}"]
    for p in Phase:
        lines.append(f"{p.value:<10}{report.phase_durations_s.get(p.value, 0.0):>12.3f}"
                     f"{report.phase_commands.get(p.value, 0):>10d}")
    lines.append(f"{'total':<10}{report.total_s:>12.3f}{sum(report.phase_commands.values()):>10d}")

    prefix = report.intended_url[:len(report.intended_url) - report.payload_length]
    delivered = report.decoded_url[len(prefix):] if report.decoded_url.startswith(prefix) else ""
    lines.append(f"intended : {report.intended_url}")
    lines.append(f"decoded  : {report.decoded_url}")
    lines.append(f"payload  : {delivered!r} ({len(delivered)}/{report.payload_length} symbols)")
    lines.append(f"keyboard commands sent: {report.commands_sent}, "
                 f"retransmissions: {report.retransmissions}")
    payload_s = report.phase_durations_s.get(Phase.PAYLOAD.value, 0.0)
    if payload_s > 0:
        bps = len(delivered) * 6 / payload_s
        lines.append(f"payload rate: {bps:.4f} bps")
    else:
        lines.append("payload rate: n/a")
    if report.halted:
        lines.append(f"HALTED at t={report.halt_time_s:.3f}s (foreign infrared signal)")
    if report.aborted:
        lines.append("ABORTED: command budget exhausted")
    return "\n".join(lines)


def cmd_report(args) -> str:
    return format_report(SessionReport.from_dict(_read_json(args.session)))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="irexf", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def with_layout(p):
        p.add_argument("--layout", help="keyboard layout JSON (default: $IREXF_LAYOUT or built-in)")
        return p

    p = with_layout(sub.add_parser("encode", help="plan a session for a payload"))
    p.add_argument("--prefix", required=True, help="URL prefix typed before the payload")
    p.add_argument("--payload", required=True)
    p.add_argument("--base64", action="store_true", help="base64url-encode the payload's UTF-8 bytes first")
    p.add_argument("--reset-every", type=int, metavar="K", help="splice a cursor reset every K symbols")
    p.set_defaults(func=cmd_encode)

    p = with_layout(sub.add_parser("simulate", help="run a schedule through the channel simulator"))
    p.add_argument("--schedule", required=True)
    p.add_argument("--timing")
    p.add_argument("--noise")
    p.add_argument("--seed", type=int)
    p.add_argument("--no-recovery", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("study", help="build an appliance inventory from sniffed signals")
    p.add_argument("--observations", required=True)
    p.add_argument("--db")
    p.add_argument("--carrier-hz", type=float, default=38000.0)
    p.set_defaults(func=cmd_study)

    p = sub.add_parser("classify", help="match one pulse train against the fingerprint database")
    p.add_argument("--train", required=True, help="JSON segments array [[mark_us, space_us], ...]")
    p.add_argument("--db")
    p.add_argument("--carrier-hz", type=float, default=38000.0)
    p.set_defaults(func=cmd_classify)

    p = with_layout(sub.add_parser("analyze", help="cost matrix, entropy and channel rate"))
    p.add_argument("--corpus", help="text file for the Markov source (default: uniform base64)")
    p.add_argument("--per-command-s", type=float, default=TimingModel().per_command_s)
    p.add_argument("--csv", help="also write the 64x64 cost matrix as CSV")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("report", help="human-readable summary of a simulate result")
    p.add_argument("--session", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        out = args.func(args)
    except IrexfError as exc:
        json.dump(exc.to_dict(), sys.stdout)
        sys.stdout.write("\n")
        return 1
    except (KeyError, TypeError, ValueError) as exc:
        json.dump({"error": InputError.code, "detail": str(exc)}, sys.stdout)
        sys.stdout.write("\n")
        return 1
    if isinstance(out, str):
        sys.stdout.write(out + "\n")
    else:
        json.dump(out, sys.stdout, sort_keys=True)
        sys.stdout.write("\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
