"""Command-line interface.

Exit codes: 0 on success, 2 on validation errors (bad bundle, bad stream,
bad evaluation), 1 on unexpected internal failures.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import assessment, biosignal, pipeline, report as report_mod
from .core import load_bundle, schedule_for_bundle
from .errors import DegenerateSample, MosaicError, ValidationError
from .synth import SynthConfig, generate_session

EXIT_VALIDATION = 2


def _canonical_json(doc) -> bytes:
    return (json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=True) + "\n").encode()


def _write_output(data: bytes, out_path):
    if out_path in (None, "-"):
        sys.stdout.buffer.write(data)
    else:
        Path(out_path).write_bytes(data)


def cmd_validate(args):
    bundle = load_bundle(args.bundle, sort_repair=args.sort_repair,
                         strict_roles=args.strict_roles)
    for w in bundle.warnings:
        print(f"warning: {w}", file=sys.stderr)
    stream_counts = {sid: len(s) for sid, s in sorted(bundle.streams.items())}
    print(f"ok: session {bundle.session.id}")
    for sid, n in stream_counts.items():
        print(f"  {sid}: {n} samples")
    if bundle.transcript is not None:
        print(f"  transcript: {len(bundle.transcript)} words")
    if bundle.events:
        print(f"  events: {len(bundle.events)}")
    if bundle.annotations:
        print(f"  annotations: {len(bundle.annotations)}")
    print(f"  evaluations: {len(bundle.evaluations)}")
    return 0


def cmd_analyze(args):
    bundle = load_bundle(args.bundle, sort_repair=args.sort_repair)
    only = args.only.split(",") if args.only else None
    _, results = pipeline.run_analyses(bundle, only=only)
    doc = {
        "schema_version": report_mod.SCHEMA_VERSION,
        "session": bundle.session.id,
        "analyses": report_mod._round_floats(results),
    }
    _write_output(_canonical_json(doc), args.output)
    return 0


def _compose_human_feedback(bundle, results):
    if not bundle.evaluations or bundle.rubric is None:
        return None, None
    aggregates = assessment.aggregate_rubric(bundle.evaluations, bundle.rubric)
    metrics = pipeline.metrics_index(results)
    sections = assessment.compose_feedback(
        aggregates, metrics, bundle.rubric, bundle.templates
    )
    return aggregates, sections


def cmd_report(args):
    bundle = load_bundle(args.bundle, sort_repair=args.sort_repair)
    schedule, results = pipeline.run_analyses(bundle)
    aggregates, sections = _compose_human_feedback(bundle, results)
    doc = report_mod.assemble_report(bundle, schedule, results, aggregates, sections)
    _write_output(report_mod.render(doc, args.format), args.output)
    return 0


def cmd_cohort(args):
    root = Path(args.directory)
    bundle_dirs = sorted(
        p.parent for p in root.glob("*/session.json")
    )
    if not bundle_dirs:
        raise ValidationError(f"no bundles found under {root}")

    session_aggs = []
    sessions_doc = []
    phase_means = {"opening": [], "conclusion": []}
    for bdir in bundle_dirs:
        bundle = load_bundle(bdir, sort_repair=args.sort_repair)
        schedule = schedule_for_bundle(bundle)
        entry = {"id": bundle.session.id, "path": bdir.name}
        if bundle.evaluations and bundle.rubric is not None:
            agg = assessment.aggregate_rubric(bundle.evaluations, bundle.rubric)
            session_aggs.append(agg)
            entry["external_means"] = {
                item_id: agg.items[item_id].external_mean
                for item_id in sorted(agg.items)
            }
        heart = bundle.streams_of_kind("heart_csv")
        presenter_sid = None
        for sid in sorted(heart):
            if bundle.stream_actors.get(sid) == bundle.session.presenter_id:
                presenter_sid = sid
                break
        if presenter_sid:
            smoothed = biosignal.smooth(heart[presenter_sid])
            stats = biosignal.phase_stats(smoothed, schedule)
            by_name = {s.phase: s.mean for s in stats}
            if by_name.get("opening") is not None and by_name.get("conclusion") is not None:
                phase_means["opening"].append(by_name["opening"])
                phase_means["conclusion"].append(by_name["conclusion"])
                entry["phase_means"] = {
                    "opening": by_name["opening"], "conclusion": by_name["conclusion"],
                }
        sessions_doc.append(entry)

    doc = {
        "schema_version": report_mod.SCHEMA_VERSION,
        "cohort_size": len(bundle_dirs),
        "sessions": sessions_doc,
        "class_means": assessment.class_averages(session_aggs) if session_aggs else {},
    }
    if len(phase_means["opening"]) >= 2:
        try:
            t = biosignal.cohort_paired_test(
                phase_means["opening"], phase_means["conclusion"]
            )
            doc["phase_paired_test"] = {
                "phases": ["opening", "conclusion"],
                "t": t.t, "df": t.df, "p_two_sided": t.p_two_sided,
                "mode": t.mode, "n": t.n1,
            }
        except DegenerateSample:
            doc["phase_paired_test"] = None
    else:
        doc["phase_paired_test"] = None
    _write_output(_canonical_json(report_mod._round_floats(doc)), args.output)
    return 0


def cmd_synth(args):
    cfg = SynthConfig(profile=args.profile)
    if args.talk_ms:
        cfg.talk_ms = args.talk_ms
    if args.qa_ms is not None:
        cfg.qa_ms = args.qa_ms
    manifest = generate_session(args.seed, args.output, cfg)
    print(f"wrote bundle for seed {args.seed} to {args.output} "
          f"({len(manifest['stream_counts'])} streams)")
    return 0


def cmd_capture_serve(args):
    from .capture import CaptureServer

    evaluators = []
    if args.evaluators:
        for pair in args.evaluators.split(","):
            actor, _, role = pair.partition(":")
            if role not in ("professor", "peer", "self"):
                raise ValidationError(f"bad evaluator spec {pair!r} (want id:role)")
            evaluators.append((actor, role))

    server = CaptureServer(
        out_dir=args.out,
        rubric_path=args.rubric,
        labels_path=args.labels,
        port=args.port,
        token=args.token,
        static_dir=args.static,
        session_id=args.session_id,
        presenter_id=args.presenter,
        planned_duration_ms=args.planned_ms,
        qa_duration_ms=args.qa_ms,
        evaluators=evaluators,
        auto_start=args.auto_start,
    )
    print(f"capture server listening on port {server.port}; out={args.out}",
          flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mosaic",
        description="Session analytics and feedback reports for oral presentations",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="load and validate a session bundle")
    p.add_argument("bundle")
    p.add_argument("--sort-repair", action="store_true",
                   help="stable-sort non-monotonic streams instead of failing")
    p.add_argument("--strict-roles", action="store_true",
                   help="require 1 professor + 2 peers instead of warning")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("analyze", help="run analyses and write their results")
    p.add_argument("bundle")
    p.add_argument("--only", help="comma-separated analysis names")
    p.add_argument("-o", "--output", default="-")
    p.add_argument("--sort-repair", action="store_true")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("report", help="produce the full feedback report")
    p.add_argument("bundle")
    p.add_argument("--format", choices=("json", "md", "html"), default="json")
    p.add_argument("-o", "--output", default="-")
    p.add_argument("--sort-repair", action="store_true")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("cohort", help="cross-session class averages and tests")
    p.add_argument("directory")
    p.add_argument("-o", "--output", default="-")
    p.add_argument("--sort-repair", action="store_true")
    p.set_defaults(func=cmd_cohort)

    p = sub.add_parser("synth", help="generate a synthetic bundle + ground truth")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--profile", choices=("easy", "noisy"), default="easy")
    p.add_argument("--talk-ms", type=int, default=None)
    p.add_argument("--qa-ms", type=int, default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("capture", help="live capture service")
    capture_sub = p.add_subparsers(dest="capture_command", required=True)
    ps = capture_sub.add_parser("serve", help="run the capture HTTP server")
    ps.add_argument("--port", type=int, default=8765)
    ps.add_argument("--out", required=True)
    ps.add_argument("--rubric", required=True)
    ps.add_argument("--labels", required=True)
    ps.add_argument("--token", default=None)
    ps.add_argument("--static", default=None, help="console asset directory")
    ps.add_argument("--session-id", default="capture-session")
    ps.add_argument("--presenter", default="presenter")
    ps.add_argument("--planned-ms", type=int, default=600_000)
    ps.add_argument("--qa-ms", type=int, default=300_000)
    ps.add_argument("--evaluators", default=None,
                    help="comma-separated id:role pairs for the descriptor")
    ps.add_argument("--auto-start", action="store_true",
                    help="start the session clock immediately")
    ps.set_defaults(func=cmd_capture_serve)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except MosaicError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
