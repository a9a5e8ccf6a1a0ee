"""Command line entry points: serve the HTTP API, replay traces, score a
corpus, regenerate the corpus, and benchmark the kernels."""

from __future__ import annotations

import argparse
import sys
import tempfile
from pathlib import Path

from pointchat.config import EngineConfig, ServiceConfig, load_config


def _engine_config(args) -> EngineConfig:
    config = load_config(getattr(args, "config", None)).engine
    if getattr(args, "artifact_dir", None):
        config.artifact_root = args.artifact_dir
    return config


def cmd_serve(args) -> int:
    from pointchat.service import serve

    config = load_config(args.config)
    if args.listen:
        config.listen = args.listen
    if args.artifact_dir:
        config.engine.artifact_root = args.artifact_dir
    if args.ui:
        config.ui_root = args.ui
    serve(config)
    return 0


def cmd_replay(args) -> int:
    from pointchat.engine import Engine
    from pointchat.harness import replay_trace

    config = _engine_config(args)
    if not args.artifact_dir:
        config.artifact_root = tempfile.mkdtemp(prefix="pointchat_replay_")
    engine = Engine(config)
    all_passed = True
    for trace in args.traces:
        report = replay_trace(trace, engine)
        for line in report.lines():
            print(line)
        all_passed = all_passed and report.passed
    return 0 if all_passed else 1


def cmd_corpus(args) -> int:
    from pointchat.engine import Engine
    from pointchat.harness import evaluate_corpus

    config = _engine_config(args)
    if not args.artifact_dir:
        config.artifact_root = tempfile.mkdtemp(prefix="pointchat_corpus_")
    report = evaluate_corpus(args.corpus_dir, Engine(config))
    if args.verbose:
        for trace in report.traces:
            for line in trace.lines():
                print(line)
    for line in report.lines():
        print(line)
    return 0 if report.passed else 1


def cmd_make_corpus(args) -> int:
    from pointchat.corpus import build_corpus

    written = build_corpus(args.target_dir)
    print(f"wrote {len(written)} traces under {Path(args.target_dir).resolve()}")
    return 0


def cmd_bench(args) -> int:
    from pointchat.kernels.bench import main as bench_main

    bench_main(sizes=tuple(args.sizes), repeat=args.repeat)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pointchat",
                                     description="pointing-plus-language editing sessions")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--listen", help="host:port (default 127.0.0.1:8787)")
    p.add_argument("--artifact-dir", help="session/artifact storage directory")
    p.add_argument("--ui", help="directory with a built browser client, served at /ui")
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("replay", help="replay trace files and check expectations")
    p.add_argument("traces", nargs="+", help="trace files")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--artifact-dir", help="storage directory (default: a temp dir)")
    p.set_defaults(fn=cmd_replay)

    p = sub.add_parser("corpus", help="replay a whole corpus and report routing accuracy")
    p.add_argument("corpus_dir", help="directory of .trace files")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--artifact-dir", help="storage directory (default: a temp dir)")
    p.add_argument("-v", "--verbose", action="store_true", help="per-step lines for every trace")
    p.set_defaults(fn=cmd_corpus)

    p = sub.add_parser("make-corpus", help="regenerate the evaluation corpus")
    p.add_argument("target_dir", help="output directory")
    p.set_defaults(fn=cmd_make_corpus)

    p = sub.add_parser("bench", help="compare kernel implementations")
    p.add_argument("--sizes", nargs="+", type=int, default=[128, 256, 512])
    p.add_argument("--repeat", type=int, default=3)
    p.set_defaults(fn=cmd_bench)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
