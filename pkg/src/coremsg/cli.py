"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 backend or transport error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .aspects import AspectSelector, default_store, load_embeddings
from .config import ConfigError, RunConfig
from .dissim import Simplifier, extract_level0
from .pipeline import STAGES, StageError, dumps_line, evaluate_streams, read_labels, read_stream, run_pipeline
from .sentiment import LengthMismatch, MalformedResponse, NonSuccessStatus, SentenceRef, TransportError, make_backend
from .smoothing import (
    HPParams,
    SGParams,
    SmoothingConfig,
    WaveletParams,
    apply_filter,
    fit_sg_window,
    format_series_csv,
    read_series_csv,
    write_series_csv,
)
from .treebank import parse_ptb, read_ptb_file

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_BACKEND = 0, 1, 2, 3

_BACKEND_ERRORS = (TransportError, NonSuccessStatus, LengthMismatch, MalformedResponse)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, (UsageError, ConfigError)):
        return EXIT_USAGE
    if isinstance(exc, StageError):
        return exit_code_for(exc.cause) if not isinstance(exc.cause, ConfigError) else EXIT_DATA
    if isinstance(exc, _BACKEND_ERRORS):
        return EXIT_BACKEND
    return EXIT_DATA


def _global_flags(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--config", default=d, help="run configuration (YAML or JSON, flat dotted keys)")
    p.add_argument("--out", default=d, help="output directory (overrides the config's 'out')")
    p.add_argument("--no-simplify", action="store_true", default=argparse.SUPPRESS if suppress else False,
                   help="baseline: select aspects on full sentences")
    p.add_argument("--from", dest="from_stage", choices=STAGES, default=d,
                   help="restart a run at this stage, reading upstream artifacts from --out")
    p.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS if suppress else False)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="coremsg", description="Core-message extraction and aspect sentiment series.")
    parser.add_argument("--version", action="version", version=f"coremsg {__version__}")
    _global_flags(parser, suppress=False)
    common = _Parser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", parents=[common], help="run every stage (or from --from on)")
    p.add_argument("--corpus", help="corpus directory; enough to run without a config file")

    p = sub.add_parser("simplify", parents=[common], help="simplify parse trees into discourse trees")
    p.add_argument("--ptb", help="standalone: .ptb file to simplify; prints JSONL")
    p.add_argument("--tree", action="append", default=[], help="standalone: one bracketed tree (repeatable)")
    p.add_argument("--level0", action="store_true", help="print only the level-0 propositions")

    p = sub.add_parser("aspect", parents=[common], help="assign aspects")
    p.add_argument("--text", action="append", default=[], help="standalone: a proposition (repeatable)")
    p.add_argument("--input", help="standalone: file with one proposition per line")
    p.add_argument("--embeddings", help="word-vector file (default: shipped fixture)")

    p = sub.add_parser("sentiment", parents=[common], help="score sentiment")
    p.add_argument("--text", action="append", default=[], help="standalone: a sentence (repeatable)")
    p.add_argument("--input", help="standalone: file with one sentence per line")
    p.add_argument("--backend", choices=["lexicon", "remote"], default="lexicon")
    p.add_argument("--endpoint", help="remote classifier URL")

    p = sub.add_parser("smooth", parents=[common], help="smooth series")
    p.add_argument("--input", help="standalone: date,value CSV")
    p.add_argument("--method", choices=["sg", "hp", "wavelet", "ma"], help="filter (default from config or sg)")
    p.add_argument("--window", type=int, help="SG or moving-average window")
    p.add_argument("--polyorder", type=int)
    p.add_argument("--deriv", type=int)
    p.add_argument("--lambda", dest="lam", type=float, help="HP smoothing parameter")
    p.add_argument("--threshold", type=float, help="wavelet threshold")

    p = sub.add_parser("evaluate", parents=[common], help="compare score streams with labels")
    p.add_argument("--labels", help="label JSONL {doc_id, sentence_idx, aspect?, label}")
    p.add_argument("--stream", action="append", default=[], metavar="NAME=PATH",
                   help="score JSONL to compare (repeatable)")
    p.add_argument("--aspect", choices=["growth", "employment", "inflation"])
    p.add_argument("--bins", type=int)
    return parser


# ---------------------------------------------------------------------------


def _load_config(args) -> RunConfig:
    overrides = {}
    if args.no_simplify:
        overrides["simplify.enabled"] = False
    if getattr(args, "corpus", None):
        overrides["corpus"] = str(Path(args.corpus).resolve())
    if args.config:
        return RunConfig.load(args.config, overrides)
    if "corpus" in overrides:
        return RunConfig.from_mapping(overrides)
    raise UsageError(f"{args.command} needs --config" + (" or --corpus" if args.command == "run" else ""))


def _run(args) -> int:
    if args.from_stage and args.command != "run":
        raise UsageError("--from only applies to 'run'")
    cfg = _load_config(args)
    only = None if args.command == "run" else args.command
    res = run_pipeline(cfg, args.out, from_stage=args.from_stage or "simplify", only=only)
    for name in sorted(res.files):
        print(res.files[name])
    return EXIT_OK


def _lines(args) -> list[str]:
    items = list(args.text)
    if args.input:
        items += [l.strip() for l in Path(args.input).read_text(encoding="utf-8").splitlines() if l.strip()]
    if not items:
        raise UsageError("give --text, --input or --config")
    return items


def _simplify(args) -> int:
    trees = [parse_ptb(t) for t in args.tree]
    if args.ptb:
        trees += read_ptb_file(args.ptb)
    if not trees:
        raise UsageError("give --ptb, --tree or --config")
    simp = Simplifier()
    for t in trees:
        d = simp.simplify(t)
        sys.stdout.write(dumps_line({"level0": extract_level0(d)} if args.level0 else d.to_json()))
    return EXIT_OK


def _aspect(args) -> int:
    store = load_embeddings(args.embeddings) if args.embeddings else default_store()
    sel = AspectSelector(store)
    for text in _lines(args):
        sys.stdout.write(dumps_line({"proposition": text, **sel.select(text).to_json()}))
    return EXIT_OK


def _sentiment(args) -> int:
    opts = {"endpoint": args.endpoint} if args.endpoint else {}
    backend = make_backend(args.backend, opts)
    texts = _lines(args)
    scores = backend.score([SentenceRef("cli", i, t) for i, t in enumerate(texts)])
    for t, s in zip(texts, scores):
        sys.stdout.write(dumps_line({"text": t, **s.to_json()}))
    return EXIT_OK


def _smooth(args) -> int:
    base = RunConfig.load(args.config).smoothing() if args.config else SmoothingConfig()
    method = args.method or base.method
    sg = SGParams(
        args.window or base.sg.window,
        base.sg.polyorder if args.polyorder is None else args.polyorder,
        base.sg.deriv if args.deriv is None else args.deriv,
        base.sg.delta,
        base.sg.boundary,
    )
    series = read_series_csv(args.input)
    if not args.window:
        sg = fit_sg_window(sg, len(series))
    cfg = SmoothingConfig(
        method=method,
        sg=sg,
        hp=HPParams(args.lam) if args.lam is not None else base.hp,
        wavelet=WaveletParams(args.threshold) if args.threshold is not None else base.wavelet,
        ma_window=args.window if method == "ma" and args.window else base.ma_window,
        gap_fill=base.gap_fill,
    )
    result = apply_filter(series, cfg)
    if args.out:
        write_series_csv(result, args.out)
        print(args.out)
    else:
        sys.stdout.write(format_series_csv(result))
    return EXIT_OK


def _evaluate(args) -> int:
    if not args.labels:
        raise UsageError("evaluate needs --labels (or --config for the pipeline stage)")
    if not args.stream:
        raise UsageError("evaluate needs at least one --stream NAME=PATH")
    streams = {}
    for spec in args.stream:
        name, sep, path = spec.partition("=")
        if not sep or not name or not path:
            raise UsageError(f"--stream expects NAME=PATH, got {spec!r}")
        if name in streams:
            raise UsageError(f"duplicate stream name {name!r}")
        streams[name] = read_stream(path)
    rep = evaluate_streams(read_labels(args.labels), streams, args.aspect, None, args.bins)
    text = rep.render()
    sys.stdout.write(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(rep.dumps(), encoding="utf-8")
        (out / "report.txt").write_text(text, encoding="utf-8")
    return EXIT_OK


_STANDALONE = {
    "simplify": (_simplify, lambda a: bool(a.ptb or a.tree)),
    "aspect": (_aspect, lambda a: bool(a.text or a.input)),
    "sentiment": (_sentiment, lambda a: bool(a.text or a.input)),
    "smooth": (_smooth, lambda a: bool(a.input)),
    "evaluate": (_evaluate, lambda a: bool(a.labels or a.stream)),
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        if args.command in _STANDALONE and _STANDALONE[args.command][1](args):
            return _STANDALONE[args.command][0](args)
        return _run(args)
    except Exception as exc:  # noqa: BLE001 - the CLI maps every failure to an exit code
        code = exit_code_for(exc)
        print(f"coremsg: {exc}", file=sys.stderr)
        if code == EXIT_USAGE:
            parser.print_usage(sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
