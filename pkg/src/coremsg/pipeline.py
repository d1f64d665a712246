"""End-to-end run: simplify, select aspects, score sentiment, smooth, evaluate.

Every stage reads its inputs from persisted artifacts of the previous
stages, so a run can restart from any stage.  Artifacts are written into a
staging directory and moved into place only when all stages succeed.
"""

from __future__ import annotations

import csv
import datetime as dt
import hashlib
import json
import logging
import math
import os
import platform
import shutil
import tempfile
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Sequence

import numpy as np

from . import __version__
from .aspects import ASPECT_PRIORITY, Aspect, AspectSelector, default_store, load_embeddings, load_stopwords
from .config import RunConfig
from .corpus import ingest_corpus
from .dissim import CueLexicon, SimplificationError, Simplifier, extract_level0, leaf_node, load_catalog
from .metrics import (
    CountTable,
    EvalReport,
    SinglePoint,
    aspect_distribution,
    compare_streams,
    sentiment_distribution,
    volatility,
)
from .sentiment import SentenceRef, SentimentScore, make_backend
from .smoothing import (
    Cadence,
    SmoothingError,
    TimeSeries,
    apply_filter,
    fit_sg_window,
    moving_average,
    resample_monthly,
    savitzky_golay,
)

log = logging.getLogger(__name__)

STAGES = ("simplify", "aspect", "sentiment", "smooth", "evaluate")
DIGITS = 6
PLOT_COLUMNS = ("raw", "sg_smoothed", "moving_avg")
EXTRA_COLUMN = {"hp": "hp_trend", "wavelet": "wavelet"}

PROPOSITIONS = "propositions.jsonl"
ASPECTS = "aspects.jsonl"
SENTIMENT = "sentiment.jsonl"
SERIES_META = "series.json"
REPORT_JSON = "report.json"
REPORT_TXT = "report.txt"
ASPECT_COUNTS = "aspect_counts.csv"
SENTIMENT_COUNTS = "sentiment_counts.csv"
RUN_MANIFEST = "run.json"


def series_name(aspect: Aspect | str) -> str:
    return f"series_{aspect.value if isinstance(aspect, Aspect) else aspect}.csv"


STAGE_OUTPUTS: dict[str, tuple[str, ...]] = {
    "simplify": (PROPOSITIONS,),
    "aspect": (ASPECTS,),
    "sentiment": (SENTIMENT,),
    "smooth": (SERIES_META, *(series_name(a) for a in ASPECT_PRIORITY)),
    "evaluate": (REPORT_JSON, REPORT_TXT, ASPECT_COUNTS, SENTIMENT_COUNTS),
}


class PipelineError(RuntimeError):
    pass


class StageError(PipelineError):
    """A stage failed; ``cause`` is the original exception."""

    def __init__(self, stage: str, locus: str, cause: BaseException):
        self.stage, self.locus, self.cause = stage, locus, cause
        where = f" at {locus}" if locus else ""
        super().__init__(f"stage {stage}{where}: {type(cause).__name__}: {cause}")


class MissingArtifact(PipelineError):
    pass


class MisalignedSeries(ValueError):
    pass


class AlignmentError(ValueError):
    pass


# ---------------------------------------------------------------------------
# serialization helpers


def _clean(x: Any, digits: int = DIGITS) -> Any:
    """Round floats for byte-stable JSON; negative zero becomes zero."""
    if isinstance(x, float):
        r = round(x, digits)
        return 0.0 if r == 0 else r
    if isinstance(x, dict):
        return {k: _clean(v, digits) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v, digits) for v in x]
    return x


def dumps_line(rec: Mapping[str, Any]) -> str:
    return json.dumps(_clean(dict(rec)), sort_keys=True, ensure_ascii=False) + "\n"


def write_jsonl(path: Path, records: Iterable[Mapping[str, Any]]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(dumps_line(rec))


def read_jsonl(path: Path) -> list[dict]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path.name}:{lineno}: {exc}") from None
    return out


def write_json(path: Path, doc: Any) -> None:
    path.write_text(json.dumps(_clean(doc), indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")


def _fmt(v: float, fmt: Optional[str]) -> str:
    if fmt is None:
        return repr(float(v))
    s = fmt % v
    return s[1:] if s.startswith("-") and float(s) == 0 else s


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


# ---------------------------------------------------------------------------
# plot data


def emit_plot_data(
    plots: Mapping[str, Mapping[str, TimeSeries]],
    out_dir: str | Path,
    fmt: Optional[str] = None,
) -> list[Path]:
    """Write one ``series_<name>.csv`` per entry.

    Parameters
    ----------
    plots : mapping of str to mapping of str to TimeSeries
        Per aspect, the columns to write.  ``raw``, ``sg_smoothed`` and
        ``moving_avg`` are required and come first; further columns follow
        in the given order.
    out_dir : path
        Target directory, which must exist.
    fmt : str, optional
        printf-style float format.  The default writes ``repr`` values,
        which read back exactly.

    Returns
    -------
    list of Path
        The files written.

    Raises
    ------
    MisalignedSeries
        A series is not monthly, or the columns do not share timestamps.
    """
    written = []
    for name, cols in plots.items():
        missing = [c for c in PLOT_COLUMNS if c not in cols]
        if missing:
            raise MisalignedSeries(f"{name}: missing columns {missing}")
        order = list(PLOT_COLUMNS) + [c for c in cols if c not in PLOT_COLUMNS]
        stamps = cols["raw"].timestamps
        for c in order:
            s = cols[c]
            if s.cadence is not Cadence.MONTHLY:
                raise MisalignedSeries(f"{name}.{c} is not a monthly series")
            if s.timestamps != stamps:
                raise MisalignedSeries(f"{name}.{c} is not aligned with {name}.raw")
        rows = [
            [d.strftime("%Y-%m")] + [_fmt(cols[c].values[i], fmt) for c in order]
            for i, d in enumerate(stamps)
        ]
        path = Path(out_dir) / series_name(name)
        _write_csv(path, ["date", *order], rows)
        written.append(path)
    return written


def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[str]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def read_plot_data(path: str | Path) -> dict[str, TimeSeries]:
    """Read a plot CSV back into monthly series keyed by column; empty when it has no rows."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "date":
        raise ValueError(f"{path}: expected a header starting with 'date'")
    header, body = rows[0], [r for r in rows[1:] if r]
    if not body:
        return {}
    stamps = tuple(dt.date.fromisoformat(r[0] + "-01") for r in body)
    return {
        col: TimeSeries(stamps, np.array([float(r[j]) for r in body]), Cadence.MONTHLY)
        for j, col in enumerate(header[1:], 1)
    }


# ---------------------------------------------------------------------------
# evaluation inputs


def read_labels(path: str | Path) -> list[dict]:
    """Label fixture records ``{doc_id, sentence_idx, aspect?, label}`` with a numeric ``value``."""
    out, seen = [], set()
    for rec in read_jsonl(Path(path)):
        try:
            key = (str(rec["doc_id"]), int(rec["sentence_idx"]))
            value = SentimentScore.from_label(_label_name(rec["label"])).score
        except (KeyError, ValueError, TypeError) as exc:
            raise ValueError(f"{path}: bad label record {rec!r} ({exc})") from None
        if key in seen:
            raise ValueError(f"{path}: duplicate label for {key}")
        seen.add(key)
        out.append({"key": key, "aspect": rec.get("aspect"), "value": value})
    if not out:
        raise ValueError(f"{path}: no labels")
    return out


def _label_name(label: Any) -> str:
    if isinstance(label, (int, float)) and not isinstance(label, bool):
        return {-1: "negative", 0: "neutral", 1: "positive"}[int(label)]
    return str(label).lower()


def read_stream(path: str | Path) -> dict[tuple[str, int], float]:
    """Scores keyed by (doc_id, sentence_idx); ``score`` wins over ``label``."""
    out: dict[tuple[str, int], float] = {}
    for rec in read_jsonl(Path(path)):
        try:
            key = (str(rec["doc_id"]), int(rec["sentence_idx"]))
            value = float(rec["score"]) if "score" in rec else SentimentScore.from_label(_label_name(rec["label"])).score
        except (KeyError, ValueError, TypeError) as exc:
            raise ValueError(f"{path}: bad score record {rec!r} ({exc})") from None
        if not -1.0 <= value <= 1.0:
            raise ValueError(f"{path}: score {value} outside [-1, 1]")
        out[key] = value
    return out


def evaluate_streams(
    labels: Sequence[dict],
    streams: Mapping[str, Mapping[tuple[str, int], float]],
    aspect: Optional[str] = None,
    assigned: Optional[Mapping[tuple[str, int], str]] = None,
    bins: Optional[int] = None,
) -> EvalReport:
    """Align streams with labels and compare them.

    A label's own ``aspect`` is used for filtering when present, else the
    aspect assigned by the pipeline (``assigned``).
    """
    chosen = []
    for lab in labels:
        a = lab["aspect"] if lab["aspect"] is not None else (assigned or {}).get(lab["key"])
        if aspect is None or a == aspect:
            chosen.append(lab)
    if not chosen:
        raise AlignmentError(f"no labels for aspect {aspect!r}")
    keys = [lab["key"] for lab in chosen]
    values = {}
    for name, stream in streams.items():
        missing = [k for k in keys if k not in stream]
        if missing:
            raise AlignmentError(f"stream {name!r} has no score for {missing[0]} ({len(missing)} missing)")
        values[name] = [stream[k] for k in keys]
    rep = compare_streams(keys, [lab["value"] for lab in chosen], values, bins)
    rep.provenance = {"aspect": aspect, "streams": sorted(streams)}
    return rep


# ---------------------------------------------------------------------------
# the run


@dataclass
class RunArtifacts:
    out_dir: Path
    files: dict[str, Path] = field(default_factory=dict)

    def __getitem__(self, name: str) -> Path:
        return self.files[name]


class _Run:
    def __init__(self, cfg: RunConfig, out_dir: Path, staging: Path):
        self.cfg = cfg
        self.out = out_dir
        self.staging = staging

    def src(self, name: str) -> Path:
        for d in (self.staging, self.out):
            if (d / name).exists():
                return d / name
        raise MissingArtifact(f"{name} not found in {self.out}; run the upstream stages first")

    def dst(self, name: str) -> Path:
        return self.staging / name

    # -- stages ------------------------------------------------------------

    def simplify(self) -> None:
        cfg = self.cfg
        docs = ingest_corpus(cfg.path("corpus"), cfg.path("trees"))
        enabled = cfg["simplify.enabled"]
        simplifier = None
        if enabled:
            simplifier = Simplifier(load_catalog(cfg.path("rules")), CueLexicon.load(cfg.path("cues")), cfg["simplify.max_depth"])
        records = []
        for doc in docs:
            for s in doc.sentences:
                locus = f"{doc.doc_id}:{s.index}"
                if simplifier is not None and s.tree is not None:
                    try:
                        dtree = simplifier.simplify(s.tree)
                    except SimplificationError as exc:
                        raise StageError("simplify", locus, exc) from exc
                    level0 = extract_level0(dtree) or [s.text]
                    simplified = True
                else:
                    dtree, level0, simplified = leaf_node(s.text), [s.text], False
                records.append({
                    "doc_id": doc.doc_id,
                    "date": doc.date.isoformat(),
                    "sentence_idx": s.index,
                    "start": s.start,
                    "end": s.end,
                    "text": s.text,
                    "simplified": simplified,
                    "tree": dtree.to_json(),
                    "level0": level0,
                })
        write_jsonl(self.dst(PROPOSITIONS), records)

    def aspect(self) -> None:
        cfg = self.cfg
        store = load_embeddings(cfg.path("embeddings")) if cfg["embeddings"] else default_store()
        selector = AspectSelector(store, cfg.seeds(), load_stopwords(cfg.path("stopwords")))
        out = []
        for rec in read_jsonl(self.src(PROPOSITIONS)):
            prop = " ".join(rec["level0"])
            a = selector.select(prop).to_json()
            out.append({
                "doc_id": rec["doc_id"],
                "date": rec["date"],
                "sentence_idx": rec["sentence_idx"],
                "proposition": prop,
                "n_propositions": len(rec["level0"]),
                **a,
            })
        write_jsonl(self.dst(ASPECTS), out)

    def sentiment(self) -> None:
        cfg = self.cfg
        backend = make_backend(cfg["sentiment.backend"], cfg.sentiment_options())
        recs = read_jsonl(self.src(PROPOSITIONS))
        # sentiment always sees the original sentence, never level-0 propositions
        refs = [SentenceRef(r["doc_id"], r["sentence_idx"], r["text"]) for r in recs]
        scores = backend.score(refs)
        out = []
        for r, s in zip(recs, scores):
            out.append({
                "doc_id": r["doc_id"],
                "date": r["date"],
                "sentence_idx": r["sentence_idx"],
                "text": r["text"],
                "input": "sentence",
                **s.to_json(),
            })
        write_jsonl(self.dst(SENTIMENT), out)

    def smooth(self) -> None:
        sc = self.cfg.smoothing()
        aspects = {(r["doc_id"], r["sentence_idx"]): r["aspect"] for r in read_jsonl(self.src(ASPECTS))}
        groups: dict[str, dict[tuple[str, str], list[float]]] = {a.value: {} for a in ASPECT_PRIORITY}
        for r in read_jsonl(self.src(SENTIMENT)):
            key = (r["doc_id"], r["sentence_idx"])
            if key not in aspects:
                raise StageError("smooth", f"{key[0]}:{key[1]}", AlignmentError("sentence has no aspect record"))
            groups[aspects[key]].setdefault((r["date"], r["doc_id"]), []).append(float(r["score"]))
        meta: dict[str, dict] = {}
        plots: dict[str, dict[str, TimeSeries]] = {}
        for a in ASPECT_PRIORITY:
            meta[a.value], cols = self._smooth_aspect(groups[a.value], sc)
            if cols:
                plots[a.value] = cols
            else:
                extra = [EXTRA_COLUMN[sc.method]] if sc.method in EXTRA_COLUMN else []
                _write_csv(self.dst(series_name(a)), ["date", *PLOT_COLUMNS, *extra], [])
        emit_plot_data(plots, self.staging, fmt=f"%.{DIGITS}f")
        write_json(self.dst(SERIES_META), {"method": sc.method, "aspects": meta})

    def _smooth_aspect(self, docs: Mapping[tuple[str, str], list[float]], sc) -> tuple[dict, dict]:
        # per-meeting mean, then per-date mean when several documents share a date
        by_date: dict[str, list[float]] = {}
        for (date, _), vals in sorted(docs.items()):
            by_date.setdefault(date, []).append(math.fsum(vals) / len(vals))
        info: dict[str, Any] = {"documents": len(docs), "sentences": sum(len(v) for v in docs.values())}
        if not by_date:
            info["note"] = "no sentences assigned"
            return info, {}
        stamps = tuple(dt.date.fromisoformat(d) for d in sorted(by_date))
        obs = TimeSeries(stamps, np.array([math.fsum(by_date[d]) / len(by_date[d]) for d in sorted(by_date)]))
        try:
            raw = resample_monthly(obs, sc.gap_fill)
        except SmoothingError as exc:
            info["note"] = f"series not built: {exc}"
            return info, {}
        sg = fit_sg_window(sc.sg, len(raw))
        info.update(months=len(raw), sg_window=sg.window, sg_polyorder=sg.polyorder, sg_deriv=sg.deriv)
        if sg.window != sc.sg.window:
            info["note"] = f"SG window reduced from {sc.sg.window} to {sg.window} to fit {len(raw)} months"
        cols = {
            "raw": raw,
            "sg_smoothed": savitzky_golay(raw, sg),
            "moving_avg": moving_average(raw, sc.ma_window),
        }
        if sc.method in EXTRA_COLUMN:
            try:
                cols[EXTRA_COLUMN[sc.method]] = apply_filter(raw, sc)
            except SmoothingError as exc:
                # keep the column so every file has the same schema; repeat the raw values
                cols[EXTRA_COLUMN[sc.method]] = raw
                info["note"] = f"{sc.method} filter skipped: {exc}"
        return info, cols

    def evaluate(self) -> None:
        cfg = self.cfg
        arecs = read_jsonl(self.src(ASPECTS))
        srecs = read_jsonl(self.src(SENTIMENT))
        meta = json.loads(self.src(SERIES_META).read_text(encoding="utf-8"))
        atable = aspect_distribution([r["aspect"] for r in arecs])
        stable = sentiment_distribution([r["label"] for r in srecs])
        series = {}
        for a in ASPECT_PRIORITY:
            entry = dict(meta["aspects"][a.value])
            cols = read_plot_data(self.src(series_name(a)))
            for c in ("raw", "sg_smoothed"):
                entry[f"volatility_{c}"] = _vol(cols[c].values) if c in cols else None
            series[a.value] = entry
        evaluation = None
        if cfg["evaluate.labels"]:
            labels = read_labels(cfg["evaluate.labels"])
            stream = {(r["doc_id"], r["sentence_idx"]): float(r["score"]) for r in srecs}
            assigned = {(r["doc_id"], r["sentence_idx"]): r["aspect"] for r in arecs}
            evaluation = evaluate_streams(labels, {"pipeline": stream}, cfg["evaluate.aspect"], assigned, cfg["evaluate.bins"])
        n_simplified = sum(1 for r in read_jsonl(self.src(PROPOSITIONS)) if r["simplified"])
        report = {
            "documents": len({r["doc_id"] for r in arecs}),
            "sentences": len(arecs),
            "simplified_sentences": n_simplified,
            "aspect_counts": atable.counts,
            "sentiment_counts": stable.counts,
            "smoothing": {"method": meta["method"], "series": series},
            "evaluation": evaluation.to_json(DIGITS) if evaluation else None,
        }
        write_json(self.dst(REPORT_JSON), report)
        self.dst(REPORT_TXT).write_text(_render_report(report, atable, stable, evaluation), encoding="utf-8")
        self.dst(ASPECT_COUNTS).write_text(atable.to_csv("aspect"), encoding="utf-8")
        self.dst(SENTIMENT_COUNTS).write_text(stable.to_csv("label"), encoding="utf-8")


def _vol(values: np.ndarray) -> Optional[float]:
    try:
        return volatility(values)
    except SinglePoint:
        return None


def _render_report(report: dict, atable: CountTable, stable: CountTable, evaluation: Optional[EvalReport]) -> str:
    lines = [
        f"documents: {report['documents']}  sentences: {report['sentences']}  simplified: {report['simplified_sentences']}",
        "",
        atable.render(),
        "",
        stable.render(),
        "",
        f"Smoothing ({report['smoothing']['method']})",
    ]
    for name, s in report["smoothing"]["series"].items():
        vol = s.get("volatility_sg_smoothed")
        bits = [f"{name:<12}", f"months={s.get('months', 0)}", f"sg_window={s.get('sg_window', '-')}"]
        bits.append("volatility=-" if vol is None else f"volatility={vol:.3f}")
        if "note" in s:
            bits.append(f"({s['note']})")
        lines.append("  ".join(str(b) for b in bits))
    text = "\n".join(lines) + "\n"
    if evaluation is not None:
        text += "\n" + evaluation.render()
    return text


def _input_hashes(cfg: RunConfig) -> dict[str, str]:
    out: dict[str, str] = {}
    corpus = cfg.path("corpus")
    for p in sorted(corpus.iterdir()):
        if p.suffix in (".txt", ".ptb") and p.is_file():
            out[f"corpus/{p.name}"] = sha256_file(p)
    trees = cfg.path("trees")
    if trees is not None and trees != corpus:
        for p in sorted(trees.glob("*.ptb")):
            out[f"trees/{p.name}"] = sha256_file(p)
    builtin = {
        "embeddings": "fixture_vectors.txt",
        "stopwords": "stopwords.txt",
        "rules": "rules.yaml",
        "cues": "cues.tsv",
        "sentiment.lexicon": "sentiment_lexicon.tsv",
    }
    for key, default in builtin.items():
        p = cfg.path(key)
        if p is None:
            with resources.as_file(resources.files("coremsg.data").joinpath(default)) as bp:
                out[f"{key} (builtin {default})"] = sha256_file(bp)
        else:
            out[key] = sha256_file(p)
    for key in ("sentiment.table", "evaluate.labels"):
        if cfg[key]:
            out[key] = sha256_file(cfg.path(key))
    return out


def _locus(exc: BaseException) -> str:
    return getattr(exc, "locus", "")


def run_pipeline(
    cfg: RunConfig,
    out_dir: str | Path | None = None,
    from_stage: str = "simplify",
    only: Optional[str] = None,
) -> RunArtifacts:
    """Run the stages from ``from_stage`` on (or just ``only``) and write artifacts.

    Upstream artifacts of skipped stages are read from ``out_dir``.  On any
    failure nothing new is left behind: the staging area is removed and a
    freshly created output directory is deleted again.
    """
    if from_stage not in STAGES:
        raise ValueError(f"unknown stage {from_stage!r}; choose from {list(STAGES)}")
    stages = [only] if only else list(STAGES[STAGES.index(from_stage):])
    out = Path(out_dir if out_dir is not None else cfg["out"])
    created = not out.exists()
    out.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(prefix=".staging-", dir=out))
    run = _Run(cfg, out, staging)
    try:
        for stage in stages:
            log.info("stage %s", stage)
            try:
                getattr(run, stage)()
            except StageError:
                raise
            except Exception as exc:
                raise StageError(stage, _locus(exc), exc) from exc
        for stage in stages:
            for name in STAGE_OUTPUTS[stage]:
                os.replace(staging / name, out / name)
        artifacts = {}
        for stage in STAGES:
            for name in STAGE_OUTPUTS[stage]:
                if (out / name).exists():
                    artifacts[name] = sha256_file(out / name)
        manifest = {
            "version": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "config_sha256": cfg.digest(),
            "config": {k: v for k, v in cfg.to_mapping().items() if k != "out"},
            "inputs": _input_hashes(cfg),
            "artifacts": artifacts,
        }
        write_json(out / RUN_MANIFEST, manifest)
    except BaseException:
        shutil.rmtree(staging, ignore_errors=True)
        if created:
            shutil.rmtree(out, ignore_errors=True)
        raise
    shutil.rmtree(staging, ignore_errors=True)
    files = {n: out / n for n in [*artifacts, RUN_MANIFEST]}
    return RunArtifacts(out, files)
