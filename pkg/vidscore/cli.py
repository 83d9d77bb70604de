# vidscore/cli.py
from __future__ import annotations

import asyncio
import csv
import functools
import logging
import sys
from collections import Counter, OrderedDict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional, TypeVar

import typer
import uvicorn

from .bon import bon_report, group_candidates
from .config import RunConfig, assert_runtime_config, load_run_config, settings, validate_inputs
from .constants import (
    DIMENSIONS,
    CameraMotion,
    KrippendorffLevel,
    ReconcileStatus,
    ReportFormat,
    Tier,
)
from .core import annotation_warnings
from .errors import (
    EndpointError,
    InputError,
    JoinError,
    SupplierError,
    VidscoreError,
)
from .frames import get_frame_extractor
from .jsonl import LineError, atomic_writer, iter_records, read_dicts, read_records, write_line, write_records
from .judge import JudgeClient
from .metrics import agreement_report, point_score_report, preference_report
from .mock_server import canned_responder, create_mock_app
from .pipeline import (
    ChatTextJudge,
    PromptCandidate,
    PromptVerdict,
    TierQuota,
    augment_camera_motion,
    difference_histogram,
    filter_prompt,
    load_roster,
    reconcile_entry,
    sample_models_for_prompt,
    semantic_filter_batch,
    tier_histogram,
)
from .reports import (
    Table,
    agreement_table,
    bon_table,
    key_value_table,
    point_score_table,
    preference_table,
    provenance,
    render_report,
    rows_table,
    write_report,
)
from .rescale import derive_pairs_from_scores, get_spec, load_rescale_specs, rescale_native
from .reward import group_advantages, total_reward
from .schemas import (
    AnnotationRecord,
    GroundTruthRecord,
    Judgment,
    PartialTriple,
    PredictionRecord,
    PreferencePair,
    ScoreTriple,
    VideoEntry,
)
from .scoring import FrameSamplingPlan

log = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

app = typer.Typer(
    add_completion=False,
    no_args_is_help=True,
    help="Evaluation, reward and curation harness for a three-dimension video quality judge.",
)


@dataclass
class State:
    config_path: Optional[Path] = None
    presets: list[str] = field(default_factory=list)
    overrides: dict[str, Any] = field(default_factory=dict)

    def run_config(self, **overrides: Any) -> RunConfig:
        layer = dict(self.overrides)
        layer.update({k: v for k, v in overrides.items() if v is not None})
        return load_run_config(self.config_path, self.presets, layer)


def setup_logging(level: str) -> None:
    logging.basicConfig(level=level.upper(), format=LOG_FORMAT, stream=sys.stderr, force=True)


F = TypeVar("F", bound=Callable[..., Any])


def handled(fn: F) -> F:
    """VidscoreError -> one stderr line and exit 1."""

    @functools.wraps(fn)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return fn(*args, **kwargs)
        except VidscoreError as e:
            typer.echo(f"error: {e}", err=True)
            raise typer.Exit(code=1)

    return wrapper  # type: ignore[return-value]


def _state(ctx: typer.Context) -> State:
    return ctx.obj if isinstance(ctx.obj, State) else State()


def _emit(name: str, results: Any, table: Table, cfg: RunConfig, inputs: dict[str, Path],
          out: Optional[Path]) -> None:
    text = render_report(name, results, table, cfg.format, provenance(cfg, inputs))
    write_report(text, out)
    typer.echo(text, nl=False)


@app.callback()
def main(
    ctx: typer.Context,
    config: Optional[Path] = typer.Option(None, "--config", help="YAML run configuration."),
    seed: Optional[int] = typer.Option(None, "--seed"),
    jobs: Optional[int] = typer.Option(None, "--jobs", help="Parallelism bound."),
    fmt: Optional[ReportFormat] = typer.Option(None, "--format", help="Report format."),
    preset: Optional[list[str]] = typer.Option(None, "--preset", help="Named preset; repeatable."),
    log_level: Optional[str] = typer.Option(None, "--log-level"),
) -> None:
    setup_logging(log_level or settings.log_level)
    overrides = {"seed": seed, "jobs": jobs, "format": fmt.value if fmt else None}
    ctx.obj = State(
        config_path=config,
        presets=list(preset or []),
        overrides={k: v for k, v in overrides.items() if v is not None},
    )


# -------------------------
# Curation
# -------------------------
@app.command("filter-prompts")
@handled
def filter_prompts(
    ctx: typer.Context,
    inp: Path = typer.Argument(..., help="Prompt-candidate JSONL."),
    out: Path = typer.Argument(..., help="Kept (possibly revised) prompts."),
    audit: Path = typer.Option(..., "--audit", help="One verdict or error record per input line."),
    semantic: bool = typer.Option(False, "--semantic", help="Run the LLM screen on rule survivors."),
) -> None:
    cfg = _state(ctx).run_config()
    validate_inputs([inp])

    audit_rows: list[dict[str, Any]] = []
    candidates: list[tuple[int, PromptCandidate, PromptVerdict]] = []
    hard_errors = 0
    for line_no, rec in iter_records(inp, PromptCandidate):
        if isinstance(rec, LineError):
            hard_errors += 1
            audit_rows.append(rec.to_json())
            log.warning("%s:%d: %s", inp, line_no, rec.message)
            continue
        try:
            candidates.append((line_no, rec, filter_prompt(rec)))
        except VidscoreError as e:
            hard_errors += 1
            audit_rows.append(LineError(line_no, str(e)).to_json())
            log.warning("%s:%d: %s", inp, line_no, e)

    if semantic:
        assert_runtime_config(cfg)
        survivors = [(n, c) for n, c, v in candidates if v.kept]
        llm = ChatTextJudge(cfg.endpoint)

        async def screen() -> list[PromptVerdict]:
            try:
                return await semantic_filter_batch([c for _, c in survivors], llm, jobs=cfg.jobs)
            finally:
                await llm.aclose()

        revised = {n: v for (n, _), v in zip(survivors, asyncio.run(screen()))}
        candidates = [(n, c, revised.get(n, v)) for n, c, v in candidates]

    kept = []
    for line_no, cand, verdict in candidates:
        audit_rows.append({"line_no": line_no, **verdict.to_json()})
        if verdict.kept:
            kept.append(cand.model_copy(update={"text": verdict.final_text}))
    audit_rows.sort(key=lambda r: r["line_no"])

    write_records(audit, audit_rows)
    write_records(out, kept)
    counts = Counter(r.get("verdict", "error") for r in audit_rows)
    log.info("filter-prompts: %s", ", ".join(f"{k}={v}" for k, v in sorted(counts.items())))
    if hard_errors:
        typer.echo(f"error: {hard_errors} malformed input line(s); see {audit}", err=True)
        raise typer.Exit(code=1)


@app.command("augment-camera")
@handled
def augment_camera(
    ctx: typer.Context,
    inp: Path = typer.Argument(...),
    out: Path = typer.Argument(...),
    motion: Optional[str] = typer.Option(None, "--motion", help="Fixed motion; seeded choice when omitted."),
) -> None:
    cfg = _state(ctx).run_config()
    validate_inputs([inp])
    if motion is not None and motion not in {m.value for m in CameraMotion}:
        raise InputError(f"unknown motion {motion!r}; choose from: {', '.join(m.value for m in CameraMotion)}")
    rows = []
    for n, row in enumerate(read_dicts(inp), start=1):
        if not isinstance(row.get("text"), str):
            raise InputError(f"{inp}:{n}: row has no text")
        key = row.get("prompt_id", n)
        rows.append({**row, "text": augment_camera_motion(row["text"], motion, seed=f"{cfg.seed}:{key}")})
    write_records(out, rows)
    log.info("augment-camera: %d prompts", len(rows))


@app.command("sample-models")
@handled
def sample_models(
    ctx: typer.Context,
    prompts: Path = typer.Argument(..., help="JSONL with prompt_id per row."),
    out: Path = typer.Argument(...),
    roster: Optional[Path] = typer.Option(None, "--roster", help="YAML tier -> model ids."),
) -> None:
    cfg = _state(ctx).run_config()
    validate_inputs([prompts, roster])
    tiers = load_roster(roster)
    quota = TierQuota(bounds=cfg.tier_bounds, total=cfg.models_per_prompt)
    rows = []
    for n, row in enumerate(read_dicts(prompts), start=1):
        prompt_id = str(row.get("prompt_id", n))
        models = sample_models_for_prompt(tiers, seed=f"{cfg.seed}:{prompt_id}", quota=quota)
        hist = tier_histogram(models, tiers)
        rows.append({"prompt_id": prompt_id, "models": models, "tiers": {t.value: hist[t] for t in Tier}})
    write_records(out, rows)
    log.info("sample-models: %d prompts x %d models", len(rows), quota.total)


@app.command("reconcile")
@handled
def reconcile(
    ctx: typer.Context,
    inp: Path = typer.Argument(..., help="Rows {video_id, human, model_attempts: [triple, ...]}."),
    out: Path = typer.Argument(...),
    max_attempts: int = typer.Option(3, "--max-attempts", min=1),
) -> None:
    cfg = _state(ctx).run_config()
    validate_inputs([inp])
    rows, pairs = [], []
    statuses: Counter[str] = Counter()
    hard_errors = 0
    for n, row in enumerate(read_dicts(inp), start=1):
        video_id = row.get("video_id", str(n))
        try:
            human = ScoreTriple.model_validate(row["human"])
            recorded = [ScoreTriple.model_validate(t) for t in row.get("model_attempts") or []]
        except (KeyError, ValueError) as e:
            raise InputError(f"{inp}:{n}: {e}") from e
        if recorded:
            pairs.append((human, recorded[0]))

        def supplier(attempt: int, recorded: list[ScoreTriple] = recorded) -> ScoreTriple:
            if attempt > len(recorded):
                raise SupplierError(f"no recorded model triple for {video_id}", attempt)
            return recorded[attempt - 1]

        try:
            outcome = reconcile_entry(human, supplier, max_attempts=max_attempts)
        except SupplierError as e:
            hard_errors += 1
            rows.append({"video_id": video_id, "error": str(e), "attempts": e.attempts})
            log.warning("reconcile %s: %s", video_id, e)
            continue
        statuses[outcome.status.value] += 1
        rows.append({"video_id": video_id, **outcome.model_dump(mode="json", exclude_none=True)})
    write_records(out, rows)

    summary: dict[str, Any] = {s.value: statuses.get(s.value, 0) for s in ReconcileStatus}
    summary.pop(ReconcileStatus.RESCORE_NEEDED.value)
    summary.update({f"diff {k}": v for k, v in difference_histogram(pairs).items()})
    _emit("reconcile", summary, key_value_table(summary, "count", "value"), cfg, {"input": inp}, None)
    if hard_errors:
        typer.echo(f"error: {hard_errors} entr(ies) ran out of recorded model triples", err=True)
        raise typer.Exit(code=1)


# -------------------------
# Judging
# -------------------------
def _done_ids(path: Path) -> set[str]:
    if not path.exists():
        return set()
    return {str(row["video_id"]) for row in read_dicts(path) if "video_id" in row}


@app.command("judge")
@handled
def judge(
    ctx: typer.Context,
    videos: Path = typer.Argument(..., help="VideoEntry JSONL."),
    out: Path = typer.Argument(..., help="Judgment JSONL; existing rows are kept and skipped."),
    frame_source: Optional[str] = typer.Option(None, "--frame-source", help="uri | dir | ffmpeg"),
    frame_dir: Optional[Path] = typer.Option(None, "--frame-dir"),
) -> None:
    cfg = _state(ctx).run_config(
        frame_source=frame_source, frame_dir=str(frame_dir) if frame_dir else None
    )
    validate_inputs([videos, frame_dir])
    assert_runtime_config(cfg)
    entries = read_records(videos, VideoEntry)
    done = _done_ids(out)
    todo = [e for e in entries if e.video_id not in done]
    log.info("judge: %d videos, %d already judged, %d to go", len(entries), len(entries) - len(todo), len(todo))

    plan = FrameSamplingPlan(fps=cfg.fps, max_frames=cfg.max_frames)
    extractor = get_frame_extractor(cfg.frame_source, cfg.frame_dir)
    failed: list[str] = []
    failure: Optional[EndpointError] = None

    with atomic_writer(out, mode="a") as f:

        def on_result(j: Judgment) -> None:
            write_line(f, j)
            if j.parse_failed:
                failed.append(j.video_id)

        async def run() -> None:
            async with JudgeClient(cfg.endpoint, extractor=extractor, score_mode=cfg.score_mode) as client:
                await client.judge_batch(todo, plan, on_result=on_result)

        try:
            asyncio.run(run())
        except EndpointError as e:
            # keep what finished; the rest is picked up on the next run
            failure = e

    if failure is not None:
        raise failure
    if failed:
        typer.echo(f"error: {len(failed)} judgment(s) could not be parsed: {', '.join(sorted(failed)[:10])}", err=True)
        raise typer.Exit(code=1)


# -------------------------
# Evaluation
# -------------------------
def _predictions(path: Path, use_soft: bool) -> dict[str, PartialTriple]:
    out: dict[str, PartialTriple] = {}
    for rec in read_records(path, PredictionRecord):
        picked = None if rec.parse_failed else rec.pick(use_soft)
        if picked is not None:
            out[rec.video_id] = picked
    return out


@app.command("eval-pointscore")
@handled
def eval_pointscore(
    ctx: typer.Context,
    judgments: Path = typer.Argument(..., help="Judgment or rescaled-score JSONL."),
    ground_truth: Path = typer.Argument(...),
    out: Optional[Path] = typer.Option(None, "--out"),
    allow_partial: bool = typer.Option(False, "--allow-partial"),
    label: str = typer.Option("judge", "--label"),
) -> None:
    cfg = _state(ctx).run_config()
    validate_inputs([judgments, ground_truth])
    preds = _predictions(judgments, cfg.use_soft_scores)
    gts = read_records(ground_truth, GroundTruthRecord)

    missing = [g.video_id for g in gts if g.video_id not in preds]
    coverage = 1.0 - len(missing) / len(gts) if gts else 0.0
    if missing:
        if not allow_partial and coverage < cfg.coverage_threshold:
            raise JoinError(f"{len(missing)} ground-truth video(s) without a usable prediction", missing)
        log.warning("eval-pointscore: %d ground-truth video(s) without prediction skipped", len(missing))
    joined = [(preds[g.video_id], g.scores) for g in gts if g.video_id in preds]
    if not joined:
        raise InputError("no ground-truth video has a usable prediction")

    report = point_score_report([p for p, _ in joined], [g for _, g in joined])
    results = {**report.to_json(), "coverage": coverage, "missing": len(missing)}
    _emit("eval-pointscore", results, point_score_table(report, label), cfg,
          {"judgments": judgments, "ground_truth": ground_truth}, out)


@app.command("eval-preference")
@handled
def eval_preference(
    ctx: typer.Context,
    pairs: Path = typer.Argument(..., help="PreferencePair JSONL."),
    judgments: Path = typer.Argument(...),
    scale_min: float = typer.Option(1.0, "--scale-min"),
    scale_max: float = typer.Option(5.0, "--scale-max"),
    margin: Optional[float] = typer.Option(None, "--margin", help="Tie margin as a fraction of the scale."),
    out: Optional[Path] = typer.Option(None, "--out"),
) -> None:
    cfg = _state(ctx).run_config(margin_frac=margin)
    validate_inputs([pairs, judgments])
    records = read_records(judgments, PredictionRecord)
    soft = cfg.use_soft_scores and any(r.soft_scores is not None for r in records)
    scores = {
        r.video_id: picked
        for r in records
        if not r.parse_failed and (picked := r.pick(soft)) is not None
    }
    report = preference_report(
        read_records(pairs, PreferencePair),
        scores,
        scale_min=scale_min,
        scale_max=scale_max,
        margin_frac=cfg.margin_frac,
        integer_scores=not soft,
    )
    results = {
        "scopes": report.to_json(),
        "predictions": {k: v.value for k, v in sorted(report.predictions.items())},
        "scale": [scale_min, scale_max],
        "margin_frac": cfg.margin_frac,
        "integer_scores": not soft,
    }
    _emit("eval-preference", results, preference_table(report), cfg,
          {"pairs": pairs, "judgments": judgments}, out)


@app.command("iaa")
@handled
def iaa(
    ctx: typer.Context,
    annotations: Path = typer.Argument(..., help="AnnotationRecord JSONL."),
    level: Optional[KrippendorffLevel] = typer.Option(None, "--level"),
    out: Optional[Path] = typer.Option(None, "--out"),
) -> None:
    cfg = _state(ctx).run_config(krippendorff_level=level.value if level else None)
    validate_inputs([annotations])
    records = read_records(annotations, AnnotationRecord)
    for rec in records:
        for warning in annotation_warnings(rec):
            log.warning("lint: %s", warning)

    by_item: OrderedDict[str, dict[str, ScoreTriple]] = OrderedDict()
    for rec in records:
        by_item.setdefault(rec.video_id, {})[rec.annotator_id] = rec.scores
    single = [v for v, ann in by_item.items() if len(ann) < 2]
    if single:
        log.warning("iaa: %d item(s) with a single annotator excluded", len(single))
    items = {v: ann for v, ann in by_item.items() if len(ann) >= 2}
    if not items:
        raise InputError("no item has two or more annotators")
    annotators = sorted({a for ann in items.values() for a in ann})

    reports = {}
    for dim in DIMENSIONS:
        matrix = [
            [ann[a].get(dim) if a in ann else None for ann in items.values()]
            for a in annotators
        ]
        reports[dim] = agreement_report(matrix, cfg.krippendorff_level)
    results = {
        "level": cfg.krippendorff_level.value,
        "excluded_single_annotator": len(single),
        **{dim.value: r.to_json() for dim, r in reports.items()},
    }
    _emit("iaa", results, agreement_table(reports), cfg, {"annotations": annotations}, out)


# -------------------------
# Baselines
# -------------------------
@app.command("rescale")
@handled
def rescale(
    ctx: typer.Context,
    native: Path = typer.Argument(..., help="Rows {video_id, native: {...}} or flat native fields."),
    out: Path = typer.Argument(...),
    spec: str = typer.Option(..., "--spec", help="Rescale spec name."),
    specs_file: Optional[Path] = typer.Option(None, "--specs", help="YAML spec table; packaged table by default."),
) -> None:
    validate_inputs([native, specs_file])
    chosen = get_spec(spec, load_rescale_specs(specs_file))
    rows = []
    for n, row in enumerate(read_dicts(native), start=1):
        if "video_id" not in row:
            raise InputError(f"{native}:{n}: row has no video_id")
        fields = row.get("native", row)
        try:
            scores = rescale_native(fields, chosen)
        except VidscoreError as e:
            raise InputError(f"{native}:{n}: {e}") from e
        rows.append({
            "video_id": row["video_id"],
            "scores": scores.model_dump(mode="json", exclude_none=True),
            "spec": chosen.name,
        })
    write_records(out, rows)
    log.info("rescale: %d rows with spec %s", len(rows), chosen.name)


@app.command("derive-pairs")
@handled
def derive_pairs(
    ctx: typer.Context,
    scored: Path = typer.Argument(..., help="Rows with video_id and a score field (or scores triple)."),
    out: Path = typer.Argument(...),
    n_pairs: int = typer.Option(..., "--n", min=0),
    score_field: str = typer.Option("overall", "--score-field"),
) -> None:
    cfg = _state(ctx).run_config()
    validate_inputs([scored])
    entries = []
    for n, row in enumerate(read_dicts(scored), start=1):
        value = row.get(score_field)
        if value is None and isinstance(row.get("scores"), (dict, list)):
            value = PartialTriple.model_validate(row["scores"]).mean()
        if value is None or "video_id" not in row:
            raise InputError(f"{scored}:{n}: row needs video_id and {score_field!r} (or scores)")
        entries.append((str(row["video_id"]), float(value)))
    pairs = derive_pairs_from_scores(entries, n_pairs, seed=cfg.seed)
    write_records(out, pairs)
    log.info("derive-pairs: %d pairs from %d videos", len(pairs), len(entries))


# -------------------------
# Reward and best-of-n
# -------------------------
@app.command("reward")
@handled
def reward(
    ctx: typer.Context,
    judgments: Path = typer.Argument(...),
    ground_truth: Path = typer.Argument(...),
    out: Path = typer.Argument(...),
    lam: Optional[float] = typer.Option(None, "--lambda", help="Format-reward weight."),
    report: Optional[Path] = typer.Option(None, "--report", help="Group advantage report."),
) -> None:
    cfg = _state(ctx).run_config(**{"lambda": lam})
    validate_inputs([judgments, ground_truth])
    gts = {g.video_id: g for g in read_records(ground_truth, GroundTruthRecord)}
    rows: list[dict[str, Any]] = []
    groups: OrderedDict[str, list[int]] = OrderedDict()
    for j in read_records(judgments, Judgment):
        g = gts.get(j.video_id)
        if g is None:
            raise JoinError("judgments without ground truth", [j.video_id])
        if len(g.scores.available()) != len(DIMENSIONS):
            raise InputError(f"ground truth for {j.video_id} must carry all three scores")
        values = [float(g.scores.get(d)) for d in DIMENSIONS]  # type: ignore[arg-type]
        if not all(v.is_integer() for v in values):
            raise InputError(f"ground truth for {j.video_id} must be integer scores, got {values}")
        gt = ScoreTriple.of(*(int(v) for v in values))
        breakdown = total_reward(None if j.parse_failed else j.scores, gt, j.raw_text, cfg.effective_lambda)
        row: dict[str, Any] = {"video_id": j.video_id, **breakdown.to_json()}
        rollout_id = j.extras.get("rollout_id")
        if rollout_id is not None:
            row["rollout_id"] = rollout_id
            groups.setdefault(str(rollout_id), []).append(len(rows))
        rows.append(row)

    summary = []
    for rollout_id, idx in groups.items():
        if len(idx) != cfg.group_size:
            log.warning("rollout %s has %d rows; configured group size is %d", rollout_id, len(idx), cfg.group_size)
        if len(idx) < 2:
            continue
        advantages = group_advantages([rows[i]["total"] for i in idx])
        for i, a in zip(idx, advantages):
            rows[i]["advantage"] = a
        totals = [rows[i]["total"] for i in idx]
        summary.append({
            "rollout_id": rollout_id,
            "size": len(idx),
            "mean_reward": sum(totals) / len(totals),
            "advantage_sum": sum(advantages),
        })
    write_records(out, rows)
    log.info("reward: %d rows, %d rollout groups, lambda=%s", len(rows), len(groups), cfg.effective_lambda)
    if summary:
        columns = ["rollout_id", "size", "mean_reward", "advantage_sum"]
        _emit("reward", {"lambda": cfg.effective_lambda, "groups": summary}, rows_table(columns, summary),
              cfg, {"judgments": judgments, "ground_truth": ground_truth}, report)


def _read_external(path: Path) -> dict[str, dict[str, float]]:
    """video_id -> metric values, from CSV (header row) or JSONL."""
    if path.suffix.lower() == ".csv":
        with open(path, newline="", encoding="utf-8") as f:
            raw = list(csv.DictReader(f))
    else:
        raw = read_dicts(path)
    out: dict[str, dict[str, float]] = {}
    for n, row in enumerate(raw, start=1):
        if "video_id" not in row:
            raise InputError(f"{path}:{n}: row has no video_id")
        metrics = {}
        for k, v in row.items():
            if k == "video_id" or v in (None, ""):
                continue
            try:
                metrics[k] = float(v)
            except (TypeError, ValueError) as e:
                raise InputError(f"{path}:{n}: {k}={v!r} is not numeric") from e
        out[str(row["video_id"])] = metrics
    return out


@app.command("bon")
@handled
def bon(
    ctx: typer.Context,
    candidates: Path = typer.Argument(..., help="Judgment JSONL with prompt_id (and optional generator)."),
    external: Path = typer.Argument(..., help="Per-video external metric values, CSV or JSONL."),
    metrics: Optional[str] = typer.Option(None, "--metrics", help="Comma-separated metric names."),
    out: Optional[Path] = typer.Option(None, "--out"),
) -> None:
    cfg = _state(ctx).run_config()
    validate_inputs([candidates, external])
    sets = group_candidates(read_records(candidates, Judgment))
    report = bon_report(
        sets,
        _read_external(external),
        seed=cfg.seed,
        metrics=[m.strip() for m in metrics.split(",") if m.strip()] if metrics else None,
        use_soft=cfg.use_soft_scores,
        score_mode=cfg.score_mode,
    )
    _emit("bon", report.to_json(), bon_table(report), cfg, {"candidates": candidates, "external": external}, out)


# -------------------------
# Local endpoint
# -------------------------
@app.command("mock-endpoint")
def mock_endpoint(
    host: str = typer.Option("127.0.0.1", "--host"),
    port: int = typer.Option(8000, "--port"),
    fail_first: int = typer.Option(0, "--fail-first", help="Answer the first N completions with 503."),
    latency: float = typer.Option(0.0, "--latency", help="Seconds of delay per completion."),
    reply: Optional[Path] = typer.Option(None, "--reply", help="Fixed reply text; sim judge when omitted."),
) -> None:
    responder = canned_responder(reply.read_text(encoding="utf-8")) if reply else None
    uvicorn.run(
        create_mock_app(responder=responder, fail_first=fail_first, latency_s=latency),
        host=host,
        port=port,
        log_level=settings.log_level.lower(),
    )


if __name__ == "__main__":
    app()
