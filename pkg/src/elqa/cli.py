"""Command-line entry point wiring the modules into reproducible pipelines.

Subcommands: convert, sample, train, predict, evaluate, analyze.  Every
command validates its inputs up front, never mutates them, writes nothing
on failure, and drops a resolved-configuration snapshot next to its
outputs.  Exit status is 0 on success, 1 with a diagnostic on stderr
otherwise.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from elqa import analysis as analysis_mod
from elqa import corpus_io, metrics, sampling
from elqa.converters import (
    convert_coref,
    convert_sluice,
    convert_squad,
    convert_vpe,
    conversion_stats,
    read_conll,
    read_sluice_records,
    read_vpe_records,
    render_stats,
)
from elqa.converters.sluice import render_drop_report
from elqa.converters.vpe import load_tokenized_documents
from elqa.core import Split, Task
from elqa.errors import ElqaError
from elqa.model.config import (
    config_to_dict,
    encoder_config_from_dict,
    trainer_config_from_dict,
)
from elqa.model.inference import baseline_previous_sentence, predict_spans
from elqa.model.training import load_checkpoint, train
from elqa.predictions import read_predictions, write_predictions

SPLIT_CHOICES = [s.value for s in Split]
TASK_CHOICES = [t.value for t in Task]


def _require_paths(*paths) -> None:
    for p in paths:
        if p is not None and not Path(p).exists():
            raise ElqaError(f"input path does not exist: {p}")


def _write_snapshot(stem: Path, payload: dict) -> None:
    stem.parent.mkdir(parents=True, exist_ok=True)
    path = stem if stem.suffix == ".json" else Path(str(stem) + ".run.json")
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")


def _args_payload(args) -> dict:
    return {k: v for k, v in vars(args).items() if k != "func"}


def _load_corpus_selection(stems, split=None, task=None):
    instances, documents = [], {}
    for stem in stems:
        insts, docs = corpus_io.load_corpus(stem)
        instances.extend(insts)
        for d in docs:
            if d.doc_id in documents and documents[d.doc_id] != d:
                raise ElqaError(f"conflicting documents for id {d.doc_id!r}")
            documents[d.doc_id] = d
    if split is not None:
        instances = [i for i in instances if i.split is Split(split)]
    if task is not None:
        instances = [i for i in instances if i.task is Task(task)]
    return instances, documents


# --- convert ----------------------------------------------------------------


def _cmd_convert(args) -> int:
    out = Path(args.out)
    if args.source == "sluice":
        _require_paths(args.input)
        with open(args.input, encoding="utf-8") as f:
            records = read_sluice_records(f)
        result = convert_sluice(records)
        instances, documents = result.instances, result.documents
        extra_report = render_drop_report(result.drops)
    elif args.source == "vpe":
        _require_paths(args.records, args.documents)
        with open(args.records, encoding="utf-8") as f:
            records = read_vpe_records(f)
        if Path(args.documents).is_dir():
            documents = load_tokenized_documents(args.documents)
        else:
            documents = corpus_io.load_documents(args.documents)
        instances = convert_vpe(records, {d.doc_id: d for d in documents})
        documents = [d for d in documents if d.doc_id in {i.context_doc_id for i in instances}]
        extra_report = ""
    elif args.source == "conll":
        task = Task(args.task)
        instances, documents = [], []
        for split, path in (("train", args.train), ("dev", args.dev), ("test", args.test)):
            if path is None:
                continue
            _require_paths(path)
            with open(path, encoding="utf-8") as f:
                for coref_doc in read_conll(f):
                    instances.extend(convert_coref(coref_doc, task, Split(split)))
                    documents.append(coref_doc.document)
        extra_report = ""
    elif args.source == "squad":
        instances, documents, drops = [], [], []
        for split, path in (("train", args.train), ("dev", args.dev)):
            if path is None:
                continue
            _require_paths(path)
            with open(path, encoding="utf-8") as f:
                result = convert_squad(f, Split(split))
            instances.extend(result.instances)
            documents.extend(result.documents)
            drops.extend(result.drops)
        extra_report = "".join(
            f"[dropped] {d.qa_id}: {d.reason}\n" for d in drops
        )
    else:  # pragma: no cover - argparse restricts choices
        raise ElqaError(f"unknown source {args.source!r}")

    if not instances:
        raise ElqaError("conversion produced no instances")
    doc_map = {d.doc_id: d for d in documents}
    stats = conversion_stats(instances, doc_map)
    corpus_io.save_corpus(instances, documents, out)
    sys.stdout.write(render_stats(stats))
    if extra_report:
        sys.stdout.write(extra_report)
    _write_snapshot(out, {"command": "convert", "args": _args_payload(args)})
    return 0


# --- sample -----------------------------------------------------------------


def _cmd_sample(args) -> int:
    _require_paths(args.plan)
    with open(args.plan, encoding="utf-8") as f:
        plan = sampling.load_plan(f)
    instances, documents = _load_corpus_selection(args.data)
    pools = sampling.pools_by_task(instances)
    mixture = sampling.build_mixture(plan, pools)
    used_docs = {i.context_doc_id for i in mixture.instances}
    corpus_io.save_corpus(
        mixture.instances,
        [d for d in documents.values() if d.doc_id in used_docs],
        args.out,
    )
    provenance = {t.value: n for t, n in mixture.provenance.items()}
    sys.stdout.write(
        f"mixture of {len(mixture)} instances; provenance "
        f"{json.dumps(provenance, sort_keys=True)}\n"
    )
    _write_snapshot(
        Path(args.out), {"command": "sample", "args": _args_payload(args), "provenance": provenance}
    )
    return 0


# --- train ------------------------------------------------------------------


def _cmd_train(args) -> int:
    _require_paths(args.config)
    with open(args.config, encoding="utf-8") as f:
        cfg = json.load(f)
    unknown = set(cfg) - {"task", "plan", "encoder", "trainer", "seeds"}
    if unknown:
        raise ElqaError(f"unknown train-config fields {sorted(unknown)}")
    if "task" not in cfg:
        raise ElqaError("train config needs a task")
    task = Task(cfg["task"])
    seeds = [int(s) for s in cfg.get("seeds", [13])]
    if not seeds:
        raise ElqaError("seeds list must be non-empty")
    encoder = encoder_config_from_dict(cfg.get("encoder", {}))
    trainer = trainer_config_from_dict(cfg.get("trainer", {}))
    plan = sampling.plan_from_dict(cfg["plan"]) if "plan" in cfg else None
    if plan is not None and plan.main_task is not task:
        raise ElqaError("plan main_task does not match the configured task")

    instances, documents = _load_corpus_selection(args.data)
    dev = [i for i in instances if i.task is task and i.split is Split.DEV]
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    results = []
    for seed in seeds:
        run_trainer = replace(trainer, seed=seed)
        if plan is None:
            mixture = [i for i in instances if i.task is task and i.split is Split.TRAIN]
            resampler = None
        else:
            pools = sampling.pools_by_task(instances)
            run_plan = replace(plan, seed=seed)
            mixture = sampling.build_mixture(run_plan, pools)
            resampler = (
                (lambda epoch, p=run_plan, pls=pools: sampling.resample(p, pls, epoch))
                if plan.resample_each_epoch
                else None
            )
        result = train(mixture, dev, documents, encoder, run_trainer, resampler=resampler)
        results.append(result)
        result.checkpoint.save(out_dir / f"checkpoint-seed{seed}.npz")
        with open(out_dir / f"history-seed{seed}.jsonl", "w", encoding="utf-8") as f:
            for rec in result.history:
                f.write(
                    json.dumps(
                        {
                            "epoch": rec.epoch,
                            "train_loss": rec.train_loss,
                            "best_loss_so_far": rec.best_loss_so_far,
                            "dev_f1": rec.dev_f1,
                            "is_best": rec.is_best,
                        },
                        sort_keys=True,
                    )
                    + "\n"
                )
        if result.skipped:
            with open(out_dir / f"skipped-seed{seed}.txt", "w", encoding="utf-8") as f:
                f.write("\n".join(result.skipped) + "\n")
    scores = [r.best_dev_f1 for r in results if r.best_dev_f1 is not None]
    summary = {
        "task": task.value,
        "seeds": seeds,
        "dev_f1_per_seed": {str(s): r.best_dev_f1 for s, r in zip(seeds, results)},
        "dev_f1_mean": (sum(scores) / len(scores)) if scores else None,
    }
    with open(out_dir / "summary.json", "w", encoding="utf-8") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
    _write_snapshot(
        out_dir / "resolved-config.json",
        {
            "command": "train",
            "args": _args_payload(args),
            "task": task.value,
            "seeds": seeds,
            "encoder": config_to_dict(encoder),
            "trainer": config_to_dict(trainer),
            "plan": None if plan is None else {
                "main_task": plan.main_task.value,
                "auxiliary_tasks": [t.value for t in plan.auxiliary_tasks],
                "seed": plan.seed,
                "resample_each_epoch": plan.resample_each_epoch,
            },
        },
    )
    mean = summary["dev_f1_mean"]
    sys.stdout.write(
        f"trained {len(seeds)} run(s); mean best dev F1 "
        f"{'n/a' if mean is None else f'{mean:.4f}'}\n"
    )
    return 0


# --- predict ----------------------------------------------------------------


def _cmd_predict(args) -> int:
    instances, documents = _load_corpus_selection(args.data, args.split, args.task)
    if not instances:
        raise ElqaError("no instances selected")
    if args.baseline == "previous-sentence":
        predictions = {}
        for inst in instances:
            doc = documents.get(inst.context_doc_id)
            if doc is None:
                raise ElqaError(f"missing document {inst.context_doc_id!r}")
            predictions[inst.instance_id] = baseline_previous_sentence(inst, doc)
        diagnostics = {}
    else:
        if args.checkpoint is None:
            raise ElqaError("predict needs --checkpoint (or --baseline)")
        _require_paths(args.checkpoint)
        model = load_checkpoint(args.checkpoint).model()
        predictions, diagnostics = predict_spans(
            model,
            instances,
            documents,
            max_answer_length=args.max_answer_length,
            window_size=args.window_size,
            window_stride=args.window_stride,
        )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as f:
        write_predictions(predictions, f)
    for instance_id in sorted(diagnostics):
        sys.stderr.write(f"note: {instance_id}: {diagnostics[instance_id]}\n")
    _write_snapshot(out, {"command": "predict", "args": _args_payload(args)})
    return 0


# --- evaluate ---------------------------------------------------------------


def _cmd_evaluate(args) -> int:
    _require_paths(args.predictions)
    instances, _ = _load_corpus_selection(args.data, args.split, args.task)
    if not instances:
        raise ElqaError("no instances selected")
    with open(args.predictions, encoding="utf-8") as f:
        predictions = read_predictions(f)
    with_coref = {"auto": None, "on": True, "off": False}[args.coref]
    if args.keep is not None:
        _require_paths(args.keep)
        with open(args.keep, encoding="utf-8") as f:
            keep = {line.strip() for line in f if line.strip()}
        predictions = {k: v for k, v in predictions.items() if k in keep}
        report = metrics.score_subset(
            instances, predictions, keep,
            with_coref=with_coref, coref_per_document=args.per_document,
        )
    else:
        report = metrics.evaluate_instances(
            instances, predictions,
            with_coref=with_coref, coref_per_document=args.per_document,
        )
    sys.stdout.write(metrics.render_report(report))
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", encoding="utf-8") as f:
            metrics.write_report_records(report, f)
        _write_snapshot(out, {"command": "evaluate", "args": _args_payload(args)})
    return 0


# --- analyze ----------------------------------------------------------------


def _cmd_analyze(args) -> int:
    _require_paths(args.predictions)
    instances, _ = _load_corpus_selection(args.data, args.split, args.task)
    if not instances:
        raise ElqaError("no instances selected")
    with open(args.predictions, encoding="utf-8") as f:
        predictions = read_predictions(f)
    stray = sorted(set(predictions) - {i.instance_id for i in instances})
    if stray:
        raise ElqaError(f"prediction for unknown instance id {stray[0]!r}")
    bundle = analysis_mod.analyze(instances, predictions, args.min_occurrences)
    sys.stdout.write(analysis_mod.render_analysis(bundle))
    if args.plot:
        if not bundle.forms:
            raise ElqaError("no referential-form rows to plot")
        analysis_mod.plot_form_breakdown(bundle.forms, args.plot)
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", encoding="utf-8") as f:
            analysis_mod.write_analysis_records(bundle, f)
        _write_snapshot(out, {"command": "analyze", "args": _args_payload(args)})
    return 0


# --- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="elqa",
        description="Ellipsis/coreference resolution as extractive QA.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="convert a source corpus to the unified format")
    src = p.add_subparsers(dest="source", required=True)
    ps = src.add_parser("sluice")
    ps.add_argument("--input", required=True)
    ps.add_argument("--out", required=True)
    pv = src.add_parser("vpe")
    pv.add_argument("--records", required=True)
    pv.add_argument(
        "--documents",
        required=True,
        help="documents .jsonl file, or a directory of pre-tokenized .txt files",
    )
    pv.add_argument("--out", required=True)
    pc = src.add_parser("conll")
    pc.add_argument("--task", required=True, choices=["coref_ontonotes", "coref_wikicoref"])
    pc.add_argument("--train")
    pc.add_argument("--dev")
    pc.add_argument("--test")
    pc.add_argument("--out", required=True)
    pq = src.add_parser("squad")
    pq.add_argument("--train")
    pq.add_argument("--dev")
    pq.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_convert)

    p = sub.add_parser("sample", help="build a joint training mixture")
    p.add_argument("--plan", required=True, help="sampling-plan JSON file")
    p.add_argument("--data", required=True, nargs="+", help="unified corpus stem(s)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("train", help="train the span resolver")
    p.add_argument("--config", required=True)
    p.add_argument("--data", required=True, nargs="+")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="predict spans for a corpus split")
    p.add_argument("--checkpoint")
    p.add_argument("--baseline", choices=["previous-sentence"])
    p.add_argument("--data", required=True, nargs="+")
    p.add_argument("--split", choices=SPLIT_CHOICES)
    p.add_argument("--task", choices=TASK_CHOICES)
    p.add_argument("--max-answer-length", type=int, default=100)
    p.add_argument("--window-size", type=int, default=400)
    p.add_argument("--window-stride", type=int, default=200)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("evaluate", help="score a prediction file")
    p.add_argument("--data", required=True, nargs="+")
    p.add_argument("--predictions", required=True)
    p.add_argument("--split", choices=SPLIT_CHOICES)
    p.add_argument("--task", choices=TASK_CHOICES)
    p.add_argument("--coref", choices=["auto", "on", "off"], default="auto")
    p.add_argument("--per-document", action="store_true")
    p.add_argument("--keep", help="file with one instance id per line")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("analyze", help="error-analysis reports")
    p.add_argument("--data", required=True, nargs="+")
    p.add_argument("--predictions", required=True)
    p.add_argument("--split", choices=SPLIT_CHOICES)
    p.add_argument("--task", choices=TASK_CHOICES)
    p.add_argument("--min-occurrences", type=int, default=1)
    p.add_argument("--plot")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_analyze)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ElqaError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
