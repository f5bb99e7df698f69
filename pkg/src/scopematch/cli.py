"""Command-line interface.

``scopematch run`` executes one analysis (segmentation / tracking / counting)
and writes the task outputs plus a run manifest; ``metrics`` scores
predictions against ground truth into a JSON report; ``benchmark`` runs the
manifest-driven evaluation harness; ``train`` fits a component on a manifest;
``synth`` generates a synthetic suite; ``serve`` starts the HTTP service.

Exit codes for ``run``: 0 success, 1 input error, 2 backend error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import api
from .core import (
    ExemplarBox,
    ImageSequence,
    RunConfig,
    TaskKind,
    load_image,
    write_float_tiff,
    write_label_tiff,
)
from .errors import BackendUnavailable, ScopeMatchError
from .harness import BoxErrorKind, run_benchmark, write_report
from .metrics import (
    CountRecord,
    RMSE_CONVENTIONAL,
    RMSE_PAPER_LITERAL,
    average_precision,
    mae,
    rmse,
    seg_score,
    tra_lnk,
)
from .tracking import parse_ctc, write_ctc, write_trajectories

TASK_ALIASES = {"seg": "segmentation", "track": "tracking", "count": "counting"}


def _parse_box(text: str) -> ExemplarBox:
    parts = text.split(",")
    if len(parts) != 4:
        raise ValueError(f"exemplar must be x0,y0,w,h, got {text!r}")
    x0, y0, w, h = (float(p) for p in parts)
    return ExemplarBox(x0, y0, w, h)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scopematch",
                                     description="Microscopy analysis by within-image matching")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one analysis")
    run.add_argument("--task", required=True, choices=["seg", "track", "count"])
    run.add_argument("--input", required=True,
                     help="input image path(s), comma-separated for sequences")
    run.add_argument("--exemplar", action="append", default=[],
                     help="exemplar box x0,y0,w,h (repeatable; absent = automatic mode)")
    run.add_argument("--out", required=True)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--backend", default="mock", choices=["mock", "pretrained"])
    run.add_argument("--checkpoint-dir", default=None)
    run.add_argument("--resize-edge", type=int, default=512)
    run.add_argument("--model-id", default=None)

    met = sub.add_parser("metrics", help="score predictions, emit a JSON report")
    met.add_argument("--task", required=True, choices=["seg", "track", "count"])
    met.add_argument("--pred", required=True, action="append",
                     help="prediction file/dir (repeatable, paired with --gt)")
    met.add_argument("--gt", required=True, action="append")
    met.add_argument("--report", required=True)

    bench = sub.add_parser("benchmark", help="manifest-driven evaluation harness")
    bench.add_argument("--manifest", required=True)
    bench.add_argument("--task", required=True, choices=["seg", "track", "count"])
    bench.add_argument("--mode", default="S", choices=["S", "A"])
    bench.add_argument("--n-exemplars", type=int, default=1)
    bench.add_argument("--perturb", default=None,
                       choices=[k.value for k in BoxErrorKind if k != BoxErrorKind.NONE])
    bench.add_argument("--out", required=True)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--backend", default="mock", choices=["mock", "pretrained"])
    bench.add_argument("--checkpoint-dir", default=None)

    train = sub.add_parser("train", help="train a component on a manifest")
    train.add_argument("--component", required=True,
                       choices=["seg", "count", "link", "projector"])
    train.add_argument("--manifest", required=True)
    train.add_argument("--out", required=True, help="checkpoint directory")
    train.add_argument("--mode", default="S", choices=["S", "A"])
    train.add_argument("--backend", default="mock", choices=["mock", "pretrained"])
    train.add_argument("--checkpoint-dir", default=None,
                       help="existing checkpoints (projector for exemplar mode)")
    train.add_argument("--lr", type=float, default=None)
    train.add_argument("--epochs", type=int, default=None)
    train.add_argument("--patience", type=int, default=15)
    train.add_argument("--seed", type=int, default=0)
    train.add_argument("--density-sigma", type=float, default=8.0,
                       help="GT density kernel sigma in px; scale down for small images")

    synth = sub.add_parser("synth", help="generate a synthetic blob suite")
    synth.add_argument("--out", required=True)
    synth.add_argument("--n", type=int, default=20)
    synth.add_argument("--size", type=int, default=128)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--frames", type=int, default=3)

    serve = sub.add_parser("serve", help="start the HTTP inference service")
    serve.add_argument("--config", default=None, help="JSON config file")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=None)
    serve.add_argument("--data-dir", default=None)
    serve.add_argument("--backend", default=None)
    serve.add_argument("--checkpoint-dir", default=None)
    return parser


def _cmd_run(args) -> int:
    task = TASK_ALIASES[args.task]
    paths = [p for p in args.input.split(",") if p]
    for p in paths:
        if not os.path.isfile(p):
            print(f"error: input not found: {p}", file=sys.stderr)
            return 1
    try:
        boxes = [_parse_box(b) for b in args.exemplar]
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if task == "tracking" and len(paths) < 2:
        print("error: tracking needs at least two frames", file=sys.stderr)
        return 1
    if task != "tracking" and len(paths) != 1:
        print(f"error: {args.task} takes exactly one input image", file=sys.stderr)
        return 1

    try:
        comps = api.load_components(args.checkpoint_dir, backend_kind=args.backend,
                                    model_id=args.model_id)
    except BackendUnavailable as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return 2

    cfg = RunConfig(task=TaskKind(task), exemplar_boxes=boxes, rng_seed=args.seed,
                    resize_edge=args.resize_edge)
    try:
        images = [load_image(p) for p in paths]
        os.makedirs(args.out, exist_ok=True)
        outputs: list[str] = []
        if task == "segmentation":
            result = api.analyze_segmentation(images[0], boxes, cfg, comps)
            out = os.path.join(args.out, "labels.tif")
            write_label_tiff(out, result.labels)
            outputs.append(out)
            extra = {"n_instances": result.n_instances}
        elif task == "counting":
            density = api.analyze_counting(images[0], boxes, cfg, comps)
            tif = os.path.join(args.out, "density.tif")
            write_float_tiff(tif, density.values)
            cnt = os.path.join(args.out, "count.json")
            with open(cnt, "w") as fh:
                json.dump({"count_float": round(density.total, 4),
                           "count_int": density.count}, fh, indent=2, sort_keys=True)
            outputs.extend([tif, cnt])
            extra = {"count_int": density.count}
        else:
            graph = api.analyze_tracking(ImageSequence(frames=images), boxes, cfg, comps)
            ctc_dir = os.path.join(args.out, "ctc")
            outputs.extend(write_ctc(graph, ctc_dir))
            traj = os.path.join(args.out, "trajectories.json")
            write_trajectories(graph, traj)
            outputs.append(traj)
            extra = {"n_tracks": len(graph.tracks)}
    except BackendUnavailable as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return 2
    except ScopeMatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    manifest = {
        "task": task,
        "mode": cfg.mode,
        "inputs": paths,
        "exemplar_boxes": [[b.x0, b.y0, b.w, b.h] for b in boxes],
        "seed": args.seed,
        "backend": args.backend,
        "resize_edge": args.resize_edge,
        "outputs": sorted(os.path.relpath(p, args.out) for p in outputs),
        **extra,
    }
    with open(os.path.join(args.out, "run_manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return 0


def _cmd_metrics(args) -> int:
    if len(args.pred) != len(args.gt):
        print("error: --pred and --gt must be paired", file=sys.stderr)
        return 1
    task = TASK_ALIASES[args.task]
    per_sample = []
    aggregates: dict = {}
    from .core.io import read_label_tiff

    if task == "segmentation":
        aps, mean_aps = [], []
        for pred_path, gt_path in zip(args.pred, args.gt):
            res = average_precision(read_label_tiff(pred_path), read_label_tiff(gt_path))
            per_sample.append({"pred": pred_path, "gt": gt_path,
                               "ap@0.5": res.at(0.5), "mean_ap": res.mean_ap,
                               "ap_at": dict(zip(map(str, res.thresholds), res.ap_at))})
            aps.append(res.at(0.5))
            mean_aps.append(res.mean_ap)
        aggregates = {"mean_ap@0.5": float(np.mean(aps)), "mean_ap": float(np.mean(mean_aps))}
    elif task == "tracking":
        tras, lnks, segs = [], [], []
        for pred_path, gt_path in zip(args.pred, args.gt):
            pred, gt = parse_ctc(pred_path), parse_ctc(gt_path)
            tra, lnk = tra_lnk(pred, gt)
            seg = seg_score(list(pred.frames), list(gt.frames))
            per_sample.append({"pred": pred_path, "gt": gt_path,
                               "tra": tra, "lnk": lnk, "seg": seg})
            tras.append(tra)
            lnks.append(lnk)
            segs.append(seg)
        aggregates = {"tra": float(np.mean(tras)), "lnk": float(np.mean(lnks)),
                      "seg": float(np.mean(segs))}
    else:
        records = []
        for pred_path, gt_path in zip(args.pred, args.gt):
            with open(pred_path) as fh:
                pred_count = float(json.load(fh)["count_float"])
            with open(gt_path) as fh:
                gt_data = json.load(fh)
            gt_count = float(len(gt_data["dots"])) if "dots" in gt_data else float(gt_data["count"])
            records.append(CountRecord(c_pred=pred_count, c_gt=gt_count))
            per_sample.append({"pred": pred_path, "gt": gt_path,
                               "pred_count": pred_count, "gt_count": gt_count})
        aggregates = {"mae": mae(records),
                      "rmse": rmse(records, RMSE_CONVENTIONAL),
                      "rmse_paper_literal": rmse(records, RMSE_PAPER_LITERAL)}

    report = {"task": task, "samples": per_sample, "aggregate": aggregates,
              "metric_variants": {"rmse": [RMSE_CONVENTIONAL, RMSE_PAPER_LITERAL]}}
    with open(args.report, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
    print(json.dumps(aggregates, sort_keys=True))
    return 0


def _cmd_benchmark(args) -> int:
    from .training import load_manifest

    manifest = load_manifest(args.manifest)
    try:
        comps = api.load_components(args.checkpoint_dir, backend_kind=args.backend)
    except BackendUnavailable as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return 2
    perturbation = BoxErrorKind(args.perturb) if args.perturb else None
    report = run_benchmark(manifest, TASK_ALIASES[args.task], args.mode, comps,
                           n_exemplars=args.n_exemplars, perturbation=perturbation,
                           seed=args.seed)
    json_path, csv_path = write_report(report, args.out)
    print(json.dumps(report["aggregate"], sort_keys=True))
    print(f"wrote {json_path} and {csv_path}")
    return 0


def _cmd_train(args) -> int:
    import torch

    from .heads import CountingHead, LinkageHead, SegmentationHead
    from .matching import DEFAULT_MATCHING
    from .training import (
        CountingDriver,
        LinkageDriver,
        ProjectorDriver,
        SegmentationDriver,
        TrainConfig,
        build_count_samples,
        build_link_sequences,
        build_projector_samples,
        build_seg_samples,
        load_manifest,
        train_loop,
    )

    manifest = load_manifest(args.manifest)
    comps = api.load_components(args.checkpoint_dir, backend_kind=args.backend)
    os.makedirs(args.out, exist_ok=True)
    torch.manual_seed(args.seed)

    defaults = {"seg": (1e-4, 100), "count": (1e-4, 100), "link": (1e-4, 100),
                "projector": (1e-6, 200)}
    lr, epochs = defaults[args.component]
    lr = args.lr if args.lr is not None else lr
    epochs = args.epochs if args.epochs is not None else epochs
    cfg = TrainConfig(learning_rate=lr, max_epochs=epochs, patience=args.patience,
                      seed=args.seed, fixed_epochs=args.component == "projector")

    if args.component == "projector":
        samples = build_projector_samples(manifest, comps.backend, comps.projector, args.seed)
        driver = ProjectorDriver(comps.projector, comps.backend, samples, DEFAULT_MATCHING)
        ckpt = os.path.join(args.out, api.CHECKPOINT_FILES["projector"])
    elif args.component == "seg":
        samples = build_seg_samples(manifest, comps.backend, comps.projector, args.mode,
                                    args.seed, matching=comps.matching)
        head = SegmentationHead(in_channels=samples[0].x.shape[0])
        driver = SegmentationDriver(head, samples)
        ckpt = os.path.join(args.out, api.CHECKPOINT_FILES["segmentation_head"])
    elif args.component == "count":
        from .training import GTDensitySpec

        samples = build_count_samples(manifest, comps.backend, comps.projector, args.mode,
                                      args.seed,
                                      density_spec=GTDensitySpec(sigma=args.density_sigma),
                                      matching=comps.matching)
        head = CountingHead(in_channels=samples[0].x.shape[0])
        driver = CountingDriver(head, samples)
        ckpt = os.path.join(args.out, api.CHECKPOINT_FILES["counting_head"])
    else:
        sequences = build_link_sequences(manifest, comps.backend, comps.projector, args.seed,
                                         matching=comps.matching)
        head = LinkageHead()
        driver = LinkageDriver(head, sequences)
        ckpt = os.path.join(args.out, api.CHECKPOINT_FILES["linkage_head"])

    log = os.path.join(args.out, f"train_{args.component}.csv")
    result = train_loop(driver, cfg, checkpoint_path=ckpt, log_path=log)
    print(f"best val metric {result.best_metric:.6f} at epoch {result.best_epoch} "
          f"({result.epochs_run} epochs); checkpoint {ckpt}")
    return 0


def _cmd_synth(args) -> int:
    from .synthetic import write_suite

    path = write_suite(args.out, n_per_task=args.n, size=args.size, seed=args.seed,
                       n_frames=args.frames)
    print(f"wrote {path}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import ServiceConfig, create_app

    config = ServiceConfig.load(args.config)
    if args.data_dir:
        config.data_dir = args.data_dir
    if args.backend:
        config.backend = args.backend
    if args.checkpoint_dir:
        config.checkpoint_dir = args.checkpoint_dir
    if args.port is not None:
        config.port = args.port
    app = create_app(config)
    uvicorn.run(app, host=args.host, port=config.port)
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {"run": _cmd_run, "metrics": _cmd_metrics, "benchmark": _cmd_benchmark,
                "train": _cmd_train, "synth": _cmd_synth, "serve": _cmd_serve}
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
