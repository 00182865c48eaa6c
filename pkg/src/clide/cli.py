"""Command-line surface for the full pipeline.

Subcommands: score, calibrate, classify, evaluate, validate, whiten,
synth, convert. Exit codes: 0 ok, 1 I/O, 2 validation, 3 numerical; on
error one JSON line is printed to stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from . import detector, stats, synth
from .embedding_store import read_any, write_csv, write_embf
from .errors import ClideError, IoError, ValidationError
from .linalg import build_whitening, estimate_covariance, read_whtm, write_whtm

logger = logging.getLogger("clide")

SCHEMA_VERSION = 1


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("CLIDE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValidationError(f"CLIDE_THREADS={env!r} is not an integer") from None
    return 1


def _config(args) -> detector.DetectorConfig:
    if args.derive_k:
        return detector.DetectorConfig.with_derived_k(
            args.m, mode=args.mode, strict=args.strict
        )
    return detector.DetectorConfig(k=args.k, m=args.m, mode=args.mode, strict=args.strict)


def cmd_score(args) -> int:
    queries = read_any(args.queries)
    if args.model:
        model = read_whtm(args.model)
        records = [
            detector.score_with_model(model, queries.row(i), queries.row_id(i))
            for i in range(queries.n)
        ]
    else:
        if not args.rep:
            raise ValidationError("score requires --rep or --model")
        rep = read_any(args.rep)
        cfg = _config(args)
        records = detector.score_batch(
            rep, queries, cfg, threads=_threads(args), skip_errors=args.skip_errors
        )
    detector.write_scores_csv(records, args.out)
    logger.info("wrote %d scores to %s", len(records), args.out)
    return 0


def cmd_calibrate(args) -> int:
    records = detector.read_scores_csv(args.scores)
    cal = detector.calibrate(records)
    detector.write_calibration_json(
        cal, args.out, m=records[0].m_used, k=records[0].k_used, mode=args.mode
    )
    logger.info("threshold %.6g from %d records", cal.threshold, cal.n)
    return 0


def cmd_classify(args) -> int:
    records = detector.read_scores_csv(args.scores)
    cal, _ = detector.read_calibration_json(args.calibration)
    try:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["id", "criterion", "label"])
            for r in records:
                writer.writerow([r.id, f"{r.criterion:.17g}", detector.classify(r, cal).value])
    except OSError as exc:
        raise IoError(f"cannot write {args.out}: {exc}") from exc
    return 0


def cmd_evaluate(args) -> int:
    real_records = detector.read_scores_csv(args.real_scores)
    gen_records = detector.read_scores_csv(args.gen_scores)
    cal, cal_payload = detector.read_calibration_json(args.calibration)
    report = stats.evaluate(real_records, gen_records, cal)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "auc": report.auc,
        "ap": report.ap,
        "f1": report.f1,
        "accuracy": report.accuracy,
        "n_real": report.n_real,
        "n_generated": report.n_generated,
        "flipped": report.flipped,
        "config": cal_payload,
    }
    _write_json(payload, args.out)
    logger.info("auc=%.4f ap=%.4f f1=%.4f acc=%.4f", report.auc, report.ap, report.f1, report.accuracy)
    return 0


def cmd_validate(args) -> int:
    rep = read_any(args.rep)
    report = stats.validate_whitening(rep, args.m, args.holdout)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "pass_fraction": report.pass_fraction,
        "m": report.m,
        "n_fit": report.n_fit,
        "n_holdout": report.n_holdout,
        "per_coordinate": [
            {
                "coordinate": c.coordinate,
                "ad_a2": c.ad_a2,
                "ad_pvalue": c.ad_pvalue,
                "ad_reject": c.ad_reject,
                "dp_k2": c.dp_k2,
                "dp_pvalue": c.dp_pvalue,
                "dp_reject": c.dp_reject,
            }
            for c in report.per_coordinate
        ],
    }
    if args.out:
        _write_json(payload, args.out)
    else:
        print(json.dumps({"pass_fraction": report.pass_fraction, "m": report.m}))
    logger.info("pass_fraction %.3f over %d coordinates", report.pass_fraction, report.m)
    return 0


def cmd_whiten(args) -> int:
    rep = read_any(args.rep)
    if not 1 <= args.m <= rep.d:
        raise ValidationError(f"-m must be in [1, {rep.d}], got {args.m}")
    model = build_whitening(estimate_covariance(rep), args.m)
    write_whtm(model, args.out)
    logger.info("wrote model d=%d m=%d to %s", model.d, model.m, args.out)
    return 0


def cmd_synth(args) -> int:
    spectrum = None
    if args.spectrum:
        spectrum = np.array([float(t) for t in args.spectrum.split(",")])
    center = None
    if args.center_value != 0.0:
        center = np.full(args.d, args.center_value)
    spec = synth.DomainSpec(
        d=args.d,
        m_active=args.m_active,
        seed=args.seed,
        spectrum=spectrum,
        residual_sigma=args.residual_sigma,
        center=center,
    )
    if args.offset_sigmas > 0:
        matrix = synth.generate_offset_queries(spec, args.n, args.offset_sigmas)
    else:
        matrix = synth.generate_domain(spec, args.n)
    write_embf(matrix, args.out)
    sidecar = {
        "d": spec.d,
        "m_active": spec.m_active,
        "spectrum": [float(v) for v in spec.spectrum],
        "residual_sigma": spec.residual_sigma,
        "center": [float(v) for v in spec.center],
        "seed": spec.seed,
        "n": args.n,
        "offset_sigmas": args.offset_sigmas,
    }
    _write_json(sidecar, str(args.out) + ".json")
    return 0


def cmd_convert(args) -> int:
    matrix = read_any(args.input)
    out = str(args.out)
    if out.endswith(".embf"):
        write_embf(matrix, out)
    elif out.endswith(".csv"):
        write_csv(matrix, out)
    else:
        raise ValidationError(f"cannot infer output format from {out!r} (.embf or .csv)")
    return 0


def _write_json(payload: dict, path) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(payload) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _add_detector_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("-k", type=int, default=detector.DEFAULT_K, help="neighbors (default 500)")
    p.add_argument("-m", type=int, default=detector.DEFAULT_M, help="retained dimensions (default 400)")
    p.add_argument("--derive-k", action="store_true", help="set k = m + 100")
    p.add_argument("--mode", choices=["local", "global"], default="local")
    p.add_argument("--strict", action="store_true", help="error instead of clamping k > n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clide", description=__doc__)
    parser.add_argument("--log-level", default="warning",
                        choices=["debug", "info", "warning", "error"])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="score query embeddings against a representative set")
    p.add_argument("--rep", help="representative set (.embf or .csv)")
    p.add_argument("--queries", required=True)
    p.add_argument("--model", help="serialized whitening model (global scoring)")
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: CLIDE_THREADS or 1)")
    p.add_argument("--skip-errors", action="store_true",
                   help="log and drop failing rows instead of aborting")
    _add_detector_flags(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("calibrate", help="derive a threshold from real-input scores")
    p.add_argument("--scores", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--mode", choices=["local", "global"], default="local",
                   help="mode the scores were produced in (recorded in the output)")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("classify", help="apply a calibrated threshold to scores")
    p.add_argument("--scores", required=True)
    p.add_argument("--calibration", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("evaluate", help="AUC/AP/F1/accuracy for a real vs generated pair")
    p.add_argument("--real-scores", required=True)
    p.add_argument("--gen-scores", required=True)
    p.add_argument("--calibration", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("validate", help="normality of whitened holdout coordinates")
    p.add_argument("--rep", required=True)
    p.add_argument("-m", type=int, required=True)
    p.add_argument("--holdout", type=float, default=0.3)
    p.add_argument("--out")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("whiten", help="fit and serialize a whitening model")
    p.add_argument("--rep", required=True)
    p.add_argument("-m", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_whiten)

    p = sub.add_parser("synth", help="generate a synthetic low-rank Gaussian domain")
    p.add_argument("--out", required=True)
    p.add_argument("--d", type=int, default=64)
    p.add_argument("--m-active", type=int, default=16)
    p.add_argument("-n", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--spectrum", help="comma-separated eigenvalues (default: linear 4.0..0.5)")
    p.add_argument("--residual-sigma", type=float, default=0.01)
    p.add_argument("--center-value", type=float, default=0.0,
                   help="constant value for every center coordinate")
    p.add_argument("--offset-sigmas", type=float, default=0.0,
                   help="displace samples off the dominant subspace")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("convert", help="convert between .embf and .csv")
    p.add_argument("input")
    p.add_argument("out")
    p.set_defaults(func=cmd_convert)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ClideError as exc:
        print(
            json.dumps({"error": type(exc).__name__, "message": str(exc)}),
            file=sys.stderr,
        )
        return exc.exit_code
    except OSError as exc:
        print(json.dumps({"error": "IoError", "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
