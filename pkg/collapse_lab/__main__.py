"""
Command-line entry point.

Usage:
    python -m collapse_lab [--verbose] [--log-file FILE] <command> [options]

Commands:
    train       Train one configuration         (--config FILE [--output-dir DIR])
    sweep       Train every value of a sweep    (--config FILE [--workers N])
    solve-bias  Solve the BCE bias equation     (--K --n --rho --lambda-w --lambda-h --lambda-b)
    etf         Write a simplex ETF classifier  (--K --d --rho --seed --out)
    metrics     Audit feature/classifier CSVs   (--features --classifier --n-for-alpha)
    optimum     Analytic minimizer of a problem (--K --d --n --loss [--out-dir DIR])

Examples:
    python -m collapse_lab train --config configs/bce.cfg
    python -m collapse_lab solve-bias --K 10 --n 12.8 --rho 357.9696
    python -m collapse_lab metrics --features f.csv --classifier c.csv --n-for-alpha 12.8

Results meant for other programs go to stdout as JSON; logs go to stderr.
On failure the last stderr line reads `error: <ErrorType>: <message>`
and the exit status is 1.
"""

import argparse
import json
import logging
import sys
from dataclasses import replace
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import List, Optional

import numpy as np

from .config import load_config
from .errors import CollapseLabError
from .experiment.runner import export_state, ingest_features, run_experiment, run_sweep
from .geometry.bias import BiasProblem, alpha_residual, separation_holds, solve_bias
from .geometry.etf import EtfSpec, analytic_minimizer, optimal_point, simplex_etf
from .io.feature_files import export_classifier
from .metrics.report import evaluate_state
from .model.core import HyperParams
from .model.losses import LossKind, grad_objective, objective

logger = logging.getLogger("collapse_lab")

# Handlers added by setup_logging, replaced on the next call
_installed: List[logging.Handler] = []


def setup_logging(verbose: bool = False, log_file: Optional[Path] = None) -> None:
    """Configure logging for the command line."""
    level = logging.DEBUG if verbose else logging.INFO

    formatter = logging.Formatter(
        '%(asctime)s [%(levelname)s] %(name)s: %(message)s',
        datefmt='%H:%M:%S'
    )

    console = logging.StreamHandler(sys.stderr)
    console.setLevel(level)
    console.setFormatter(formatter)

    root = logging.getLogger()
    for handler in _installed:
        root.removeHandler(handler)
        handler.close()
    _installed.clear()

    root.setLevel(level)
    root.addHandler(console)
    _installed.append(console)

    if log_file is not None:
        try:
            file_handler = RotatingFileHandler(
                log_file,
                maxBytes=10 * 1024 * 1024,  # 10 MB
                backupCount=5
            )
            file_handler.setLevel(level)
            file_handler.setFormatter(formatter)
            root.addHandler(file_handler)
            _installed.append(file_handler)
            logging.info(f"File logging enabled: {log_file}")
        except OSError as e:
            logging.warning(f"Could not enable file logging: {e}")


def _emit(data: dict) -> None:
    print(json.dumps(data, indent=2))


def _hyperparams(args: argparse.Namespace) -> HyperParams:
    return HyperParams(K=args.K, d=args.d, n=args.n, lambda_w=args.lambda_w,
                       lambda_h=args.lambda_h, lambda_b=args.lambda_b)


# ─────────────────────────────────────────────────────────────────────────────
# Commands
# ─────────────────────────────────────────────────────────────────────────────

def cmd_train(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    if args.output_dir is not None:
        cfg = replace(cfg, output_dir=args.output_dir)
    report = run_experiment(cfg)
    _emit({"status": report.status, "steps": report.steps,
           "output_dir": str(cfg.output_dir), "final_metrics": report.final_metrics.to_dict()})
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    reports = run_sweep(cfg, workers=args.workers)
    _emit({"output_dir": str(cfg.output_dir),
           "runs": [{"status": r.status, "steps": r.steps} for r in reports]})
    return 0


def cmd_solve_bias(args: argparse.Namespace) -> int:
    prob = BiasProblem(rho=args.rho, K=args.K, n=args.n, lambda_w=args.lambda_w,
                       lambda_h=args.lambda_h, lambda_b=args.lambda_b)
    b_star = solve_bias(prob)
    _emit({
        "b_star": b_star,
        "residual": float(alpha_residual(b_star, prob)),
        "separation_holds": separation_holds(prob),
        "positive_score": prob.positive_score,
        "negative_score": prob.negative_score,
    })
    return 0


def cmd_etf(args: argparse.Namespace) -> int:
    W = simplex_etf(EtfSpec(K=args.K, d=args.d, rho=args.rho, orientation_seed=args.seed))
    export_classifier(args.out, W, np.zeros(args.K))
    gram = W @ W.T
    _emit({"out": str(args.out), "row_norm_sq": float(gram[0, 0]),
           "off_diagonal": float(gram[0, 1])})
    return 0


def cmd_metrics(args: argparse.Namespace) -> int:
    report = ingest_features(
        args.features, args.classifier, n_for_alpha=args.n_for_alpha,
        lambda_w=args.lambda_w, lambda_h=args.lambda_h, lambda_b=args.lambda_b,
        n_thresholds=args.n_thresholds, centered=not args.uncentered,
    )
    _emit(report.to_dict())
    return 0


def cmd_optimum(args: argparse.Namespace) -> int:
    hp = _hyperparams(args)
    kind = LossKind.parse(args.loss)
    point = optimal_point(hp, kind)
    result = {"rho": point.rho, "b": point.b, "objective": point.objective}
    if point.rho > 0 and hp.etf_feasible:
        state = analytic_minimizer(hp, point.rho, point.b, orientation_seed=args.seed)
        result["full_objective"] = objective(state, hp, kind)
        result["grad_inf_norm"] = grad_objective(state, hp, kind).inf_norm()
        result["metrics"] = evaluate_state(state, hp).to_dict()
        if args.out_dir is not None:
            result["out_dir"] = str(export_state(state, args.out_dir, n=hp.n))
    _emit(result)
    return 0


# ─────────────────────────────────────────────────────────────────────────────
# Parser
# ─────────────────────────────────────────────────────────────────────────────

def _add_decays(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--lambda-w", type=float, default=5e-4, help="weight decay on W")
    parser.add_argument("--lambda-h", type=float, default=5e-4, help="weight decay on H")
    parser.add_argument("--lambda-b", type=float, default=5e-4, help="weight decay on b")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="collapse_lab",
        description="Neural collapse in the layer-peeled model",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=__doc__,
    )
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    parser.add_argument("--log-file", type=Path, help="also log to this rotating file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one configuration")
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--output-dir", type=Path)
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("sweep", help="train every value of a sweep")
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--workers", type=int, help="threads (default: sweep.workers)")
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("solve-bias", help="solve the BCE bias equation")
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--n", type=float, required=True, help="(effective) samples per class")
    p.add_argument("--rho", type=float, required=True, help="squared Frobenius norm of W")
    _add_decays(p)
    p.set_defaults(handler=cmd_solve_bias)

    p = sub.add_parser("etf", help="write a simplex ETF classifier CSV")
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(handler=cmd_etf)

    p = sub.add_parser("metrics", help="audit feature and classifier CSVs")
    p.add_argument("--features", type=Path, required=True)
    p.add_argument("--classifier", type=Path, required=True)
    p.add_argument("--n-for-alpha", type=float, required=True,
                   help="per-class count in the bias residual (batch size / K for checkpoints)")
    p.add_argument("--n-thresholds", type=int, default=200)
    p.add_argument("--uncentered", action="store_true", help="NC2 on raw classifier rows")
    _add_decays(p)
    p.set_defaults(handler=cmd_metrics)

    p = sub.add_parser("optimum", help="analytic minimizer of the regularized problem")
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--loss", default="bce", help="ce or bce")
    p.add_argument("--seed", type=int, default=0, help="ETF orientation seed")
    p.add_argument("--out-dir", type=Path, help="export features.csv and classifier.csv here")
    _add_decays(p)
    p.set_defaults(handler=cmd_optimum)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(verbose=args.verbose, log_file=args.log_file)
    try:
        return args.handler(args)
    except (CollapseLabError, OSError) as e:
        logger.debug("Command failed", exc_info=True)
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
