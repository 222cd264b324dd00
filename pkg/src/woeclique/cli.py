"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical failure.
"""

import argparse
import logging
import sys

from . import pipeline
from .config import load_config
from .exceptions import ConfigError, WoECliqueError

log = logging.getLogger("woeclique")


def _parse_set(items):
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"--set expects key=value, got {item!r}")
        out[key.strip()] = value
    return out


def build_parser():
    parser = argparse.ArgumentParser(prog="woeclique",
                                     description="WoE/IV clique feature selection and logistic risk modelling.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value configuration file")
    common.add_argument("--seed", type=int, help="master seed (required here or in the config)")
    common.add_argument("--input", help="cohort CSV; omitted means a synthetic cohort")
    common.add_argument("--output-dir", help="artifact root directory")
    common.add_argument("--threshold", type=float, help="decision threshold")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override any config key")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("synth", parents=[common], help="write a synthetic cohort and its manifest")
    sub.add_parser("select", parents=[common], help="WoE encoding, IV scoring and clique selection")
    sub.add_parser("train", parents=[common], help="grid-searched L2 logistic model on selected features")
    ev = sub.add_parser("evaluate", parents=[common], help="metrics with bootstrap CIs, ROC and calibration")
    ev.add_argument("--split", choices=("test", "validation"), default="test")
    ev.add_argument("--bundle", help="model bundle (default: <output-dir>/train/model.json)")
    ex = sub.add_parser("explain", parents=[common], help="coefficients, SHAP values and their agreement")
    ex.add_argument("--split", choices=("test", "validation"), default="test")
    ex.add_argument("--bundle")
    sub.add_parser("compare", parents=[common], help="clique-IV vs RFE vs all-feature baselines")
    sc = sub.add_parser("score", parents=[common], help="score a CSV with a saved bundle")
    sc.add_argument("--bundle")
    sub.add_parser("run", parents=[common], help="select, train, evaluate and explain")
    return parser


def config_from_args(args):
    overrides = _parse_set(args.set)
    for flag, key in (("seed", "seed"), ("input", "input"), ("output_dir", "output_dir"),
                      ("threshold", "threshold")):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[key] = value
    return load_config(args.config, overrides)


def dispatch(args, cfg):
    cmd = args.command
    if cmd == "synth":
        pipeline.cmd_synth(cfg)
    elif cmd == "select":
        pipeline.cmd_select(cfg)
    elif cmd == "train":
        pipeline.cmd_train(cfg)
    elif cmd == "evaluate":
        pipeline.cmd_evaluate(cfg, args.split, args.bundle)
    elif cmd == "explain":
        pipeline.cmd_explain(cfg, args.split, args.bundle)
    elif cmd == "compare":
        pipeline.cmd_compare(cfg)
    elif cmd == "score":
        pipeline.cmd_score(cfg, args.bundle)
    elif cmd == "run":
        pipeline.cmd_run(cfg)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(stream=sys.stderr, level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        dispatch(args, cfg)
    except WoECliqueError as exc:
        log.error("%s failed: %s: %s", args.command, type(exc).__name__, exc)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
