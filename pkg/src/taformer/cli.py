"""Command-line entry points.

    taformer train   [--config F] [--desk] [--preset TABLE:ROW] [--set key=value ...] [--out DIR] [--resume CKPT]
    taformer eval    --ckpt F --split S [--config F] [--data DIR] [--out DIR] [--gt-as-pred]
    taformer predict --ckpt F --seq ID --start N [--data DIR] [--out DIR]
    taformer datagen [--config F] [--desk] [--set key=value ...]
    taformer config  [--desk] [--preset TABLE:ROW] [--set key=value ...]

Run outputs go to ``train.out_dir`` or, when that is empty, ``$TAFORMER_OUT/<train.name>``
(``runs/<train.name>`` without the variable).

The eval command prints its report as tab-separated text with the columns
``seq_id start mse mae ssim psnr roi_mse miou ade`` followed by a ``mean`` row,
then the ``key=value`` summary.

Exit codes: 0 success, 1 data or I/O error, 2 invalid configuration, 3 numerical abort.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import ablation
from . import config as cfgmod
from .data import AnnotationError
from .tensor import NumericalError

log = logging.getLogger("taformer")

EXIT_OK, EXIT_DATA, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def _overrides(pairs) -> dict:
    out = {}
    for item in pairs or []:
        if "=" not in item:
            raise cfgmod.ConfigError(item, "override must look like key=value")
        key, value = item.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def resolve_config(args) -> cfgmod.RunConfig:
    base = cfgmod.desk_config() if getattr(args, "desk", False) else None
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise cfgmod.ConfigError("--config", f"{path} does not exist")
        cfg = cfgmod.parse_text(path.read_text(), base)
    else:
        cfg = base if base is not None else cfgmod.RunConfig()
    if getattr(args, "preset", None):
        ablation.apply_preset(cfg, args.preset)
    cfgmod.apply_overrides(cfg, _overrides(getattr(args, "set", None)))
    return cfg.validate()


def cmd_train(args) -> int:
    from . import plotting
    from .train import train

    cfg = resolve_config(args)
    result = train(cfg, out_dir=args.out, resume=args.resume)
    plotting.loss_curve(result.trace, result.out_dir / "loss_curve.png")
    first, last = result.trace[0][4], result.trace[-1][4]
    print(f"steps={len(result.trace)} loss_start={first!r} loss_end={last!r}")
    print(f"checkpoint={result.checkpoint}")
    return EXIT_OK


def cmd_eval(args) -> int:
    from .evaluate import REPORT_COLUMNS, evaluate, format_value

    data_cfg = resolve_config(args) if args.config else None
    report, out = evaluate(args.ckpt, args.split, out_dir=args.out, data_cfg=data_cfg,
                           data_root=args.data, gt_as_pred=args.gt_as_pred)
    print("\t".join(REPORT_COLUMNS))
    for row in report.rows:
        print("\t".join(format_value(row[c]) for c in REPORT_COLUMNS))
    agg = report.aggregate()
    print("\t".join(["mean", "-"] + [format_value(agg[c]) for c in REPORT_COLUMNS[2:]]))
    print((out / "summary.txt").read_text(), end="")
    return EXIT_OK


def cmd_predict(args) -> int:
    from .evaluate import predict

    out = predict(args.ckpt, args.seq, args.start, out_dir=args.out, data_root=args.data)
    print(f"output={out}")
    return EXIT_OK


def cmd_datagen(args) -> int:
    from .evaluate import datagen

    cfg = resolve_config(args)
    manifest = datagen(cfg)
    counts = {s: len(manifest.split(s)) for s in ("train", "val", "test")}
    print(f"root={cfg.data.root} sequences={cfg.data.n_sequences} rejected={len(manifest.rejected)} "
          + " ".join(f"{k}={v}" for k, v in counts.items()))
    return EXIT_OK


def cmd_config(args) -> int:
    cfg = resolve_config(args)
    print(cfgmod.dumps(cfg), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="taformer", description="Target-aware video prediction")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    def config_args(sp):
        sp.add_argument("--config", help="key = value configuration file")
        sp.add_argument("--preset", help="ablation preset TABLE:ROW, e.g. modules:vp")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
        sp.add_argument("--desk", action="store_true", help="start from the small CPU configuration")

    sp = sub.add_parser("train", help="train a model")
    config_args(sp)
    sp.add_argument("--out", help="run directory (default from config / $TAFORMER_OUT)")
    sp.add_argument("--resume", help="continue from this checkpoint")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("eval", help="evaluate a checkpoint on a split")
    sp.add_argument("--ckpt", required=True)
    sp.add_argument("--split", default="test", choices=("train", "val", "test"))
    sp.add_argument("--config", help="configuration whose data section to use (dims must match)")
    sp.add_argument("--data", help="dataset root (default from the checkpoint config)")
    sp.add_argument("--out", help="report directory")
    sp.add_argument("--gt-as-pred", action="store_true", help="score ground truth against itself (debug)")
    sp.set_defaults(func=cmd_eval, preset=None, set=None, desk=False)

    sp = sub.add_parser("predict", help="predict one window and write images")
    sp.add_argument("--ckpt", required=True)
    sp.add_argument("--seq", required=True, help="sequence id")
    sp.add_argument("--start", type=int, required=True, help="first observed frame index")
    sp.add_argument("--data", help="dataset root (default from the checkpoint config)")
    sp.add_argument("--out", help="output directory")
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("datagen", help="write a synthetic dataset")
    config_args(sp)
    sp.set_defaults(func=cmd_datagen)

    sp = sub.add_parser("config", help="print a resolved configuration")
    config_args(sp)
    sp.set_defaults(func=cmd_config)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    from .train import TrainingAborted

    try:
        return args.func(args)
    except cfgmod.ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except (TrainingAborted, NumericalError) as exc:
        log.error("numerical abort: %s", exc)
        return EXIT_NUMERIC
    except (AnnotationError, FileNotFoundError, OSError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
