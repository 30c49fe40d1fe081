"""Command-line interface: ``train`` runs an experiment, ``report`` plots."""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigError
from .harness import ACCOUNTING_MODES, DATASET_DEFAULTS, ExperimentConfig, run
from .transfer import PARAM_RESTRICTION_MODES

def _parse_bool(text):
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


_CONFIG_KEYS = {
    "dataset": str,
    "levels": int,
    "blocks": int,
    "width": int,
    "schedule": str,
    "lr": float,
    "beta": float,
    "batch_size": int,
    "seed": int,
    "max_vcycles": int,
    "target_acc": float,
    "subset": int,
    "threads": int,
    "accounting": str,
    "param_restriction": str,
    "mnist_train_images": str,
    "mnist_train_labels": str,
    "mnist_test_images": str,
    "mnist_test_labels": str,
    "out": str,
    "timed": _parse_bool,
}


def read_config_file(path):
    """Flat key=value settings; '#' starts a comment, blank lines ignored."""
    values = {}
    with open(path) as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, text = line.partition("=")
            key = key.strip().replace("-", "_")
            if key not in _CONFIG_KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown setting {key!r}")
            try:
                values[key] = _CONFIG_KEYS[key](text.strip())
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: {exc}") from exc
    return values


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mlresnet",
        description="Multilevel V-cycle training for deep residual networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="run one training experiment")
    train.add_argument("--config", help="key=value settings file; flags override it")
    train.add_argument("--dataset", choices=sorted(DATASET_DEFAULTS))
    train.add_argument("--levels", type=int, help="hierarchy depth (default 4)")
    train.add_argument("--blocks", type=int, help="finest-level residual blocks (default 256)")
    train.add_argument("--width", type=int, help="hidden width (dataset default)")
    train.add_argument("--schedule", help="step-count list, e.g. '[(1),1,2,{2}]'")
    train.add_argument("--lr", type=float, help="learning rate (dataset default)")
    train.add_argument("--beta", type=float, help="finest-level Tikhonov weight")
    train.add_argument("--batch-size", type=int, help="0 = full batch (dataset default)")
    train.add_argument("--seed", type=int, help="RNG seed for data and init (default 1)")
    train.add_argument("--max-vcycles", type=int, help="cycle cap (default 500)")
    train.add_argument("--target-acc", type=float, help="stop at this validation accuracy")
    train.add_argument("--subset", type=int, help="truncate the training split to N samples")
    train.add_argument("--threads", type=int, help="objective evaluation threads (default 1)")
    train.add_argument("--accounting", choices=ACCOUNTING_MODES,
                       help="work-unit column: nominal per-cycle cost or measured evaluations")
    train.add_argument("--param-restriction", choices=PARAM_RESTRICTION_MODES,
                       help="how iterates move to coarser levels (default average)")
    train.add_argument("--mnist-train-images")
    train.add_argument("--mnist-train-labels")
    train.add_argument("--mnist-test-images")
    train.add_argument("--mnist-test-labels")
    train.add_argument("--out", help="metrics CSV path (default metrics.csv)")
    train.add_argument("--timed", action="store_true", default=None,
                       help="record real wall-clock times (breaks bitwise CSV reproducibility)")
    train.add_argument("--fig", action="store_true",
                       help="also render the training-curves figure next to the CSV")

    report = sub.add_parser("report", help="render figures from metrics CSVs")
    report.add_argument("csv", nargs="+", help="metrics CSV files from 'train'")
    report.add_argument("--out", help="figure path (default: alongside the first CSV)")
    report.add_argument("--labels", nargs="+", help="one legend label per CSV")
    report.add_argument("--x", choices=("cycles", "work"), default="cycles",
                        help="x axis: V-cycles or cumulative work units")
    report.add_argument("--linear-x", action="store_true", help="linear instead of log x axis")
    report.add_argument("--title")
    return parser


_FLAG_TO_FIELD = {
    "lr": "learning_rate",
    "beta": "reg_weight",
    "target_acc": "target_accuracy",
}


def config_from_args(args):
    settings = {}
    if args.config:
        settings.update(read_config_file(args.config))
    for key in _CONFIG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    timed = settings.pop("timed", False)
    settings = {_FLAG_TO_FIELD.get(k, k): v for k, v in settings.items()}
    settings.setdefault("out", "metrics.csv")
    return ExperimentConfig(deterministic=not timed, **settings)


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "train":
        try:
            config = config_from_args(args)
            _, records = run(config)
        except (ConfigError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        last = records[-1]
        print(
            f"{config.dataset}: {last.v_cycle} V-cycles, "
            f"train loss {last.train_loss:.6f}, "
            f"validation accuracy {last.validation_accuracy:.4f}, "
            f"{last.work_units:.2f} work units -> {config.out}"
        )
        if args.fig:
            from .report import render_training_figure

            fig_path = render_training_figure([config.out])
            print(f"figure -> {fig_path}")
        return 0
    if args.command == "report":
        from .report import render_training_figure

        try:
            fig_path = render_training_figure(
                args.csv,
                out_path=args.out,
                labels=args.labels,
                x_axis="v_cycle" if args.x == "cycles" else "work_units",
                title=args.title,
                log_x=not args.linear_x,
            )
        except (OSError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        print(f"figure -> {fig_path}")
        return 0
    return 2


if __name__ == "__main__":
    sys.exit(main())
