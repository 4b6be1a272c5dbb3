"""
semsplat command line.

    semsplat synth     --out scene [--config synth.yaml] [--seed 0]
    semsplat pseudo    --scene scene [--reference random] [--margin 0.15]
    semsplat train     --scene scene --out run [--config train.yaml] [--steps N]
    semsplat render    --checkpoint run/checkpoint.sspl --scene scene --out renders [--pca]
    semsplat eval      --pred renders/segmentation --gt scene/oracle --out metrics
    semsplat visualize --checkpoint run/checkpoint.sspl --scene scene --out pca [--per-scene]
    semsplat ablate    --scene scene --out ablation [--seeds 0 1 2]

Exit codes: 0 success, 2 configuration, 3 input, 4 numerical, 5 data,
1 anything else.
"""
import argparse
import sys
from typing import Any, Dict, List, Optional

from semsplat.cli import commands
from semsplat.config import SynthConfig, TrainConfig, config_from_env, config_from_file, synth_config_from_file
from semsplat.exceptions import SemsplatError, wrap_exception
from semsplat.pseudolabel.builder import DEFAULT_MARGIN, RANDOM_REFERENCE
from semsplat.utils.logger import get_logger

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="Global seed")
    parser.add_argument("--threads", type=int, default=None, help="Render worker threads (1 = deterministic)")
    parser.add_argument("--log-level", choices=LOG_LEVELS, default=None, help="Log level")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="semsplat", description="Semantic Gaussian splatting under sparse labels.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="Generate a synthetic scene bundle")
    p.add_argument("--out", required=True, help="Scene directory to create")
    p.add_argument("--config", help="SynthConfig YAML / JSON")
    _add_common(p)

    p = sub.add_parser("pseudo", help="Build pseudo labels from instance masks")
    p.add_argument("--scene", required=True, help="Scene directory")
    p.add_argument("--reference", default=RANDOM_REFERENCE, help="Reference view id, or 'random'")
    p.add_argument("--margin", type=float, default=DEFAULT_MARGIN, help="Border margin as a fraction of min(H, W)")
    _add_common(p)

    p = sub.add_parser("train", help="Optimize a semantic Gaussian cloud")
    p.add_argument("--scene", required=True, help="Scene directory")
    p.add_argument("--out", required=True, help="Output directory for checkpoint, log and config")
    p.add_argument("--config", help="TrainConfig YAML / JSON")
    p.add_argument("--steps", type=int, default=None, help="Override total_steps")
    _add_common(p)

    p = sub.add_parser("render", help="Render RGB and segmentation from a checkpoint")
    p.add_argument("--checkpoint", required=True, help="checkpoint.sspl")
    p.add_argument("--scene", required=True, help="Scene directory providing the poses")
    p.add_argument("--out", required=True, help="Output directory")
    p.add_argument("--views", nargs="*", default=None, help="View ids to render (default: all)")
    p.add_argument("--pca", action="store_true", help="Also write PCA feature images")
    _add_common(p)

    p = sub.add_parser("eval", help="Score predicted label maps")
    p.add_argument("--pred", required=True, help="Directory of predicted label PNGs")
    p.add_argument("--gt", required=True, help="Directory of ground-truth label PNGs")
    p.add_argument("--out", required=True, help="Directory for metric files")
    p.add_argument("--num-classes", type=int, default=None, help="Class count (default: inferred)")
    p.add_argument("--checkpoint", default=None, help="Also time renders of this checkpoint")
    p.add_argument("--scene", default=None, help="Scene directory for timing poses")
    _add_common(p)

    p = sub.add_parser("visualize", help="PCA images of rendered feature maps")
    p.add_argument("--checkpoint", required=True, help="checkpoint.sspl")
    p.add_argument("--scene", required=True, help="Scene directory providing the poses")
    p.add_argument("--out", required=True, help="Output directory")
    p.add_argument("--per-scene", action="store_true", help="Fit one PCA basis over all views")
    p.add_argument("--views", nargs="*", default=None, help="View ids (default: all)")
    _add_common(p)

    p = sub.add_parser("ablate", help="Run the ablation and parameter studies")
    p.add_argument("--scene", required=True, help="Scene directory (with oracle/ labels)")
    p.add_argument("--out", required=True, help="Directory for the result CSVs")
    p.add_argument("--config", help="Base TrainConfig YAML / JSON")
    p.add_argument("--steps", type=int, default=None, help="Override total_steps")
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2], help="Seeds per variant")
    p.add_argument("--study", choices=commands.STUDIES, nargs="+", default=list(commands.STUDIES))
    _add_common(p)
    return parser


def _runtime(args: argparse.Namespace) -> Dict[str, Any]:
    """Command-line flags win over SEMSPLAT_* environment variables"""
    env = config_from_env()
    return {
        "seed": args.seed if args.seed is not None else env.get("seed"),
        "threads": args.threads if args.threads is not None else env.get("threads"),
        "log_level": args.log_level or env.get("log_level") or "INFO",
    }


def _train_config(args: argparse.Namespace, runtime: Dict[str, Any]) -> TrainConfig:
    config = config_from_file(args.config) if args.config else TrainConfig()
    return config.with_overrides(total_steps=args.steps, seed=runtime["seed"], threads=runtime["threads"])


def run_command(args: argparse.Namespace, runtime: Dict[str, Any]) -> None:
    threads = runtime["threads"] or 1
    seed = runtime["seed"] if runtime["seed"] is not None else 0

    if args.command == "synth":
        config = synth_config_from_file(args.config) if args.config else SynthConfig()
        if runtime["seed"] is not None:
            config = config.model_copy(update={"seed": seed})
        commands.cmd_synth(config, args.out)
    elif args.command == "pseudo":
        commands.cmd_pseudo(args.scene, args.reference, args.margin, seed)
    elif args.command == "train":
        result = commands.cmd_train(args.scene, _train_config(args, runtime), args.out)
        print(f"trained {len(result.log)} steps, {result.cloud.num_points} points -> {result.checkpoint}")
    elif args.command == "render":
        written = commands.cmd_render(args.checkpoint, args.scene, args.out, args.views, args.pca, threads)
        print(f"rendered {len(written)} views -> {args.out}")
    elif args.command == "eval":
        summary = commands.cmd_eval(
            args.pred, args.gt, args.out, args.num_classes, checkpoint=args.checkpoint, scene=args.scene,
            threads=threads,
        )
        print(f"mIoU {summary['miou']:.4f} over {summary['num_views']} views")
    elif args.command == "visualize":
        commands.cmd_visualize(args.checkpoint, args.scene, args.out, args.per_scene, args.views, threads)
    elif args.command == "ablate":
        frame = commands.cmd_ablate(args.scene, _train_config(args, runtime), args.out, args.seeds, args.study)
        print(frame.groupby(["study", "variant"], sort=False)["miou"].mean().to_string())


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        runtime = _runtime(args)
        get_logger("semsplat", level=runtime["log_level"])
        run_command(args, runtime)
    except SemsplatError as e:
        print(f"{e.error_code}: {e}", file=sys.stderr)
        return e.exit_code
    except Exception as e:
        wrapped = wrap_exception(e)
        print(f"{wrapped.error_code}: {wrapped}", file=sys.stderr)
        return wrapped.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
