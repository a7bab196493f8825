"""Command line entry point: ``accessory-tryon {prepare,warp,eval,visualize,all}``.

Exit codes: 0 all records ok, 1 some warnings (or per-image eval errors),
2 some errors (or nothing to evaluate).
"""
import argparse
import logging
import sys
from pathlib import Path

from . import pipeline
from .errors import EmptyEvalError, LayoutError

log = logging.getLogger("accessory_tryon")


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--root", type=Path, help="dataset root (overrides dataset_root)")
    common.add_argument("--config", type=Path, help="key=value config file")
    common.add_argument("--jobs", type=int, help="worker processes")
    common.add_argument("--deterministic", action="store_true", default=None,
                        help="fixed-order reductions for bit-reproducible outputs")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any config key")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="accessory-tryon", description="Watch try-on preprocessing, TPS warp fitting and SSIM evaluation.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("prepare", parents=[common], help="region masks, agnostic images, target crops")
    sub.add_parser("warp", parents=[common], help="fit TPS warps of the accessories")
    ev = sub.add_parser("eval", parents=[common], help="SSIM of generated vs truth images")
    ev.add_argument("--generated", type=Path, help="default: <root>/warp-cloth")
    ev.add_argument("--truth", type=Path, help="default: <root>/target-crop")
    ev.add_argument("--out", type=Path, help="default: <root>/eval")
    sub.add_parser("visualize", parents=[common], help="debug overlays")
    sub.add_parser("all", parents=[common], help="prepare, warp and eval")
    return p


def _config(args):
    overrides = {}
    for item in args.set:
        key, _, value = item.partition("=")
        overrides[key.strip()] = value.strip()
    if args.root is not None:
        overrides["dataset_root"] = args.root
    if args.jobs is not None:
        overrides["jobs"] = args.jobs
    if args.deterministic:
        overrides["deterministic"] = True
    return pipeline.load_config(args.config, overrides)


def _report(stage, results):
    for r in results:
        line = f"{stage} {r.id}: {r.status}"
        if r.message:
            line += f" ({r.message})"
        print(line)


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
    except (ValueError, KeyError, OSError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2

    try:
        if args.command == "eval":
            try:
                report = pipeline.run_eval(cfg, args.generated, args.truth, args.out)
            except EmptyEvalError as e:
                print(f"eval: {e}", file=sys.stderr)
                return 2
            print(report.to_table(), end="")
            return pipeline.eval_exit_code(report)

        records = pipeline.discover(cfg.dataset_root)
        if args.command == "all":
            code, stages = pipeline.run_all(cfg, records)
            _report("prepare", stages["prepare"])
            _report("warp", stages["warp"])
            if stages["eval"] is not None:
                print(stages["eval"].to_table(), end="")
            return code
        run = {"prepare": pipeline.run_prepare, "warp": pipeline.run_warp,
               "visualize": pipeline.run_visualize}[args.command]
        results = run(cfg, records)
        _report(args.command, results)
        return pipeline.exit_code(results)
    except LayoutError as e:
        print(f"layout error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
