"""Command line: checkpoint in, archive out."""

import argparse
import sys

from w2vfe_exporter.export import MissingKey, ShapeSurprise, export_fe


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="w2vfe-export",
        description="Export a wav2vec 2.0 checkpoint's feature encoder as an "
                    "RFE1 weight archive.")
    parser.add_argument("checkpoint", help="torch checkpoint (.pt)")
    parser.add_argument("output", help="archive to write (.rfe1)")
    parser.add_argument("--drop-last-layer", action="store_true",
                        help="emit the 6-layer variant (10 ms frame shift)")
    args = parser.parse_args(argv)
    try:
        summary = export_fe(args.checkpoint, args.output,
                            drop_last_layer=args.drop_last_layer)
    except (MissingKey, ShapeSurprise) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    print(f"layers={summary['layers']} width={summary['width']} "
          f"tensors={summary['tensors']} out={args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
