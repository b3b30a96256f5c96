"""Command line front end.

    cnnfeat-export --manifest data/manifest.txt --model resnet50 \
        --output features/highlevel.feat [--batch-size 8] \
        [--weights pretrained|random] [--seed 0]

Exit codes: 0 success (skipped images are reported but tolerated),
2 bad arguments, 3 no exportable images, 4 model weights unavailable.
"""

import argparse
import sys

from .export import ExportJob, run_export
from .models import MODEL_DIMS, ModelFetchError


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="cnnfeat-export",
        description="export CNN image features in the shared binary format")
    parser.add_argument("--manifest", required=True)
    parser.add_argument("--model", required=True, choices=sorted(MODEL_DIMS))
    parser.add_argument("--output", required=True)
    parser.add_argument("--batch-size", type=int, default=8)
    parser.add_argument("--weights", choices=("pretrained", "random"),
                        default="pretrained")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    job = ExportJob(manifest=args.manifest, model=args.model,
                    output=args.output, batch_size=args.batch_size,
                    weights=args.weights, seed=args.seed)
    try:
        output, skipped = run_export(job)
    except ModelFetchError as exc:
        print(f"model fetch failure: {exc}", file=sys.stderr)
        return 4
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3

    for image_id, reason in skipped:
        print(f"skipped {image_id}: {reason}", file=sys.stderr)
    print(f"exported {args.model} features -> {output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
