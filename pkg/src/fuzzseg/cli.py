"""Batch command line: segment an image, build phantoms, compare engines.

Exit statuses: 0 success, 1 runtime/I-O/engine failure, 2 flag errors.
Every output file is a deterministic function of the flags, so repeated
invocations are byte-identical; for that reason wall-clock timings are
printed to the console but kept out of the JSON reports.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass
from decimal import Decimal
from pathlib import Path
from typing import Optional, Sequence

from .core import ClusterParams, ImageGrid, normalize_intensities
from .engines import (
    init_centroids,
    run_fcm,
    run_kmeans,
    run_sfcm,
)
from .imageio import (
    default_palette,
    labels_from_quantized,
    load_image_file,
    save_grayscale,
    save_label_map,
    save_pseudocolor,
    write_convergence_csv,
)
from .phantom import (
    NoiseSpec,
    PhantomSpec,
    generate_phantom,
    isolated_pixel_count,
    misclassification_rate,
)

__all__ = ["UsageError", "RunReport", "build_parser", "main"]

_ENGINES = {"kmeans": run_kmeans, "fcm": run_fcm, "sfcm": run_sfcm}


class UsageError(Exception):
    """Bad flag values; maps to exit status 2."""


@dataclass
class RunReport:
    """One engine run as reported to the user.

    wall_ms is measured but never serialized: the JSON files must be
    reproducible byte for byte across runs.
    """

    algorithm: str
    params: ClusterParams
    iterations_run: int
    converged: bool
    final_objective: float
    wall_ms: float
    outputs: dict
    metrics: Optional[dict] = None

    def to_json_obj(self) -> dict:
        obj = {
            "algorithm": self.algorithm,
            "params": _params_obj(self.params),
            "iterations_run": self.iterations_run,
            "converged": self.converged,
            "final_objective": self.final_objective,
            "outputs": dict(self.outputs),
        }
        if self.metrics is not None:
            obj["metrics"] = dict(self.metrics)
        return obj


def _params_obj(params: ClusterParams) -> dict:
    init = params.init if isinstance(params.init, str) else list(params.init)
    return {
        "clusters": params.clusters,
        "fuzziness": params.fuzziness,
        "p": params.p,
        "q": params.q,
        "radius": params.radius,
        "epsilon": params.epsilon,
        "max_iter": params.max_iter,
        "init": init,
        "seed": params.seed,
    }


def _format_number(value: float) -> str:
    # Plain decimal notation: "1e-05" would violate the report contract.
    if not math.isfinite(value):
        raise ValueError("non-finite number in report")
    return format(Decimal(repr(float(value))), "f")


def render_json(obj, indent: int = 0) -> str:
    """Deterministic JSON with plain-decimal numbers and 2-space indent."""
    pad = "  " * indent
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _format_number(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        inner = ",\n".join(
            "  " * (indent + 1) + render_json(item, indent + 1) for item in obj
        )
        return "[\n" + inner + "\n" + pad + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        inner = ",\n".join(
            f'{"  " * (indent + 1)}{json.dumps(str(key))}: {render_json(value, indent + 1)}'
            for key, value in obj.items()
        )
        return "{\n" + inner + "\n" + pad + "}"
    raise TypeError(f"cannot render {type(obj).__name__} as JSON")


def _write_json(obj, path) -> None:
    Path(path).write_bytes((render_json(obj) + "\n").encode("ascii"))


def _parse_init(text: str):
    if text == "random":
        return "random"
    if text.startswith("list:"):
        body = text[len("list:"):]
        try:
            values = tuple(float(v) for v in body.split(","))
        except ValueError:
            raise UsageError(
                f"--init list has a non-numeric entry in {body!r}"
            ) from None
        if not values:
            raise UsageError("--init list is empty")
        return values
    raise UsageError(f"--init must be 'random' or 'list:v1,v2,...', got {text!r}")


def _parse_intensities(text: str, flag: str) -> tuple:
    try:
        values = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"{flag} needs comma-separated integers, got {text!r}") from None
    return values

def _parse_noise(text: str) -> NoiseSpec:
    try:
        return NoiseSpec.parse(text)
    except ValueError as exc:
        raise UsageError(f"--noise: {exc}") from None


def _params_from_args(args) -> ClusterParams:
    if args.clusters < 2:
        raise UsageError("--clusters must be at least 2")
    if not args.fuzziness > 1.0:
        raise UsageError("--fuzziness must exceed 1")
    if args.p < 0 or args.q < 0:
        raise UsageError("--p and --q must be non-negative")
    if args.radius < 1:
        raise UsageError("--radius must be at least 1")
    if not args.epsilon > 0:
        raise UsageError("--epsilon must be positive")
    if args.max_iter < 1:
        raise UsageError("--max-iter must be at least 1")
    if args.seed < 0:
        raise UsageError("--seed must be non-negative")
    init = _parse_init(args.init)
    if not isinstance(init, str) and len(init) != args.clusters:
        raise UsageError(
            f"--init list needs exactly {args.clusters} values, got {len(init)}"
        )
    return ClusterParams(
        clusters=args.clusters,
        fuzziness=args.fuzziness,
        p=args.p,
        q=args.q,
        radius=args.radius,
        epsilon=args.epsilon,
        max_iter=args.max_iter,
        init=init,
        seed=args.seed,
    )


def _timed_run(runner, image: ImageGrid, params: ClusterParams, initial_centroids=None):
    start = time.perf_counter()
    result = runner(image, params, initial_centroids=initial_centroids)
    wall_ms = (time.perf_counter() - start) * 1000.0
    return result, wall_ms


def cmd_segment(args) -> int:
    if args.algo == "sfcm" and args.p == 0 and args.q == 0:
        raise UsageError("--p and --q cannot both be zero for sfcm")
    params = _params_from_args(args)
    image = load_image_file(args.input)
    result, wall_ms = _timed_run(_ENGINES[args.algo], image, params)

    prefix = args.out_prefix
    outputs = {"labels": f"{prefix}_labels.pgm", "color": f"{prefix}_color.ppm"}
    save_label_map(result.labels, params.clusters, outputs["labels"])
    save_pseudocolor(result.labels, default_palette(params.clusters), outputs["color"])
    if args.algo in ("fcm", "sfcm"):
        outputs["trace"] = f"{prefix}_trace.csv"
        write_convergence_csv(result.trace, outputs["trace"])
    outputs["report"] = f"{prefix}_report.json"

    report = RunReport(
        algorithm=args.algo,
        params=params,
        iterations_run=result.iterations_run,
        converged=result.converged,
        final_objective=result.trace[-1].objective,
        wall_ms=wall_ms,
        outputs=outputs,
    )
    _write_json(report.to_json_obj(), outputs["report"])
    print(
        f"{args.algo}: {result.iterations_run} iterations, "
        f"converged={result.converged}, objective={result.trace[-1].objective:.6f} "
        f"({wall_ms:.1f} ms)"
    )
    return 0


def cmd_phantom(args) -> int:
    if (args.bands is None) == (args.discs is None):
        raise UsageError("exactly one of --bands or --discs is required")
    if args.width < 1 or args.height < 1:
        raise UsageError("--width and --height must be positive")
    if args.seed < 0:
        raise UsageError("--seed must be non-negative")
    if args.bands is not None:
        kind, text, flag = "band", args.bands, "--bands"
    else:
        kind, text, flag = "disc", args.discs, "--discs"
    intensities = _parse_intensities(text, flag)
    if len(intensities) < 2:
        raise UsageError(f"{flag} needs at least 2 intensities")
    regions = tuple((kind, value) for value in intensities)
    try:
        spec = PhantomSpec(
            width=args.width,
            height=args.height,
            regions=regions,
            noise=_parse_noise(args.noise),
            seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(f"{flag}: {exc}") from None
    image, truth = generate_phantom(spec)
    save_grayscale(image, args.out_image)
    save_label_map(truth, len(regions), args.out_truth)
    print(
        f"phantom {args.width}x{args.height}, {len(regions)} regions, "
        f"noise={args.noise} -> {args.out_image}, {args.out_truth}"
    )
    return 0


def cmd_compare(args) -> int:
    if args.p == 0 and args.q == 0:
        raise UsageError("--p and --q cannot both be zero")
    params = _params_from_args(args)
    image = load_image_file(args.input)
    truth_image = load_image_file(args.truth)
    if (truth_image.width, truth_image.height) != (image.width, image.height):
        raise ValueError(
            f"truth dimensions {truth_image.width}x{truth_image.height} "
            f"do not match input {image.width}x{image.height}"
        )
    truth = labels_from_quantized(truth_image, params.clusters)

    # One seeded init shared by all three engines, so the comparison
    # reflects the algorithms rather than initialization luck.
    shared_init = init_centroids(
        params, normalize_intensities(image), max_value=image.max_value
    )

    algorithms = {}
    for name in ("kmeans", "fcm", "sfcm"):
        result, wall_ms = _timed_run(
            _ENGINES[name], image, params, initial_centroids=shared_init
        )
        metrics = {
            "misclassification_rate": misclassification_rate(
                result.labels, truth, params.clusters
            ),
            "isolated_pixel_count": isolated_pixel_count(result.labels, radius=1),
        }
        report = RunReport(
            algorithm=name,
            params=params,
            iterations_run=result.iterations_run,
            converged=result.converged,
            final_objective=result.trace[-1].objective,
            wall_ms=wall_ms,
            outputs={},
            metrics=metrics,
        )
        algorithms[name] = report.to_json_obj()
        print(
            f"{name}: misclassification={metrics['misclassification_rate']:.6f}, "
            f"isolated={metrics['isolated_pixel_count']}, "
            f"iterations={result.iterations_run} ({wall_ms:.1f} ms)"
        )

    document = {
        "input": str(args.input),
        "truth": str(args.truth),
        "clusters": params.clusters,
        "algorithms": algorithms,
    }
    _write_json(document, args.report)
    return 0


def _add_engine_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--clusters", type=int, required=True, help="cluster count")
    parser.add_argument("--fuzziness", type=float, default=2.0,
                        help="membership softness exponent (default 2)")
    parser.add_argument("--max-iter", type=int, default=100, dest="max_iter")
    parser.add_argument("--epsilon", type=float, default=1e-5,
                        help="convergence threshold on membership change")
    parser.add_argument("--p", type=float, default=1.0,
                        help="membership exponent of the spatial weighting")
    parser.add_argument("--q", type=float, default=1.0,
                        help="spatial exponent of the spatial weighting")
    parser.add_argument("--radius", type=int, default=1,
                        help="neighborhood window radius in pixels")
    parser.add_argument("--init", default="random",
                        help="'random' or 'list:v1,v2,...' raw intensities")
    parser.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fuzzseg",
        description="Grayscale segmentation by K-Means, FCM, and spatial FCM.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    seg = sub.add_parser("segment", help="segment one image")
    seg.add_argument("--algo", choices=("kmeans", "fcm", "sfcm"), required=True)
    seg.add_argument("--input", required=True, help="PGM or grayscale PNG path")
    _add_engine_flags(seg)
    seg.add_argument("--out-prefix", required=True, dest="out_prefix")
    seg.set_defaults(func=cmd_segment)

    pha = sub.add_parser("phantom", help="generate a synthetic test image")
    pha.add_argument("--width", type=int, required=True)
    pha.add_argument("--height", type=int, required=True)
    pha.add_argument("--bands", help="comma-separated band intensities")
    pha.add_argument("--discs", help="comma-separated disc intensities")
    pha.add_argument("--noise", default="none", help="none | salt:F | gauss:SIGMA")
    pha.add_argument("--seed", type=int, default=0)
    pha.add_argument("--out-image", required=True, dest="out_image")
    pha.add_argument("--out-truth", required=True, dest="out_truth")
    pha.set_defaults(func=cmd_phantom)

    cmp_ = sub.add_parser("compare", help="run all three engines against a truth map")
    cmp_.add_argument("--input", required=True)
    cmp_.add_argument("--truth", required=True, help="quantized label PGM")
    _add_engine_flags(cmp_)
    cmp_.add_argument("--report", required=True, help="JSON report path")
    cmp_.set_defaults(func=cmd_compare)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse already printed its message; normalize the status.
        return 0 if exc.code in (0, None) else 2
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
