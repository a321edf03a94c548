"""Command-line interface.

Subcommands: ``simulate``, ``classify``, ``assess``, ``presets`` and
``reproduce``. Only explicit flags are read; the environment is ignored.
Exit status is 0 on success, 1 on invalid input and 2 on runtime or
numerical failure.
"""

import argparse
import csv
import io as _io
import json
import logging
import os
import sys

import numpy as np

from . import __version__, assess, io, plotting
from .classifier import SegmentMap, classify_segments, fuse_majority, fuzzy_assign, grid_segment
from .config import DEFAULT_ALPHA, DEFAULT_BETA
from .distances import ALL_KINDS, StatisticKind
from .errors import FormatError, PolsarError
from .experiment import (
    REFERENCE_NON_REJECTION,
    TILES,
    records_as_dicts,
    run_experiment,
    run_mosaic,
    summarize,
)
from .scenes import (
    CLASS_NAMES,
    MosaicSpec,
    default_layout,
    preset_prototypes,
    simulate_mosaic,
    simulate_prototypes,
)

log = logging.getLogger("polsar_regions")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _probability(text):
    value = float(text)
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1), got {text}")
    return value


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return value


def _seed(text):
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _kinds(values):
    if not values or "all" in values:
        return list(ALL_KINDS)
    return [StatisticKind(v) for v in values]


def _parse_layout(text):
    """``"River,Caatinga;Tillage,Corn 1"`` -> rows of names."""
    return tuple(tuple(name.strip() for name in row.split(",")) for row in text.split(";"))


# --------------------------------------------------------------------------
# simulate


def cmd_simulate(args):
    if args.preset == "paper" and args.layout is None:
        layout = default_layout()
    else:
        layout = _parse_layout(args.layout)
    spec = MosaicSpec(layout=layout, tile_size=args.tile, looks=args.looks, seed=args.seed)
    settings = {"layout": spec.layout, "tile": spec.tile_size, "looks": spec.looks,
                "prototype_pixels": args.prototype_pixels, "prototypes": not args.no_prototypes}
    prov = io.provenance("simulate", settings, args.seed)
    mosaic = simulate_mosaic(spec, workers=args.workers)
    out = args.out
    io.write_covariance_raster(os.path.join(out, "raster.cov"), mosaic.raster, spec.looks,
                               {"channels": ["HH", "HV", "VV"][:mosaic.raster.shape[-1]],
                                "provenance": prov})
    io.write_labels(os.path.join(out, "truth.labels"), mosaic.truth,
                    {"classes": mosaic.classes, "provenance": prov})
    h, w = mosaic.truth.shape
    print(f"raster {w}x{h}, q={mosaic.raster.shape[-1]}, L={spec.looks}, classes={len(mosaic.classes)}")
    if not args.no_prototypes:
        protos = simulate_prototypes(mosaic.classes, args.prototype_pixels, spec.looks, args.seed)
        io.write_prototypes(os.path.join(out, "prototypes.json"), protos, prov)
        print(f"prototypes: {len(protos)} classes x {args.prototype_pixels} pixels")
    return EXIT_OK


# --------------------------------------------------------------------------
# classify


def _write_fuzzy(path, result, threshold, prov):
    buf = _io.StringIO()
    buf.write("# " + json.dumps(prov, separators=(",", ":")) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["segment_id", "classes"])
    for i in range(result.n_segments):
        members = sorted(fuzzy_assign(result.p_values[i], threshold))
        writer.writerow([i, ";".join(result.class_names[c] for c in members)])
    io.atomic_write(path, buf.getvalue().encode())


def cmd_classify(args):
    raster, header = io.read_covariance_raster(args.raster)
    protos = io.read_prototypes(args.prototypes)
    looks = header["looks"] if args.looks is None else args.looks
    if args.looks is not None and args.looks != header["looks"]:
        raise UsageError(f"--looks {args.looks} disagrees with the raster header ({header['looks']})")
    h, w = raster.shape[:2]
    if args.grid is not None:
        segmap = grid_segment(w, h, args.grid)
    else:
        labels, _ = io.read_labels(args.segments)
        segmap = SegmentMap(labels)
    kinds = _kinds(args.stat)
    settings = {"raster": os.path.basename(args.raster), "grid": args.grid,
                "segments": args.segments and os.path.basename(args.segments),
                "stats": [k.value for k in kinds], "beta": args.beta, "alpha": args.alpha,
                "fuse": args.fuse, "fuzzy": args.fuzzy_threshold, "looks": looks}
    prov = io.provenance("classify", settings, header.get("provenance", {}).get("seed"))
    out = args.out
    palette = assess.palette_for(protos.names)
    io.write_palette(os.path.join(out, "palette.json"), palette)
    io.write_labels(os.path.join(out, "segments.labels"), segmap.labels, {"provenance": prov})

    results = {}
    for kind in kinds:
        res = classify_segments(raster, segmap, protos, kind, beta=args.beta, looks=looks)
        results[kind] = res
        stem = kind.value
        io.write_assignments(os.path.join(out, f"assignments_{stem}.csv"), res, prov)
        io.write_labels(os.path.join(out, f"classes_{stem}.labels"), res.class_raster(segmap),
                        {"classes": protos.names, "provenance": prov})
        rgb = assess.render_class_map(res, segmap, palette)
        gray = assess.render_pvalue_map(res, segmap, args.alpha)
        io.write_ppm(os.path.join(out, f"classes_{stem}.ppm"), rgb)
        io.write_pgm(os.path.join(out, f"pvalues_{stem}.pgm"), gray)
        if args.figures:
            plotting.save_class_map(os.path.join(out, f"classes_{stem}.png"), rgb, palette,
                                    protos.names, kind.label)
            plotting.save_pvalue_map(os.path.join(out, f"pvalues_{stem}.png"), gray, args.alpha,
                                     kind.label)
        if args.fuzzy_threshold is not None:
            _write_fuzzy(os.path.join(out, f"fuzzy_{stem}.csv"), res, args.fuzzy_threshold, prov)
        counts = np.bincount(res.assigned[res.classified], minlength=len(protos))
        print(f"{kind.value:20s} segments={res.n_segments} unclassified={int((~res.classified).sum())} "
              f"not-rejected@{args.alpha:g}={assess.rejection_rate(res, args.alpha):.4f} "
              f"per-class={counts.tolist()}")

    if args.fuse:
        fused = fuse_majority(results)
        buf = _io.StringIO()
        buf.write("# " + json.dumps(prov, separators=(",", ":")) + "\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["segment_id", "class"] + [k.value for k in results])
        for f in fused:
            name = protos.names[f.winner] if f.winner >= 0 else "Unclassified"
            writer.writerow([f.segment_id, name] + list(f.votes))
        io.atomic_write(os.path.join(out, "assignments_fused.csv"), buf.getvalue().encode())
        winners = np.array([f.winner for f in fused], dtype=np.int32)
        fused_labels = segmap.paint(winners)
        io.write_labels(os.path.join(out, "classes_fused.labels"), fused_labels,
                        {"classes": protos.names, "provenance": prov})
        rgb = assess.render_labels(fused_labels, protos.names, palette)
        io.write_ppm(os.path.join(out, "classes_fused.ppm"), rgb)
        if args.figures:
            plotting.save_class_map(os.path.join(out, "classes_fused.png"), rgb, palette,
                                    protos.names, "Majority vote")
        print(f"fused over {len(results)} statistics")
    return EXIT_OK


# --------------------------------------------------------------------------
# assess


def _assess_one(args):
    table = io.read_assignments(args.assignments)
    seg_labels, _ = io.read_labels(args.segments)
    truth, truth_header = io.read_labels(args.truth)
    if seg_labels.shape != truth.shape:
        raise UsageError("segment map and truth rasters differ in size")
    segmap = SegmentMap(seg_labels)
    if segmap.n_segments != len(table["segment_id"]):
        raise UsageError(f"assignment table has {len(table['segment_id'])} rows, "
                         f"segment map has {segmap.n_segments} segments")
    classes = list(truth_header.get("classes") or [])
    if not classes:
        classes = [str(i) for i in range(int(truth.max()) + 1)]
    for name in table["class"]:
        if name != "Unclassified" and name not in classes:
            classes.append(name)
    per_segment = np.array([classes.index(c) if c != "Unclassified" else -1
                            for c in table["class"]], dtype=np.int32)
    predicted = segmap.paint(per_segment)
    mask = None
    if args.mask:
        mask_labels, _ = io.read_labels(args.mask)
        mask = mask_labels >= 0
    cm = assess.confusion(predicted, truth, k=len(classes), mask=mask)
    kap = assess.kappa(cm)
    classified = per_segment >= 0
    non_rej = float(np.mean(table["p_value"][classified] >= args.alpha)) if classified.any() else 0.0
    report = {
        "assignments": os.path.basename(args.assignments),
        "kind": table["kind"][0] if table["kind"] else None,
        "classes": classes,
        "overall_accuracy": kap.overall_accuracy,
        "kappa": kap.kappa_hat,
        "kappa_variance": kap.variance,
        "pixels": cm.total,
        "unclassified_pixels": cm.unclassified,
        "alpha": args.alpha,
        "non_rejection_rate": non_rej,
        "confusion": cm.counts.tolist(),
        "provenance": io.provenance("assess", {"assignments": os.path.basename(args.assignments),
                                               "alpha": args.alpha}),
    }
    print(f"overall accuracy  {kap.overall_accuracy:.6f}")
    print(f"kappa             {kap.kappa_hat:.6f}")
    print(f"kappa variance    {kap.variance:.6e}")
    print(f"not rejected @{args.alpha:g} {non_rej:.6f}")
    if args.report:
        io.write_json(args.report, report)
    return EXIT_OK


def _load_report(path):
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    try:
        return assess.KappaReport(doc["overall_accuracy"], doc["kappa"], doc["kappa_variance"],
                                  doc.get("pixels", 0))
    except KeyError as exc:
        raise FormatError(f"{path}: missing field {exc}") from None


def cmd_assess(args):
    if args.compare:
        a, b = (_load_report(p) for p in args.compare)
        z, p = assess.kappa_equality_test(a, b)
        print(f"kappa A = {a.kappa_hat:.6f} (var {a.variance:.4e})")
        print(f"kappa B = {b.kappa_hat:.6f} (var {b.variance:.4e})")
        print(f"z = {z:.4f}  two-sided p = {p:.4g}")
        return EXIT_OK
    missing = [f for f in ("assignments", "segments", "truth") if getattr(args, f) is None]
    if missing:
        raise UsageError("assess needs --" + ", --".join(missing) + " (or --compare A B)")
    return _assess_one(args)


# --------------------------------------------------------------------------
# presets / reproduce


def cmd_presets(args):
    protos = preset_prototypes(CLASS_NAMES, args.sample_size, args.looks)
    prov = io.provenance("presets", {"sample_size": args.sample_size, "looks": args.looks})
    io.write_prototypes(args.out, protos, prov)
    print(f"wrote {len(protos)} presets to {args.out}")
    return EXIT_OK


def cmd_reproduce(args):
    kinds = _kinds(args.stat)
    seeds = list(range(args.seed, args.seed + args.seeds))
    records = run_experiment(seeds, tuple(args.tiles), kinds, args.beta, args.alpha,
                             looks=args.looks, prototype_pixels=args.prototype_pixels)
    summary = summarize(records)
    out = args.out
    prov = io.provenance("reproduce", {"seeds": seeds, "tiles": list(args.tiles),
                                       "kinds": [k.value for k in kinds], "looks": args.looks,
                                       "beta": args.beta, "alpha": args.alpha,
                                       "prototype_pixels": args.prototype_pixels}, args.seed)
    _write_rows(os.path.join(out, "runs.csv"), records_as_dicts(records), prov)
    _write_rows(os.path.join(out, "summary.csv"), summary, prov)
    print(f"{'statistic':20s} {'tile':>5s} {'accuracy%':>10s} {'not-rejected%':>14s} {'reference%':>11s}")
    for row in summary:
        kind = StatisticKind(row["kind"])
        ref = ""
        if kind in REFERENCE_NON_REJECTION and row["tile"] in TILES:
            ref = f"{REFERENCE_NON_REJECTION[kind][TILES.index(row['tile'])]:.1f}"
        print(f"{row['kind']:20s} {row['tile']:5d} {100 * row['overall_accuracy']:10.3f} "
              f"{100 * row['non_rejection']:14.2f} {ref:>11s}")
    if args.figures:
        plotting.save_non_rejection(os.path.join(out, "non_rejection.png"), summary,
                                    REFERENCE_NON_REJECTION)
        tile = min(args.tiles)
        _, kept = run_mosaic(seeds[0], (tile,), kinds, args.beta, args.alpha,
                             MosaicSpec(looks=args.looks, seed=seeds[0]),
                             args.prototype_pixels, keep_results=True)
        for (t, kind), (res, segmap) in kept.items():
            palette = assess.palette_for(res.class_names)
            rgb = assess.render_class_map(res, segmap, palette)
            plotting.save_class_map(os.path.join(out, f"classes_{kind.value}_{t}x{t}.png"),
                                    rgb, palette, res.class_names, f"{kind.label}, {t}x{t}")
            plotting.save_pvalue_map(os.path.join(out, f"pvalues_{kind.value}_{t}x{t}.png"),
                                     assess.render_pvalue_map(res, segmap, args.alpha),
                                     args.alpha, f"{kind.label}, {t}x{t}")
    return EXIT_OK


def _write_rows(path, rows, prov=None):
    buf = _io.StringIO()
    if prov:
        buf.write("# " + json.dumps(prov, separators=(",", ":")) + "\n")
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    io.atomic_write(path, buf.getvalue().encode())


# --------------------------------------------------------------------------


def build_parser():
    parser = _Parser(prog="polsar-regions", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    stat_help = "statistic kind(s): " + ", ".join(k.value for k in ALL_KINDS) + ", or all"
    stat_choices = [k.value for k in ALL_KINDS] + ["all"]

    p = sub.add_parser("simulate", help="simulate a Wishart mosaic and independent prototypes")
    p.add_argument("--preset", choices=["paper"], default="paper")
    p.add_argument("--layout", help='rows separated by ";", classes by ","; overrides --preset')
    p.add_argument("--tile", type=_positive_int, default=150, help="pixels per class block side")
    p.add_argument("--looks", type=_positive_int, default=4)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--prototype-pixels", type=_positive_int, default=900)
    p.add_argument("--no-prototypes", action="store_true")
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("classify", help="classify segments by minimum test statistic")
    p.add_argument("--raster", required=True)
    p.add_argument("--prototypes", required=True)
    seg = p.add_mutually_exclusive_group(required=True)
    seg.add_argument("--grid", type=_positive_int, help="regular N x N segments")
    seg.add_argument("--segments", help="segment label raster")
    p.add_argument("--stat", action="append", choices=stat_choices, help=stat_help)
    p.add_argument("--looks", type=float, help="must match the raster header when given")
    p.add_argument("--beta", type=_probability, default=DEFAULT_BETA, help="Renyi order")
    p.add_argument("--alpha", type=_probability, default=DEFAULT_ALPHA)
    p.add_argument("--fuse", action="store_true", help="add a majority-vote product")
    p.add_argument("--fuzzy-threshold", type=_probability)
    p.add_argument("--figures", action="store_true", help="also render PNG figures")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("assess", help="accuracy, kappa and non-rejection of a classification")
    p.add_argument("--assignments")
    p.add_argument("--segments")
    p.add_argument("--truth")
    p.add_argument("--mask", help="label raster; pixels < 0 are excluded")
    p.add_argument("--alpha", type=_probability, default=DEFAULT_ALPHA)
    p.add_argument("--report", help="write a JSON report here")
    p.add_argument("--compare", nargs=2, metavar=("A", "B"), help="kappa equality test of two reports")
    p.set_defaults(func=cmd_assess)

    p = sub.add_parser("presets", help="export the built-in class covariances as prototypes")
    p.add_argument("--sample-size", type=_positive_int, default=900)
    p.add_argument("--looks", type=float, default=4)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_presets)

    p = sub.add_parser("reproduce", help="run the simulated mosaic study over several seeds")
    p.add_argument("--seeds", type=_positive_int, default=5)
    p.add_argument("--seed", type=_seed, default=0, help="first seed")
    p.add_argument("--tiles", type=_positive_int, nargs="+", default=list(TILES))
    p.add_argument("--stat", action="append", choices=stat_choices, help=stat_help)
    p.add_argument("--looks", type=_positive_int, default=4)
    p.add_argument("--beta", type=_probability, default=DEFAULT_BETA)
    p.add_argument("--alpha", type=_probability, default=DEFAULT_ALPHA)
    p.add_argument("--prototype-pixels", type=_positive_int, default=900)
    p.add_argument("--figures", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, FormatError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (PolsarError, ArithmeticError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
