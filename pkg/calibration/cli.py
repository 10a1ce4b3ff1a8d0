"""
Command line front end.

Prediction happens upstream: the tool reads detection files, calibrates the annotations and writes reports.

Exit codes: 0 success, 1 usage or validation error, 2 I/O error.
Diagnostics go to stderr, tables and summaries to stdout or files.
"""
import argparse
import csv
import json
import os
import sys
from pathlib import Path

from calibration.conf import conf, rounding
from calibration.core.adc import compute_adc
from calibration.core.calibrate import CalibrationConfig, calibrate_dataset
from calibration.errors import ConfigError, FormatError
from calibration.formats.wider import align, load_detections, load_wider_gt, save_wider_gt, write_detections_dir, \
    write_detections_file
from calibration.message.Messenger import Messenger
from calibration.message.Strategies import TerminalMessageStrategy
from calibration.report.diff import diff_annotations
from calibration.report.export import mbp_export
from calibration.report.histogram import check_edges, format_histogram, localization_histogram
from calibration.report.summary import build_report, run_summary, save_report
from calibration.synth.generator import SynthSpec, emit_detections, generate_dataset, perturb

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2


class UsageError(ConfigError):
    pass


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        # argparse exits with 2, which is reserved for I/O errors
        raise UsageError("{}: {}".format(self.prog, message))


def str2bool(string):
    value = string.strip().lower()
    if value in ('true', 't', 'yes', 'y', '1'):
        return True
    if value in ('false', 'f', 'no', 'n', '0'):
        return False
    raise argparse.ArgumentTypeError("expected a boolean, got {!r}".format(string))


def float_list(string):
    try:
        return [float(v) for v in string.split(",") if v.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma separated numbers, got {!r}".format(string))


def pair_of(cast):
    def parse(string):
        parts = string.split(",")
        if len(parts) != 2:
            raise argparse.ArgumentTypeError("expected MIN,MAX, got {!r}".format(string))
        try:
            return cast(parts[0]), cast(parts[1])
        except ValueError:
            raise argparse.ArgumentTypeError("expected two numbers, got {!r}".format(string))
    return parse


def positive_int(string):
    value = int(string)
    if value < 1:
        raise argparse.ArgumentTypeError("expected a positive integer, got {}".format(value))
    return value


def parse_args(argv=None):
    parser = ArgumentParser(prog="bdc_tool", description="Bounding-box calibration of face annotations")
    parser.add_argument("--quiet", action='store_true', default=False, help="Hide progress bars")
    sub = parser.add_subparsers(dest='command', metavar='COMMAND')
    sub.required = True

    def add_inputs(p):
        p.add_argument("--gt", required=True, help="WIDER ground-truth annotation file")
        p.add_argument("--dets", required=True, help="Detection directory (WIDER layout) or consolidated file")
        p.add_argument("--dets-format", choices=('dir', 'file'), default=None,
                       help="Layout of --dets, guessed from the path when omitted")
        p.add_argument("--image-ext", default=conf.IMAGE_EXT, help="Image extension used to build image keys")
        p.add_argument("--adc", type=float, default=None,
                       help="Use this ADC instead of computing it, e.g. {} for WIDER train".format(conf.REFERENCE_ADC))

    p = sub.add_parser("calibrate", help="Replace misaligned annotations with high confidence detections")
    add_inputs(p)
    p.add_argument("--out", required=True, help="Calibrated annotation file")
    p.add_argument("--tm", type=float, default=conf.T_M, help="Matching threshold T_m")
    p.add_argument("--tc", type=float, default=conf.T_C, help="Calibration threshold T_c")
    p.add_argument("--round-int", action='store_true', default=False,
                   help="Round calibrated coordinates to integers")
    p.add_argument("--include-invalid", type=str2bool, default=True,
                   help="Whether invalid-flagged annotations can be calibrated")
    p.add_argument("--report", default=None, help="JSON report file")
    p.add_argument("--mbp-export", default=None, help="Listing of replaced boxes (.tsv or .json)")
    p.add_argument("--predictor", default="unknown", help="Name of the model that produced the detections")
    p.add_argument("--threads", type=positive_int, default=1, help="Amount of workers")

    p = sub.add_parser("stats", help="Localization accuracy of high confidence detections")
    add_inputs(p)
    p.add_argument("--edges", type=float_list, default=list(conf.HISTOGRAM_EDGES), help="Bin edges")
    p.add_argument("--out", default=None, help="Write the table (or .json) to this file")

    p = sub.add_parser("adc", help="Average detection confidence")
    add_inputs(p)

    p = sub.add_parser("synth", help="Seeded synthetic dataset, detections and perturbation ledger")
    p.add_argument("--out", required=True, help="Output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--images", type=int, default=100)
    p.add_argument("--faces", type=pair_of(int), default=(1, 5), help="MIN,MAX faces per image")
    p.add_argument("--image-size", type=pair_of(int), default=(1024, 768), help="WIDTH,HEIGHT")
    p.add_argument("--box-size", type=pair_of(int), default=(16, 96), help="MIN,MAX box side")
    p.add_argument("--distractors", type=pair_of(int), default=(0, 0), help="MIN,MAX distractors per image")
    p.add_argument("--aligned-scores", type=pair_of(float), default=(0.9, 1.0))
    p.add_argument("--distractor-scores", type=pair_of(float), default=(0.0, 0.2))
    p.add_argument("--perturb-fraction", type=float, default=0.3)
    p.add_argument("--iou-range", type=pair_of(float), default=(0.55, 0.75))
    p.add_argument("--disjoint", action='store_true', default=False, help="Keep faces apart from each other")
    p.add_argument("--dets-format", choices=('dir', 'file'), default='dir')

    p = sub.add_parser("diff", help="List boxes that differ between two annotation files")
    p.add_argument("a", help="Reference annotation file")
    p.add_argument("b", help="Annotation file to compare")
    p.add_argument("--out", default=None, help="Write the listing to this file")

    return parser.parse_args(argv)


def _require_file(path):
    if not os.path.isfile(path):
        raise FileNotFoundError("no such file: {}".format(path))


def _load_inputs(args, workers=1):
    _require_file(args.gt)
    if not os.path.exists(args.dets):
        raise FileNotFoundError("no such file or directory: {}".format(args.dets))
    annotations = load_wider_gt(args.gt)
    detections = load_detections(args.dets, args.image_ext, workers, args.dets_format)
    return annotations, detections


def run_calibrate(args, out=sys.stdout):
    cfg = CalibrationConfig(args.tm, args.tc, args.adc,
                            rounding.INTEGER if args.round_int else rounding.DECIMAL,
                            args.include_invalid)
    annotations, detections = _load_inputs(args, args.threads)

    messenger = Messenger()
    result = messenger.progress_message(
        lambda step_fn: calibrate_dataset(annotations, detections, cfg, args.threads, step_fn), {},
        message="Calibrating", total=len(annotations))

    save_wider_gt(result.calibrated, args.out, cfg.rounding)
    summary = run_summary(result, result.adc_result, cfg, args.predictor)

    if args.report is not None:
        histogram = localization_histogram(result.pairs, result.adc)
        save_report(build_report(summary, histogram, result.mbps), args.report)
    if args.mbp_export is not None:
        fmt = "json" if args.mbp_export.lower().endswith(".json") else "tsv"
        with open(args.mbp_export, "w", encoding="utf-8", newline="\n") as f:
            mbp_export(result.mbps, f, fmt)

    print(summary.line(), file=out)
    return EXIT_OK


def _effective_adc(args, pairs):
    if args.adc is not None:
        if not 0.0 <= args.adc <= 1.0:
            raise ConfigError("adc must be in [0, 1], got {}".format(args.adc))
        return args.adc, None
    adc = compute_adc(pairs)
    return adc.value, adc


def run_stats(args, out=sys.stdout):
    edges = check_edges(args.edges)
    annotations, detections = _load_inputs(args)
    pairs = align(annotations, detections)
    adc, _ = _effective_adc(args, pairs)
    histogram = localization_histogram(pairs, adc, edges)

    if args.out is None:
        out.write("ADC\t{:.6f}\n".format(adc))
        out.write(format_histogram(histogram))
    elif args.out.lower().endswith(".json"):
        data = histogram.get_data()
        data['adc'] = adc
        with open(args.out, "w", encoding="utf-8", newline="\n") as f:
            json.dump(data, f, indent=2, sort_keys=True)
            f.write("\n")
    else:
        with open(args.out, "w", encoding="utf-8", newline="\n") as f:
            f.write("ADC\t{:.6f}\n".format(adc))
            f.write(format_histogram(histogram))
    return EXIT_OK


def run_adc(args, out=sys.stdout):
    annotations, detections = _load_inputs(args)
    pairs = align(annotations, detections)
    adc, result = _effective_adc(args, pairs)
    if result is None:
        out.write("adc: {:.6f} (given)\n".format(adc))
        return EXIT_OK
    out.write("adc: {:.6f}\n".format(result.value))
    out.write("numerator: {:.6f}\n".format(result.numerator))
    out.write("denominator: {}\n".format(result.denominator))
    out.write("images_used: {}\n".format(result.images_used))
    out.write("shortfall_images: {}\n".format(result.shortfall_images))
    return EXIT_OK


def write_ledger(ledger, path):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        writer = csv.writer(f, delimiter="\t", lineterminator="\n")
        writer.writerow(("path", "ann_index", "true_x", "true_y", "true_w", "true_h",
                         "perturbed_x", "perturbed_y", "perturbed_w", "perturbed_h", "achieved_iou"))
        for e in ledger:
            writer.writerow([e.path, e.ann_index, *map(repr, e.true_box), *map(repr, e.perturbed_box),
                             repr(e.achieved_iou)])


def run_synth(args, out=sys.stdout):
    spec = SynthSpec(args.seed, args.images, args.faces, args.image_size, args.box_size,
                     args.aligned_scores, args.distractor_scores, args.distractors, args.disjoint)
    truth = generate_dataset(spec)
    perturbed, ledger = perturb(truth, args.seed, args.perturb_fraction, args.iou_range, spec.image_size)
    detections = emit_detections(truth, spec)

    root = Path(args.out)
    root.mkdir(parents=True, exist_ok=True)
    save_wider_gt(truth, root / "gt_true.txt")
    save_wider_gt(perturbed, root / "gt.txt")
    if args.dets_format == 'dir':
        write_detections_dir(detections, root / "dets")
    else:
        with open(root / "dets.txt", "w", encoding="utf-8", newline="\n") as f:
            write_detections_file(detections, f)
    write_ledger(ledger, root / "ledger.tsv")

    out.write("{} images, {} faces, {} detections, {} perturbed\n".format(
        len(truth), truth.num_faces(), detections.num_detections(), len(ledger)))
    return EXIT_OK


def run_diff(args, out=sys.stdout):
    _require_file(args.a)
    _require_file(args.b)
    changes = diff_annotations(load_wider_gt(args.a), load_wider_gt(args.b), args.a, args.b)
    lines = ["{} changes".format(len(changes))] + [c.row() for c in changes]
    text = "\n".join(lines) + "\n"
    if args.out is None:
        out.write(text)
    else:
        with open(args.out, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        out.write(lines[0] + "\n")
    return EXIT_OK


COMMANDS = {
    'calibrate': run_calibrate,
    'stats': run_stats,
    'adc': run_adc,
    'synth': run_synth,
    'diff': run_diff,
}


def main(argv=None, out=None, err=None):
    """
    Runs a subcommand.

    Args:
        argv (list of str): arguments, sys.argv[1:] when None
        out: stream for data output, sys.stdout when None
        err: stream for diagnostics, sys.stderr when None

    Returns:
        (int): exit code
    """
    out = out if out is not None else sys.stdout
    err = err if err is not None else sys.stderr
    messenger = Messenger()
    previous = messenger.get_strategy()
    try:
        args = parse_args(argv)
        messenger.set_strategy(TerminalMessageStrategy(err, progress=not args.quiet))
        return COMMANDS[args.command](args, out)
    except (ConfigError, FormatError) as e:
        print("Error: {}".format(e), file=err)
        return EXIT_USAGE
    except OSError as e:
        print("I/O error: {}".format(e), file=err)
        return EXIT_IO
    finally:
        messenger.set_strategy(previous)
