"""
Reading and writing of WIDER FACE ground-truth files and per-image detection files.

Ground truth is a sequence of records:

    path
    K
    x y w h blur expression illumination invalid occlusion pose    (K lines)

An image with K = 0 may be followed by a single all-zero attribute line, which real files contain.

Detections follow the WIDER evaluation layout: one text file per image, mirrored under a root directory,
holding a name line, a count line and then "x y w h score" lines.
"""
import math
import os
from concurrent.futures import ProcessPoolExecutor
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path, PurePosixPath

from calibration.conf import conf, rounding
from calibration.core.annotations import (FLAGS, AnnotationSet, Detection, DetectionSet, FaceAnnotation,
                                          ImageAnnotations, ImageDetections)
from calibration.core.geometry import BBox
from calibration.errors import FormatError
from calibration.message.Messenger import Messenger

GT_FIELDS = 4 + len(FLAGS)
DET_FIELDS = 5
DUMMY_LINE = " ".join(["0"] * GT_FIELDS)


class _Lines:
    def __init__(self, stream, source):
        """
        Line cursor that strips LF/CRLF endings and keeps track of 1-based line numbers.

        Args:
            stream: text stream or iterable of lines
            source (str): name used in error messages
        """
        self.lines = [line.rstrip("\r\n") for line in stream]
        # trailing blank lines are not garbage
        while self.lines and self.lines[-1].strip() == "":
            self.lines.pop()
        self.source = source
        self.pos = 0

    def done(self):
        return self.pos >= len(self.lines)

    def peek(self):
        return None if self.done() else self.lines[self.pos]

    def next(self, what):
        if self.done():
            raise FormatError("unexpected end of file, expected {}".format(what), self.source, self.pos + 1)
        line = self.lines[self.pos]
        self.pos += 1
        return line

    def error(self, message, line=None):
        return FormatError(message, self.source, self.pos if line is None else line)


def _source_name(stream, source):
    if source is not None:
        return source
    return getattr(stream, 'name', '<stream>')


def _parse_count(text, lines):
    try:
        count = int(text.strip())
    except ValueError:
        raise lines.error("invalid count {!r}".format(text.strip()))
    if count < 0:
        raise lines.error("negative count {}".format(count))
    return count


def _parse_numbers(text, expected, lines):
    tokens = text.split()
    if len(tokens) != expected:
        raise lines.error("expected {} fields, got {}".format(expected, len(tokens)))
    try:
        values = [float(t) for t in tokens]
    except ValueError:
        raise lines.error("non-numeric field in {!r}".format(text.strip()))
    if not all(math.isfinite(v) for v in values):
        raise lines.error("non-finite field in {!r}".format(text.strip()))
    return values


def _parse_box(values, lines):
    box = BBox(*values[:4])
    if box.w < 0 or box.h < 0:
        raise lines.error("negative box size {}".format(tuple(box)))
    return box


def _is_dummy(text):
    tokens = text.split()
    if len(tokens) != GT_FIELDS:
        return False
    try:
        return all(float(t) == 0 for t in tokens)
    except ValueError:
        return False


def parse_wider_gt(stream, source=None):
    """
    Parses a WIDER ground-truth annotation file.

    Args:
        stream: text stream (or iterable of lines)
        source (str): name used in messages, defaults to the stream name

    Returns:
        (AnnotationSet): images and faces in file order

    Raises:
        FormatError: malformed count, missing attribute lines, duplicate path or trailing garbage
    """
    lines = _Lines(stream, _source_name(stream, source))
    messenger = Messenger()
    images = []
    seen = {}
    noisy_flags = 0

    while not lines.done():
        path = lines.next("image path").strip()
        path_line = lines.pos
        if path == "":
            raise lines.error("empty image path")
        if path in seen:
            raise lines.error("duplicate image path {} (first at line {})".format(path, seen[path]))
        seen[path] = path_line
        if lines.done():
            raise lines.error("trailing image path {} without a face count".format(path))
        count = _parse_count(lines.next("face count"), lines)

        faces = []
        for _ in range(count):
            values = _parse_numbers(lines.next("{} attribute lines for {}".format(count, path)), GT_FIELDS, lines)
            flags = values[4:]
            if any(f != int(f) for f in flags):
                raise lines.error("attribute flags must be integers")
            face = FaceAnnotation(_parse_box(values, lines), *(int(f) for f in flags))
            if face.out_of_range_flags():
                noisy_flags += 1
            faces.append(face)

        if count == 0 and not lines.done() and _is_dummy(lines.peek()):
            lines.next("dummy line")

        images.append(ImageAnnotations(path, tuple(faces)))

    if noisy_flags:
        messenger.warning("Attribute flags", "{}: {} faces with out-of-range attribute flags".format(
            lines.source, noisy_flags))
    return AnnotationSet(tuple(images))


def format_number(value, policy=rounding.DECIMAL, decimals=conf.DECIMALS):
    """
    Formats a coordinate for a WIDER file.

    Integral values are written without decimal point. Other values are written with a fixed number of
    decimals, or rounded half away from zero under the integer policy.

    Args:
        value (float): coordinate
        policy (str): rounding.DECIMAL or rounding.INTEGER
        decimals (int): decimals of the DECIMAL policy

    Returns:
        (str): formatted number
    """
    if float(value).is_integer():
        return str(int(value))
    if policy == rounding.INTEGER:
        return str(int(Decimal(float(value)).quantize(Decimal(1), rounding=ROUND_HALF_UP)))
    if policy != rounding.DECIMAL:
        raise ValueError("unknown rounding policy {}".format(policy))
    return "{:.{}f}".format(value, decimals)


def format_face(face, policy=rounding.DECIMAL):
    coords = [format_number(v, policy) for v in face.box]
    flags = [str(int(f)) for f in face.flags()]
    return " ".join(coords + flags)


def write_wider_gt(annotations, stream, policy=rounding.DECIMAL):
    """
    Writes an annotation set in WIDER ground-truth format, always with LF line endings.

    Args:
        annotations (AnnotationSet): annotations to write
        stream: writable text stream
        policy (str): rounding policy for non-integral coordinates
    """
    for image in annotations:
        stream.write("{}\n{}\n".format(image.path, len(image.faces)))
        if not image.faces:
            stream.write(DUMMY_LINE + "\n")
        for face in image.faces:
            stream.write(format_face(face, policy) + "\n")


def _parse_path(parse, path, *args):
    try:
        with open(path, "r", encoding="utf-8", newline="") as f:
            return parse(f, *args, source=str(path))
    except UnicodeDecodeError as e:
        raise FormatError("not UTF-8 text, byte {} at offset {}".format(hex(e.object[e.start]), e.start),
                          str(path)) from e


def load_wider_gt(path):
    return _parse_path(parse_wider_gt, path)


def save_wider_gt(annotations, path, policy=rounding.DECIMAL):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        write_wider_gt(annotations, f, policy)


############
# DETECTIONS
############

def _parse_detection_lines(lines, count, key):
    dets = []
    messenger = Messenger()
    for _ in range(count):
        line = lines.next("{} detection lines".format(count))
        values = _parse_numbers(line, DET_FIELDS, lines)
        score = values[4]
        if not 0.0 <= score <= 1.0:
            messenger.warning("Detection score", "{}:{}: score {} outside [0, 1]".format(
                lines.source, lines.pos, score))
        dets.append(Detection(_parse_box(values, lines), score))
    return ImageDetections.sorted(key, dets)


def parse_detection_record(stream, key, source=None):
    """
    Parses the detection file of a single image.

    Args:
        stream: text stream
        key (str): image key the detections belong to
        source (str): name used in error messages

    Returns:
        (ImageDetections): detections sorted by descending score

    Raises:
        FormatError: count mismatch or non-numeric fields
    """
    lines = _Lines(stream, _source_name(stream, source))
    lines.next("image name")
    count = _parse_count(lines.next("detection count"), lines)
    if len(lines.lines) - lines.pos != count:
        raise FormatError("count {} but {} detection lines".format(count, len(lines.lines) - lines.pos),
                          lines.source, 2)
    return _parse_detection_lines(lines, count, key)


def detection_key(file_path, root, image_ext=conf.IMAGE_EXT):
    """
    Image key of a detection file: its path relative to root, with the extension swapped.

    Args:
        file_path (str or Path): detection file
        root (str or Path): root of the mirrored layout
        image_ext (str): image extension, ".jpg" for WIDER

    Returns:
        (str): key with "/" separators, e.g. "0--Parade/0_Parade_marchingband_1_5.jpg"
    """
    rel = PurePosixPath(Path(file_path).relative_to(root).as_posix())
    return str(rel.with_suffix(image_ext))


def _load_detection_file(args):
    file_path, key = args
    return _parse_path(parse_detection_record, file_path, key)


def list_detection_files(root, det_ext=conf.DETECTION_EXT):
    files = []
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames.sort()
        for name in sorted(filenames):
            if name.endswith(det_ext):
                files.append(Path(dirpath) / name)
    return files


def parse_detections_dir(root, image_ext=conf.IMAGE_EXT, workers=1):
    """
    Loads a mirrored directory of per-image detection files.

    Args:
        root (str or Path): directory to explore
        image_ext (str): extension that replaces ".txt" in the image keys
        workers (int): amount of processes used to parse the files

    Returns:
        (DetectionSet): detections of every file, each list sorted by descending score

    Raises:
        NotADirectoryError: if root is not a directory
        FormatError: on the first malformed file
    """
    if not os.path.isdir(root):
        raise NotADirectoryError(root)
    jobs = [(f, detection_key(f, root, image_ext)) for f in list_detection_files(root)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            images = list(executor.map(_load_detection_file, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        images = [_load_detection_file(job) for job in jobs]
    return DetectionSet(tuple(images))


def parse_detections_file(stream, source=None):
    """
    Parses the consolidated detection format: per-image records (key, count, lines) concatenated.

    Args:
        stream: text stream
        source (str): name used in error messages

    Returns:
        (DetectionSet): detections in file order

    Raises:
        FormatError: malformed count, missing lines or duplicate key
    """
    lines = _Lines(stream, _source_name(stream, source))
    images = []
    seen = set()
    while not lines.done():
        key = lines.next("image key").strip()
        if key == "":
            raise lines.error("empty image key")
        if key in seen:
            raise lines.error("duplicate image key {}".format(key))
        seen.add(key)
        count = _parse_count(lines.next("detection count"), lines)
        images.append(_parse_detection_lines(lines, count, key))
    return DetectionSet(tuple(images))


def load_detections(path, image_ext=conf.IMAGE_EXT, workers=1, fmt=None):
    """
    Loads detections from a directory or a consolidated file.

    Args:
        path (str or Path): detections location
        image_ext (str): image extension used to build keys of the directory layout
        workers (int): parsing processes for the directory layout
        fmt (str): "dir", "file" or None to decide from the path

    Returns:
        (DetectionSet): loaded detections
    """
    if fmt is None:
        fmt = "dir" if os.path.isdir(path) else "file"
    if fmt == "dir":
        return parse_detections_dir(path, image_ext, workers)
    return _parse_path(parse_detections_file, path)


def format_detection(det, policy=rounding.DECIMAL):
    coords = [format_number(v, policy) for v in det.box]
    return " ".join(coords + [repr(float(det.score))])


def write_detection_record(image, stream, name=None):
    stream.write("{}\n{}\n".format(name if name is not None else image.path, len(image.dets)))
    for det in image.dets:
        stream.write(format_detection(det) + "\n")


def write_detections_file(detections, stream):
    for image in detections:
        write_detection_record(image, stream)


def write_detections_dir(detections, root, det_ext=conf.DETECTION_EXT):
    """
    Writes one file per image under root, mirroring the image keys.

    Args:
        detections (DetectionSet): detections to write
        root (str or Path): output directory
        det_ext (str): extension of the detection files
    """
    for image in detections:
        rel = PurePosixPath(image.path)
        target = Path(root).joinpath(*rel.with_suffix(det_ext).parts)
        target.parent.mkdir(parents=True, exist_ok=True)
        with open(target, "w", encoding="utf-8", newline="\n") as f:
            write_detection_record(image, f, name=rel.stem)


#############
# ALIGNMENT
#############

class Alignment(list):
    def __init__(self, pairs=(), missing=(), extra=()):
        """
        List of (ImageAnnotations, ImageDetections) pairs in annotation order.

        Args:
            pairs: aligned pairs
            missing (list of str): annotated images without detections
            extra (list of str): detection images without annotations
        """
        super().__init__(pairs)
        self.missing = list(missing)
        self.extra = list(extra)


def align(annotations, detections):
    """
    Pairs every annotated image with its detections.

    Annotated images without detections get an empty detection list; detections of images that are not
    annotated are ignored. Both cases are reported as warnings.

    Args:
        annotations (AnnotationSet): ground truth
        detections (DetectionSet): predictions

    Returns:
        (Alignment): pairs in annotation order
    """
    pairs, missing = [], []
    for image in annotations:
        dets = detections.get(image.path)
        if dets is None:
            missing.append(image.path)
            dets = ImageDetections(image.path, ())
        pairs.append((image, dets))
    annotated = set(annotations.paths())
    extra = [image.path for image in detections if image.path not in annotated]

    messenger = Messenger()
    if missing:
        messenger.warning("Alignment", "{} annotated images have no detections (first: {})".format(
            len(missing), missing[0]))
    if extra:
        messenger.warning("Alignment", "{} detection images are not annotated and are ignored (first: {})".format(
            len(extra), extra[0]))
    return Alignment(pairs, missing, extra)
