import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import List, Optional

from calibration.conf import conf, rounding
from calibration.core.adc import AdcResult, compute_adc, select_hcdrs
from calibration.core.annotations import AnnotationSet, ImageAnnotations
from calibration.core.geometry import BBox, iou_matrix, row_max_argmax
from calibration.errors import ConfigError
from calibration.formats.wider import align
from calibration.message.Messenger import Messenger


@dataclass(frozen=True)
class CalibrationConfig:
    t_m: float = conf.T_M
    t_c: float = conf.T_C
    adc_override: Optional[float] = None
    rounding: str = rounding.DECIMAL
    include_invalid: bool = True

    def __post_init__(self):
        if not 0.0 <= self.t_m < 1.0:
            raise ConfigError("t_m must be in [0, 1), got {}".format(self.t_m))
        if not 0.0 < self.t_c <= 1.0:
            raise ConfigError("t_c must be in (0, 1], got {}".format(self.t_c))
        if not self.t_m < self.t_c:
            raise ConfigError("t_m < t_c required, got t_m={} t_c={}".format(self.t_m, self.t_c))
        if self.adc_override is not None and not 0.0 <= self.adc_override <= 1.0:
            raise ConfigError("adc must be in [0, 1], got {}".format(self.adc_override))
        if self.rounding not in rounding.values():
            raise ConfigError("unknown rounding policy {}".format(self.rounding))

    def in_interval(self, value):
        return self.t_m <= value <= self.t_c


@dataclass(frozen=True)
class MbpRecord:
    path: str
    det_index: int
    ann_index: int
    iou: float
    score: float
    old_box: BBox
    new_box: BBox

    def get_data(self):
        return {
            'path': self.path,
            'det_index': self.det_index,
            'ann_index': self.ann_index,
            'iou': self.iou,
            'score': self.score,
            'old_box': list(self.old_box),
            'new_box': list(self.new_box),
        }


@dataclass
class CalibrationCounters:
    images_processed: int = 0
    hcdrs_considered: int = 0
    skipped_out_of_interval: int = 0
    skipped_claimed: int = 0

    def merge(self, other):
        self.images_processed += other.images_processed
        self.hcdrs_considered += other.hcdrs_considered
        self.skipped_out_of_interval += other.skipped_out_of_interval
        self.skipped_claimed += other.skipped_claimed

    def get_data(self):
        return dict(self.__dict__)


@dataclass
class CalibrationResult:
    calibrated: AnnotationSet
    mbps: List[MbpRecord] = field(default_factory=list)
    counters: CalibrationCounters = field(default_factory=CalibrationCounters)
    wall_time: float = 0.0
    adc: float = 0.0
    adc_result: Optional[AdcResult] = None
    pairs: list = field(default_factory=list, repr=False)


def calibrate_image(anns, hcdrs, cfg, counters=None):
    """
    Replaces the misaligned annotations of one image with the boxes of its high confidence detections.

    Every detection is matched to the annotation with the highest IoU. Detections are visited in descending
    score order: a detection whose best IoU lies in [t_m, t_c] claims its annotation, unless an earlier
    detection already did. Matching always uses the original boxes; replacements are applied at the end and
    keep every attribute flag of the annotation.

    Args:
        anns (ImageAnnotations): annotations of the image
        hcdrs (list of Detection): high confidence detections, sorted by descending score
        cfg (CalibrationConfig): thresholds
        counters (CalibrationCounters): updated in place when given

    Returns:
        (ImageAnnotations, list of MbpRecord): calibrated annotations and the replacements performed
    """
    if counters is not None:
        counters.images_processed += 1
        counters.hcdrs_considered += len(hcdrs)

    if cfg.include_invalid:
        eligible = list(range(len(anns.faces)))
    else:
        eligible = [k for k, face in enumerate(anns.faces) if not face.invalid]
    if len(hcdrs) == 0 or len(eligible) == 0:
        if counters is not None:
            counters.skipped_out_of_interval += len(hcdrs)
        return anns, []

    overlaps = iou_matrix([d.box for d in hcdrs], [anns.faces[k].box for k in eligible])
    max_overlaps, argmax_overlaps = row_max_argmax(overlaps)

    c_index = [eligible[k] for k in argmax_overlaps]
    a_status = [0] * len(anns.faces)
    for j in range(len(hcdrs)):
        if cfg.in_interval(max_overlaps[j]):
            if a_status[c_index[j]] == 0:
                a_status[c_index[j]] = 1
                continue
            if counters is not None:
                counters.skipped_claimed += 1
            c_index[j] = -1
            continue
        if counters is not None:
            counters.skipped_out_of_interval += 1
        c_index[j] = -1

    faces = list(anns.faces)
    records = []
    for j, k in enumerate(c_index):
        if k < 0:
            continue
        det = hcdrs[j]
        records.append(MbpRecord(anns.path, j, k, float(max_overlaps[j]), det.score, anns.faces[k].box, det.box))
        faces[k] = faces[k].with_box(det.box)

    if not records:
        return anns, records
    return ImageAnnotations(anns.path, tuple(faces)), records


def _calibrate_chunk(pairs, adc, cfg, step_fn=None):
    counters = CalibrationCounters()
    images, records = [], []
    for i, (anns, dets) in enumerate(pairs):
        if len(anns.faces) == 0:
            # nothing to match against
            images.append(anns)
            counters.images_processed += 1
        else:
            calibrated, mbps = calibrate_image(anns, select_hcdrs(dets, adc), cfg, counters)
            images.append(calibrated)
            records.extend(mbps)
        step_fn is not None and step_fn(i + 1, len(pairs))
    return images, records, counters


def _split(items, n):
    size, rest = divmod(len(items), n)
    chunks, start = [], 0
    for i in range(n):
        end = start + size + (1 if i < rest else 0)
        chunks.append(items[start:end])
        start = end
    return [c for c in chunks if c]


def calibrate_pairs(pairs, adc, cfg, workers=1, step_fn=None):
    """
    Calibrates aligned images with a fixed ADC.

    With more than one worker the images are split into contiguous chunks processed by a process pool;
    the chunks are reassembled in order, so the output does not depend on the amount of workers.

    Args:
        pairs (list of (ImageAnnotations, ImageDetections)): aligned images
        adc (float): effective average detection confidence
        cfg (CalibrationConfig): thresholds
        workers (int): amount of processes
        step_fn: function to log progress, called as step_fn(done, total)

    Returns:
        (list of ImageAnnotations, list of MbpRecord, CalibrationCounters): calibrated images in input order
    """
    pairs = list(pairs)
    if workers <= 1 or len(pairs) < 2:
        return _calibrate_chunk(pairs, adc, cfg, step_fn)

    chunks = _split(pairs, workers)
    results = {}
    with ProcessPoolExecutor(max_workers=workers) as executor:
        futures = {executor.submit(_calibrate_chunk, chunk, adc, cfg): i for i, chunk in enumerate(chunks)}
        done = 0
        for f in as_completed(futures):
            results[futures[f]] = f.result()
            done += len(chunks[futures[f]])
            step_fn is not None and step_fn(done, len(pairs))

    images, records, counters = [], [], CalibrationCounters()
    for i in range(len(chunks)):
        chunk_images, chunk_records, chunk_counters = results[i]
        images.extend(chunk_images)
        records.extend(chunk_records)
        counters.merge(chunk_counters)
    return images, records, counters


def calibrate_dataset(annotations, detections, cfg, workers=1, step_fn=None):
    """
    Bounding-box calibration of a whole dataset.

    Aligns annotations and detections, computes the ADC (unless cfg.adc_override is set), then calibrates
    every image with its high confidence detections.

    Args:
        annotations (AnnotationSet): original annotations
        detections (DetectionSet): predictor output
        cfg (CalibrationConfig): thresholds
        workers (int): amount of processes for the per-image stage
        step_fn: function to log progress

    Returns:
        (CalibrationResult): calibrated annotations, replacement ledger, counters and timing
    """
    t_start = time.time()
    if len(annotations) == 0:
        Messenger().warning("Calibration", "empty annotation set, nothing to calibrate")

    pairs = align(annotations, detections)
    if cfg.adc_override is not None:
        adc_result, adc = None, cfg.adc_override
    else:
        adc_result = compute_adc(pairs)
        adc = adc_result.value

    images, records, counters = calibrate_pairs(pairs, adc, cfg, workers, step_fn)
    t_end = time.time()
    return CalibrationResult(AnnotationSet(tuple(images)), records, counters, max(0.0, t_end - t_start),
                             adc, adc_result, pairs)

