"""
Brute-force reference calibration.

Written from the definitions only: a detection and an annotation form a misaligned pair when the detection
score exceeds the average detection confidence and the annotation is the detection's best match with IoU in
[t_m, t_c]; detections claim annotations in descending score order, ties in file order. Nothing here is
shared with calibration.core: no IoU matrix, no sorted prefix, no early exit.
"""
import time
from fractions import Fraction

from calibration.core.annotations import AnnotationSet, ImageAnnotations
from calibration.core.calibrate import CalibrationCounters, CalibrationResult, MbpRecord


def _corners(box):
    return box[0], box[1], box[0] + box[2], box[1] + box[3]


def _overlap(det_box, ann_box):
    ax1, ay1, ax2, ay2 = _corners(det_box)
    bx1, by1, bx2, by2 = _corners(ann_box)
    left = ax1 if ax1 > bx1 else bx1
    right = ax2 if ax2 < bx2 else bx2
    top = ay1 if ay1 > by1 else by1
    bottom = ay2 if ay2 < by2 else by2
    if right <= left or bottom <= top:
        inter = 0.0
    else:
        inter = (right - left) * (bottom - top)
    union = det_box[2] * det_box[3] + ann_box[2] * ann_box[3] - inter
    if union <= 0:
        return 0.0
    return inter / union


def _average_confidence(annotations, detections):
    total = Fraction(0)
    used = 0
    for image in annotations:
        found = detections.get(image.path)
        scores = [] if found is None else [d.score for d in found.dets]
        scores.sort(reverse=True)
        top = scores[:len(image.faces)]
        total += sum((Fraction(s) for s in top), Fraction(0))
        used += len(top)
    if used == 0:
        return 0.0
    return float(total) / used


def oracle_calibrate(annotations, detections, cfg):
    """
    Reference implementation of the calibration, quadratic in detections x annotations per image.

    Args:
        annotations (AnnotationSet): original annotations
        detections (DetectionSet): predictor output
        cfg (CalibrationConfig): thresholds

    Returns:
        (CalibrationResult): same contents as calibrate_dataset on the same inputs
    """
    t_start = time.time()
    adc = cfg.adc_override if cfg.adc_override is not None else _average_confidence(annotations, detections)
    counters = CalibrationCounters()
    images, records = [], []

    for image in annotations:
        found = detections.get(image.path)
        dets = [] if found is None else list(found.dets)
        counters.images_processed += 1

        # rank by descending score, file position breaks ties
        ranked = sorted(range(len(dets)), key=lambda j: (-dets[j].score, j))
        confident = [j for j in ranked if dets[j].score > adc] if image.faces else []
        counters.hcdrs_considered += len(confident)

        claimed = {}
        for rank, j in enumerate(confident):
            best_k, best_iou = None, -1.0
            for k, face in enumerate(image.faces):
                if not cfg.include_invalid and face.invalid:
                    continue
                value = _overlap(dets[j].box, face.box)
                if value > best_iou:
                    best_k, best_iou = k, value
            if best_k is None:
                counters.skipped_out_of_interval += 1
            elif not cfg.t_m <= best_iou <= cfg.t_c:
                counters.skipped_out_of_interval += 1
            elif best_k in claimed:
                counters.skipped_claimed += 1
            else:
                claimed[best_k] = (rank, j, best_iou)

        faces = list(image.faces)
        pairs = sorted(claimed.items(), key=lambda item: item[1][0])
        for k, (rank, j, value) in pairs:
            records.append(MbpRecord(image.path, rank, k, value, dets[j].score, image.faces[k].box, dets[j].box))
            faces[k] = image.faces[k].with_box(dets[j].box)
        images.append(ImageAnnotations(image.path, tuple(faces)))

    return CalibrationResult(AnnotationSet(tuple(images)), records, counters, time.time() - t_start, adc, None)
