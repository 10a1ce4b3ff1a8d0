"""
Seeded synthetic WIDER-like datasets.

Randomness comes from numpy's PCG64 generator (numpy.random.default_rng), seeded with a SeedSequence built
from (seed, stream id), so every stage is a pure function of its inputs and seed on every platform.
"""
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from calibration.conf import conf
from calibration.core.annotations import (AnnotationSet, Detection, DetectionSet, FaceAnnotation,
                                          ImageAnnotations, ImageDetections)
from calibration.core.geometry import BBox, iou
from calibration.errors import SynthError

# independent random streams derived from the same seed
DATASET_STREAM = 0
PERTURB_STREAM = 1
DETECTIONS_STREAM = 2

MAX_PLACEMENT_ATTEMPTS = 1000


def rng_for(seed, stream):
    return np.random.default_rng([int(seed), stream])


def _check_range(name, r, minimum=None):
    lo, hi = r
    if lo > hi:
        raise SynthError("{}: min {} > max {}".format(name, lo, hi))
    if minimum is not None and lo < minimum:
        raise SynthError("{}: min {} < {}".format(name, lo, minimum))


@dataclass(frozen=True)
class SynthSpec:
    seed: int = 0
    n_images: int = 10
    faces_per_image: Tuple[int, int] = (1, 5)
    image_size: Tuple[int, int] = (1024, 768)
    box_size: Tuple[int, int] = (16, 96)
    aligned_scores: Tuple[float, float] = (0.9, 1.0)
    distractor_scores: Tuple[float, float] = (0.0, 0.2)
    distractors_per_image: Tuple[int, int] = (0, 0)
    disjoint: bool = False

    def __post_init__(self):
        if self.n_images < 0:
            raise SynthError("n_images must be >= 0, got {}".format(self.n_images))
        _check_range("faces_per_image", self.faces_per_image, 0)
        _check_range("box_size", self.box_size, 1)
        _check_range("distractors_per_image", self.distractors_per_image, 0)
        _check_range("aligned_scores", self.aligned_scores, 0)
        _check_range("distractor_scores", self.distractor_scores, 0)
        if self.aligned_scores[1] > 1 or self.distractor_scores[1] > 1:
            raise SynthError("scores must lie in [0, 1]")
        width, height = self.image_size
        if self.box_size[1] > width or self.box_size[1] > height:
            raise SynthError("box size {} does not fit in image {}x{}".format(self.box_size[1], width, height))

    def image_path(self, i):
        return "{0}--synth/{0}_synth_{1:05d}.jpg".format(i % 10, i)


@dataclass(frozen=True)
class PerturbEntry:
    path: str
    ann_index: int
    true_box: BBox
    perturbed_box: BBox
    achieved_iou: float

    def get_data(self):
        return {
            'path': self.path,
            'ann_index': self.ann_index,
            'true_box': list(self.true_box),
            'perturbed_box': list(self.perturbed_box),
            'achieved_iou': self.achieved_iou,
        }


@dataclass(frozen=True)
class PerturbLedger:
    entries: Tuple[PerturbEntry, ...] = ()

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def keys(self):
        return {(e.path, e.ann_index) for e in self.entries}


def _random_box(rng, spec):
    width, height = spec.image_size
    lo, hi = spec.box_size
    w = int(rng.integers(lo, hi, endpoint=True))
    h = int(rng.integers(lo, hi, endpoint=True))
    x = int(rng.integers(0, width - w, endpoint=True))
    y = int(rng.integers(0, height - h, endpoint=True))
    return BBox(x, y, w, h)


def _far_enough(box, others, gap):
    for o in others:
        if (box.x < o.x + o.w + gap and o.x < box.x + box.w + gap
                and box.y < o.y + o.h + gap and o.y < box.y + box.h + gap):
            return False
    return True


def generate_dataset(spec):
    """
    Random annotations with integer coordinates that fit inside the image.

    Faces may overlap, unless spec.disjoint asks for faces separated by at least the largest box size.

    Args:
        spec (SynthSpec): generator parameters

    Returns:
        (AnnotationSet): spec.n_images images

    Raises:
        SynthError: if disjoint faces cannot be placed
    """
    rng = rng_for(spec.seed, DATASET_STREAM)
    gap = spec.box_size[1]
    images = []
    for i in range(spec.n_images):
        n_faces = int(rng.integers(spec.faces_per_image[0], spec.faces_per_image[1], endpoint=True))
        boxes = []
        for _ in range(n_faces):
            box = _random_box(rng, spec)
            attempts = 1
            while spec.disjoint and not _far_enough(box, boxes, gap):
                if attempts >= MAX_PLACEMENT_ATTEMPTS:
                    raise SynthError("cannot place {} disjoint faces in a {}x{} image".format(
                        n_faces, *spec.image_size))
                box = _random_box(rng, spec)
                attempts += 1
            boxes.append(box)
        faces = tuple(FaceAnnotation(BBox(*map(float, b))) for b in boxes)
        images.append(ImageAnnotations(spec.image_path(i), faces))
    return AnnotationSet(tuple(images))


def shift_for_iou(w, t):
    """
    Shift along one axis that gives IoU t between a box of width w and its shifted copy.

    For two equal boxes offset by d, IoU = (w - d) / (w + d), hence d = w (1 - t) / (1 + t).
    """
    return w * (1.0 - t) / (1.0 + t)


def _shifted_copy(box, dx, decimals):
    # rounding x to the written decimals keeps the box identical after a save / load cycle
    return BBox(round(float(box.x + dx), decimals), box.y, box.w, box.h)


def _quantized_shift(box, t, iou_range, decimals, image_width=None):
    lo, hi = iou_range
    d = shift_for_iou(box.w, t)
    sign = 1.0
    if image_width is not None and box.x + d + box.w > image_width:
        sign = -1.0
    moved = _shifted_copy(box, sign * d, decimals)
    step = 10.0 ** -decimals
    achieved = iou(box, moved)
    # one step outwards lowers the IoU, one step inwards raises it
    if achieved > hi:
        moved = _shifted_copy(box, sign * (abs(moved.x - box.x) + step), decimals)
    elif achieved < lo:
        moved = _shifted_copy(box, sign * (abs(moved.x - box.x) - step), decimals)
    return moved


def perturb(annotations, seed, fraction, iou_range, image_size=None, decimals=conf.DECIMALS):
    """
    Misaligns a seeded selection of faces by a horizontal shift with a target IoU.

    floor(fraction * K) of the K faces are selected. Each one is shifted along +x so that its IoU with the
    true box is a target drawn uniformly from iou_range; when image_size is given and the shifted box would
    leave the image, it is shifted along -x instead. The shifted x is rounded to the decimals of the WIDER
    writer, so the ledger describes exactly the boxes found in a saved file, and the achieved IoU stays in
    iou_range up to one rounding step when lo == hi.

    Args:
        annotations (AnnotationSet): true annotations
        seed (int): seed of the selection and targets
        fraction (float): share of faces to perturb, in [0, 1]
        iou_range ((float, float)): target IoU range (lo, hi) with 0 < lo <= hi < 1
        image_size ((int, int)): image (width, height), optional
        decimals (int): decimals of the perturbed coordinates

    Returns:
        (AnnotationSet, PerturbLedger): perturbed annotations and the ledger of every perturbation
    """
    lo, hi = iou_range
    if not 0 < lo <= hi < 1:
        raise SynthError("iou_range must satisfy 0 < lo <= hi < 1, got {}".format(iou_range))
    if not 0 <= fraction <= 1:
        raise SynthError("fraction must be in [0, 1], got {}".format(fraction))

    flat = [(i, k) for i, image in enumerate(annotations) for k in range(len(image.faces))]
    n = int(math.floor(fraction * len(flat)))
    if n == 0:
        return annotations, PerturbLedger()

    rng = rng_for(seed, PERTURB_STREAM)
    selected = sorted(int(s) for s in rng.choice(len(flat), size=n, replace=False))
    targets = rng.uniform(lo, hi, size=n)

    images = [list(image.faces) for image in annotations]
    entries = []
    for (i, k), t in zip((flat[s] for s in selected), targets):
        path = annotations.images[i].path
        face = images[i][k]
        moved = _quantized_shift(face.box, float(t), iou_range, decimals,
                                 None if image_size is None else image_size[0])
        images[i][k] = face.with_box(moved)
        entries.append(PerturbEntry(path, k, face.box, moved, iou(face.box, moved)))

    out = AnnotationSet(tuple(ImageAnnotations(image.path, tuple(faces))
                              for image, faces in zip(annotations, images)))
    return out, PerturbLedger(tuple(entries))


def emit_detections(truth, spec):
    """
    Detections of an ideal predictor: every true box with a high score, plus optional low-score distractors.

    Args:
        truth (AnnotationSet): true (unperturbed) annotations
        spec (SynthSpec): score ranges and distractor amounts

    Returns:
        (DetectionSet): detections sorted by descending score per image
    """
    rng = rng_for(spec.seed, DETECTIONS_STREAM)
    images = []
    for image in truth:
        dets = [Detection(face.box, float(rng.uniform(*spec.aligned_scores))) for face in image.faces]
        n_distractors = int(rng.integers(spec.distractors_per_image[0], spec.distractors_per_image[1],
                                         endpoint=True))
        for _ in range(n_distractors):
            box = BBox(*map(float, _random_box(rng, spec)))
            dets.append(Detection(box, float(rng.uniform(*spec.distractor_scores))))
        images.append(ImageDetections.sorted(image.path, dets))
    return DetectionSet(tuple(images))
