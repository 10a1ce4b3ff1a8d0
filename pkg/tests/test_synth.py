import time

import numpy as np
import pytest

from calibration.core.annotations import AnnotationSet, Detection, DetectionSet, ImageDetections
from calibration.core.calibrate import CalibrationConfig, calibrate_dataset
from calibration.core.geometry import BBox, iou
from calibration.errors import SynthError
from calibration.report.losses import loss_delta_report
from calibration.synth.generator import SynthSpec, emit_detections, generate_dataset, perturb, shift_for_iou
from calibration.synth.oracle import oracle_calibrate
from tests.builders import annotation_set, detection_set, dets, image


def mixed_dataset(seed, n_images):
    """
    Images with 0 to 8 faces and 0 to 12 detections: shifted and resized copies of faces, plus random boxes,
    scores uniform in [0, 1].
    """
    rng = np.random.default_rng(seed)
    images, predictions = [], []
    for i in range(n_images):
        path = "{}--mixed/{}.jpg".format(i % 5, i)
        faces = []
        for _ in range(int(rng.integers(0, 8, endpoint=True))):
            x, y = (int(v) for v in rng.integers(0, 120, size=2))
            w, h = (int(v) for v in rng.integers(1, 40, size=2))
            faces.append((x, y, w, h))
        items = []
        for _ in range(int(rng.integers(0, 12, endpoint=True))):
            score = round(float(rng.uniform(0, 1)), 2)
            if faces and rng.uniform() < 0.8:
                x, y, w, h = faces[int(rng.integers(0, len(faces)))]
                dx, dy = (int(v) for v in rng.integers(-6, 7, size=2))
                dw, dh = (int(v) for v in rng.integers(-3, 4, size=2))
                items.append((x + dx, y + dy, max(0, w + dw), max(0, h + dh), score))
            else:
                x, y = (int(v) for v in rng.integers(0, 120, size=2))
                items.append((x, y, int(rng.integers(0, 40)), int(rng.integers(0, 40)), score))
        images.append(image(path, *faces))
        predictions.append(dets(path, *items))
    return annotation_set(*images), detection_set(*predictions)


def test_generation_is_deterministic():
    spec = SynthSpec(seed=3, n_images=20)
    assert generate_dataset(spec) == generate_dataset(spec)
    assert generate_dataset(spec) != generate_dataset(SynthSpec(seed=4, n_images=20))


def test_no_images():
    assert len(generate_dataset(SynthSpec(n_images=0))) == 0


def test_generated_faces_fit():
    spec = SynthSpec(seed=1, n_images=10, faces_per_image=(1, 5))
    truth = generate_dataset(spec)
    assert 10 <= truth.num_faces() <= 50
    width, height = spec.image_size
    for image_annotations in truth:
        assert 1 <= len(image_annotations.faces) <= 5
        for face in image_annotations.faces:
            assert all(float(v).is_integer() for v in face.box)
            assert 0 <= face.box.x and face.box.x + face.box.w <= width
            assert 0 <= face.box.y and face.box.y + face.box.h <= height
            assert spec.box_size[0] <= face.box.w <= spec.box_size[1]


def test_disjoint_faces_keep_their_distance():
    spec = SynthSpec(seed=2, n_images=30, faces_per_image=(3, 6), box_size=(16, 48), disjoint=True)
    for image_annotations in generate_dataset(spec):
        boxes = image_annotations.boxes()
        for k, a in enumerate(boxes):
            for b in boxes[k + 1:]:
                grown = BBox(a.x - 48, a.y - 48, a.w + 96, a.h + 96)
                assert iou(grown, b) == 0.0


@pytest.mark.parametrize("kwargs", [
    dict(faces_per_image=(5, 1)),
    dict(box_size=(16, 2000)),
    dict(box_size=(0, 10)),
    dict(aligned_scores=(0.5, 1.5)),
    dict(n_images=-1),
])
def test_infeasible_specs(kwargs):
    with pytest.raises(SynthError):
        SynthSpec(**kwargs)


def test_shift_formula():
    assert shift_for_iou(12, 0.5) == 4.0
    assert shift_for_iou(10, 1.0) == 0.0


def test_perturb_exact_target():
    truth = annotation_set(image("a.jpg", (0, 0, 12, 12)))
    perturbed, ledger = perturb(truth, 0, 1.0, (0.5, 0.5))
    assert perturbed.images[0].faces[0].box == BBox(4, 0, 12, 12)
    entry = ledger.entries[0]
    assert (entry.path, entry.ann_index) == ("a.jpg", 0)
    assert entry.achieved_iou == 0.5
    assert entry.true_box == BBox(0, 0, 12, 12)


def test_perturb_falls_back_to_the_left():
    truth = annotation_set(image("a.jpg", (1000, 0, 20, 20)))
    perturbed, _ = perturb(truth, 0, 1.0, (0.5, 0.5), image_size=(1024, 768))
    box = perturbed.images[0].faces[0].box
    assert box.x < 1000
    assert box.x == round(box.x, 2)
    assert iou(box, BBox(1000, 0, 20, 20)) == pytest.approx(0.5, abs=1e-3)


def test_perturb_nothing():
    truth = generate_dataset(SynthSpec(seed=1, n_images=10))
    perturbed, ledger = perturb(truth, 1, 0.0, (0.55, 0.75))
    assert perturbed == truth
    assert len(ledger) == 0


def test_perturb_selection_and_achieved_iou():
    spec = SynthSpec(seed=6, n_images=100)
    truth = generate_dataset(spec)
    perturbed, ledger = perturb(truth, 6, 0.3, (0.55, 0.75), spec.image_size)
    assert len(ledger) == int(0.3 * truth.num_faces())
    assert len(ledger.keys()) == len(ledger)
    for entry in ledger:
        assert 0.55 - 1e-9 <= entry.achieved_iou <= 0.75 + 1e-9
        assert entry.achieved_iou == iou(entry.true_box, entry.perturbed_box)
    changed = {(a.path, k) for a, b in zip(truth, perturbed)
               for k, (fa, fb) in enumerate(zip(a.faces, b.faces)) if fa != fb}
    assert changed == ledger.keys()
    assert perturb(truth, 6, 0.3, (0.55, 0.75), spec.image_size) == (perturbed, ledger)


@pytest.mark.parametrize("iou_range", [(0.0, 0.5), (0.6, 0.5), (0.5, 1.0)])
def test_perturb_rejects_bad_ranges(iou_range):
    with pytest.raises(SynthError):
        perturb(AnnotationSet(), 0, 0.5, iou_range)


def test_emitted_detections():
    spec = SynthSpec(seed=8, n_images=40, distractors_per_image=(0, 3))
    truth = generate_dataset(spec)
    predictions = emit_detections(truth, spec)
    assert emit_detections(truth, spec) == predictions
    for image_annotations, image_detections in zip(truth, predictions):
        assert image_detections.path == image_annotations.path
        scores = image_detections.scores()
        assert scores == sorted(scores, reverse=True)
        aligned = scores[:len(image_annotations.faces)]
        assert all(0.9 <= s <= 1.0 for s in aligned)
        assert all(0.0 <= s <= 0.2 for s in scores[len(aligned):])
        assert set(image_detections.boxes()[:len(aligned)]) == set(image_annotations.boxes())


def test_no_distractors():
    spec = SynthSpec(seed=9, n_images=20)
    truth = generate_dataset(spec)
    predictions = emit_detections(truth, spec)
    assert [len(d) for d in predictions] == [len(a) for a in truth]


def test_oracle_on_empty_inputs():
    result = oracle_calibrate(AnnotationSet(), DetectionSet(), CalibrationConfig())
    assert len(result.calibrated) == 0
    assert result.mbps == []


def test_oracle_single_replacement():
    anns = annotation_set(image("a.jpg", (0, 0, 10, 10)))
    predictions = detection_set(dets("a.jpg", (2, 0, 10, 10, 0.9)))
    cfg = CalibrationConfig(adc_override=0.5)
    expected = calibrate_dataset(anns, predictions, cfg)
    result = oracle_calibrate(anns, predictions, cfg)
    assert len(result.mbps) == 1
    assert result.mbps == expected.mbps
    assert result.calibrated == expected.calibrated


@pytest.mark.parametrize("cfg", [
    CalibrationConfig(),
    CalibrationConfig(adc_override=0.3),
    CalibrationConfig(0.3, 0.9, include_invalid=False),
])
def test_oracle_equivalence(cfg):
    anns, predictions = mixed_dataset(17, 1200)
    t_start = time.time()
    expected = calibrate_dataset(anns, predictions, cfg)
    result = oracle_calibrate(anns, predictions, cfg)
    assert time.time() - t_start < 10

    assert result.adc == expected.adc
    assert result.calibrated == expected.calibrated
    assert result.mbps == expected.mbps
    assert result.counters == expected.counters
    assert len(expected.mbps) > 0


def test_oracle_equivalence_with_tied_scores():
    rng = np.random.default_rng(21)
    images, predictions = [], []
    for i in range(300):
        path = "{}.jpg".format(i)
        images.append(image(path, (0, 0, 10, 10), (5, 0, 10, 10)))
        items = [(int(rng.integers(0, 6)), 0, 10, 10, 0.75) for _ in range(int(rng.integers(0, 5)))]
        predictions.append(ImageDetections.sorted(path, [Detection(BBox(*i[:4]), i[4]) for i in items]))
    anns, detections = annotation_set(*images), DetectionSet(tuple(predictions))
    cfg = CalibrationConfig(adc_override=0.5)
    assert oracle_calibrate(anns, detections, cfg).mbps == calibrate_dataset(anns, detections, cfg).mbps


def test_recovery_of_perturbed_boxes():
    spec = SynthSpec(seed=12, n_images=500, faces_per_image=(4, 4), box_size=(16, 48), disjoint=True)
    truth = generate_dataset(spec)
    assert truth.num_faces() == 2000
    perturbed, ledger = perturb(truth, 12, 0.3, (0.55, 0.75), spec.image_size)
    assert len(ledger) == 600
    predictions = emit_detections(truth, spec)

    result = calibrate_dataset(perturbed, predictions, CalibrationConfig(adc_override=0.5))
    assert result.calibrated == truth
    assert {(r.path, r.ann_index) for r in result.mbps} == ledger.keys()

    deltas = loss_delta_report(result.mbps)
    assert all(d.l_calib == 0.0 and d.l_orig > 0.0 for d in deltas)
