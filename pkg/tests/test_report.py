import io
import json

import pytest

from calibration.conf import conf
from calibration.core.calibrate import CalibrationConfig, CalibrationResult, MbpRecord, calibrate_dataset
from calibration.core.annotations import AnnotationSet
from calibration.core.geometry import BBox
from calibration.errors import FormatError, HistogramError
from calibration.formats.wider import align
from calibration.report.diff import diff_annotations
from calibration.report.export import HEADER, mbp_export, read_mbp_tsv
from calibration.report.histogram import (check_edges, format_histogram, histogram_from_counts,
                                          localization_histogram, percentage)
from calibration.report.losses import STAND_IN_NOTE, diou_loss, loss_delta_report, loss_summary
from calibration.report.summary import build_report, run_summary, save_report
from tests.builders import annotation_set, detection_set, dets, image

TABLE_COUNTS = [854, 4280, 17940, 41107, 24287]
TABLE_TOTAL = 87476
TABLE_PERCENTAGES = [0.976, 4.893, 20.508, 46.992, 27.764]


def record(path, ann_index, iou, old, new, score=0.9, det_index=0):
    return MbpRecord(path, det_index, ann_index, iou, score, BBox(*old), BBox(*new))


def three_records():
    return [
        record("a.jpg", 0, 0.7, (0, 0, 10, 10), (1, 0, 10, 10)),
        record("b.jpg", 1, 0.55, (0, 0, 10, 10), (3, 0, 10, 10)),
        record("c.jpg", 0, 0.625, (0, 0, 10, 10), (2, 0, 10, 10)),
    ]


def test_percentages_of_the_reference_table():
    for count, expected in zip(TABLE_COUNTS, TABLE_PERCENTAGES):
        assert percentage(count, TABLE_TOTAL) == pytest.approx(expected, abs=1e-3)
    assert percentage(22981, TABLE_TOTAL) == pytest.approx(26.271, abs=1e-3)
    assert percentage(3, 0) == 0.0


def test_histogram_from_reference_counts():
    histogram = histogram_from_counts(conf.HISTOGRAM_EDGES, TABLE_COUNTS, total=TABLE_TOTAL)
    assert [b.percentage for b in histogram.bins] == pytest.approx(TABLE_PERCENTAGES, abs=1e-3)
    assert histogram.bins[-1].closed
    assert not histogram.bins[0].closed
    aggregates = {(b.lower, b.upper): b.count for b in histogram.aggregates}
    assert aggregates == {(0.5, 0.8): 854 + 4280 + 17940, (0.5, 1.0): sum(TABLE_COUNTS)}


def test_partition_sums_to_total():
    histogram = histogram_from_counts(conf.HISTOGRAM_EDGES, [3, 1, 4, 1, 5])
    assert histogram.total == sum(histogram.counts()) == 14
    assert histogram.aggregates[-1].count == 14
    assert histogram.aggregates[-1].percentage == 100.0


def test_localization_histogram_bins():
    # best IoUs 682 / 1240 = 0.55, 72 / 90 = 0.8 and 1
    anns = annotation_set(image("a.jpg", (0, 0, 31, 31)), image("b.jpg", (0, 0, 9, 9)),
                          image("c.jpg", (0, 0, 10, 10)))
    predictions = detection_set(dets("a.jpg", (9, 0, 31, 31, 0.9)), dets("b.jpg", (1, 0, 9, 9, 0.9)),
                                dets("c.jpg", (0, 0, 10, 10, 0.9), (50, 50, 5, 5, 0.1)))
    histogram = localization_histogram(align(anns, predictions), 0.5)
    assert histogram.counts() == [1, 0, 0, 1, 1]
    assert histogram.total == 3


def test_low_iou_detections_are_not_counted():
    anns = annotation_set(image("a.jpg", (0, 0, 10, 10)), image("b.jpg"))
    predictions = detection_set(dets("a.jpg", (8, 0, 10, 10, 0.9)), dets("b.jpg", (0, 0, 10, 10, 0.9)))
    histogram = localization_histogram(align(anns, predictions), 0.5)
    assert histogram.total == 0


def test_empty_histogram():
    histogram = localization_histogram(align(annotation_set(image("a.jpg", (0, 0, 5, 5))), detection_set()), 0.5)
    assert histogram.counts() == [0, 0, 0, 0, 0]
    assert all(b.percentage == 0.0 for b in histogram.bins + histogram.aggregates)


@pytest.mark.parametrize("edges", [[0.5], [0.5, 0.5, 0.6], [0.6, 0.5], [-0.1, 0.5], [0.5, 1.2]])
def test_invalid_edges(edges):
    with pytest.raises(HistogramError):
        check_edges(edges)


def test_custom_edges_skip_misaligned_aggregates():
    histogram = histogram_from_counts([0.0, 0.5, 1.0], [2, 2])
    assert [(b.lower, b.upper) for b in histogram.aggregates] == [(0.5, 1.0)]


def test_format_histogram():
    text = format_histogram(histogram_from_counts(conf.HISTOGRAM_EDGES, TABLE_COUNTS, total=TABLE_TOTAL))
    lines = text.splitlines()
    assert lines[0] == "Index\tInterval\tNumber\tPercentage (%)"
    assert lines[1] == "1\t[0.5,0.6)\t854\t0.976"
    assert lines[5] == "5\t[0.9,1]\t24287\t27.764"
    assert lines[6].startswith("6\t[0.5,0.8]\t23074\t")
    assert lines[-1] == "Total\t\t87476\t"


def test_diou_worked_example():
    loss = diou_loss(BBox(2, 0, 10, 10), BBox(0, 0, 10, 10))
    assert loss == pytest.approx(1 / 3 + 4 / 244, abs=1e-9)
    assert diou_loss(BBox(2, 0, 10, 10), BBox(2, 0, 10, 10)) == 0.0


def test_diou_of_collapsed_boxes():
    assert diou_loss(BBox(1, 1, 0, 0), BBox(1, 1, 0, 0)) == 1.0


def test_loss_delta_report():
    records = three_records() + [record("d.jpg", 0, 1.0, (0, 0, 10, 10), (0, 0, 10, 10))]
    deltas = loss_delta_report(records)
    assert [d.path for d in deltas] == ["a.jpg", "b.jpg", "c.jpg", "d.jpg"]
    assert all(d.l_calib == 0.0 for d in deltas)
    assert all(d.delta > 0 for d in deltas[:3])
    assert deltas[3].l_orig == 0.0 and deltas[3].delta == 0.0

    summary = loss_summary(deltas)
    assert summary['loss'] == "diou"
    assert summary['count'] == 4
    assert summary['min_delta'] == 0.0
    assert summary['note'] == STAND_IN_NOTE


def test_export_without_records():
    stream = io.StringIO()
    mbp_export([], stream)
    assert stream.getvalue() == "\t".join(HEADER) + "\n"


def test_export_is_sorted_by_iou():
    stream = io.StringIO()
    mbp_export(three_records(), stream)
    lines = stream.getvalue().splitlines()
    assert len(lines) == 4
    assert [line.split("\t")[0] for line in lines[1:]] == ["b.jpg", "c.jpg", "a.jpg"]
    assert lines[1].split("\t") == ["b.jpg", "1", "0", "0", "10", "10", "3", "0", "10", "10", "0.55", "0.9"]

    rows = read_mbp_tsv(io.StringIO(stream.getvalue()))
    assert [r['iou'] for r in rows] == [0.55, 0.625, 0.7]
    assert rows[0]['ann_index'] == 1


def test_json_export():
    stream = io.StringIO()
    mbp_export(three_records(), stream, "json")
    rows = json.loads(stream.getvalue())
    assert [list(r) for r in rows] == [list(HEADER)] * 3
    assert rows[0]['path'] == "b.jpg"


def test_unknown_export_format():
    with pytest.raises(ValueError):
        mbp_export([], io.StringIO(), "xml")


def test_summary_of_an_empty_run():
    cfg = CalibrationConfig()
    summary = run_summary(CalibrationResult(AnnotationSet()), None, cfg)
    assert summary.calibrated == 0
    assert summary.wall_time >= 0
    assert "calibrated 0" in summary.line()


def test_summary_and_report(tmp_path):
    anns = annotation_set(image("a.jpg", (0, 0, 10, 10)), image("b.jpg", (0, 0, 10, 10)),
                          image("c.jpg", (0, 0, 10, 10)), image("d.jpg", (0, 0, 10, 10)))
    predictions = detection_set(dets("a.jpg", (2, 0, 10, 10, 0.9)), dets("b.jpg", (0, 2, 10, 10, 0.9)),
                                dets("c.jpg", (1, 1, 10, 10, 0.9)), dets("d.jpg", (0, 0, 10, 10, 0.5)))
    cfg = CalibrationConfig()
    result = calibrate_dataset(anns, predictions, cfg)
    summary = run_summary(result, result.adc_result, cfg, predictor="synthetic")
    assert summary.calibrated == len(result.mbps) == 3
    line = summary.line()
    assert line.startswith("predictor synthetic | ADC 0.800000 | interval [0.5, 0.8] | calibrated 3 | time ")

    path = tmp_path / "report.json"
    save_report(build_report(summary, localization_histogram(result.pairs, result.adc), result.mbps), path)
    report = json.loads(path.read_text(encoding="utf-8"))
    assert report['calibrated'] == 3
    assert report['interval'] == [0.5, 0.8]
    assert report['adc_details']['denominator'] == 4
    assert report['histogram']['total'] == 3
    assert report['loss']['count'] == 3
    assert report['counters']['hcdrs_considered'] == 3


def test_self_diff():
    anns = annotation_set(image("a.jpg", (0, 0, 10, 10)), image("b.jpg"))
    assert diff_annotations(anns, anns) == []


def test_diff_lists_changed_boxes():
    a = annotation_set(image("a.jpg", (0, 0, 10, 10), (20, 20, 5, 5)))
    b = annotation_set(image("a.jpg", (2, 0, 10, 10), (20, 20, 5, 5)))
    changes = diff_annotations(a, b)
    assert len(changes) == 1
    assert changes[0].ann_index == 0
    assert changes[0].iou == pytest.approx(2 / 3)
    assert changes[0].row() == "a.jpg\t0\t0 0 10 10\t2 0 10 10\t0.666667"


@pytest.mark.parametrize("b", [
    annotation_set(image("z.jpg", (0, 0, 10, 10))),
    annotation_set(image("a.jpg", (0, 0, 10, 10), (1, 1, 1, 1))),
])
def test_diff_of_unrelated_files(b):
    with pytest.raises(FormatError):
        diff_annotations(annotation_set(image("a.jpg", (0, 0, 10, 10))), b)
