"""
Distribution of localization accuracy of high confidence detections.

Every high confidence detection is placed in a bin by its best IoU against the annotations of its image.
Bins are half-open [lo, hi) except the last one, which is closed [lo, hi], so the bins partition their range.
"""
from bisect import bisect_right
from dataclasses import dataclass
from typing import List, Tuple

from calibration.conf import conf
from calibration.core.adc import select_hcdrs
from calibration.core.geometry import iou_matrix, row_max_argmax
from calibration.errors import HistogramError

PERCENT_DECIMALS = 3


@dataclass(frozen=True)
class HistogramBin:
    lower: float
    upper: float
    count: int
    percentage: float
    closed: bool = False

    def label(self):
        return "[{:g},{:g}{}".format(self.lower, self.upper, "]" if self.closed else ")")

    def get_data(self):
        return {'lower': self.lower, 'upper': self.upper, 'count': self.count, 'percentage': self.percentage}


@dataclass(frozen=True)
class LocalizationHistogram:
    bins: Tuple[HistogramBin, ...]
    total: int
    aggregates: Tuple[HistogramBin, ...] = ()

    def counts(self):
        return [b.count for b in self.bins]

    def get_data(self):
        return {
            'total': self.total,
            'bins': [b.get_data() for b in self.bins],
            'aggregates': [b.get_data() for b in self.aggregates],
        }


def percentage(count, total):
    """
    Share of count over total, in percent, rounded to 3 decimals. 0 when total is 0.
    """
    if total == 0:
        return 0.0
    return round(100.0 * count / total, PERCENT_DECIMALS)


def check_edges(edges):
    """
    Args:
        edges (list of float): bin edges

    Returns:
        (tuple of float): validated edges

    Raises:
        HistogramError: fewer than two edges, not strictly increasing, or outside [0, 1]
    """
    edges = tuple(float(e) for e in edges)
    if len(edges) < 2:
        raise HistogramError("at least two bin edges are needed, got {}".format(len(edges)))
    if any(b <= a for a, b in zip(edges, edges[1:])):
        raise HistogramError("bin edges must be strictly increasing: {}".format(list(edges)))
    if edges[0] < 0 or edges[-1] > 1:
        raise HistogramError("bin edges must lie in [0, 1]: {}".format(list(edges)))
    return edges


def bin_index(value, edges):
    """
    Index of the bin containing value, or None when value is outside [edges[0], edges[-1]].
    """
    if value < edges[0] or value > edges[-1]:
        return None
    return min(bisect_right(edges, value) - 1, len(edges) - 2)


def histogram_from_counts(edges, counts, total=None, aggregates=conf.AGGREGATE_ROWS):
    """
    Builds a histogram from precomputed bin counts.

    Args:
        edges (list of float): bin edges, len(counts) + 1 values
        counts (list of int): count of every bin
        total (int): denominator of the percentages, the sum of counts when None
        aggregates (list of (float, float)): ranges summed into aggregate rows, each aligned with the edges

    Returns:
        (LocalizationHistogram): bins with percentages and aggregate rows
    """
    edges = check_edges(edges)
    if len(counts) != len(edges) - 1:
        raise HistogramError("{} edges need {} counts, got {}".format(len(edges), len(edges) - 1, len(counts)))
    if total is None:
        total = sum(counts)
    last = len(counts) - 1
    bins = tuple(HistogramBin(edges[i], edges[i + 1], int(c), percentage(c, total), i == last)
                 for i, c in enumerate(counts))

    rows = []
    for lo, hi in aggregates:
        if lo not in edges or hi not in edges or hi <= lo:
            # a range that does not follow the partition cannot be summed from it
            continue
        count = sum(b.count for b in bins if b.lower >= lo and b.upper <= hi)
        rows.append(HistogramBin(lo, hi, count, percentage(count, total), True))
    return LocalizationHistogram(bins, int(total), tuple(rows))


def localization_histogram(pairs, adc, edges=conf.HISTOGRAM_EDGES, aggregates=conf.AGGREGATE_ROWS):
    """
    Histogram of the best IoU of every high confidence detection (score > adc).

    Detections whose best IoU is below the lowest edge, and detections of images without annotations, are
    not counted.

    Args:
        pairs (list of (ImageAnnotations, ImageDetections)): aligned images
        adc (float): average detection confidence
        edges (list of float): bin edges
        aggregates (list of (float, float)): aggregate rows

    Returns:
        (LocalizationHistogram): counts, percentages and aggregate rows
    """
    edges = check_edges(edges)
    counts = [0] * (len(edges) - 1)
    for anns, dets in pairs:
        hcdrs = select_hcdrs(dets, adc)
        if len(hcdrs) == 0 or len(anns.faces) == 0:
            continue
        max_overlaps, _ = row_max_argmax(iou_matrix([d.box for d in hcdrs], anns.boxes()))
        for value in max_overlaps:
            i = bin_index(value, edges)
            if i is not None:
                counts[i] += 1
    return histogram_from_counts(edges, counts, aggregates=aggregates)


def format_histogram(histogram):
    """
    Renders the histogram as a tab-separated table with index, interval, count and percentage columns.
    """
    lines = ["Index\tInterval\tNumber\tPercentage (%)"]
    for i, b in enumerate(histogram.bins + histogram.aggregates, start=1):
        lines.append("{}\t{}\t{}\t{:.3f}".format(i, b.label(), b.count, b.percentage))
    lines.append("Total\t\t{}\t".format(histogram.total))
    return "\n".join(lines) + "\n"
