"""
Axis-aligned bounding-box arithmetic.

Boxes are stored as (x, y, w, h) and cover the continuous rectangle [x, x + w) x [y, y + h).
A box with w = 0 or h = 0 is degenerate: its area is 0 and so is every IoU it takes part in.
"""
import math
from typing import NamedTuple

import numpy as np


class BBox(NamedTuple):
    x: float
    y: float
    w: float
    h: float

    def is_degenerate(self):
        return self.w == 0 or self.h == 0

    def is_valid(self):
        return all(math.isfinite(v) for v in self) and self.w >= 0 and self.h >= 0

    def center(self):
        return self.x + self.w / 2, self.y + self.h / 2

    def shifted(self, dx=0.0, dy=0.0):
        return BBox(self.x + dx, self.y + dy, self.w, self.h)


def area(b):
    """
    Area of a box.

    Args:
        b (BBox): box

    Returns:
        (float): w * h, 0 for degenerate boxes
    """
    return b.w * b.h


def intersection(a, b):
    """
    Area shared by two boxes.

    Args:
        a (BBox): first box
        b (BBox): second box

    Returns:
        (float): intersection area, 0 when the boxes do not overlap
    """
    iw = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    ih = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    if iw <= 0 or ih <= 0:
        return 0.0
    return iw * ih


def iou(a, b):
    """
    Intersection over union of two boxes.

    Args:
        a (BBox): first box
        b (BBox): second box

    Returns:
        (float): IoU in [0, 1]; 0 when the union is empty
    """
    inter = intersection(a, b)
    union = area(a) + area(b) - inter
    if union <= 0:
        return 0.0
    return inter / union


def as_array(boxes):
    """
    Stacks boxes in a (n, 4) float64 array of (x, y, w, h) rows.

    Args:
        boxes (list of BBox): boxes

    Returns:
        (np.ndarray): array of shape (n, 4)
    """
    if len(boxes) == 0:
        return np.zeros((0, 4), dtype=np.float64)
    return np.asarray(boxes, dtype=np.float64).reshape(-1, 4)


def iou_matrix(preds, anns):
    """
    Pairwise IoU between predicted and annotated boxes.

    Each cell is computed with the same operations as iou(), so values[j][k] == iou(preds[j], anns[k]) exactly.

    Args:
        preds (list of BBox): predicted boxes (rows)
        anns (list of BBox): annotated boxes (columns)

    Returns:
        (np.ndarray): matrix of shape (len(preds), len(anns))
    """
    p = as_array(preds)
    a = as_array(anns)
    if p.shape[0] == 0 or a.shape[0] == 0:
        return np.zeros((p.shape[0], a.shape[0]), dtype=np.float64)

    px, py, pw, ph = (p[:, i:i + 1] for i in range(4))
    ax, ay, aw, ah = (a[:, i][np.newaxis, :] for i in range(4))

    iw = np.minimum(px + pw, ax + aw) - np.maximum(px, ax)
    ih = np.minimum(py + ph, ay + ah) - np.maximum(py, ay)
    overlapping = (iw > 0) & (ih > 0)
    inter = np.where(overlapping, iw * ih, 0.0)
    union = (pw * ph) + (aw * ah) - inter

    out = np.zeros_like(inter)
    np.divide(inter, union, out=out, where=union > 0)
    return out


def row_max_argmax(m):
    """
    Best annotation for every predicted box.

    Args:
        m (np.ndarray): IoU matrix with at least one column

    Returns:
        (np.ndarray, np.ndarray): per-row maximum and the first column index that attains it

    Raises:
        ValueError: if the matrix has no columns
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[1] == 0:
        raise ValueError("row_max_argmax needs at least one annotation column, got shape {}".format(m.shape))
    # np.argmax returns the first occurrence, so ties go to the lowest column
    argmax = np.argmax(m, axis=1)
    return m[np.arange(m.shape[0]), argmax], argmax
