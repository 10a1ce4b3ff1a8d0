"""
Regression loss comparison between original and calibrated annotations.

The training detector is not available here, so the predictor's box stands in for the box the training
detector would regress: l_orig = f(predicted, original annotation), l_calib = f(predicted, calibrated
annotation). Since the calibrated annotation is the predicted box, l_calib is 0 for every replacement.
"""
from dataclasses import dataclass

from calibration.core.geometry import iou

LOSS_NAME = "diou"
STAND_IN_NOTE = ("predicted boxes stand in for the training detector output; "
                 "l_orig = f_reg(new_box, old_box), l_calib = f_reg(new_box, new_box)")


def diou_loss(pred, target):
    """
    Distance-IoU loss: 1 - IoU + rho^2 / c^2.

    rho is the distance between the box centers and c the diagonal of the smallest box enclosing both.

    Args:
        pred (BBox): predicted box
        target (BBox): ground-truth box

    Returns:
        (float): loss in [0, 2)
    """
    pcx, pcy = pred.center()
    tcx, tcy = target.center()
    rho2 = (pcx - tcx) ** 2 + (pcy - tcy) ** 2

    left = min(pred.x, target.x)
    top = min(pred.y, target.y)
    right = max(pred.x + pred.w, target.x + target.w)
    bottom = max(pred.y + pred.h, target.y + target.h)
    c2 = (right - left) ** 2 + (bottom - top) ** 2
    if c2 == 0:
        # both boxes collapse on the same point
        return 1.0 - iou(pred, target)
    return 1.0 - iou(pred, target) + rho2 / c2


@dataclass(frozen=True)
class LossDeltaRecord:
    path: str
    ann_index: int
    l_orig: float
    l_calib: float

    @property
    def delta(self):
        return self.l_orig - self.l_calib

    def get_data(self):
        return {
            'path': self.path,
            'ann_index': self.ann_index,
            'l_orig': self.l_orig,
            'l_calib': self.l_calib,
            'delta': self.delta,
        }


def loss_delta_report(mbps, loss=diou_loss):
    """
    Regression loss of every replacement before and after calibration.

    Args:
        mbps (list of MbpRecord): replacement ledger
        loss: box regression loss f(pred, target)

    Returns:
        (list of LossDeltaRecord): one record per replacement, in ledger order
    """
    return [LossDeltaRecord(r.path, r.ann_index, loss(r.new_box, r.old_box), loss(r.new_box, r.new_box))
            for r in mbps]


def loss_summary(records):
    """
    Returns:
        (dict): loss name, count, mean l_orig, mean and min delta, and the stand-in note
    """
    n = len(records)
    return {
        'loss': LOSS_NAME,
        'count': n,
        'mean_l_orig': sum(r.l_orig for r in records) / n if n else 0.0,
        'mean_delta': sum(r.delta for r in records) / n if n else 0.0,
        'min_delta': min((r.delta for r in records), default=0.0),
        'note': STAND_IN_NOTE,
    }
