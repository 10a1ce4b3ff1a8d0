import math
from dataclasses import dataclass

from calibration.message.Messenger import Messenger


@dataclass(frozen=True)
class AdcResult:
    value: float
    numerator: float
    denominator: int
    images_used: int
    shortfall_images: int

    def get_data(self):
        return {
            'value': self.value,
            'numerator': self.numerator,
            'denominator': self.denominator,
            'images_used': self.images_used,
            'shortfall_images': self.shortfall_images,
        }


def compute_adc(pairs):
    """
    Average detection confidence of a dataset.

    For every image, the scores of the top min(K_a, K_p) detections are summed, where K_a is the amount of
    annotations and K_p the amount of detections. The ADC is the total of these sums divided by the amount of
    scores used. The sum is computed with math.fsum, so the value does not depend on the order of images.

    Args:
        pairs (list of (ImageAnnotations, ImageDetections)): aligned images, detections sorted by score

    Returns:
        (AdcResult): ADC and the figures it was computed from
    """
    used = []
    images_used = 0
    shortfall = 0
    for anns, dets in pairs:
        k_a, k_p = len(anns.faces), len(dets.dets)
        if k_p < k_a:
            shortfall += 1
        k = min(k_a, k_p)
        if k > 0:
            images_used += 1
            used.extend(d.score for d in dets.dets[:k])

    numerator = math.fsum(used)
    denominator = len(used)
    if denominator == 0:
        Messenger().warning("ADC", "no detection score can be used, ADC set to 0")
        return AdcResult(0.0, 0.0, 0, 0, shortfall)
    if shortfall:
        Messenger().information("ADC", "{} images have fewer detections than annotations".format(shortfall))
    return AdcResult(numerator / denominator, numerator, denominator, images_used, shortfall)


def select_hcdrs(dets, adc):
    """
    High confidence detection results of an image.

    Scans the detections in descending score order and stops at the first score that does not exceed the ADC.

    Args:
        dets (ImageDetections): detections sorted by descending score
        adc (float): average detection confidence

    Returns:
        (tuple of Detection): the longest prefix whose scores are all > adc
    """
    n = 0
    for det in dets.dets:
        if det.score <= adc:
            break
        n += 1
    return dets.dets[:n]
