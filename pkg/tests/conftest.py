import pytest

from calibration.formats.wider import write_detections_dir
from calibration.message.Messenger import Messenger
from calibration.message.Strategies import LoggingMessageStrategy
from tests.builders import annotation_set, detection_set, dets, image, wider_text


@pytest.fixture(autouse=True)
def logging_messenger():
    messenger = Messenger()
    previous = messenger.get_strategy()
    messenger.set_strategy(LoggingMessageStrategy())
    yield messenger
    messenger.set_strategy(previous)


@pytest.fixture
def three_mbp_files(tmp_path):
    """
    Four images with one face each: three faces shifted by 2 px from a detection scored 0.9, one face matched
    exactly by a detection scored 0.5. The ADC is (3 * 0.9 + 0.5) / 4 = 0.8.
    """
    anns = annotation_set(
        image("0--a/a.jpg", (0, 0, 10, 10)),
        image("0--a/b.jpg", (10, 10, 10, 10)),
        image("1--b/c.jpg", (20, 0, 10, 10), blur=2, occlusion=1),
        image("1--b/d.jpg", (5, 5, 10, 10)),
    )
    predictions = detection_set(
        dets("0--a/a.jpg", (2, 0, 10, 10, 0.9), (40, 40, 10, 10, 0.1)),
        dets("0--a/b.jpg", (12, 10, 10, 10, 0.9)),
        dets("1--b/c.jpg", (22, 0, 10, 10, 0.9)),
        dets("1--b/d.jpg", (5, 5, 10, 10, 0.5)),
    )
    gt = tmp_path / "gt.txt"
    gt.write_text(wider_text(anns), encoding="utf-8")
    write_detections_dir(predictions, tmp_path / "dets")
    return gt, tmp_path / "dets"
