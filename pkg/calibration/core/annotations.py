from dataclasses import dataclass, field, replace
from typing import List, Tuple

from calibration.core.geometry import BBox

# (name, maximum value) of the six WIDER attribute flags, in file order
FLAGS = (
    ('blur', 2),
    ('expression', 1),
    ('illumination', 1),
    ('invalid', 1),
    ('occlusion', 2),
    ('pose', 1),
)


@dataclass(frozen=True)
class FaceAnnotation:
    box: BBox
    blur: int = 0
    expression: int = 0
    illumination: int = 0
    invalid: int = 0
    occlusion: int = 0
    pose: int = 0

    def flags(self):
        return tuple(getattr(self, name) for name, _ in FLAGS)

    def out_of_range_flags(self):
        """
        Returns:
            (list of str): names of the flags outside their documented range
        """
        return [name for name, maximum in FLAGS if not 0 <= getattr(self, name) <= maximum]

    def with_box(self, box):
        return replace(self, box=box)


@dataclass(frozen=True)
class ImageAnnotations:
    path: str
    faces: Tuple[FaceAnnotation, ...] = ()

    def boxes(self):
        return [face.box for face in self.faces]

    def __len__(self):
        return len(self.faces)


@dataclass(frozen=True)
class AnnotationSet:
    images: Tuple[ImageAnnotations, ...] = ()

    def __iter__(self):
        return iter(self.images)

    def __len__(self):
        return len(self.images)

    def num_faces(self):
        return sum(len(image) for image in self.images)

    def paths(self):
        return [image.path for image in self.images]


@dataclass(frozen=True)
class Detection:
    box: BBox
    score: float


@dataclass(frozen=True)
class ImageDetections:
    path: str
    dets: Tuple[Detection, ...] = ()

    @classmethod
    def sorted(cls, path, dets):
        """
        Builds the detections of an image ordered by descending score.

        The sort is stable: detections with the same score keep their file order.
        """
        return cls(path, tuple(sorted(dets, key=lambda d: -d.score)))

    def scores(self):
        return [d.score for d in self.dets]

    def boxes(self):
        return [d.box for d in self.dets]

    def __len__(self):
        return len(self.dets)


@dataclass(frozen=True)
class DetectionSet:
    images: Tuple[ImageDetections, ...] = ()
    _index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        index = {}
        for image in self.images:
            if image.path in index:
                raise ValueError("duplicate detection image {}".format(image.path))
            index[image.path] = image
        object.__setattr__(self, '_index', index)

    def get(self, path, default=None):
        return self._index.get(path, default)

    def __contains__(self, path):
        return path in self._index

    def __iter__(self):
        return iter(self.images)

    def __len__(self):
        return len(self.images)

    def num_detections(self):
        return sum(len(image) for image in self.images)


Pair = Tuple[ImageAnnotations, ImageDetections]
Pairs = List[Pair]
