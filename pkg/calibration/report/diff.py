from dataclasses import dataclass

from calibration.core.geometry import BBox, iou
from calibration.errors import FormatError
from calibration.formats.wider import format_number


@dataclass(frozen=True)
class BoxChange:
    path: str
    ann_index: int
    old_box: BBox
    new_box: BBox

    @property
    def iou(self):
        return iou(self.old_box, self.new_box)

    def row(self):
        old = " ".join(format_number(v) for v in self.old_box)
        new = " ".join(format_number(v) for v in self.new_box)
        return "{}\t{}\t{}\t{}\t{:.6f}".format(self.path, self.ann_index, old, new, self.iou)


def diff_annotations(a, b, source_a="a", source_b="b"):
    """
    Boxes that differ between two versions of the same annotation file.

    Args:
        a (AnnotationSet): reference annotations
        b (AnnotationSet): annotations to compare, e.g. a calibration output
        source_a (str): name of a in error messages
        source_b (str): name of b in error messages

    Returns:
        (list of BoxChange): changed boxes in file order

    Raises:
        FormatError: if the two sets do not list the same images with the same amount of faces
    """
    if a.paths() != b.paths():
        raise FormatError("image lists differ from {}".format(source_a), source_b)
    changes = []
    for image_a, image_b in zip(a, b):
        if len(image_a.faces) != len(image_b.faces):
            raise FormatError("{} has {} faces in {} and {} here".format(
                image_a.path, len(image_a.faces), source_a, len(image_b.faces)), source_b)
        for k, (face_a, face_b) in enumerate(zip(image_a.faces, image_b.faces)):
            if face_a.box != face_b.box:
                changes.append(BoxChange(image_a.path, k, face_a.box, face_b.box))
    return changes
