"""
Listing of the misaligned bounding-box pairs, worst localization first.
"""
import csv
import json

HEADER = ("path", "ann_index", "old_x", "old_y", "old_w", "old_h",
          "new_x", "new_y", "new_w", "new_h", "iou", "score")


def sorted_by_iou(mbps):
    # stable: pairs with the same IoU keep ledger order
    return sorted(mbps, key=lambda r: r.iou)


def mbp_rows(mbps):
    """
    Returns:
        (list of tuple): one row per record, fields in HEADER order, sorted by ascending IoU
    """
    return [(r.path, r.ann_index, *r.old_box, *r.new_box, r.iou, r.score) for r in sorted_by_iou(mbps)]


def write_mbp_tsv(mbps, stream):
    writer = csv.writer(stream, delimiter="\t", lineterminator="\n")
    writer.writerow(HEADER)
    for row in mbp_rows(mbps):
        writer.writerow([repr(v) if isinstance(v, float) else v for v in row])


def write_mbp_json(mbps, stream):
    json.dump([dict(zip(HEADER, row)) for row in mbp_rows(mbps)], stream, indent=2)
    stream.write("\n")


def mbp_export(mbps, stream, fmt="tsv"):
    """
    Writes the replacement ledger.

    Args:
        mbps (list of MbpRecord): replacement ledger
        stream: writable text stream
        fmt (str): "tsv" or "json"
    """
    if fmt == "tsv":
        write_mbp_tsv(mbps, stream)
    elif fmt == "json":
        write_mbp_json(mbps, stream)
    else:
        raise ValueError("unknown export format {}".format(fmt))


def read_mbp_tsv(stream):
    """
    Reads back a TSV listing as a list of dictionaries keyed by HEADER.
    """
    reader = csv.reader(stream, delimiter="\t")
    header = next(reader, None)
    if header is None:
        return []
    if tuple(header) != HEADER:
        raise ValueError("unexpected header {}".format(header))
    rows = []
    for row in reader:
        values = dict(zip(HEADER, row))
        rows.append({k: (v if k == "path" else int(v) if k == "ann_index" else float(v))
                     for k, v in values.items()})
    return rows
