"""Pascal VOC XML ground truth (one file per image, corner coordinates)."""

from __future__ import annotations

import xml.etree.ElementTree as ET
from pathlib import Path

from boxcamp.dataio.types import AnnotationSet, ImageRecord, sequence_from_file_name
from boxcamp.errors import ParseError, ValidationError
from boxcamp.geometry import BoundingBox, LabeledBox


def _text(node: ET.Element | None, tag: str, where: str) -> str:
    child = node.find(tag) if node is not None else None
    if child is None or child.text is None:
        raise ParseError(f"{where}: missing <{tag}>")
    return child.text.strip()


def _num(node: ET.Element, tag: str, where: str) -> float:
    raw = _text(node, tag, where)
    try:
        return float(raw)
    except ValueError as exc:
        raise ParseError(f"{where}: <{tag}> is not numeric: {raw!r}") from exc


def parse_voc_directory(directory: str | Path) -> AnnotationSet:
    """Parse a directory of VOC XML files into an AnnotationSet.

    Corner coordinates (xmin, ymin, xmax, ymax) are converted to
    (x, y, w, h). Category names are interned into ids 1..K sorted by name;
    image ids are assigned 1..N in sorted file order.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise ParseError(f"{directory}: not a directory")
    files = sorted(directory.glob("*.xml"))

    names: set[str] = set()
    parsed = []
    for path in files:
        try:
            root = ET.parse(path).getroot()
        except ET.ParseError as exc:
            raise ParseError(f"{path.name}: malformed XML: {exc}") from exc
        size = root.find("size")
        if size is None:
            raise ParseError(f"{path.name}: missing <size>")
        width = int(_num(size, "width", path.name))
        height = int(_num(size, "height", path.name))
        filename_node = root.find("filename")
        file_name = (
            filename_node.text.strip()
            if filename_node is not None and filename_node.text
            else path.stem + ".jpg"
        )
        objects = []
        for obj in root.findall("object"):
            name = _text(obj, "name", path.name)
            bndbox = obj.find("bndbox")
            if bndbox is None:
                raise ParseError(f"{path.name}: <object> without <bndbox>")
            xmin = _num(bndbox, "xmin", path.name)
            ymin = _num(bndbox, "ymin", path.name)
            xmax = _num(bndbox, "xmax", path.name)
            ymax = _num(bndbox, "ymax", path.name)
            if xmax <= xmin or ymax <= ymin:
                raise ValidationError(
                    f"{path.name}: degenerate box "
                    f"(xmin={xmin}, ymin={ymin}, xmax={xmax}, ymax={ymax})"
                )
            objects.append((name, xmin, ymin, xmax - xmin, ymax - ymin))
            names.add(name)
        parsed.append((path, file_name, width, height, objects))

    categories = {i + 1: name for i, name in enumerate(sorted(names))}
    by_name = {name: cid for cid, name in categories.items()}

    images: list[ImageRecord] = []
    boxes: dict[int, list[LabeledBox]] = {}
    for image_id, (path, file_name, width, height, objects) in enumerate(parsed, start=1):
        sequence_id, frame_index = sequence_from_file_name(file_name)
        images.append(
            ImageRecord(image_id, file_name, width, height, sequence_id, frame_index)
        )
        boxes[image_id] = [
            LabeledBox(BoundingBox(x, y, w, h), by_name[name])
            for name, x, y, w, h in objects
        ]

    out = AnnotationSet(images, categories, boxes, {cid: cid for cid in categories})
    out.validate()
    return out


def _fmt(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else repr(float(value))


def write_voc_directory(dataset: AnnotationSet, directory: str | Path) -> list[Path]:
    """Write one VOC XML per image; returns the paths written."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for im in dataset.images:
        root = ET.Element("annotation")
        ET.SubElement(root, "filename").text = im.file_name
        size = ET.SubElement(root, "size")
        ET.SubElement(size, "width").text = str(im.width)
        ET.SubElement(size, "height").text = str(im.height)
        ET.SubElement(size, "depth").text = "3"
        for lb in dataset.boxes.get(im.id, []):
            obj = ET.SubElement(root, "object")
            ET.SubElement(obj, "name").text = dataset.categories[lb.category_id]
            bndbox = ET.SubElement(obj, "bndbox")
            b = lb.box
            ET.SubElement(bndbox, "xmin").text = _fmt(b.x)
            ET.SubElement(bndbox, "ymin").text = _fmt(b.y)
            ET.SubElement(bndbox, "xmax").text = _fmt(b.x2)
            ET.SubElement(bndbox, "ymax").text = _fmt(b.y2)
        stem = Path(im.file_name).stem or f"image_{im.id}"
        path = directory / f"{stem}.xml"
        tree = ET.ElementTree(root)
        ET.indent(tree)
        tree.write(path, encoding="utf-8")
        written.append(path)
    return written
