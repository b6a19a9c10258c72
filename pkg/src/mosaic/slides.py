"""Structural analysis of a presentation deck (.pptx, read-only).

Reads the slide parts of the Office Open XML package directly: titles from
title placeholders, text runs with explicit font sizes (the size attribute
is hundredths of a point), picture counts, and slide-number placeholders.
Only explicit run-level sizes can trigger the small-font flag; theme and
master inheritance is not resolved, which is reported as a limitation.
Speaker notes are not projected, so they never count toward text density.
"""
from __future__ import annotations

import io
import re
import zipfile
from dataclasses import dataclass, field
from xml.etree import ElementTree

from .errors import MalformedSlideXml, NotAPresentation, NotAZip

NS = {
    "a": "http://schemas.openxmlformats.org/drawingml/2006/main",
    "p": "http://schemas.openxmlformats.org/presentationml/2006/main",
    "r": "http://schemas.openxmlformats.org/officeDocument/2006/relationships",
    "rel": "http://schemas.openxmlformats.org/package/2006/relationships",
}

DEFAULT_FONT_PT = 18.0
TITLE_PLACEHOLDER_TYPES = ("title", "ctrTitle")


@dataclass(frozen=True)
class TextRun:
    text: str
    font_pt: float
    inherited: bool  # size came from the configured default, not the run


@dataclass
class SlideInfo:
    index: int  # 1-based
    title: str | None
    word_count: int
    image_count: int
    has_slide_number: bool
    slide_number_bbox: tuple | None  # (x, y, cx, cy) EMU when available
    min_font_pt: float | None        # smallest explicit run size
    text_runs: list


@dataclass
class DeckStructure:
    slide_count: int
    slides: list


@dataclass
class DeckConfig:
    min_font_pt: float = 18.0
    max_words: int = 40
    default_font_pt: float = DEFAULT_FONT_PT


@dataclass
class SlideFlags:
    index: int
    small_font: bool
    text_dense: bool
    missing_title: bool
    no_slide_number: bool


@dataclass
class DeckFindings:
    per_slide: list = field(default_factory=list)
    mean_words_per_slide: float = 0.0
    total_words: int = 0
    total_images: int = 0
    image_text_ratio: float = 0.0


def _q(prefix_tag):
    prefix, tag = prefix_tag.split(":")
    return f"{{{NS[prefix]}}}{tag}"


def _slide_number(name):
    m = re.fullmatch(r"ppt/slides/slide(\d+)\.xml", name)
    return int(m.group(1)) if m else None


def _placeholder_type(sp):
    ph = sp.find(f"./{_q('p:nvSpPr')}/{_q('p:nvPr')}/{_q('p:ph')}")
    if ph is None:
        return None
    return ph.get("type")


def _shape_bbox(sp):
    xfrm = sp.find(f"./{_q('p:spPr')}/{_q('a:xfrm')}")
    if xfrm is None:
        return None
    off = xfrm.find(_q("a:off"))
    ext = xfrm.find(_q("a:ext"))
    if off is None or ext is None:
        return None
    try:
        return (int(off.get("x")), int(off.get("y")),
                int(ext.get("cx")), int(ext.get("cy")))
    except (TypeError, ValueError):
        return None


def _runs_of_txbody(txbody, default_pt):
    runs = []
    for para in txbody.iter(_q("a:p")):
        for child in para:
            if child.tag == _q("a:r"):
                t = child.find(_q("a:t"))
                text = t.text if t is not None and t.text else ""
                rpr = child.find(_q("a:rPr"))
                sz = rpr.get("sz") if rpr is not None else None
                if sz is not None:
                    runs.append(TextRun(text, int(sz) / 100.0, False))
                else:
                    runs.append(TextRun(text, default_pt, True))
    return runs


def _has_slidenum_field(element):
    for fld in element.iter(_q("a:fld")):
        if fld.get("type") == "slidenum":
            return True
    return False


def _walk_shapes(container):
    """Yield p:sp shapes, recursing into group shapes; tables yield None."""
    for child in container:
        if child.tag == _q("p:sp"):
            yield child
        elif child.tag == _q("p:grpSp"):
            yield from _walk_shapes(child)
        elif child.tag == _q("p:graphicFrame"):
            yield child


def _parse_slide(xml_bytes, index, default_pt):
    try:
        root = ElementTree.fromstring(xml_bytes)
    except ElementTree.ParseError as exc:
        raise MalformedSlideXml(index, str(exc)) from exc

    tree = root.find(f"./{_q('p:cSld')}/{_q('p:spTree')}")
    if tree is None:
        raise MalformedSlideXml(index, "(no shape tree)")

    title = None
    runs = []
    has_number = False
    number_bbox = None

    for shape in _walk_shapes(tree):
        if shape.tag == _q("p:graphicFrame"):
            # tables contribute their cell text at the inherited size
            for t in shape.iter(_q("a:t")):
                if t.text:
                    runs.append(TextRun(t.text, default_pt, True))
            continue
        ph_type = _placeholder_type(shape)
        shape_runs = []
        for txbody in shape.iter(_q("p:txBody")):
            shape_runs.extend(_runs_of_txbody(txbody, default_pt))
        if ph_type in TITLE_PLACEHOLDER_TYPES and title is None:
            title_text = "".join(r.text for r in shape_runs).strip()
            title = title_text or None
        if ph_type == "sldNum" or _has_slidenum_field(shape):
            has_number = True
            if number_bbox is None:
                number_bbox = _shape_bbox(shape)
        runs.extend(shape_runs)

    words = " ".join(r.text for r in runs).split()
    explicit = [r.font_pt for r in runs if not r.inherited]
    image_count = sum(1 for _ in tree.iter(_q("p:pic")))

    return SlideInfo(
        index=index,
        title=title,
        word_count=len(words),
        image_count=image_count,
        has_slide_number=has_number,
        slide_number_bbox=number_bbox,
        min_font_pt=min(explicit) if explicit else None,
        text_runs=runs,
    )


def _layout_has_slidenum(zf, slide_name):
    """Fall back to the slide's layout for the slide-number placeholder."""
    rels_name = slide_name.replace("ppt/slides/", "ppt/slides/_rels/") + ".rels"
    if rels_name not in zf.namelist():
        return False
    try:
        rels = ElementTree.fromstring(zf.read(rels_name))
    except ElementTree.ParseError:
        return False
    for rel in rels.iter(_q("rel:Relationship")):
        if rel.get("Type", "").endswith("/slideLayout"):
            target = rel.get("Target", "")
            layout_name = "ppt/" + target.replace("../", "")
            if layout_name not in zf.namelist():
                return False
            try:
                layout = ElementTree.fromstring(zf.read(layout_name))
            except ElementTree.ParseError:
                return False
            for ph in layout.iter(_q("p:ph")):
                if ph.get("type") == "sldNum":
                    return True
            return _has_slidenum_field(layout)
    return False


def parse_deck(data: bytes, default_font_pt=DEFAULT_FONT_PT) -> DeckStructure:
    """Parse .pptx bytes into a per-slide structural summary."""
    try:
        zf = zipfile.ZipFile(io.BytesIO(data))
    except zipfile.BadZipFile as exc:
        raise NotAZip(f"not a ZIP archive: {exc}") from exc

    with zf:
        names = zf.namelist()
        if "ppt/presentation.xml" not in names:
            raise NotAPresentation("archive has no ppt/presentation.xml part")
        slide_names = sorted(
            (n for n in names if _slide_number(n) is not None),
            key=_slide_number,
        )
        if not slide_names:
            raise NotAPresentation("presentation has no slides")

        slides = []
        for name in slide_names:
            index = _slide_number(name)
            info = _parse_slide(zf.read(name), index, default_font_pt)
            if not info.has_slide_number and _layout_has_slidenum(zf, name):
                info.has_slide_number = True
            slides.append(info)

    return DeckStructure(slide_count=len(slides), slides=slides)


def deck_findings(deck: DeckStructure, cfg=None) -> DeckFindings:
    """Per-slide readability flags and deck-level density metrics.

    Runs that merely inherit the default size never trigger small_font."""
    cfg = cfg or DeckConfig()
    findings = DeckFindings()
    for slide in deck.slides:
        explicit = [r.font_pt for r in slide.text_runs if not r.inherited]
        findings.per_slide.append(SlideFlags(
            index=slide.index,
            small_font=bool(explicit) and min(explicit) < cfg.min_font_pt,
            text_dense=slide.word_count > cfg.max_words,
            missing_title=slide.title is None,
            no_slide_number=not slide.has_slide_number,
        ))
        findings.total_words += slide.word_count
        findings.total_images += slide.image_count
    n = max(1, deck.slide_count)
    findings.mean_words_per_slide = findings.total_words / n
    findings.image_text_ratio = findings.total_images / max(1, findings.total_words)
    return findings
