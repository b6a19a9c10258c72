"""Minimal .pptx writer for generated session bundles.

Produces a structurally honest Office Open XML package: presentation part,
slide parts with title/body placeholders, explicit run sizes in hundredths
of a point, picture elements backed by a 1x1 PNG, and slide-number
placeholders. Zip entries carry a fixed timestamp so identical input yields
byte-identical decks.
"""
from __future__ import annotations

import io
import zipfile
from dataclasses import dataclass, field

FIXED_ZIP_DATE = (2020, 1, 1, 0, 0, 0)

_PNG_1PX = bytes.fromhex(
    "89504e470d0a1a0a0000000d4948445200000001000000010802000000907753de"
    "0000000c4944415408d763f8cfc00000030101cf8bfaff0000000049454e44ae426082"
)

_XML_DECL = '<?xml version="1.0" encoding="UTF-8" standalone="yes"?>\n'

_NS_A = "http://schemas.openxmlformats.org/drawingml/2006/main"
_NS_P = "http://schemas.openxmlformats.org/presentationml/2006/main"
_NS_R = "http://schemas.openxmlformats.org/officeDocument/2006/relationships"


@dataclass
class SlideSpec:
    title: str | None = None
    title_pt: float | None = None      # None = inherited size
    body_runs: list = field(default_factory=list)  # (text, pt or None)
    image_count: int = 0
    slide_number: bool = False

    def words(self):
        text = " ".join([self.title or ""] + [t for t, _ in self.body_runs])
        return text.split()


def _esc(text):
    return (text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
            .replace('"', "&quot;"))


def _run_xml(text, pt):
    if pt is None:
        return f'<a:r><a:t>{_esc(text)}</a:t></a:r>'
    return f'<a:r><a:rPr lang="en-US" sz="{int(round(pt * 100))}"/><a:t>{_esc(text)}</a:t></a:r>'


def _sp_xml(shape_id, name, ph_type, runs, off=(838200, 365125), ext=(10515600, 1325563)):
    ph = f'<p:ph type="{ph_type}"/>' if ph_type else "<p:ph/>"
    paragraphs = "".join(f"<a:p>{_run_xml(t, pt)}</a:p>" for t, pt in runs) or "<a:p/>"
    return (
        f'<p:sp><p:nvSpPr><p:cNvPr id="{shape_id}" name="{_esc(name)}"/>'
        f'<p:cNvSpPr/><p:nvPr>{ph}</p:nvPr></p:nvSpPr>'
        f'<p:spPr><a:xfrm><a:off x="{off[0]}" y="{off[1]}"/>'
        f'<a:ext cx="{ext[0]}" cy="{ext[1]}"/></a:xfrm></p:spPr>'
        f'<p:txBody><a:bodyPr/><a:lstStyle/>{paragraphs}</p:txBody></p:sp>'
    )


def _slidenum_sp_xml(shape_id):
    return (
        f'<p:sp><p:nvSpPr><p:cNvPr id="{shape_id}" name="Slide Number Placeholder"/>'
        f'<p:cNvSpPr/><p:nvPr><p:ph type="sldNum" sz="quarter" idx="10"/></p:nvPr></p:nvSpPr>'
        f'<p:spPr><a:xfrm><a:off x="8610600" y="6356350"/>'
        f'<a:ext cx="2743200" cy="365125"/></a:xfrm></p:spPr>'
        f'<p:txBody><a:bodyPr/><a:lstStyle/>'
        f'<a:p><a:fld id="{{B7BBF25D-4F4B-4B11-B5A9-8F1E3F1B0000}}" type="slidenum">'
        f'<a:rPr lang="en-US"/><a:t>1</a:t></a:fld></a:p></p:txBody></p:sp>'
    )


def _pic_xml(shape_id, rid):
    return (
        f'<p:pic><p:nvPicPr><p:cNvPr id="{shape_id}" name="Picture {shape_id}"/>'
        f'<p:cNvPicPr/><p:nvPr/></p:nvPicPr>'
        f'<p:blipFill><a:blip r:embed="rId{rid}"/><a:stretch><a:fillRect/></a:stretch></p:blipFill>'
        f'<p:spPr><a:xfrm><a:off x="1000000" y="2000000"/>'
        f'<a:ext cx="2000000" cy="1500000"/></a:xfrm>'
        f'<a:prstGeom prst="rect"><a:avLst/></a:prstGeom></p:spPr></p:pic>'
    )


def _slide_xml(spec: SlideSpec):
    shapes = []
    sid = 2
    if spec.title is not None:
        shapes.append(_sp_xml(sid, "Title 1", "title", [(spec.title, spec.title_pt)]))
        sid += 1
    if spec.body_runs:
        shapes.append(_sp_xml(sid, "Content Placeholder", "body", spec.body_runs,
                              off=(838200, 1825625), ext=(10515600, 4351338)))
        sid += 1
    for i in range(spec.image_count):
        shapes.append(_pic_xml(sid, i + 2))
        sid += 1
    if spec.slide_number:
        shapes.append(_slidenum_sp_xml(sid))
        sid += 1
    return (
        _XML_DECL
        + f'<p:sld xmlns:a="{_NS_A}" xmlns:r="{_NS_R}" xmlns:p="{_NS_P}">'
        + '<p:cSld><p:spTree>'
        + '<p:nvGrpSpPr><p:cNvPr id="1" name=""/><p:cNvGrpSpPr/><p:nvPr/></p:nvGrpSpPr>'
        + '<p:grpSpPr/>'
        + "".join(shapes)
        + '</p:spTree></p:cSld></p:sld>'
    )


def build_deck(slide_specs) -> bytes:
    """Assemble a .pptx from SlideSpec entries."""
    n = len(slide_specs)
    files = {}

    overrides = [
        '<Override PartName="/ppt/presentation.xml" ContentType='
        '"application/vnd.openxmlformats-officedocument.presentationml.presentation.main+xml"/>'
    ]
    for i in range(1, n + 1):
        overrides.append(
            f'<Override PartName="/ppt/slides/slide{i}.xml" ContentType='
            '"application/vnd.openxmlformats-officedocument.presentationml.slide+xml"/>'
        )
    files["[Content_Types].xml"] = (
        _XML_DECL
        + '<Types xmlns="http://schemas.openxmlformats.org/package/2006/content-types">'
        + '<Default Extension="rels" ContentType='
        '"application/vnd.openxmlformats-package.relationships+xml"/>'
        + '<Default Extension="xml" ContentType="application/xml"/>'
        + '<Default Extension="png" ContentType="image/png"/>'
        + "".join(overrides)
        + "</Types>"
    )

    files["_rels/.rels"] = (
        _XML_DECL
        + '<Relationships xmlns="http://schemas.openxmlformats.org/package/2006/relationships">'
        + '<Relationship Id="rId1" Type="http://schemas.openxmlformats.org/officeDocument'
        '/2006/relationships/officeDocument" Target="ppt/presentation.xml"/>'
        + "</Relationships>"
    )

    slide_ids = "".join(
        f'<p:sldId id="{255 + i}" r:id="rId{i}"/>' for i in range(1, n + 1)
    )
    files["ppt/presentation.xml"] = (
        _XML_DECL
        + f'<p:presentation xmlns:a="{_NS_A}" xmlns:r="{_NS_R}" xmlns:p="{_NS_P}">'
        + f'<p:sldIdLst>{slide_ids}</p:sldIdLst>'
        + '<p:sldSz cx="12192000" cy="6858000"/><p:notesSz cx="6858000" cy="9144000"/>'
        + '</p:presentation>'
    )

    pres_rels = "".join(
        f'<Relationship Id="rId{i}" Type="http://schemas.openxmlformats.org/officeDocument'
        f'/2006/relationships/slide" Target="slides/slide{i}.xml"/>'
        for i in range(1, n + 1)
    )
    files["ppt/_rels/presentation.xml.rels"] = (
        _XML_DECL
        + '<Relationships xmlns="http://schemas.openxmlformats.org/package/2006/relationships">'
        + pres_rels
        + "</Relationships>"
    )

    any_images = False
    for i, spec in enumerate(slide_specs, start=1):
        files[f"ppt/slides/slide{i}.xml"] = _slide_xml(spec)
        if spec.image_count:
            any_images = True
            rels = "".join(
                f'<Relationship Id="rId{j + 2}" Type="http://schemas.openxmlformats.org'
                f'/officeDocument/2006/relationships/image" Target="../media/pixel.png"/>'
                for j in range(spec.image_count)
            )
            files[f"ppt/slides/_rels/slide{i}.xml.rels"] = (
                _XML_DECL
                + '<Relationships xmlns="http://schemas.openxmlformats.org/package'
                '/2006/relationships">'
                + rels
                + "</Relationships>"
            )

    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w", zipfile.ZIP_DEFLATED) as zf:
        for name in sorted(files):
            info = zipfile.ZipInfo(name, date_time=FIXED_ZIP_DATE)
            info.compress_type = zipfile.ZIP_DEFLATED
            zf.writestr(info, files[name])
        if any_images:
            info = zipfile.ZipInfo("ppt/media/pixel.png", date_time=FIXED_ZIP_DATE)
            zf.writestr(info, _PNG_1PX)
    return buf.getvalue()
