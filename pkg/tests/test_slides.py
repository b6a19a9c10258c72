import io
import zipfile

import pytest

from mosaic import slides
from mosaic.errors import MalformedSlideXml, NotAPresentation, NotAZip

from deck_fixtures import (
    build_pptx,
    picture,
    slide,
    slidenum_shape,
    text_shape,
)


class TestParseDeck:
    def test_single_blank_slide(self):
        deck = slides.parse_deck(build_pptx([slide("")]))
        assert deck.slide_count == 1
        s = deck.slides[0]
        assert s.word_count == 0
        assert s.image_count == 0
        assert s.title is None
        assert s.min_font_pt is None

    def test_font_attribute_is_hundredths_of_point(self):
        xml = slide(text_shape([("Benchmarks", 1800)]))
        deck = slides.parse_deck(build_pptx([xml]))
        run = deck.slides[0].text_runs[0]
        assert run.font_pt == 18.0
        assert run.inherited is False
        assert deck.slides[0].min_font_pt == 18.0

    def test_inherited_size_marked(self):
        xml = slide(text_shape([("hello world", None)]))
        deck = slides.parse_deck(build_pptx([xml]))
        run = deck.slides[0].text_runs[0]
        assert run.inherited is True
        assert run.font_pt == slides.DEFAULT_FONT_PT
        assert deck.slides[0].min_font_pt is None

    def test_title_from_placeholder(self):
        xml = slide(
            text_shape([("Results", None)], ph_type="title")
            + text_shape([("some body text", 2000)], shape_id=3)
        )
        deck = slides.parse_deck(build_pptx([xml]))
        assert deck.slides[0].title == "Results"
        assert deck.slides[0].word_count == 4  # title words count too

    def test_word_count_matches_split_oracle(self):
        runs = [("alpha beta", 1800), ("gamma", None), ("delta epsilon zeta", 2400)]
        xml = slide(text_shape(runs))
        deck = slides.parse_deck(build_pptx([xml]))
        expected = len(" ".join(t for t, _ in runs).split())
        assert deck.slides[0].word_count == expected

    def test_image_count(self):
        xml = slide(text_shape([("x", None)]) + picture(5) + picture(6))
        deck = slides.parse_deck(build_pptx([xml]))
        assert deck.slides[0].image_count == 2

    def test_slide_number_placeholder_detected(self):
        with_num = slides.parse_deck(build_pptx([slide(slidenum_shape())]))
        without = slides.parse_deck(build_pptx([slide("")]))
        assert with_num.slides[0].has_slide_number is True
        assert with_num.slides[0].slide_number_bbox == (860, 635, 274, 36)
        assert without.slides[0].has_slide_number is False

    def test_slide_number_field_text_not_counted(self):
        deck = slides.parse_deck(build_pptx([slide(slidenum_shape())]))
        assert deck.slides[0].word_count == 0

    def test_slides_sorted_numerically(self):
        xmls = [slide(text_shape([(f"slide {i}", None)])) for i in (1, 2, 3)]
        deck = slides.parse_deck(build_pptx(xmls))
        assert [s.index for s in deck.slides] == [1, 2, 3]

    def test_not_a_zip(self):
        with pytest.raises(NotAZip):
            slides.parse_deck(b"definitely not a zip")

    def test_zip_without_presentation_part(self):
        buf = io.BytesIO()
        with zipfile.ZipFile(buf, "w") as zf:
            zf.writestr("hello.txt", "hi")
        with pytest.raises(NotAPresentation):
            slides.parse_deck(buf.getvalue())

    def test_zero_slides_rejected(self):
        buf = io.BytesIO()
        with zipfile.ZipFile(buf, "w") as zf:
            zf.writestr("ppt/presentation.xml", "<p/>")
        with pytest.raises(NotAPresentation):
            slides.parse_deck(buf.getvalue())

    def test_malformed_slide_xml(self):
        data = build_pptx(["<p:sld><unclosed"])
        with pytest.raises(MalformedSlideXml) as err:
            slides.parse_deck(data)
        assert err.value.slide_number == 1

    def test_deterministic_reparse(self):
        data = build_pptx([slide(text_shape([("alpha beta", 1800)]))])
        assert slides.parse_deck(data) == slides.parse_deck(data)


class TestDeckFindings:
    def test_small_font_flag(self):
        deck = slides.parse_deck(build_pptx([slide(text_shape([("tiny", 1200)]))]))
        findings = slides.deck_findings(deck)
        assert findings.per_slide[0].small_font is True

    def test_ten_words_not_dense(self):
        words = " ".join(f"w{i}" for i in range(10))
        deck = slides.parse_deck(build_pptx([slide(text_shape([(words, None)]))]))
        findings = slides.deck_findings(deck)
        assert findings.per_slide[0].text_dense is False

    def test_dense_slide_flagged_exactly(self):
        dense = " ".join(f"w{i}" for i in range(55))
        sparse = " ".join(f"w{i}" for i in range(12))
        deck = slides.parse_deck(build_pptx([
            slide(text_shape([(sparse, None)])),
            slide(text_shape([(dense, None)])),
        ]))
        findings = slides.deck_findings(deck)
        assert [f.text_dense for f in findings.per_slide] == [False, True]

    def test_inherited_runs_never_trigger_small_font(self):
        deck = slides.parse_deck(build_pptx([slide(text_shape([("text", None)]))]))
        findings = slides.deck_findings(deck, slides.DeckConfig(default_font_pt=10.0))
        assert findings.per_slide[0].small_font is False

    def test_missing_title_flag(self):
        deck = slides.parse_deck(build_pptx([
            slide(text_shape([("Title", None)], ph_type="title")),
            slide(text_shape([("body only", None)])),
        ]))
        findings = slides.deck_findings(deck)
        assert [f.missing_title for f in findings.per_slide] == [False, True]

    def test_density_metrics(self):
        deck = slides.parse_deck(build_pptx([
            slide(text_shape([("one two three four", None)]) + picture()),
            slide(text_shape([("five six", None)])),
        ]))
        findings = slides.deck_findings(deck)
        assert findings.total_words == 6
        assert findings.total_images == 1
        assert findings.mean_words_per_slide == 3.0
        assert findings.image_text_ratio == pytest.approx(1 / 6)
