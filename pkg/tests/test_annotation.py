"""Annotation export and Krippendorff's alpha."""

import numpy as np
import pytest

from misinfo.dataset import (
    export_annotation_tasks,
    krippendorff_alpha,
    read_annotation_sheet,
)
from misinfo.dataset.annotation import ANNOTATION_INSTRUCTIONS

from conftest import make_tweet


class TestExport:
    def test_zero_tweets_gives_header_only_file(self, tmp_path):
        path = export_annotation_tasks([], tmp_path / "sheet.csv")
        text = path.read_text()
        for line in ANNOTATION_INSTRUCTIONS:
            assert line in text
        rows = [l for l in text.splitlines() if l and not l.startswith("#")]
        assert len(rows) == 1  # column header only

    def test_row_count_matches_input(self, tmp_path):
        tweets = [make_tweet(tweet_id=f"t{i}", text=f"text {i}") for i in range(40)]
        path = export_annotation_tasks(tweets, tmp_path / "sheet.csv")
        rows = [l for l in path.read_text().splitlines() if l and not l.startswith("#")]
        assert len(rows) == 41

    def test_machine_label_hidden(self, tmp_path):
        from misinfo.records import Label, LabelSource

        tweets = [make_tweet(tweet_id="t1", text="claim",
                             label=Label.FAKE, label_source=LabelSource.SIMILARITY)]
        path = export_annotation_tasks(tweets, tmp_path / "sheet.csv")
        body = "\n".join(l for l in path.read_text().splitlines() if not l.startswith("#"))
        assert "fake" not in body
        assert "similarity" not in body

    def test_reimported_sheet_agrees_with_itself(self, tmp_path):
        tweets = [make_tweet(tweet_id=f"t{i}") for i in range(6)]
        path = export_annotation_tasks(tweets, tmp_path / "sheet.csv")
        # simulate annotation: fill the last column
        lines = path.read_text().splitlines()
        filled = [
            line if (line.startswith("#") or line.startswith("tweet_id"))
            else line[: line.rfind(",") + 1] + ("fake" if i % 2 else "genuine")
            for i, line in enumerate(lines)
        ]
        path.write_text("\n".join(filled))
        annotations = read_annotation_sheet(path)
        assert len(annotations) == 6
        items = sorted(annotations)
        matrix = [[annotations[i] for i in items], [annotations[i] for i in items]]
        assert krippendorff_alpha(matrix) == 1.0


class TestKrippendorffAlpha:
    def test_perfect_agreement_is_one(self):
        row = ["a", "b", "a", "b", "a", "a", "b", "a", "b", "a"]
        assert krippendorff_alpha([row, list(row)]) == 1.0

    def test_duplicated_column_property(self):
        rng = np.random.default_rng(0)
        row = list(rng.integers(0, 3, size=50))
        assert krippendorff_alpha([row, list(row), list(row)]) == 1.0

    def test_hand_computed_four_item_example(self):
        # Two annotators, four items:
        #   A: f f g f
        #   B: f g g f
        # Coincidence counts (each item contributes ordered pairs / (m-1)):
        #   items 1 and 4 (f,f): o_ff += 2 each -> o_ff = 4
        #   item 2 (f,g): o_fg = o_gf = 1
        #   item 3 (g,g): o_gg = 2
        # n = 8 pairable values; marginals n_f = 5, n_g = 3.
        # Do = (o_fg + o_gf)/n = 2/8 = 1/4
        # De = (n_f*n_g + n_g*n_f) / (n*(n-1)) = 30/56 = 15/28
        # alpha = 1 - Do/De = 1 - (1/4)*(28/15) = 1 - 7/15 = 8/15
        a = ["f", "f", "g", "f"]
        b = ["f", "g", "g", "f"]
        assert krippendorff_alpha([a, b]) == pytest.approx(8.0 / 15.0, abs=1e-9)

    def test_independent_uniform_labels_give_near_zero(self):
        rng = np.random.default_rng(42)
        a = list(rng.integers(0, 2, size=1000))
        b = list(rng.integers(0, 2, size=1000))
        assert abs(krippendorff_alpha([a, b])) < 0.1

    def test_missing_entries_allowed(self):
        a = ["x", None, "y", "x", None]
        b = ["x", "y", "y", None, None]
        c = [None, "y", "y", "x", "x"]
        value = krippendorff_alpha([a, b, c])
        assert -1.0 <= value <= 1.0

    def test_fewer_than_two_annotators_rejected(self):
        with pytest.raises(ValueError):
            krippendorff_alpha([["a", "b"]])

    def test_no_overlap_is_undefined(self):
        a = ["x", None]
        b = [None, "y"]
        with pytest.raises(ValueError):
            krippendorff_alpha([a, b])
