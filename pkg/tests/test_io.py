import json

import numpy as np
import pandas as pd
import pytest

from collapse_lab.errors import ConfigError, FeatureFileError, ShapeError
from collapse_lab.io.artifacts import (
    TRAJECTORY_COLUMNS,
    ensure_writable,
    load_json,
    save_json,
    write_trajectory_csv,
)
from collapse_lab.io.feature_files import (
    export_classifier,
    export_features,
    load_classifier,
    load_features,
)
from collapse_lab.model.core import class_major_labels


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


class TestFeatureFiles:
    def test_round_trip_is_exact(self, tmp_path, rng):
        W = rng.standard_normal((3, 4))
        b = rng.standard_normal(3)
        H = rng.standard_normal((4, 6)) * 1e3
        labels = class_major_labels(3, 2)
        export_classifier(tmp_path / "c.csv", W, b)
        export_features(tmp_path / "f.csv", H, labels)

        W2, b2 = load_classifier(tmp_path / "c.csv")
        H2, labels2 = load_features(tmp_path / "f.csv", K=3, d=4)
        np.testing.assert_array_equal(W2, W)
        np.testing.assert_array_equal(b2, b)
        np.testing.assert_array_equal(H2, H)
        np.testing.assert_array_equal(labels2, labels)

    def test_labels_are_one_based_on_disk(self, tmp_path):
        export_features(tmp_path / "f.csv", np.zeros((2, 3)), np.array([0, 1, 1]))
        lines = (tmp_path / "f.csv").read_bytes().decode("utf-8").split("\n")
        assert lines[0] == "label,f0,f1"
        assert [line.split(",")[0] for line in lines[1:4]] == ["1", "2", "2"]
        assert b"\r" not in (tmp_path / "f.csv").read_bytes()

    def test_classifier_header(self, tmp_path):
        export_classifier(tmp_path / "c.csv", np.eye(2), np.array([0.5, -0.5]))
        assert list(pd.read_csv(tmp_path / "c.csv").columns) == ["w0", "w1", "b"]

    def test_label_outside_range_names_line(self, tmp_path):
        path = write(tmp_path / "f.csv", "label,f0,f1\n1,0.1,0.2\n2,0.3,0.4\n3,0.5,0.6\n")
        with pytest.raises(FeatureFileError) as excinfo:
            load_features(path, K=2, d=2)
        assert excinfo.value.line_number == 4
        assert "f.csv:4" in str(excinfo.value)
        assert "label 3" in str(excinfo.value)

    def test_zero_label_rejected(self, tmp_path):
        path = write(tmp_path / "f.csv", "label,f0\n0,1.0\n")
        with pytest.raises(FeatureFileError) as excinfo:
            load_features(path, K=2, d=1)
        assert excinfo.value.line_number == 2

    @pytest.mark.parametrize("body,line", [
        ("1,0.1\n", 2),
        ("1,0.1,0.2\n2,abc,0.2\n", 3),
        ("1,0.1,inf\n", 2),
        ("x,0.1,0.2\n", 2),
    ])
    def test_malformed_rows(self, tmp_path, body, line):
        path = write(tmp_path / "f.csv", "label,f0,f1\n" + body)
        with pytest.raises(FeatureFileError) as excinfo:
            load_features(path, K=2, d=2)
        assert excinfo.value.line_number == line

    def test_dimension_mismatch(self, tmp_path):
        path = write(tmp_path / "f.csv", "label,f0,f1,f2\n1,0,0,0\n")
        with pytest.raises(FeatureFileError):
            load_features(path, K=2, d=2)

    def test_classifier_errors(self, tmp_path):
        with pytest.raises(FeatureFileError):
            load_classifier(write(tmp_path / "a.csv", "w0,w1\n1,2\n3,4\n"))
        with pytest.raises(FeatureFileError):
            load_classifier(write(tmp_path / "b.csv", "w0,b\n1,2\n"))
        with pytest.raises(FeatureFileError):
            load_classifier(tmp_path / "missing.csv")
        with pytest.raises(FeatureFileError) as excinfo:
            load_classifier(write(tmp_path / "c.csv", "w0,b\n1,2\n3\n"))
        assert excinfo.value.line_number == 3

    def test_shape_checks_on_export(self, tmp_path):
        with pytest.raises(ShapeError):
            export_features(tmp_path / "f.csv", np.zeros((2, 3)), np.array([0, 1]))
        with pytest.raises(ShapeError):
            export_classifier(tmp_path / "c.csv", np.zeros((2, 3)), np.zeros(3))


class TestArtifacts:
    def test_ensure_writable_creates_directory(self, tmp_path):
        target = ensure_writable(tmp_path / "a" / "b")
        assert target.is_dir()
        assert list(target.iterdir()) == []

    def test_ensure_writable_rejects_file_path(self, tmp_path):
        blocker = write(tmp_path / "blocker", "")
        with pytest.raises(ConfigError):
            ensure_writable(blocker / "run")

    def test_trajectory_columns_and_blanks(self, tmp_path):
        rows = [{"step": 0, "objective": 1.0, "grad_inf_norm": 0.5}]
        write_trajectory_csv(tmp_path / "t.csv", rows)
        text = (tmp_path / "t.csv").read_text(encoding="utf-8")
        header, first = text.splitlines()
        assert header.split(",") == TRAJECTORY_COLUMNS
        assert first.startswith("0,1,0.5,")
        assert first.endswith(",")

    def test_nan_objective_is_not_blank(self, tmp_path):
        rows = [{"step": 3, "objective": float("nan"), "grad_inf_norm": float("nan")}]
        write_trajectory_csv(tmp_path / "t.csv", rows)
        first = (tmp_path / "t.csv").read_text(encoding="utf-8").splitlines()[1]
        assert first.startswith("3,nan,nan,")
        assert set(first.split(",")[3:]) == {""}
        frame = pd.read_csv(tmp_path / "t.csv")
        assert frame["objective"].isna().all()

    def test_json_round_trip(self, tmp_path):
        data = {"a": 0.1, "b": [1, 2], "c": {"d": None}}
        save_json(tmp_path / "r.json", data)
        assert load_json(tmp_path / "r.json") == data
        assert json.loads((tmp_path / "r.json").read_text()) == data

    def test_load_json_errors(self, tmp_path):
        with pytest.raises(ConfigError):
            load_json(tmp_path / "missing.json")
        with pytest.raises(ConfigError):
            load_json(write(tmp_path / "bad.json", "{"))
