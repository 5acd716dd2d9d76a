"""Command-line behavior: flags, files, exit codes, determinism, report schema."""

import hashlib
import json
from importlib import resources

import jsonschema
import numpy as np
import pytest

from fuzzseg.cli import main
from fuzzseg.imageio import labels_from_quantized, load_image_file


def file_hash(path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def load_schema():
    text = (resources.files("fuzzseg") / "schemas/report.schema.json").read_text()
    return json.loads(text)


@pytest.fixture(scope="module")
def phantom_files(tmp_path_factory):
    """Noisy 3-band phantom plus truth, written once through the CLI."""
    base = tmp_path_factory.mktemp("phantom")
    image = base / "image.pgm"
    truth = base / "truth.pgm"
    code = main([
        "phantom",
        "--width", "48", "--height", "48",
        "--bands", "60,120,200",
        "--noise", "salt:0.05",
        "--seed", "42",
        "--out-image", str(image),
        "--out-truth", str(truth),
    ])
    assert code == 0
    return image, truth


class TestPhantomCommand:
    def test_noise_free_has_exactly_band_values(self, tmp_path):
        image = tmp_path / "clean.pgm"
        truth = tmp_path / "clean_truth.pgm"
        code = main([
            "phantom", "--width", "16", "--height", "16",
            "--bands", "10,90,250", "--noise", "none",
            "--out-image", str(image), "--out-truth", str(truth),
        ])
        assert code == 0
        grid = load_image_file(image)
        assert sorted(np.unique(grid.samples)) == [10, 90, 250]

    def test_rerun_is_byte_identical(self, tmp_path):
        hashes = []
        for tag in ("a", "b"):
            image = tmp_path / f"{tag}.pgm"
            truth = tmp_path / f"{tag}_truth.pgm"
            code = main([
                "phantom", "--width", "32", "--height", "20",
                "--bands", "40,200", "--noise", "salt:0.1", "--seed", "9",
                "--out-image", str(image), "--out-truth", str(truth),
            ])
            assert code == 0
            hashes.append((file_hash(image), file_hash(truth)))
        assert hashes[0] == hashes[1]

    def test_requires_exactly_one_layout(self, tmp_path):
        code = main([
            "phantom", "--width", "8", "--height", "8",
            "--out-image", str(tmp_path / "x.pgm"),
            "--out-truth", str(tmp_path / "y.pgm"),
        ])
        assert code == 2

    def test_duplicate_band_values_are_flag_errors(self, tmp_path):
        code = main([
            "phantom", "--width", "8", "--height", "8", "--bands", "60,60",
            "--out-image", str(tmp_path / "x.pgm"),
            "--out-truth", str(tmp_path / "y.pgm"),
        ])
        assert code == 2


class TestSegmentCommand:
    def test_fcm_writes_all_outputs(self, phantom_files, tmp_path):
        image, _ = phantom_files
        prefix = tmp_path / "run"
        code = main([
            "segment", "--algo", "fcm", "--input", str(image),
            "--clusters", "3", "--init", "list:50,130,190",
            "--max-iter", "25", "--out-prefix", str(prefix),
        ])
        assert code == 0
        labels = tmp_path / "run_labels.pgm"
        color = tmp_path / "run_color.ppm"
        trace = tmp_path / "run_trace.csv"
        report = tmp_path / "run_report.json"
        for path in (labels, color, trace, report):
            assert path.exists(), path
        decoded = load_image_file(labels)
        assert (decoded.width, decoded.height) == (48, 48)
        recovered = labels_from_quantized(decoded, 3)
        assert recovered.labels.max() <= 2
        header = trace.read_bytes().split(b"\n", 1)[0]
        assert header == b"iteration,objective,max_delta"
        doc = json.loads(report.read_text())
        jsonschema.validate(doc, load_schema())
        assert doc["algorithm"] == "fcm"
        assert doc["params"]["init"] == [50.0, 130.0, 190.0]

    def test_kmeans_has_no_trace_file(self, phantom_files, tmp_path):
        image, _ = phantom_files
        prefix = tmp_path / "km"
        code = main([
            "segment", "--algo", "kmeans", "--input", str(image),
            "--clusters", "3", "--seed", "5", "--out-prefix", str(prefix),
        ])
        assert code == 0
        assert not (tmp_path / "km_trace.csv").exists()
        doc = json.loads((tmp_path / "km_report.json").read_text())
        jsonschema.validate(doc, load_schema())

    def test_sfcm_with_q_zero_matches_fcm_bytes(self, phantom_files, tmp_path):
        image, _ = phantom_files
        runs = {}
        for algo, extra in (("fcm", []), ("sfcm", ["--q", "0"])):
            prefix = tmp_path / algo
            code = main([
                "segment", "--algo", algo, "--input", str(image),
                "--clusters", "3", "--seed", "7", *extra,
                "--out-prefix", str(prefix),
            ])
            assert code == 0
            runs[algo] = file_hash(tmp_path / f"{algo}_labels.pgm")
        assert runs["fcm"] == runs["sfcm"]

    def test_repeat_invocation_byte_identical(self, phantom_files, tmp_path):
        image, _ = phantom_files
        argv = [
            "segment", "--algo", "sfcm", "--input", str(image),
            "--clusters", "3", "--seed", "11",
            "--out-prefix", str(tmp_path / "rep"),
        ]
        hashes = []
        for _ in range(2):
            assert main(argv) == 0
            hashes.append(tuple(
                file_hash(tmp_path / f"rep_{suffix}")
                for suffix in ("labels.pgm", "color.ppm", "trace.csv", "report.json")
            ))
        assert hashes[0] == hashes[1]

    def test_epsilon_in_report_has_no_exponent(self, phantom_files, tmp_path):
        image, _ = phantom_files
        prefix = tmp_path / "eps"
        code = main([
            "segment", "--algo", "fcm", "--input", str(image),
            "--clusters", "2", "--epsilon", "1e-5",
            "--out-prefix", str(prefix),
        ])
        assert code == 0
        text = (tmp_path / "eps_report.json").read_text()
        assert "0.00001" in text
        assert "e-" not in text and "E-" not in text

    @pytest.mark.parametrize(
        "argv,code",
        [
            (["segment", "--algo", "swirl", "--input", "x", "--clusters", "3",
              "--out-prefix", "y"], 2),
            (["segment", "--algo", "fcm", "--input", "x", "--clusters", "3",
              "--init", "list:1,2", "--out-prefix", "y"], 2),
            (["segment", "--algo", "fcm", "--input", "x", "--clusters", "3",
              "--init", "quantile", "--out-prefix", "y"], 2),
            (["segment", "--algo", "fcm", "--input", "x", "--clusters", "1",
              "--out-prefix", "y"], 2),
            (["segment", "--algo", "fcm", "--input", "x", "--clusters", "3",
              "--fuzziness", "1.0", "--out-prefix", "y"], 2),
        ],
    )
    def test_flag_errors_exit_two(self, argv, code):
        assert main(argv) == code

    def test_missing_input_exits_one(self, tmp_path):
        code = main([
            "segment", "--algo", "fcm", "--input", str(tmp_path / "nope.pgm"),
            "--clusters", "3", "--out-prefix", str(tmp_path / "z"),
        ])
        assert code == 1

    def test_malformed_input_exits_one(self, tmp_path):
        bad = tmp_path / "bad.pgm"
        bad.write_bytes(b"not an image")
        code = main([
            "segment", "--algo", "fcm", "--input", str(bad),
            "--clusters", "3", "--out-prefix", str(tmp_path / "z"),
        ])
        assert code == 1


class TestCompareCommand:
    def test_report_has_three_ordered_entries(self, phantom_files, tmp_path):
        image, truth = phantom_files
        report = tmp_path / "compare.json"
        code = main([
            "compare", "--input", str(image), "--truth", str(truth),
            "--clusters", "3", "--init", "list:50,130,190",
            "--report", str(report),
        ])
        assert code == 0
        doc = json.loads(report.read_text())
        jsonschema.validate(doc, load_schema())
        assert list(doc["algorithms"].keys()) == ["kmeans", "fcm", "sfcm"]
        rates = {
            name: entry["metrics"]["misclassification_rate"]
            for name, entry in doc["algorithms"].items()
        }
        assert rates["sfcm"] <= rates["fcm"]
        for entry in doc["algorithms"].values():
            assert entry["metrics"]["isolated_pixel_count"] >= 0

    def test_compare_repeat_is_byte_identical(self, phantom_files, tmp_path):
        image, truth = phantom_files
        hashes = []
        for tag in ("a", "b"):
            report = tmp_path / f"{tag}.json"
            code = main([
                "compare", "--input", str(image), "--truth", str(truth),
                "--clusters", "3", "--seed", "2", "--report", str(report),
            ])
            assert code == 0
            hashes.append(file_hash(report))
        assert hashes[0] == hashes[1]

    def test_truth_flag_is_required(self, phantom_files, tmp_path):
        image, _ = phantom_files
        code = main([
            "compare", "--input", str(image), "--clusters", "3",
            "--report", str(tmp_path / "r.json"),
        ])
        assert code == 2

    def test_dimension_mismatch_exits_one(self, phantom_files, tmp_path):
        image, _ = phantom_files
        other_truth = tmp_path / "small_truth.pgm"
        other_image = tmp_path / "small.pgm"
        assert main([
            "phantom", "--width", "8", "--height", "8", "--bands", "60,200",
            "--out-image", str(other_image), "--out-truth", str(other_truth),
        ]) == 0
        code = main([
            "compare", "--input", str(image), "--truth", str(other_truth),
            "--clusters", "3", "--report", str(tmp_path / "r.json"),
        ])
        assert code == 1
