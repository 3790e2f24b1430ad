"""CLI tests: every subcommand drives the library through files on disk."""

import json
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from culturecolor.cli import main
from culturecolor.imaging import encode_png


@pytest.fixture(scope="module")
def runner():
    return CliRunner()


@pytest.fixture(scope="module")
def images_dir(tmp_path_factory):
    directory = tmp_path_factory.mktemp("images")
    rng = np.random.default_rng(0)
    for name in ("neon_street.png", "dark_night.png", "bright_day.png"):
        rgb = (rng.random((16, 16, 3)) * 255).astype(np.uint8)
        (directory / name).write_bytes(encode_png(rgb))
    return directory


@pytest.fixture(scope="module")
def dataset_path(runner, images_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("data") / "dataset.jsonl"
    result = runner.invoke(
        main, ["dataset-build", "--images", str(images_dir), "--out", str(out), "--seed", "1"]
    )
    assert result.exit_code == 0, result.output
    return out


@pytest.fixture(scope="module")
def palette_ckpt(runner, dataset_path, tmp_path_factory):
    out = tmp_path_factory.mktemp("models") / "palette.ckpt"
    result = runner.invoke(main, [
        "train-palette", "--dataset", str(dataset_path), "--out", str(out),
        "--steps", "3", "--d", "16", "--image-size", "16", "--hidden", "16",
        "--noise-dim", "4", "--batch-size", "4", "--seed", "0",
    ])
    assert result.exit_code == 0, result.output
    return out


@pytest.fixture(scope="module")
def colorizer_ckpt(runner, dataset_path, tmp_path_factory):
    out = tmp_path_factory.mktemp("models") / "colorizer.ckpt"
    result = runner.invoke(main, [
        "train-colorizer", "--dataset", str(dataset_path), "--out", str(out),
        "--steps", "2", "--d", "16", "--image-size", "16", "--resolution", "16",
        "--base-channels", "4", "--noise-dim", "4", "--batch-size", "2", "--seed", "0",
    ])
    assert result.exit_code == 0, result.output
    return out


class TestDatasetBuild:
    def test_empty_directory_fails(self, runner, tmp_path):
        result = runner.invoke(
            main, ["dataset-build", "--images", str(tmp_path), "--out", str(tmp_path / "o.jsonl")]
        )
        assert result.exit_code != 0
        assert "no images found" in result.output

    def test_builds_records(self, dataset_path):
        from culturecolor.dataset import load_dataset

        records, errors = load_dataset(dataset_path)
        assert errors == []
        assert len(records) == 3
        assert {r.category for r in records} == {"indie"}
        assert all(len(r.palette.colors) == 5 for r in records)

    def test_metadata_overrides(self, runner, images_dir, tmp_path):
        meta = tmp_path / "meta.jsonl"
        meta.write_text(json.dumps(
            {"image": "neon_street.png", "keywords": ["霓虹", "街头"], "category": "punk"}
        ) + "\n")
        out = tmp_path / "ds.jsonl"
        result = runner.invoke(main, [
            "dataset-build", "--images", str(images_dir), "--out", str(out),
            "--metadata", str(meta),
        ])
        assert result.exit_code == 0, result.output
        from culturecolor.dataset import load_dataset

        records, _ = load_dataset(out)
        by_name = {Path(r.image_ref).name: r for r in records}
        assert by_name["neon_street.png"].category == "punk"
        assert by_name["neon_street.png"].keywords == ("霓虹", "街头")

    def test_unknown_flag_is_usage_error(self, runner, tmp_path):
        result = runner.invoke(main, ["dataset-build", "--nope", str(tmp_path)])
        assert result.exit_code == 2


class TestDatasetStats:
    def test_self_comparison(self, runner, dataset_path, tmp_path):
        report_path = tmp_path / "report.json"
        csv_path = tmp_path / "report.csv"
        result = runner.invoke(main, [
            "dataset-stats", "--a", str(dataset_path), "--b", str(dataset_path),
            "--out", str(report_path), "--csv", str(csv_path),
        ])
        assert result.exit_code == 0, result.output
        summary = json.loads(result.output)
        assert summary["tests"]["lightness_mean"]["t"] == 0.0
        assert summary["tests"]["lightness_mean"]["p"] == 1.0
        report = json.loads(report_path.read_text())
        assert report["n_a"] == 3
        assert csv_path.read_text().startswith("corpus,statistic,value")


class TestGenerate:
    def test_deterministic_output(self, runner, palette_ckpt, images_dir):
        args = [
            "generate", "--model", str(palette_ckpt), "--text", "neon",
            "--category", "indie", "--image", str(images_dir / "neon_street.png"),
            "--seed", "7",
        ]
        first = runner.invoke(main, args)
        second = runner.invoke(main, args)
        assert first.exit_code == 0, first.output
        assert first.output == second.output
        lines = first.output.strip().splitlines()
        assert len(lines) == 5 and all(line.startswith("#") for line in lines)

    def test_json_mode(self, runner, palette_ckpt, images_dir):
        result = runner.invoke(main, [
            "generate", "--model", str(palette_ckpt), "--text", "dark",
            "--category", "indie", "--image", str(images_dir / "dark_night.png"),
            "--seed", "3", "--json",
        ])
        body = json.loads(result.output)
        assert len(body["palette"]) == 5
        assert body["seed"] == 3

    def test_unknown_category_fails(self, runner, palette_ckpt, images_dir):
        result = runner.invoke(main, [
            "generate", "--model", str(palette_ckpt), "--text", "x",
            "--category", "polka", "--image", str(images_dir / "dark_night.png"),
        ])
        assert result.exit_code == 1
        assert "unknown category" in result.output


class TestColorize:
    def test_writes_png_at_input_dimensions(self, runner, colorizer_ckpt, images_dir, tmp_path):
        from culturecolor.imaging import load_image

        out = tmp_path / "colored.png"
        result = runner.invoke(main, [
            "colorize", "--model", str(colorizer_ckpt),
            "--image", str(images_dir / "bright_day.png"),
            "--palette", "#FF0000,#00FF00,#0000FF,#FFFF00,#FF00FF",
            "--out", str(out), "--seed", "2",
        ])
        assert result.exit_code == 0, result.output
        assert load_image(out).shape == (16, 16, 3)
        body = json.loads(result.output)
        assert body["size"] == [16, 16]

    def test_bad_palette_fails(self, runner, colorizer_ckpt, images_dir, tmp_path):
        result = runner.invoke(main, [
            "colorize", "--model", str(colorizer_ckpt),
            "--image", str(images_dir / "bright_day.png"),
            "--palette", "#FF0000,#00FF00", "--out", str(tmp_path / "x.png"),
        ])
        assert result.exit_code == 1


class TestEvaluate:
    def test_diversity_duplicate_texts_zero_dispersion(self, runner, palette_ckpt, images_dir):
        result = runner.invoke(main, [
            "evaluate", "diversity", "--model", str(palette_ckpt), "--varied", "text",
            "--values", "neon,neon", "--category", "indie",
            "--image", str(images_dir / "neon_street.png"), "--seed", "5",
        ])
        assert result.exit_code == 0, result.output
        body = json.loads(result.output)
        assert body["mean_pairwise_distance"] == 0.0
        assert body["palettes"][0] == body["palettes"][1]

    def test_study_and_tally(self, runner, tmp_path):
        rng = np.random.default_rng(1)

        def write_side(path, n):
            with open(path, "w") as fh:
                for i in range(n):
                    palette = [f"#{rng.integers(0, 0xFFFFFF):06X}" for _ in range(5)]
                    fh.write(json.dumps({"keyword": f"kw{i}", "palette": palette}) + "\n")

        ours, base = tmp_path / "ours.jsonl", tmp_path / "base.jsonl"
        write_side(ours, 6)
        write_side(base, 6)
        study_dir = tmp_path / "study"
        result = runner.invoke(main, [
            "evaluate", "study", "--ours", str(ours), "--baseline", str(base),
            "--out", str(study_dir), "--seed", "3",
        ])
        assert result.exit_code == 0, result.output

        key = json.loads((study_dir / "answer_key.json").read_text())
        votes = tmp_path / "votes.csv"
        with open(votes, "w") as fh:
            fh.write("pair_id,rater_id,choice\n")
            for pair_id, sides in key.items():
                ours_side = "a" if sides["a"] == "ours" else "b"
                fh.write(f"{pair_id},r1,{ours_side}\n")
        result = runner.invoke(main, [
            "evaluate", "tally", "--votes", str(votes), "--key", str(study_dir / "answer_key.json"),
        ])
        assert result.exit_code == 0, result.output
        body = json.loads(result.output)
        assert body["fraction"] == 1.0
        assert body["votes_total"] == 6
