"""Command-line entry points for every pipeline stage.

Each subcommand is a thin wrapper over the library; all randomness flows
from --seed, and outputs go only to declared paths.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np


def _fail(message: str) -> None:
    click.echo(json.dumps({"error": message}), err=True)
    sys.exit(1)


@click.group()
def main():
    """Culture-conditioned palette generation and colorization toolkit."""


# ---------------------------------------------------------------------------
# Dataset commands.
# ---------------------------------------------------------------------------

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg"}


@main.command("dataset-build")
@click.option("--images", "images_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--metadata", type=click.Path(exists=True, dir_okay=False),
              help="JSONL of {image, keywords, category} overriding the defaults.")
@click.option("--category", "default_category", default="indie", show_default=True)
@click.option("--categories", "categories_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--k", default=10, show_default=True, help="Dominant colors per image.")
@click.option("--dedup-threshold", default=10.0, show_default=True)
@click.option("--seed", default=0, show_default=True)
def dataset_build(images_dir, out_path, metadata, default_category, categories_path, k,
                  dedup_threshold, seed):
    """Extract dominant colors, auto-curate palettes, and write a JSONL dataset."""
    from culturecolor.dataset import (
        CategoryVocabulary,
        CurationUnderflowError,
        DatasetRecord,
        curate_palette,
        extract_dominant_colors,
        save_dataset,
    )
    from culturecolor.imaging import load_image

    vocabulary = CategoryVocabulary.load(categories_path) if categories_path \
        else CategoryVocabulary.default()
    meta: dict[str, dict] = {}
    if metadata:
        with open(metadata, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    obj = json.loads(line)
                    meta[obj["image"]] = obj

    paths = sorted(p for p in Path(images_dir).iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    if not paths:
        _fail(f"no images found in {images_dir}")

    records = []
    skipped = []
    for path in paths:
        info = meta.get(path.name, {})
        keywords = info.get("keywords") or path.stem.replace("_", " ").split()
        category = info.get("category", default_category)
        try:
            candidates = extract_dominant_colors(load_image(path), k=k, seed=seed)
            palette = curate_palette(candidates, dedup_threshold=dedup_threshold)
            record = DatasetRecord(
                image_ref=str(path), palette=palette, keywords=tuple(keywords), category=category
            )
            record.validate_category(vocabulary)
        except (ValueError, CurationUnderflowError) as exc:
            skipped.append({"image": str(path), "reason": str(exc)})
            continue
        records.append(record)
    if not records:
        _fail("no images produced valid records")
    save_dataset(records, out_path)
    click.echo(json.dumps({"records": len(records), "skipped": skipped, "out": str(out_path)}))


@main.command("dataset-stats")
@click.option("--a", "path_a", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--b", "path_b", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--use", type=click.Choice(["palette", "image"]), default="palette", show_default=True)
@click.option("--sample", "sample_n", type=int, default=None,
              help="Randomly subsample each corpus to N records.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), help="JSON report path.")
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), help="CSV of statistic vectors.")
@click.option("--categories", "categories_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", default=0, show_default=True)
def dataset_stats(path_a, path_b, use, sample_n, out_path, csv_path, categories_path, seed):
    """Compare the HSL statistics of two corpora (report JSON to stdout)."""
    from culturecolor.dataset import CategoryVocabulary, load_dataset
    from culturecolor.evaluation import corpus_comparison_report, report_to_csv

    vocabulary = CategoryVocabulary.load(categories_path) if categories_path \
        else CategoryVocabulary.default()
    try:
        records_a, _ = load_dataset(path_a, vocabulary)
        records_b, _ = load_dataset(path_b, vocabulary)
        report = corpus_comparison_report(records_a, records_b, use=use, sample_n=sample_n, seed=seed)
    except ValueError as exc:
        _fail(str(exc))
    if out_path:
        Path(out_path).write_text(json.dumps(report, indent=2), encoding="utf-8")
    if csv_path:
        report_to_csv(report, csv_path)
    click.echo(json.dumps({"n_a": report["n_a"], "n_b": report["n_b"], "tests": report["tests"]}))


# ---------------------------------------------------------------------------
# Training commands.
# ---------------------------------------------------------------------------

def _load_training_inputs(dataset_path, categories_path):
    from culturecolor.dataset import CategoryVocabulary, load_dataset
    from culturecolor.encoders import Vocabulary

    category_vocab = CategoryVocabulary.load(categories_path) if categories_path \
        else CategoryVocabulary.default()
    records, _ = load_dataset(dataset_path, category_vocab)
    if not records:
        _fail(f"dataset {dataset_path} is empty")
    vocabulary = Vocabulary.build_from_keywords(
        [word for record in records for word in record.keywords]
    )
    return records, category_vocab, vocabulary


@main.command("train-palette")
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--categories", "categories_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--steps", default=2000, show_default=True)
@click.option("--d", "dim", default=128, show_default=True, help="Context dimension.")
@click.option("--image-size", default=64, show_default=True)
@click.option("--hidden", default=64, show_default=True)
@click.option("--noise-dim", default=16, show_default=True)
@click.option("--batch-size", default=32, show_default=True)
@click.option("--lr", default=1e-3, show_default=True)
@click.option("--log", "log_path", type=click.Path(dir_okay=False), help="JSONL loss log.")
@click.option("--seed", default=0, show_default=True)
def train_palette(dataset_path, out_path, categories_path, steps, dim, image_size, hidden,
                  noise_dim, batch_size, lr, log_path, seed):
    """Train the palette generation network on a JSONL dataset."""
    from culturecolor.encoders import EncoderConfig
    from culturecolor.palette_gan import GanConfig, PaletteGan, examples_from_records, train_palette_gan

    records, category_vocab, vocabulary = _load_training_inputs(dataset_path, categories_path)
    encoder_config = EncoderConfig(
        d=dim, image_size=image_size, vocab_size=len(vocabulary),
        category_count=len(category_vocab),
    )
    gan_config = GanConfig(
        noise_dim=noise_dim, hidden_dim=hidden, lr_g=lr, lr_d=lr,
        batch_size=batch_size, seed=seed,
    )
    model = PaletteGan(
        encoder_config, gan_config, vocabulary=vocabulary, category_names=category_vocab.names
    )
    examples = examples_from_records(records, vocabulary, category_vocab, image_size)
    try:
        history = train_palette_gan(model, examples, steps=steps, log_path=log_path)
    except FloatingPointError as exc:
        _fail(f"training diverged: {exc}")
    model.save(out_path)
    click.echo(json.dumps({"steps": steps, "final": history[-1], "out": str(out_path),
                           "model_version": model.version}))


@main.command("train-colorizer")
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--categories", "categories_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--steps", default=2000, show_default=True)
@click.option("--d", "dim", default=128, show_default=True)
@click.option("--image-size", default=64, show_default=True)
@click.option("--resolution", default=128, show_default=True, help="Working resolution.")
@click.option("--base-channels", default=32, show_default=True)
@click.option("--noise-dim", default=16, show_default=True)
@click.option("--batch-size", default=8, show_default=True)
@click.option("--lr", default=1e-3, show_default=True)
@click.option("--recon-weight", default=10.0, show_default=True,
              help="L1 reconstruction weight; 0 for pure adversarial training.")
@click.option("--log", "log_path", type=click.Path(dir_okay=False))
@click.option("--seed", default=0, show_default=True)
def train_colorizer_cmd(dataset_path, out_path, categories_path, steps, dim, image_size,
                        resolution, base_channels, noise_dim, batch_size, lr, recon_weight,
                        log_path, seed):
    """Train the palette-guided colorization network."""
    from culturecolor.colorizer import (
        Colorizer,
        ColorizerConfig,
        colorizer_examples_from_records,
        train_colorizer,
    )
    from culturecolor.encoders import EncoderConfig

    records, category_vocab, vocabulary = _load_training_inputs(dataset_path, categories_path)
    encoder_config = EncoderConfig(
        d=dim, image_size=image_size, vocab_size=len(vocabulary),
        category_count=len(category_vocab),
    )
    config = ColorizerConfig(
        noise_dim=noise_dim, base_channels=base_channels, resolution=resolution,
        lr_g=lr, lr_d=lr, recon_weight=recon_weight, batch_size=batch_size, seed=seed,
    )
    model = Colorizer(
        encoder_config, config, vocabulary=vocabulary, category_names=category_vocab.names
    )
    examples = colorizer_examples_from_records(
        records, vocabulary, category_vocab, image_size, resolution
    )
    try:
        history = train_colorizer(model, examples, steps=steps, log_path=log_path)
    except FloatingPointError as exc:
        _fail(f"training diverged: {exc}")
    model.save(out_path)
    click.echo(json.dumps({"steps": steps, "final": history[-1], "out": str(out_path),
                           "model_version": model.version}))


# ---------------------------------------------------------------------------
# Inference commands.
# ---------------------------------------------------------------------------

def _build_context(model, text: str, category: str, image_path: str):
    from culturecolor.encoders import ContextInput
    from culturecolor.imaging import load_image, resize_gray, to_grayscale

    if model.category_names is None:
        _fail("model carries no category names; re-train with a category vocabulary")
    if category not in model.category_names:
        _fail(f"unknown category {category!r} (model knows {model.category_names})")
    gray_full = to_grayscale(load_image(image_path))
    context = ContextInput(
        tokens=model.vocabulary.encode(text) if model.vocabulary else (),
        image=resize_gray(gray_full, model.encoder_config.image_size),
        category_id=model.category_names.index(category),
    )
    return context, gray_full


@main.command("generate")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--text", default="")
@click.option("--category", required=True)
@click.option("--image", "image_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", default=0, show_default=True)
@click.option("--json", "as_json", is_flag=True, help="Emit a JSON object instead of plain hex lines.")
def generate(model_path, text, category, image_path, seed, as_json):
    """Generate a 5-color palette from text + grayscale image + category."""
    from culturecolor.palette_gan import PaletteGan

    try:
        model = PaletteGan.load(model_path)
    except ValueError as exc:
        _fail(str(exc))
    context, _ = _build_context(model, text, category, image_path)
    palette = model.sample_palette(context, seed=seed)
    if as_json:
        click.echo(json.dumps({"palette": palette.to_hex(), "seed": seed,
                               "model_version": model.version}))
    else:
        click.echo("\n".join(palette.to_hex()))


@main.command("colorize")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--image", "image_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--palette", "palette_arg", required=True,
              help="Comma-separated #RRGGBB colors or a path to a JSON array.")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--text", default="")
@click.option("--category", default=None)
@click.option("--seed", default=0, show_default=True)
def colorize_cmd(model_path, image_path, palette_arg, out_path, text, category, seed):
    """Colorize a grayscale image with a palette; writes a PNG."""
    from culturecolor.colorizer import Colorizer, colorize
    from culturecolor.colors import Palette

    try:
        model = Colorizer.load(model_path)
    except ValueError as exc:
        _fail(str(exc))
    if Path(palette_arg).is_file():
        hex_values = json.loads(Path(palette_arg).read_text(encoding="utf-8"))
    else:
        hex_values = [v.strip() for v in palette_arg.split(",")]
    try:
        palette = Palette.from_hex(hex_values)
    except ValueError as exc:
        _fail(str(exc))
    category = category or (model.category_names[0] if model.category_names else None)
    context, gray_full = _build_context(model, text, category, image_path)
    result = colorize(model, gray_full, palette, context, seed=seed)
    Path(out_path).write_bytes(result.png_bytes())
    click.echo(json.dumps({
        "out": str(out_path),
        "size": list(result.shape),
        "chroma_clipped_fraction": result.chroma_clipped_fraction,
    }))


# ---------------------------------------------------------------------------
# Evaluation commands.
# ---------------------------------------------------------------------------

@main.group()
def evaluate():
    """Controlled-diversity grids and preference-study tooling."""


@evaluate.command("diversity")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--varied", type=click.Choice(["text", "image", "category"]), required=True)
@click.option("--values", required=True,
              help="Comma-separated variants: texts, image paths, or category names.")
@click.option("--text", default="", help="Fixed text (when not varied).")
@click.option("--category", default=None, help="Fixed category (when not varied).")
@click.option("--image", "image_path", type=click.Path(exists=True, dir_okay=False),
              help="Fixed image (when not varied).")
@click.option("--out", "out_path", type=click.Path(dir_okay=False))
@click.option("--seed", default=0, show_default=True)
def evaluate_diversity(model_path, varied, values, text, category, image_path, out_path, seed):
    """Vary one modality with the other two fixed; report dispersion."""
    from culturecolor.evaluation import DiversityExperiment, run_diversity_grid
    from culturecolor.imaging import load_image, resize_gray, to_grayscale
    from culturecolor.palette_gan import PaletteGan

    try:
        model = PaletteGan.load(model_path)
    except ValueError as exc:
        _fail(str(exc))
    variant_values = [v.strip() for v in values.split(",")]
    fixed_category = category or (model.category_names[0] if model.category_names else None)
    if varied != "image" and image_path is None:
        _fail("--image is required when image is a fixed modality")
    base_context, _ = _build_context(
        model, text, fixed_category, image_path if image_path else variant_values[0]
    )

    if varied == "image":
        size = model.encoder_config.image_size
        variants = [resize_gray(to_grayscale(load_image(p)), size) for p in variant_values]
    elif varied == "category":
        for name in variant_values:
            if name not in model.category_names:
                _fail(f"unknown category {name!r}")
        variants = [model.category_names.index(name) for name in variant_values]
    else:
        variants = variant_values

    experiment = DiversityExperiment.from_variants(
        varied, base_context, variants, seed=seed, vocabulary=model.vocabulary
    )
    grid = run_diversity_grid(experiment, model.sample_palette)
    payload = grid.to_json_obj()
    if out_path:
        Path(out_path).write_text(json.dumps(payload, indent=2), encoding="utf-8")
    click.echo(json.dumps(payload))


@evaluate.command("study")
@click.option("--ours", "ours_path", required=True, type=click.Path(exists=True, dir_okay=False),
              help="JSONL of {keyword, palette: [hex x 5], image?}.")
@click.option("--baseline", "baseline_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--seed", default=0, show_default=True)
def evaluate_study(ours_path, baseline_path, out_dir, seed):
    """Build a blinded preference-study bundle plus its answer key."""
    from culturecolor.colors import Palette
    from culturecolor.evaluation import StudyArtifact, build_preference_study

    def load_side(path):
        artifacts = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    obj = json.loads(line)
                    artifacts.append(StudyArtifact(
                        keyword=obj["keyword"],
                        palette=Palette.from_hex(obj["palette"]),
                        image=obj.get("image"),
                    ))
        return artifacts

    try:
        study = build_preference_study(load_side(ours_path), load_side(baseline_path), seed=seed)
    except ValueError as exc:
        _fail(str(exc))
    study.save(out_dir)
    click.echo(json.dumps({"pairs": len(study.pairs), "out": str(out_dir)}))


@evaluate.command("tally")
@click.option("--votes", "votes_path", required=True, type=click.Path(exists=True, dir_okay=False),
              help="CSV with header pair_id,rater_id,choice.")
@click.option("--key", "key_path", required=True, type=click.Path(exists=True, dir_okay=False))
def evaluate_tally(votes_path, key_path):
    """Tally preference votes against the answer key."""
    from culturecolor.evaluation import load_votes_csv, tally_preferences

    answer_key = json.loads(Path(key_path).read_text(encoding="utf-8"))
    try:
        result = tally_preferences(load_votes_csv(votes_path), answer_key)
    except ValueError as exc:
        _fail(str(exc))
    click.echo(json.dumps(result))


# ---------------------------------------------------------------------------
# Service.
# ---------------------------------------------------------------------------

@main.command("serve")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
def serve(config_path, host, port):
    """Run the HTTP gateway (palette / adjust / colorize endpoints)."""
    import uvicorn

    from culturecolor.service import ServiceConfig, create_app

    config = ServiceConfig.load(config_path)
    if host:
        config.host = host
    if port:
        config.port = port
    uvicorn.run(create_app(config), host=config.host, port=config.port)


if __name__ == "__main__":
    main()
