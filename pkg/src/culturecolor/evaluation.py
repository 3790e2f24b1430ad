"""Evaluation harness: controlled-diversity grids, blinded preference
studies with exact binomial tallies, and corpus HSL comparison reports."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import stats as scipy_stats

from culturecolor.colors import Palette, palette_distance
from culturecolor.dataset.records import DatasetRecord
from culturecolor.dataset.stats import compute_hsl_stats, load_image_rgb, stats_report
from culturecolor.encoders import ContextInput

VARIED_MODALITIES = ("text", "image", "category")


@dataclass(frozen=True)
class DiversityExperiment:
    """Vary one modality while fixing the other two.

    ``contexts`` holds one fully-built ContextInput per variant; they differ
    only in the varied modality.
    """

    varied: str
    contexts: tuple[ContextInput, ...]
    seed: int = 0

    def __post_init__(self):
        if self.varied not in VARIED_MODALITIES:
            raise ValueError(f"varied must be one of {VARIED_MODALITIES}, got {self.varied!r}")
        if not self.contexts:
            raise ValueError("experiment needs at least one variant")

    @classmethod
    def from_variants(
        cls, varied: str, base: ContextInput, variants: Sequence, seed: int = 0, vocabulary=None
    ) -> "DiversityExperiment":
        """Build variant contexts from raw values for the varied modality.

        Text variants may be raw strings (tokenized with ``vocabulary``) or
        token tuples; image variants are grayscale arrays; category variants
        are integer ids.
        """
        contexts = []
        for value in variants:
            if varied == "text":
                tokens = vocabulary.encode(value) if isinstance(value, str) else tuple(value)
                contexts.append(ContextInput(tokens, base.image, base.category_id))
            elif varied == "image":
                contexts.append(ContextInput(base.tokens, value, base.category_id))
            elif varied == "category":
                contexts.append(ContextInput(base.tokens, base.image, int(value)))
            else:
                raise ValueError(f"varied must be one of {VARIED_MODALITIES}, got {varied!r}")
        return cls(varied=varied, contexts=tuple(contexts), seed=seed)


@dataclass(frozen=True)
class DiversityGrid:
    varied: str
    palettes: tuple[Palette, ...]
    mean_pairwise_distance: float | None
    distance_to_first: tuple[float, ...]

    def to_json_obj(self) -> dict:
        return {
            "varied": self.varied,
            "palettes": [p.to_hex() for p in self.palettes],
            "mean_pairwise_distance": self.mean_pairwise_distance,
            "distance_to_first": list(self.distance_to_first),
        }


def run_diversity_grid(
    experiment: DiversityExperiment, sampler: Callable[[ContextInput, int], Palette]
) -> DiversityGrid:
    """One palette per variant at a fixed seed, plus dispersion summaries.

    Dispersion is the mean pairwise palette distance across variants (None
    for a single variant); each palette's distance to the first variant's
    palette is reported as the per-row baseline deviation.
    """
    palettes = [sampler(ctx, experiment.seed) for ctx in experiment.contexts]
    n = len(palettes)
    if n >= 2:
        pairs = [
            palette_distance(palettes[i], palettes[j]) for i in range(n) for j in range(i + 1, n)
        ]
        dispersion = float(np.mean(pairs))
    else:
        dispersion = None
    to_first = tuple(palette_distance(palettes[0], p) for p in palettes)
    return DiversityGrid(
        varied=experiment.varied,
        palettes=tuple(palettes),
        mean_pairwise_distance=dispersion,
        distance_to_first=to_first,
    )


# ---------------------------------------------------------------------------
# Paired preference study.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StudyArtifact:
    """One side of a preference pair: a palette and an optional image file."""

    keyword: str
    palette: Palette
    image: str | None = None

    def to_json_obj(self) -> dict:
        obj = {"keyword": self.keyword, "palette": self.palette.to_hex()}
        if self.image is not None:
            obj["image"] = self.image
        return obj


@dataclass(frozen=True)
class PreferenceStudy:
    """Blinded pair manifest plus the separately-kept answer key."""

    pairs: tuple[dict, ...]  # blinded: {pair_id, keyword, a, b}
    answer_key: dict[str, dict[str, str]]  # pair_id -> {"a": source, "b": source}

    def save(self, directory: str | Path) -> None:
        """Write the bundle: manifest + answer key + copies of pair images."""
        import shutil

        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        pairs = []
        for pair in self.pairs:
            pair = json.loads(json.dumps(pair))  # deep copy before rewriting paths
            for side in ("a", "b"):
                source = pair[side].get("image")
                if source:
                    target = f"{pair['pair_id']}-{side}.png"
                    shutil.copyfile(source, directory / target)
                    pair[side]["image"] = target
            pairs.append(pair)
        (directory / "manifest.json").write_text(
            json.dumps({"pairs": pairs}, indent=2), encoding="utf-8"
        )
        (directory / "answer_key.json").write_text(
            json.dumps(self.answer_key, indent=2), encoding="utf-8"
        )


def build_preference_study(
    ours: Sequence[StudyArtifact], baseline: Sequence[StudyArtifact], seed: int = 0
) -> PreferenceStudy:
    """Pair artifacts by position, randomize sides, and blind provenance."""
    if len(ours) != len(baseline):
        raise ValueError(f"list lengths differ: {len(ours)} ours vs {len(baseline)} baseline")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(ours))
    pairs, key = [], {}
    for pair_index, i in enumerate(order):
        pair_id = f"pair-{pair_index:03d}"
        ours_first = bool(rng.integers(0, 2))
        side_a, side_b = (ours[i], baseline[i]) if ours_first else (baseline[i], ours[i])
        pairs.append(
            {
                "pair_id": pair_id,
                "keyword": ours[i].keyword,
                "a": side_a.to_json_obj(),
                "b": side_b.to_json_obj(),
            }
        )
        key[pair_id] = {
            "a": "ours" if ours_first else "baseline",
            "b": "baseline" if ours_first else "ours",
        }
    return PreferenceStudy(pairs=tuple(pairs), answer_key=key)


def tally_preferences(
    votes: Sequence[tuple[str, str, str]], answer_key: dict[str, dict[str, str]]
) -> dict:
    """Count votes for "ours" and test against chance with an exact binomial.

    Votes are (pair_id, rater_id, choice) with choice "a" or "b". Returns raw
    counts, the preference fraction, and a two-sided exact p-value vs 0.5.
    """
    for_ours = 0
    total = 0
    for pair_id, _rater, choice in votes:
        if pair_id not in answer_key:
            raise ValueError(f"vote references unknown pair {pair_id!r}")
        if choice not in ("a", "b"):
            raise ValueError(f"choice must be 'a' or 'b', got {choice!r}")
        total += 1
        if answer_key[pair_id][choice] == "ours":
            for_ours += 1
    if total == 0:
        raise ValueError("no votes to tally")
    result = scipy_stats.binomtest(for_ours, total, p=0.5, alternative="two-sided")
    return {
        "votes_for_ours": for_ours,
        "votes_total": total,
        "fraction": for_ours / total,
        "p_value": float(result.pvalue),
    }


def load_votes_csv(path: str | Path) -> list[tuple[str, str, str]]:
    """Votes CSV with header pair_id,rater_id,choice."""
    votes = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            votes.append((row["pair_id"], row["rater_id"], row["choice"].strip().lower()))
    return votes


# ---------------------------------------------------------------------------
# Corpus comparison.
# ---------------------------------------------------------------------------

def corpus_comparison_report(
    records_a: Sequence[DatasetRecord],
    records_b: Sequence[DatasetRecord],
    use: str = "palette",
    sample_n: int | None = None,
    seed: int = 0,
    image_loader: Callable[[str], np.ndarray] = load_image_rgb,
) -> dict:
    """HSL statistics for two corpora plus Welch tests per statistic.

    ``sample_n`` randomly subsamples each corpus (without replacement) the
    way the reference comparison drew 400 images per side.
    """
    records_a, records_b = list(records_a), list(records_b)
    if not records_a or not records_b:
        raise ValueError("both corpora must be non-empty")
    if sample_n is not None:
        rng = np.random.default_rng(seed)
        if sample_n < len(records_a):
            records_a = [records_a[i] for i in rng.choice(len(records_a), sample_n, replace=False)]
        if sample_n < len(records_b):
            records_b = [records_b[i] for i in rng.choice(len(records_b), sample_n, replace=False)]
    stats_a = compute_hsl_stats(records_a, use=use, image_loader=image_loader)
    stats_b = compute_hsl_stats(records_b, use=use, image_loader=image_loader)
    report = stats_report(stats_a, stats_b)
    report["use"] = use
    return report


def report_to_csv(report: dict, path: str | Path) -> None:
    """Flatten the statistic vectors for external plotting."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["corpus", "statistic", "value"])
        for corpus in ("a", "b"):
            for name, values in report[corpus].items():
                for value in values:
                    writer.writerow([corpus, name, value])
