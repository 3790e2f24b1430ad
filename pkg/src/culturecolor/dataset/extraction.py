"""Dominant-color extraction and palette curation.

Extraction runs k-means (k-means++ seeding) in Lab space over the image
pixels; curation merges near-duplicate candidates and picks five colors,
either by explicit designer indices or by a greedy proportion-plus-
distinctiveness score.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.cluster import KMeans

from culturecolor.colors import Color, ColorSpace, Palette, delta_e, lab_to_rgb, rgb_to_lab

DEFAULT_K = 10
DEFAULT_DEDUP_THRESHOLD = 10.0
DEFAULT_DISTINCTIVENESS_BETA = 0.1


class CurationUnderflowError(ValueError):
    """Fewer than five candidates survived dedup; the threshold is too aggressive."""


@dataclass(frozen=True)
class CandidateColors:
    """Cluster colors with membership proportions, sorted most-dominant first."""

    colors: tuple[Color, ...]
    proportions: tuple[float, ...]

    def __post_init__(self):
        colors = tuple(self.colors)
        proportions = tuple(float(p) for p in self.proportions)
        if len(colors) != len(proportions) or not colors:
            raise ValueError("colors and proportions must be equal-length and non-empty")
        if any(p < 0 for p in proportions):
            raise ValueError("proportions must be non-negative")
        if abs(sum(proportions) - 1.0) > 1e-6:
            raise ValueError(f"proportions sum to {sum(proportions)}, expected 1")
        if any(proportions[i] < proportions[i + 1] for i in range(len(proportions) - 1)):
            raise ValueError("proportions must be sorted descending")
        object.__setattr__(self, "colors", colors)
        object.__setattr__(self, "proportions", proportions)

    def __len__(self) -> int:
        return len(self.colors)


def _pixels_from_image(image: np.ndarray) -> np.ndarray:
    image = np.asarray(image)
    if image.size == 0:
        raise ValueError("image is empty")
    if image.ndim == 3 and image.shape[-1] == 3:
        pixels = image.reshape(-1, 3)
    elif image.ndim == 2 and image.shape[-1] == 3:
        pixels = image
    else:
        raise ValueError(f"expected (H, W, 3) or (N, 3) pixel array, got shape {image.shape}")
    if np.issubdtype(pixels.dtype, np.integer):
        pixels = pixels.astype(np.float64) / 255.0
    else:
        pixels = pixels.astype(np.float64)
    if pixels.min() < 0.0 or pixels.max() > 1.0:
        raise ValueError("pixel values must be uint8 or floats in [0, 1]")
    return pixels


def extract_dominant_colors(image: np.ndarray, k: int = DEFAULT_K, seed: int = 0) -> CandidateColors:
    """Cluster image pixels into ``k`` dominant colors.

    Clustering happens in Lab; returned colors are RGB. When the image has
    fewer than ``k`` distinct pixel values the distinct colors are used
    directly and the remaining slots duplicate existing entries (in rank
    order) with proportion 0.
    """
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    pixels = _pixels_from_image(image)
    unique, counts = np.unique(pixels, axis=0, return_counts=True)

    if len(unique) <= k:
        order = np.argsort(-counts, kind="stable")
        centers_rgb = unique[order]
        proportions = counts[order] / counts.sum()
        while len(centers_rgb) < k:
            pad = centers_rgb[len(centers_rgb) % len(order)]
            centers_rgb = np.vstack([centers_rgb, pad])
            proportions = np.append(proportions, 0.0)
    else:
        lab = rgb_to_lab(pixels)
        km = KMeans(n_clusters=k, init="k-means++", n_init=10, random_state=seed)
        labels = km.fit_predict(lab)
        counts = np.bincount(labels, minlength=k)
        order = np.argsort(-counts, kind="stable")
        centers_rgb = lab_to_rgb(km.cluster_centers_[order])
        proportions = counts[order] / counts.sum()

    colors = tuple(Color.rgb(*np.clip(c, 0.0, 1.0)) for c in centers_rgb)
    return CandidateColors(colors=colors, proportions=tuple(proportions.tolist()))


def dedup_candidates(candidates: CandidateColors, threshold: float) -> CandidateColors:
    """Drop candidates within ``threshold`` deltaE76 of a higher-ranked survivor."""
    labs = rgb_to_lab(np.array([c.channels for c in candidates.colors]))
    kept: list[int] = []
    for i in range(len(candidates)):
        if all(delta_e(labs[i], labs[j]) >= threshold for j in kept):
            kept.append(i)
    colors = tuple(candidates.colors[i] for i in kept)
    props = np.array([candidates.proportions[i] for i in kept])
    props = props / props.sum()
    return CandidateColors(colors=colors, proportions=tuple(props.tolist()))


def greedy_select(
    candidates: CandidateColors, n: int, beta: float = DEFAULT_DISTINCTIVENESS_BETA
) -> list[int]:
    """Pick ``n`` candidate indices greedily by proportion + distinctiveness.

    Step score of candidate c is ``proportion(c) + beta * mean deltaE(c,
    already selected)``; ties go to the higher-ranked candidate.
    """
    labs = rgb_to_lab(np.array([c.channels for c in candidates.colors]))
    selected: list[int] = []
    remaining = list(range(len(candidates)))
    for _ in range(n):
        best_idx, best_score = None, -np.inf
        for i in remaining:
            score = candidates.proportions[i]
            if selected:
                score += beta * float(np.mean([delta_e(labs[i], labs[j]) for j in selected]))
            if score > best_score:
                best_idx, best_score = i, score
        selected.append(best_idx)
        remaining.remove(best_idx)
    return selected


def curate_palette(
    candidates: CandidateColors,
    dedup_threshold: float = DEFAULT_DEDUP_THRESHOLD,
    manual_pick: list[int] | None = None,
    beta: float = DEFAULT_DISTINCTIVENESS_BETA,
) -> Palette:
    """Reduce candidate colors to an ordered 5-color palette.

    Near-duplicates are merged first (the higher-proportion color wins).
    ``manual_pick`` selects five distinct post-dedup indices in
    representativeness order; otherwise selection is greedy.
    """
    deduped = dedup_candidates(candidates, dedup_threshold)
    if len(deduped) < 5:
        raise CurationUnderflowError(
            f"only {len(deduped)} candidates survive dedup at threshold {dedup_threshold}; need 5"
        )
    if manual_pick is not None:
        if len(manual_pick) != 5 or len(set(manual_pick)) != 5:
            raise ValueError(f"manual_pick must be 5 distinct indices, got {manual_pick}")
        if any(not 0 <= i < len(deduped) for i in manual_pick):
            raise ValueError(f"manual_pick indices out of range [0, {len(deduped)}): {manual_pick}")
        indices = list(manual_pick)
    else:
        indices = greedy_select(deduped, 5, beta=beta)
    return Palette(tuple(deduped.colors[i] for i in indices))
