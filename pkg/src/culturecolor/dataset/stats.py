"""Corpus HSL statistics and the Welch unequal-variance t-test.

Each record contributes one value per statistic: circular standard
deviation of hue (degrees), mean lightness, and mean saturation, computed
over either the record's palette colors or all pixels of its image.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable

import numpy as np
from PIL import Image
from scipy import stats as scipy_stats

from culturecolor.colors import ColorSpace, convert_palette, rgb_to_hsl
from culturecolor.dataset.records import DatasetRecord


def circular_mean_deg(angles_deg: np.ndarray) -> float:
    """Circular mean of angles in degrees, result in [0, 360)."""
    radians = np.deg2rad(np.asarray(angles_deg, dtype=np.float64))
    mean = np.angle(np.exp(1j * radians).mean())
    degrees = float(np.rad2deg(mean) % 360.0)
    return 0.0 if degrees >= 360.0 else degrees


def circular_std_deg(angles_deg: np.ndarray) -> float:
    """Circular standard deviation sqrt(-2 ln R) of angles, in degrees.

    R is the mean resultant length; R = 0 (e.g. antipodal angles) yields
    +inf, R = 1 (identical angles) yields 0.
    """
    radians = np.deg2rad(np.asarray(angles_deg, dtype=np.float64))
    r = float(np.abs(np.exp(1j * radians).mean()))
    if r < 1e-12:  # numerically zero resultant (uniform/antipodal angles)
        return float("inf")
    return float(np.rad2deg(np.sqrt(max(0.0, -2.0 * np.log(min(r, 1.0))))))


@dataclass(frozen=True)
class HslStats:
    """Per-record statistic vectors over a corpus."""

    hue_std: np.ndarray
    lightness_mean: np.ndarray
    saturation_mean: np.ndarray

    def __post_init__(self):
        n = len(self.hue_std)
        if not (len(self.lightness_mean) == len(self.saturation_mean) == n) or n == 0:
            raise ValueError("statistic vectors must be non-empty and equal-length")

    def __len__(self) -> int:
        return len(self.hue_std)

    def to_json_obj(self) -> dict:
        return {
            "hue_std": list(map(float, self.hue_std)),
            "lightness_mean": list(map(float, self.lightness_mean)),
            "saturation_mean": list(map(float, self.saturation_mean)),
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "HslStats":
        return cls(
            hue_std=np.asarray(obj["hue_std"], dtype=np.float64),
            lightness_mean=np.asarray(obj["lightness_mean"], dtype=np.float64),
            saturation_mean=np.asarray(obj["saturation_mean"], dtype=np.float64),
        )


def load_image_rgb(path: str | Path) -> np.ndarray:
    """Image file to (H, W, 3) float RGB in [0, 1]."""
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"), dtype=np.float64) / 255.0


def _record_hsl(record: DatasetRecord, use: str, image_loader: Callable[[str], np.ndarray]) -> np.ndarray:
    if use == "palette":
        rgb = convert_palette(record.palette, ColorSpace.RGB).to_array()
    elif use == "image":
        rgb = image_loader(record.image_ref).reshape(-1, 3)
    else:
        raise ValueError(f"use must be 'palette' or 'image', got {use!r}")
    return rgb_to_hsl(rgb)


def compute_hsl_stats(
    records: Iterable[DatasetRecord],
    use: str = "palette",
    image_loader: Callable[[str], np.ndarray] = load_image_rgb,
) -> HslStats:
    """Per-record hue dispersion and lightness/saturation means over a corpus."""
    records = list(records)
    if not records:
        raise ValueError("corpus is empty")
    hue_std, light_mean, sat_mean = [], [], []
    for record in records:
        hsl = _record_hsl(record, use, image_loader)
        hue_std.append(circular_std_deg(hsl[:, 0]))
        sat_mean.append(float(hsl[:, 1].mean()))
        light_mean.append(float(hsl[:, 2].mean()))
    return HslStats(
        hue_std=np.array(hue_std),
        lightness_mean=np.array(light_mean),
        saturation_mean=np.array(sat_mean),
    )


@dataclass(frozen=True)
class WelchResult:
    t: float
    p: float
    df: float

    def to_json_obj(self) -> dict:
        return {"t": self.t, "p": self.p, "df": self.df}


def welch_t_test(a: np.ndarray, b: np.ndarray) -> WelchResult:
    """Welch's unequal-variance t-test with a two-sided p-value.

    Degrees of freedom follow Welch-Satterthwaite. Degenerate input with
    zero variance on both sides yields t=0, p=1 for equal means and
    t=+/-inf, p=0 otherwise.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 1 or b.ndim != 1 or len(a) < 2 or len(b) < 2:
        raise ValueError(f"both samples need length >= 2, got {a.shape} and {b.shape}")
    m1, m2 = a.mean(), b.mean()
    v1, v2 = a.var(ddof=1), b.var(ddof=1)
    if v1 == 0.0 and v2 == 0.0:
        if m1 == m2:
            return WelchResult(t=0.0, p=1.0, df=float(len(a) + len(b) - 2))
        return WelchResult(t=float(np.sign(m1 - m2)) * float("inf"), p=0.0, df=float(len(a) + len(b) - 2))
    se1, se2 = v1 / len(a), v2 / len(b)
    t = (m1 - m2) / np.sqrt(se1 + se2)
    df = (se1 + se2) ** 2 / (se1**2 / (len(a) - 1) + se2**2 / (len(b) - 1))
    p = 2.0 * float(scipy_stats.t.sf(abs(t), df))
    return WelchResult(t=float(t), p=min(p, 1.0), df=float(df))


def stats_report(stats_a: HslStats, stats_b: HslStats) -> dict:
    """Fig-3-style comparison: statistic vectors plus Welch t/p per statistic."""
    report = {
        "n_a": len(stats_a),
        "n_b": len(stats_b),
        "a": stats_a.to_json_obj(),
        "b": stats_b.to_json_obj(),
        "tests": {},
    }
    for name in ("hue_std", "lightness_mean", "saturation_mean"):
        result = welch_t_test(getattr(stats_a, name), getattr(stats_b, name))
        report["tests"][name] = result.to_json_obj()
    return report


def save_stats_report(report: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report, indent=2), encoding="utf-8")
