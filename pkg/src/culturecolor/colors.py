"""Color spaces, conversions, hex codec, and perceptual distance metrics.

All conversions assume sRGB with the D65 white point (2-degree observer).
Array helpers operate on float64 numpy arrays whose last axis holds the
three channels; the scalar :class:`Color` API wraps them.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import linear_sum_assignment

# CIE constants (exact rational forms).
_LAB_EPS = 216.0 / 24389.0
_LAB_KAPPA = 24389.0 / 27.0

# sRGB <-> XYZ (D65) matrices.
_RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_XYZ_TO_RGB = np.linalg.inv(_RGB_TO_XYZ)
_WHITE_D65 = np.array([0.95047, 1.0, 1.08883])

_HEX_RE = re.compile(r"^#[0-9A-Fa-f]{6}$")

PALETTE_SIZE = 5


class ColorSpace(str, Enum):
    RGB = "rgb"
    HSL = "hsl"
    LAB = "lab"


# Per-space inclusive channel bounds; HSL hue is special-cased (360 excluded).
_RANGES = {
    ColorSpace.RGB: ((0.0, 1.0), (0.0, 1.0), (0.0, 1.0)),
    ColorSpace.HSL: ((0.0, 360.0), (0.0, 1.0), (0.0, 1.0)),
    ColorSpace.LAB: ((0.0, 100.0), (-128.0, 127.0), (-128.0, 127.0)),
}


@dataclass(frozen=True)
class Color:
    """A color in one of the supported spaces.

    RGB channels live in [0, 1]; HSL is (hue degrees [0, 360), saturation,
    lightness in [0, 1]); Lab is (L in [0, 100], a and b in [-128, 127]).
    Achromatic HSL colors are canonicalized to hue 0 on construction.
    """

    space: ColorSpace
    c0: float
    c1: float
    c2: float

    def __post_init__(self):
        channels = (float(self.c0), float(self.c1), float(self.c2))
        if not all(np.isfinite(channels)):
            raise ValueError(f"non-finite color channels: {channels}")
        for value, (lo, hi) in zip(channels, _RANGES[self.space]):
            if not lo <= value <= hi:
                raise ValueError(
                    f"{self.space.value} channel {value} outside [{lo}, {hi}]"
                )
        if self.space is ColorSpace.HSL:
            hue, sat, light = channels
            if hue >= 360.0:
                raise ValueError(f"hue {hue} outside [0, 360)")
            if sat == 0.0 or light == 0.0 or light == 1.0:
                channels = (0.0, sat, light)
        object.__setattr__(self, "c0", channels[0])
        object.__setattr__(self, "c1", channels[1])
        object.__setattr__(self, "c2", channels[2])

    @classmethod
    def rgb(cls, r: float, g: float, b: float) -> "Color":
        return cls(ColorSpace.RGB, r, g, b)

    @classmethod
    def hsl(cls, h: float, s: float, l: float) -> "Color":
        return cls(ColorSpace.HSL, h, s, l)

    @classmethod
    def lab(cls, l: float, a: float, b: float) -> "Color":
        return cls(ColorSpace.LAB, l, a, b)

    @property
    def channels(self) -> tuple[float, float, float]:
        return (self.c0, self.c1, self.c2)

    def isclose(self, other: "Color", tol: float = 1e-9) -> bool:
        if self.space is not other.space:
            return False
        return all(abs(a - b) <= tol for a, b in zip(self.channels, other.channels))


@dataclass(frozen=True)
class Palette:
    """An ordered 5-color palette; index 0 is the most representative color."""

    colors: tuple[Color, ...]

    def __post_init__(self):
        colors = tuple(self.colors)
        if len(colors) != PALETTE_SIZE:
            raise ValueError(f"palette needs exactly {PALETTE_SIZE} colors, got {len(colors)}")
        spaces = {c.space for c in colors}
        if len(spaces) != 1:
            raise ValueError(f"palette colors span multiple spaces: {sorted(s.value for s in spaces)}")
        object.__setattr__(self, "colors", colors)

    @property
    def space(self) -> ColorSpace:
        return self.colors[0].space

    def __iter__(self):
        return iter(self.colors)

    def __getitem__(self, index):
        return self.colors[index]

    @classmethod
    def from_hex(cls, values: list[str]) -> "Palette":
        if len(values) != PALETTE_SIZE:
            raise ValueError(f"palette needs exactly {PALETTE_SIZE} hex values, got {len(values)}")
        return cls(tuple(hex_to_color(v) for v in values))

    def to_hex(self) -> list[str]:
        return [color_to_hex(c) for c in self.colors]

    def to_array(self) -> np.ndarray:
        """Palette as a (5, 3) float array in its own space."""
        return np.array([c.channels for c in self.colors], dtype=np.float64)


# ---------------------------------------------------------------------------
# Array conversions (last axis = 3 channels, float64).
# ---------------------------------------------------------------------------

def srgb_to_linear(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    return np.where(v <= 0.04045, v / 12.92, ((v + 0.055) / 1.055) ** 2.4)


def linear_to_srgb(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    v = np.clip(v, 0.0, None)
    return np.where(v <= 0.0031308, v * 12.92, 1.055 * v ** (1.0 / 2.4) - 0.055)


def rgb_to_xyz(rgb: np.ndarray) -> np.ndarray:
    return srgb_to_linear(rgb) @ _RGB_TO_XYZ.T


def xyz_to_rgb(xyz: np.ndarray) -> np.ndarray:
    """XYZ to sRGB, clipped to [0, 1] (out-of-gamut values are clamped)."""
    return np.clip(linear_to_srgb(np.asarray(xyz, dtype=np.float64) @ _XYZ_TO_RGB.T), 0.0, 1.0)


def _lab_f(t: np.ndarray) -> np.ndarray:
    return np.where(t > _LAB_EPS, np.cbrt(t), (_LAB_KAPPA * t + 16.0) / 116.0)


def xyz_to_lab(xyz: np.ndarray) -> np.ndarray:
    f = _lab_f(np.asarray(xyz, dtype=np.float64) / _WHITE_D65)
    l = 116.0 * f[..., 1] - 16.0
    a = 500.0 * (f[..., 0] - f[..., 1])
    b = 200.0 * (f[..., 1] - f[..., 2])
    return np.stack([l, a, b], axis=-1)


def lab_to_xyz(lab: np.ndarray) -> np.ndarray:
    lab = np.asarray(lab, dtype=np.float64)
    l, a, b = lab[..., 0], lab[..., 1], lab[..., 2]
    fy = (l + 16.0) / 116.0
    fx = fy + a / 500.0
    fz = fy - b / 200.0

    def f_inv(f):
        f3 = f**3
        return np.where(f3 > _LAB_EPS, f3, (116.0 * f - 16.0) / _LAB_KAPPA)

    y = np.where(l > _LAB_KAPPA * _LAB_EPS, fy**3, l / _LAB_KAPPA)
    return np.stack([f_inv(fx), y, f_inv(fz)], axis=-1) * _WHITE_D65


def rgb_to_lab(rgb: np.ndarray) -> np.ndarray:
    return xyz_to_lab(rgb_to_xyz(rgb))


def lab_to_rgb(lab: np.ndarray) -> np.ndarray:
    return xyz_to_rgb(lab_to_xyz(lab))


def lab_to_linear_rgb(lab: np.ndarray) -> np.ndarray:
    """Lab to linear RGB without clipping; out-of-gamut values fall outside [0, 1]."""
    return lab_to_xyz(lab) @ _XYZ_TO_RGB.T


_LINEAR_LUT = srgb_to_linear(np.arange(256) / 255.0)

# Per-channel contribution of each uint8 value to linear luminance Y;
# each table is strictly increasing.
CHANNEL_LUMINANCE_LUTS = tuple(_LINEAR_LUT * w for w in _RGB_TO_XYZ[1])


def lab_l_from_linear_y(y: np.ndarray) -> np.ndarray:
    """Linear luminance Y (Yn = 1) to Lab L."""
    y = np.asarray(y, dtype=np.float64)
    f = np.where(y > _LAB_EPS, np.cbrt(y), (_LAB_KAPPA * y + 16.0) / 116.0)
    return 116.0 * f - 16.0


def linear_y_from_lab_l(l: np.ndarray) -> np.ndarray:
    """Lab L to linear luminance Y; inverse of :func:`lab_l_from_linear_y`."""
    l = np.asarray(l, dtype=np.float64)
    return np.where(l > _LAB_KAPPA * _LAB_EPS, ((l + 16.0) / 116.0) ** 3, l / _LAB_KAPPA)


def lab_luminance_of_srgb_int(rgb_int: np.ndarray) -> np.ndarray:
    """Lab L of integer sRGB triples (0..255) via the lookup tables."""
    r, g, b = CHANNEL_LUMINANCE_LUTS
    y = r[rgb_int[..., 0]] + g[rgb_int[..., 1]] + b[rgb_int[..., 2]]
    return lab_l_from_linear_y(y)


def rgb_to_hsl(rgb: np.ndarray) -> np.ndarray:
    """RGB to HSL with hue in [0, 360); achromatic pixels get hue 0."""
    rgb = np.asarray(rgb, dtype=np.float64)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    mx = rgb.max(axis=-1)
    mn = rgb.min(axis=-1)
    delta = mx - mn
    light = (mx + mn) / 2.0

    chromatic = delta > 0.0
    safe_delta = np.where(chromatic, delta, 1.0)

    denom = 1.0 - np.abs(2.0 * light - 1.0)
    sat = np.where(chromatic & (denom > 0.0), delta / np.where(denom > 0.0, denom, 1.0), 0.0)

    hue = np.zeros_like(light)
    hue = np.where(mx == r, ((g - b) / safe_delta) % 6.0, hue)
    hue = np.where(mx == g, (b - r) / safe_delta + 2.0, hue)
    hue = np.where(mx == b, (r - g) / safe_delta + 4.0, hue)
    hue = np.where(chromatic, (hue * 60.0) % 360.0, 0.0)
    return np.stack([hue, np.clip(sat, 0.0, 1.0), light], axis=-1)


def hsl_to_rgb(hsl: np.ndarray) -> np.ndarray:
    hsl = np.asarray(hsl, dtype=np.float64)
    h, s, l = hsl[..., 0], hsl[..., 1], hsl[..., 2]
    c = (1.0 - np.abs(2.0 * l - 1.0)) * s
    hp = (h % 360.0) / 60.0
    x = c * (1.0 - np.abs(hp % 2.0 - 1.0))
    m = l - c / 2.0

    zeros = np.zeros_like(c)
    sector = np.floor(hp).astype(int) % 6
    r = np.select([sector == 0, sector == 1, sector == 2, sector == 3, sector == 4], [c, x, zeros, zeros, x], c)
    g = np.select([sector == 0, sector == 1, sector == 2, sector == 3, sector == 4], [x, c, c, x, zeros], zeros)
    b = np.select([sector == 0, sector == 1, sector == 2, sector == 3, sector == 4], [zeros, zeros, x, c, c], x)
    return np.clip(np.stack([r + m, g + m, b + m], axis=-1), 0.0, 1.0)


# ---------------------------------------------------------------------------
# Scalar conversion API.
# ---------------------------------------------------------------------------

_TO_RGB = {
    ColorSpace.RGB: lambda arr: arr,
    ColorSpace.HSL: hsl_to_rgb,
    ColorSpace.LAB: lab_to_rgb,
}
_FROM_RGB = {
    ColorSpace.RGB: lambda arr: arr,
    ColorSpace.HSL: rgb_to_hsl,
    ColorSpace.LAB: rgb_to_lab,
}


def convert(color: Color, target: ColorSpace) -> Color:
    """Convert a color to ``target`` space (identity when already there).

    Conversions route through RGB; Lab values outside the sRGB gamut are
    clamped on the way out.
    """
    target = ColorSpace(target)
    if color.space is target:
        return color
    arr = np.array(color.channels, dtype=np.float64)
    rgb = _TO_RGB[color.space](arr)
    out = _FROM_RGB[target](rgb)
    return Color(target, *out.tolist())


def convert_palette(palette: Palette, target: ColorSpace) -> Palette:
    return Palette(tuple(convert(c, target) for c in palette))


# ---------------------------------------------------------------------------
# Hex codec ("#RRGGBB", uppercase on encode).
# ---------------------------------------------------------------------------

def hex_to_color(value: str) -> Color:
    if not isinstance(value, str) or not _HEX_RE.match(value):
        raise ValueError(f"malformed hex color: {value!r} (expected #RRGGBB)")
    r, g, b = (int(value[i : i + 2], 16) / 255.0 for i in (1, 3, 5))
    return Color.rgb(r, g, b)


def color_to_hex(color: Color) -> str:
    rgb = convert(color, ColorSpace.RGB)
    r, g, b = (int(round(c * 255.0)) for c in rgb.channels)
    return f"#{r:02X}{g:02X}{b:02X}"


# ---------------------------------------------------------------------------
# Distances.
# ---------------------------------------------------------------------------

def delta_e(lab_a: np.ndarray, lab_b: np.ndarray) -> np.ndarray:
    """CIE76 color difference: Euclidean distance in Lab."""
    diff = np.asarray(lab_a, dtype=np.float64) - np.asarray(lab_b, dtype=np.float64)
    return np.sqrt((diff**2).sum(axis=-1))


def color_distance(a: Color, b: Color) -> float:
    la = np.array(convert(a, ColorSpace.LAB).channels)
    lb = np.array(convert(b, ColorSpace.LAB).channels)
    return float(delta_e(la, lb))


def palette_distance(a: Palette, b: Palette) -> float:
    """Mean minimum-cost perfect matching of pairwise Lab deltaE76 distances.

    Symmetric, zero iff the palettes match up to reordering.
    """
    la = rgb_to_lab(_TO_RGB[a.space](a.to_array())) if a.space is not ColorSpace.LAB else a.to_array()
    lb = rgb_to_lab(_TO_RGB[b.space](b.to_array())) if b.space is not ColorSpace.LAB else b.to_array()
    cost = delta_e(la[:, None, :], lb[None, :, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].sum() / PALETTE_SIZE)
