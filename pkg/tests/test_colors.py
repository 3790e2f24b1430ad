"""Color conversion, hex codec, and palette distance tests.

The Lab oracle here is an independent scalar implementation of the CIE
formulas (threshold constants written out rather than shared with the
library), and palette distance is checked against exhaustive permutation
matching.
"""

import itertools
import math

import numpy as np
import pytest

from culturecolor.colors import (
    Color,
    ColorSpace,
    Palette,
    color_to_hex,
    convert,
    delta_e,
    hex_to_color,
    hsl_to_rgb,
    lab_to_rgb,
    palette_distance,
    rgb_to_hsl,
    rgb_to_lab,
)


def reference_rgb_to_lab(r, g, b):
    """Scalar sRGB(D65) -> Lab, written independently of the library path."""

    def lin(v):
        return v / 12.92 if v <= 0.04045 else ((v + 0.055) / 1.055) ** 2.4

    rl, gl, bl = lin(r), lin(g), lin(b)
    x = 0.4124564 * rl + 0.3575761 * gl + 0.1804375 * bl
    y = 0.2126729 * rl + 0.7151522 * gl + 0.0721750 * bl
    z = 0.0193339 * rl + 0.1191920 * gl + 0.9503041 * bl
    x, y, z = x / 0.95047, y / 1.0, z / 1.08883

    def f(t):
        return t ** (1.0 / 3.0) if t > 0.008856 else (903.3 * t + 16.0) / 116.0

    return 116.0 * f(y) - 16.0, 500.0 * (f(x) - f(y)), 200.0 * (f(y) - f(z))


def random_rgb_colors(n, seed=0):
    return np.random.default_rng(seed).random((n, 3))


class TestConvert:
    def test_pure_red_to_hsl(self):
        out = convert(Color.rgb(1, 0, 0), ColorSpace.HSL)
        assert out.channels == (0.0, 1.0, 0.5)

    def test_black_to_hsl_canonical_hue(self):
        out = convert(Color.rgb(0, 0, 0), ColorSpace.HSL)
        assert out.channels == (0.0, 0.0, 0.0)

    def test_lab_matches_reference(self):
        out = convert(Color.rgb(0.2, 0.6, 0.4), ColorSpace.LAB)
        expected = reference_rgb_to_lab(0.2, 0.6, 0.4)
        assert out.channels == pytest.approx(expected, abs=1e-3)

    def test_lab_matches_reference_on_random_colors(self):
        for r, g, b in random_rgb_colors(50, seed=3):
            out = convert(Color.rgb(r, g, b), ColorSpace.LAB)
            assert out.channels == pytest.approx(reference_rgb_to_lab(r, g, b), abs=1e-3)

    def test_identity_when_target_equals_source(self):
        color = Color.hsl(120.0, 0.5, 0.5)
        assert convert(color, ColorSpace.HSL) is color

    def test_round_trip_rgb_lab(self):
        rgbs = random_rgb_colors(1000, seed=1)
        back = lab_to_rgb(rgb_to_lab(rgbs))
        assert np.abs(back - rgbs).max() <= 1.0 / 255.0

    def test_round_trip_rgb_hsl(self):
        rgbs = random_rgb_colors(1000, seed=2)
        back = hsl_to_rgb(rgb_to_hsl(rgbs))
        assert np.abs(back - rgbs).max() <= 1.0 / 255.0

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            Color.rgb(1.2, 0, 0)
        with pytest.raises(ValueError):
            Color.hsl(360.0, 0.5, 0.5)
        with pytest.raises(ValueError):
            Color.lab(-1.0, 0, 0)

    def test_achromatic_hsl_hue_canonicalized(self):
        assert Color.hsl(200.0, 0.0, 0.4).c0 == 0.0
        assert Color.hsl(200.0, 0.7, 1.0).c0 == 0.0


class TestHexCodec:
    def test_decode_red(self):
        assert hex_to_color("#FF0000").channels == (1.0, 0.0, 0.0)

    def test_encode_black(self):
        assert color_to_hex(Color.rgb(0, 0, 0)) == "#000000"

    def test_decode_encode_identity_on_1000_random_strings(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            r, g, b = rng.integers(0, 256, 3)
            value = f"#{r:02X}{g:02X}{b:02X}"
            assert color_to_hex(hex_to_color(value)) == value

    @pytest.mark.parametrize("bad", ["FF0000", "#FF00", "#GG0000", "#ff00001", "", "#12345"])
    def test_malformed_rejected_with_input_echoed(self, bad):
        with pytest.raises(ValueError) as err:
            hex_to_color(bad)
        assert repr(bad) in str(err.value)


def random_palette(rng):
    return Palette(tuple(Color.rgb(*rng.random(3)) for _ in range(5)))


def brute_force_palette_distance(a: Palette, b: Palette) -> float:
    """Exhaustive minimum over all 120 pairings of the two palettes."""
    lab_a = [convert(c, ColorSpace.LAB).channels for c in a]
    lab_b = [convert(c, ColorSpace.LAB).channels for c in b]
    best = math.inf
    for perm in itertools.permutations(range(5)):
        total = sum(
            math.dist(lab_a[i], lab_b[j]) for i, j in enumerate(perm)
        )
        best = min(best, total)
    return best / 5.0


class TestPaletteDistance:
    def test_identity(self):
        p = random_palette(np.random.default_rng(0))
        assert palette_distance(p, p) == 0.0

    def test_black_vs_white_is_100(self):
        black = Palette(tuple(Color.rgb(0, 0, 0) for _ in range(5)))
        white = Palette(tuple(Color.rgb(1, 1, 1) for _ in range(5)))
        assert palette_distance(black, white) == pytest.approx(100.0, abs=1e-4)

    def test_matches_brute_force_on_50_random_pairs(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            a, b = random_palette(rng), random_palette(rng)
            assert palette_distance(a, b) == pytest.approx(
                brute_force_palette_distance(a, b), abs=1e-9
            )

    def test_pseudometric_on_100_random_triples(self):
        rng = np.random.default_rng(13)
        for _ in range(100):
            a, b, c = (random_palette(rng) for _ in range(3))
            dab, dba = palette_distance(a, b), palette_distance(b, a)
            dac, dbc = palette_distance(a, c), palette_distance(b, c)
            assert dab >= 0.0
            assert dab == pytest.approx(dba, abs=1e-9)
            assert dac <= dab + dbc + 1e-9

    def test_order_invariance(self):
        rng = np.random.default_rng(17)
        p = random_palette(rng)
        shuffled = Palette(tuple(p.colors[i] for i in (4, 2, 0, 3, 1)))
        assert palette_distance(p, shuffled) == pytest.approx(0.0, abs=1e-9)


class TestPaletteType:
    def test_rejects_wrong_length(self):
        with pytest.raises(ValueError, match="exactly 5"):
            Palette(tuple(Color.rgb(0, 0, 0) for _ in range(4)))

    def test_rejects_mixed_spaces(self):
        colors = [Color.rgb(0, 0, 0)] * 4 + [Color.lab(50, 0, 0)]
        with pytest.raises(ValueError, match="spaces"):
            Palette(tuple(colors))

    def test_hex_round_trip(self):
        values = ["#102030", "#FFFFFF", "#000000", "#ABCDEF", "#3C72A1"]
        assert Palette.from_hex(values).to_hex() == values


def test_delta_e_matches_euclidean():
    rng = np.random.default_rng(23)
    a, b = rng.uniform(0, 100, 3), rng.uniform(0, 100, 3)
    assert delta_e(a, b) == pytest.approx(math.dist(a, b), rel=1e-12)
