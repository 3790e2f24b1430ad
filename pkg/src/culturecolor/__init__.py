"""Culture-conditioned color palette generation and colorization toolkit."""

from culturecolor.colors import Color, ColorSpace, Palette, convert, palette_distance

__all__ = ["Color", "ColorSpace", "Palette", "convert", "palette_distance"]

__version__ = "0.1.0"
