"""Shared toy-model fixtures for service, CLI, and acceptance tests."""

import numpy as np
import pytest

from culturecolor.colorizer import Colorizer, ColorizerConfig
from culturecolor.dataset.records import DEFAULT_CATEGORIES
from culturecolor.encoders import EncoderConfig, Vocabulary
from culturecolor.imaging import gray_to_png
from culturecolor.palette_gan import GanConfig, PaletteGan


@pytest.fixture(scope="session")
def toy_vocabulary():
    return Vocabulary.build_from_keywords(["dark", "bright", "night", "neon", "街头", "霓虹"])


@pytest.fixture(scope="session")
def toy_palette_model(toy_vocabulary):
    config = EncoderConfig(
        d=16, image_size=16, vocab_size=len(toy_vocabulary), category_count=len(DEFAULT_CATEGORIES)
    )
    return PaletteGan(
        config,
        GanConfig(noise_dim=8, hidden_dim=32, seed=0),
        vocabulary=toy_vocabulary,
        category_names=list(DEFAULT_CATEGORIES),
    ).eval_mode()


@pytest.fixture(scope="session")
def toy_colorizer_model(toy_vocabulary):
    config = EncoderConfig(
        d=16, image_size=16, vocab_size=len(toy_vocabulary), category_count=len(DEFAULT_CATEGORIES)
    )
    return Colorizer(
        config,
        ColorizerConfig(noise_dim=8, base_channels=8, resolution=16, seed=0),
        vocabulary=toy_vocabulary,
        category_names=list(DEFAULT_CATEGORIES),
    ).eval_mode()


@pytest.fixture()
def sample_png():
    gray = np.random.default_rng(0).random((24, 20))
    return gray_to_png(gray)
