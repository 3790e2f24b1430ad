"""Modality encoders and the weighted-sum context fusion.

Each modality (text tokens, grayscale image, category id) is encoded to a
d-dimensional vector; the condition vector combines them as a lambda-
weighted sum c1, the palette-prefix encoding c2, and their concatenation
y = [c1, c2].
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np
import torch
from torch import nn

from culturecolor.colors import Color, ColorSpace, convert

PAD_ID = 0
UNK_ID = 1


class Vocabulary:
    """Closed character-level vocabulary with reserved PAD=0 and UNK=1 ids."""

    def __init__(self, token_to_id: dict[str, int]):
        ids = sorted(token_to_id.values())
        if ids != list(range(2, len(ids) + 2)):
            raise ValueError("token ids must be exactly 2..n+1 (0 and 1 are reserved)")
        self._token_to_id = dict(token_to_id)

    @classmethod
    def build_from_keywords(cls, keywords) -> "Vocabulary":
        chars = sorted({ch for word in keywords for ch in word})
        return cls({ch: i + 2 for i, ch in enumerate(chars)})

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self._token_to_id, ensure_ascii=False, indent=2, sort_keys=True),
            encoding="utf-8",
        )

    def __len__(self) -> int:
        return len(self._token_to_id) + 2  # includes PAD and UNK

    def to_dict(self) -> dict[str, int]:
        return dict(self._token_to_id)

    def encode(self, text: str) -> tuple[int, ...]:
        """Character-level tokenization; unknown characters map to UNK."""
        return tuple(self._token_to_id.get(ch, UNK_ID) for ch in text if not ch.isspace())

    def content_hash(self) -> str:
        payload = json.dumps(self._token_to_id, ensure_ascii=False, sort_keys=True)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class EncoderConfig:
    """Shared dimensions for all encoders."""

    d: int = 128
    image_size: int = 64
    vocab_size: int = 2
    category_count: int = 14

    def __post_init__(self):
        if self.d < 1 or self.image_size < 8 or self.vocab_size < 2 or self.category_count < 1:
            raise ValueError(f"invalid encoder config: {self}")
        if self.image_size % 8 != 0:
            raise ValueError(f"image_size must be divisible by 8, got {self.image_size}")

    def to_json_obj(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json_obj(cls, obj: dict) -> "EncoderConfig":
        return cls(**obj)


# Default modality weights: palette generation leans on text, colorization
# leans on the image.
PALETTE_FUSION_WEIGHTS = (0.5, 0.4, 0.1)
COLORIZER_FUSION_WEIGHTS = (0.3, 0.6, 0.1)


@dataclass(frozen=True)
class FusionWeights:
    text: float
    image: float
    category: float

    def __post_init__(self):
        if min(self.text, self.image, self.category) < 0:
            raise ValueError(f"fusion weights must be non-negative: {self}")

    @classmethod
    def for_palette(cls) -> "FusionWeights":
        return cls(*PALETTE_FUSION_WEIGHTS)

    @classmethod
    def for_colorizer(cls) -> "FusionWeights":
        return cls(*COLORIZER_FUSION_WEIGHTS)


@dataclass(frozen=True)
class ContextInput:
    """Raw multi-modal condition: token ids, grayscale image, category id."""

    tokens: tuple[int, ...]
    image: np.ndarray
    category_id: int

    def __post_init__(self):
        image = np.asarray(self.image, dtype=np.float32)
        if image.ndim != 2:
            raise ValueError(f"context image must be 2-D grayscale, got shape {image.shape}")
        if image.size and (image.min() < 0.0 or image.max() > 1.0):
            raise ValueError("context image values must lie in [0, 1]")
        object.__setattr__(self, "tokens", tuple(int(t) for t in self.tokens))
        object.__setattr__(self, "image", image)


@dataclass(frozen=True)
class FusedContext:
    """Encoded condition: c1 (modality sum), c2 (palette prefix), y = [c1, c2]."""

    c1: torch.Tensor
    c2: torch.Tensor
    y: torch.Tensor


def fuse(weights: FusionWeights, e_text: torch.Tensor, e_image: torch.Tensor,
         e_category: torch.Tensor, c2: torch.Tensor) -> FusedContext:
    """c1 = lambda_text*E_text + lambda_image*E_image + lambda_category*E_category."""
    if not (e_text.shape == e_image.shape == e_category.shape == c2.shape):
        raise ValueError(
            f"encoder output shapes differ: {e_text.shape}, {e_image.shape}, "
            f"{e_category.shape}, {c2.shape}"
        )
    c1 = weights.text * e_text + weights.image * e_image + weights.category * e_category
    return FusedContext(c1=c1, c2=c2, y=torch.cat([c1, c2], dim=-1))


class TextEncoder(nn.Module):
    """Token embedding + masked mean pooling + one nonlinear projection."""

    def __init__(self, config: EncoderConfig):
        super().__init__()
        self.vocab_size = config.vocab_size
        self.embedding = nn.Embedding(config.vocab_size, config.d, padding_idx=PAD_ID)
        self.proj = nn.Linear(config.d, config.d)

    def forward(self, tokens: torch.Tensor) -> torch.Tensor:
        """tokens: (B, T) long tensor, PAD-padded. Empty rows encode to zero."""
        if tokens.numel() and (tokens.min() < 0 or tokens.max() >= self.vocab_size):
            raise ValueError(
                f"token id out of range [0, {self.vocab_size}): "
                f"{int(tokens.min())}..{int(tokens.max())}"
            )
        mask = (tokens != PAD_ID).unsqueeze(-1).to(self.embedding.weight.dtype)
        counts = mask.sum(dim=1)
        pooled = (self.embedding(tokens) * mask).sum(dim=1) / counts.clamp(min=1.0)
        has_tokens = (counts > 0).to(pooled.dtype)
        return torch.tanh(self.proj(pooled)) * has_tokens


class ImageEncoder(nn.Module):
    """Strided conv stack over the grayscale context image + linear projection."""

    def __init__(self, config: EncoderConfig):
        super().__init__()
        self.image_size = config.image_size
        self.convs = nn.Sequential(
            nn.Conv2d(1, 16, kernel_size=4, stride=2, padding=1),
            nn.LeakyReLU(0.2),
            nn.Conv2d(16, 32, kernel_size=4, stride=2, padding=1),
            nn.LeakyReLU(0.2),
            nn.Conv2d(32, 64, kernel_size=4, stride=2, padding=1),
            nn.LeakyReLU(0.2),
        )
        bottleneck = config.image_size // 8
        self.proj = nn.Linear(64 * bottleneck * bottleneck, config.d)

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        """images: (B, 1, S, S) with S = configured image size."""
        if images.ndim != 4 or images.shape[1] != 1:
            raise ValueError(f"expected (B, 1, S, S) images, got shape {tuple(images.shape)}")
        if images.shape[2] != self.image_size or images.shape[3] != self.image_size:
            raise ValueError(
                f"context image resolution {tuple(images.shape[2:])} != "
                f"configured {self.image_size}x{self.image_size}"
            )
        h = self.convs(images)
        return self.proj(h.flatten(start_dim=1))


class CategoryEncoder(nn.Module):
    """Embedding-table lookup over the closed category vocabulary."""

    def __init__(self, config: EncoderConfig):
        super().__init__()
        self.category_count = config.category_count
        self.embedding = nn.Embedding(config.category_count, config.d)

    def forward(self, ids: torch.Tensor) -> torch.Tensor:
        if ids.numel() and (ids.min() < 0 or ids.max() >= self.category_count):
            raise ValueError(
                f"category id out of range [0, {self.category_count}): "
                f"{int(ids.min())}..{int(ids.max())}"
            )
        return self.embedding(ids)


class PaletteEncoder(nn.Module):
    """Zero-padded flattened colors + presence mask, one nonlinear projection.

    With ``n_slots=4`` this encodes autoregressive prefixes (a full palette
    is never a prefix); with ``n_slots=5`` it encodes whole palettes for the
    colorization network.
    """

    def __init__(self, config: EncoderConfig, n_slots: int):
        super().__init__()
        self.n_slots = n_slots
        self.proj = nn.Linear(n_slots * 3 + n_slots, config.d)

    def forward(self, colors: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        """colors: (B, n_slots, 3) RGB zero-padded; mask: (B, n_slots) in {0, 1}."""
        if colors.shape[1] != self.n_slots or mask.shape[1] != self.n_slots:
            raise ValueError(f"expected {self.n_slots} color slots, got {colors.shape[1]}")
        features = torch.cat([colors.flatten(start_dim=1), mask], dim=-1)
        return torch.tanh(self.proj(features))


def prefix_to_tensors(
    prefix: list[Color], n_slots: int, dtype: torch.dtype = torch.float32
) -> tuple[torch.Tensor, torch.Tensor]:
    """A 0..n_slots color prefix to padded (1, n_slots, 3) colors + (1, n_slots) mask."""
    if len(prefix) > n_slots:
        raise ValueError(f"prefix of length {len(prefix)} exceeds {n_slots} slots")
    colors = torch.zeros(1, n_slots, 3, dtype=dtype)
    mask = torch.zeros(1, n_slots, dtype=dtype)
    for i, color in enumerate(prefix):
        rgb = convert(color, ColorSpace.RGB)
        colors[0, i] = torch.tensor(rgb.channels, dtype=dtype)
        mask[0, i] = 1.0
    return colors, mask


class ContextEncoder(nn.Module):
    """Bundles the four encoders and fusion weights into one conditioning module."""

    def __init__(self, config: EncoderConfig, weights: FusionWeights, palette_slots: int):
        super().__init__()
        self.config = config
        self.weights = weights
        self.text = TextEncoder(config)
        self.image = ImageEncoder(config)
        self.category = CategoryEncoder(config)
        self.palette = PaletteEncoder(config, n_slots=palette_slots)

    @property
    def y_dim(self) -> int:
        return 2 * self.config.d

    def forward(
        self,
        tokens: torch.Tensor,
        images: torch.Tensor,
        category_ids: torch.Tensor,
        palette_colors: torch.Tensor,
        palette_mask: torch.Tensor,
    ) -> FusedContext:
        return fuse(
            self.weights,
            self.text(tokens),
            self.image(images),
            self.category(category_ids),
            self.palette(palette_colors, palette_mask),
        )

    def encode_one(self, context: ContextInput, prefix: list[Color]) -> FusedContext:
        """Encode a single unbatched context + palette prefix."""
        dtype = self.palette.proj.weight.dtype
        tokens = torch.tensor([list(context.tokens)], dtype=torch.long) if context.tokens \
            else torch.zeros(1, 1, dtype=torch.long)
        images = torch.as_tensor(context.image, dtype=dtype).unsqueeze(0).unsqueeze(0)
        category_ids = torch.tensor([context.category_id], dtype=torch.long)
        colors, mask = prefix_to_tensors(prefix, self.palette.n_slots, dtype=dtype)
        return self.forward(tokens, images, category_ids, colors, mask)


def collate_contexts(
    contexts: list[ContextInput], dtype: torch.dtype = torch.float32
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Batch ContextInputs into (tokens, images, category_ids) tensors."""
    max_len = max((len(c.tokens) for c in contexts), default=0) or 1
    tokens = torch.full((len(contexts), max_len), PAD_ID, dtype=torch.long)
    for i, c in enumerate(contexts):
        if c.tokens:
            tokens[i, : len(c.tokens)] = torch.tensor(c.tokens, dtype=torch.long)
    images = torch.stack([torch.as_tensor(c.image, dtype=dtype) for c in contexts]).unsqueeze(1)
    category_ids = torch.tensor([c.category_id for c in contexts], dtype=torch.long)
    return tokens, images, category_ids


def collate_prefixes(
    prefixes: list[list[Color]], n_slots: int, dtype: torch.dtype = torch.float32
) -> tuple[torch.Tensor, torch.Tensor]:
    parts = [prefix_to_tensors(p, n_slots, dtype=dtype) for p in prefixes]
    return torch.cat([c for c, _ in parts]), torch.cat([m for _, m in parts])
