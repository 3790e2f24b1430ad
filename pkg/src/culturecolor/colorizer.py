"""Palette-conditioned grayscale colorization GAN.

The generator predicts the Lab a,b chroma planes for a grayscale input;
the L plane is copied from the input (luminance preservation is a hard
constraint enforced through gamut mapping and quantization). Training uses
the same least-squares losses as the palette network, with the real/fake
"color" being the chroma planes, plus an optional L1 reconstruction term.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, asdict
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
from torch import nn

from culturecolor.colors import (
    CHANNEL_LUMINANCE_LUTS,
    ColorSpace,
    Palette,
    convert_palette,
    delta_e,
    lab_luminance_of_srgb_int,
    lab_to_linear_rgb,
    lab_to_rgb,
    linear_y_from_lab_l,
    rgb_to_lab,
)
from culturecolor.encoders import (
    ContextEncoder,
    ContextInput,
    EncoderConfig,
    FusionWeights,
    collate_contexts,
    collate_prefixes,
)
from culturecolor.palette_gan import loss_discriminator, loss_generator

logger = logging.getLogger(__name__)

AB_SCALE = 110.0  # tanh outputs scaled to Lab a,b units
PALETTE_SLOTS = 5  # the colorizer consumes the whole palette

# Luminance budget: stay well under the 0.1 L-unit (1e-3 normalized) contract.
_L_QUANT_TOLERANCE = 0.05


@dataclass(frozen=True)
class ColorizerConfig:
    alpha: float = 0.5
    noise_dim: int = 16
    base_channels: int = 32
    resolution: int = 128
    lr_g: float = 1e-3
    lr_d: float = 1e-3
    recon_weight: float = 10.0  # 0 disables the L1 term (pure LSGAN)
    batch_size: int = 8
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.resolution % 8 != 0 or self.resolution < 8:
            raise ValueError(f"resolution must be a positive multiple of 8, got {self.resolution}")
        if self.recon_weight < 0:
            raise ValueError(f"recon_weight must be non-negative, got {self.recon_weight}")

    def to_json_obj(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json_obj(cls, obj: dict) -> "ColorizerConfig":
        return cls(**obj)


class ChromaGenerator(nn.Module):
    """Conv encoder-decoder; context and noise are injected at the bottleneck."""

    def __init__(self, noise_dim: int, y_dim: int, base_channels: int, resolution: int):
        super().__init__()
        self.noise_dim = noise_dim
        self.resolution = resolution
        b = base_channels
        self.encoder = nn.Sequential(
            nn.Conv2d(1, b, 4, stride=2, padding=1),
            nn.LeakyReLU(0.2),
            nn.Conv2d(b, 2 * b, 4, stride=2, padding=1),
            nn.LeakyReLU(0.2),
            nn.Conv2d(2 * b, 4 * b, 4, stride=2, padding=1),
            nn.LeakyReLU(0.2),
        )
        self.condition = nn.Linear(y_dim + noise_dim, 4 * b)
        self.decoder = nn.Sequential(
            nn.ConvTranspose2d(8 * b, 2 * b, 4, stride=2, padding=1),
            nn.LeakyReLU(0.2),
            nn.ConvTranspose2d(2 * b, b, 4, stride=2, padding=1),
            nn.LeakyReLU(0.2),
            nn.ConvTranspose2d(b, 2, 4, stride=2, padding=1),
            nn.Tanh(),
        )

    def forward(self, gray: torch.Tensor, y: torch.Tensor, z: torch.Tensor) -> torch.Tensor:
        """gray: (B, 1, S, S); returns normalized chroma planes (B, 2, S, S)."""
        if gray.ndim != 4 or gray.shape[1] != 1:
            raise ValueError(f"expected (B, 1, S, S) grayscale, got {tuple(gray.shape)}")
        if gray.shape[2] != self.resolution or gray.shape[3] != self.resolution:
            raise ValueError(
                f"input resolution {tuple(gray.shape[2:])} != working "
                f"resolution {self.resolution}x{self.resolution}"
            )
        if z.shape[-1] != self.noise_dim:
            raise ValueError(f"noise dim {z.shape[-1]} != configured {self.noise_dim}")
        h = self.encoder(gray)
        cond = self.condition(torch.cat([y, z], dim=-1))
        cond = cond.unsqueeze(-1).unsqueeze(-1).expand(-1, -1, h.shape[2], h.shape[3])
        return self.decoder(torch.cat([h, cond], dim=1))


class ChromaDiscriminator(nn.Module):
    """Scores (L, a, b) planes against the fused context; linear head."""

    def __init__(self, y_dim: int, base_channels: int):
        super().__init__()
        b = base_channels
        self.convs = nn.Sequential(
            nn.Conv2d(3, b, 4, stride=2, padding=1),
            nn.LeakyReLU(0.2),
            nn.Conv2d(b, 2 * b, 4, stride=2, padding=1),
            nn.LeakyReLU(0.2),
            nn.Conv2d(2 * b, 4 * b, 4, stride=2, padding=1),
            nn.LeakyReLU(0.2),
            nn.AdaptiveAvgPool2d(1),
        )
        self.head = nn.Sequential(
            nn.Linear(4 * b + y_dim, 4 * b),
            nn.LeakyReLU(0.2),
            nn.Linear(4 * b, 1),
        )

    def forward(self, planes: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
        """planes: (B, 3, S, S) = grayscale L plus normalized chroma."""
        h = self.convs(planes).flatten(start_dim=1)
        return self.head(torch.cat([h, y], dim=-1)).squeeze(-1)


class Colorizer:
    """Context encoder + chroma generator + discriminator."""

    kind = "colorizer"

    def __init__(
        self,
        encoder_config: EncoderConfig,
        config: ColorizerConfig,
        fusion_weights: FusionWeights | None = None,
        vocabulary=None,
        category_names: list[str] | None = None,
    ):
        if category_names is not None and len(category_names) != encoder_config.category_count:
            raise ValueError(
                f"{len(category_names)} category names != configured count "
                f"{encoder_config.category_count}"
            )
        self.encoder_config = encoder_config
        self.config = config
        self.fusion_weights = fusion_weights or FusionWeights.for_colorizer()
        self.vocabulary = vocabulary
        self.category_names = list(category_names) if category_names else None
        torch.manual_seed(config.seed)
        self.encoder = ContextEncoder(encoder_config, self.fusion_weights, palette_slots=PALETTE_SLOTS)
        self.generator = ChromaGenerator(
            config.noise_dim, self.encoder.y_dim, config.base_channels, config.resolution
        )
        self.discriminator = ChromaDiscriminator(self.encoder.y_dim, config.base_channels)

    def config_obj(self) -> dict:
        return {
            "kind": self.kind,
            "encoder": self.encoder_config.to_json_obj(),
            "colorizer": self.config.to_json_obj(),
            "fusion_weights": asdict(self.fusion_weights),
            "categories": self.category_names,
        }

    def modules(self) -> dict[str, nn.Module]:
        return {"encoder": self.encoder, "generator": self.generator, "discriminator": self.discriminator}

    def eval_mode(self) -> "Colorizer":
        for module in self.modules().values():
            module.eval()
        return self

    def save(self, path) -> None:
        from culturecolor.checkpoint import save_checkpoint

        save_checkpoint(
            path,
            self.config_obj(),
            {name: module.state_dict() for name, module in self.modules().items()},
            vocab_hash=self.vocabulary.content_hash() if self.vocabulary else "",
            vocab_tokens=self.vocabulary.to_dict() if self.vocabulary else None,
        )

    @classmethod
    def load(cls, path) -> "Colorizer":
        from culturecolor.checkpoint import load_checkpoint
        from culturecolor.encoders import Vocabulary

        payload = load_checkpoint(path, expected_kind=cls.kind)
        config = payload["config"]
        vocab = Vocabulary(payload["vocab_tokens"]) if payload.get("vocab_tokens") else None
        model = cls(
            EncoderConfig.from_json_obj(config["encoder"]),
            ColorizerConfig.from_json_obj(config["colorizer"]),
            FusionWeights(**config["fusion_weights"]),
            vocabulary=vocab,
            category_names=config.get("categories"),
        )
        for name, module in model.modules().items():
            module.load_state_dict(payload["state"][name])
        return model.eval_mode()

    @property
    def version(self) -> str:
        from culturecolor.checkpoint import model_version

        return model_version(self.config_obj())

    def predict_chroma(self, gray_work: np.ndarray, palette: Palette,
                       context: ContextInput, seed: int = 0) -> np.ndarray:
        """Chroma planes (S, S, 2) in Lab units for a working-resolution input."""
        dtype = self.generator.condition.weight.dtype
        fused = self.encoder.encode_one(context, list(palette))
        rng = torch.Generator().manual_seed(int(seed))
        z = torch.randn(1, self.config.noise_dim, generator=rng, dtype=dtype)
        gray_t = torch.as_tensor(np.asarray(gray_work), dtype=dtype).reshape(
            1, 1, *np.asarray(gray_work).shape
        )
        with torch.no_grad():
            ab_norm = self.generator(gray_t, fused.y, z)[0]
        return ab_norm.permute(1, 2, 0).numpy().astype(np.float64) * AB_SCALE


# ---------------------------------------------------------------------------
# Gamut mapping and luminance-preserving quantization.
# ---------------------------------------------------------------------------

def fit_chroma_to_gamut(lab: np.ndarray, iters: int = 24) -> tuple[np.ndarray, np.ndarray]:
    """Scale each pixel's a,b toward 0 until sRGB-representable; L untouched.

    Returns the fitted Lab array and the per-pixel scale factors (1 where no
    reduction was needed). A scale always exists because (L, 0, 0) is in
    gamut for any L in [0, 100]. The bisection runs only over the
    out-of-gamut subset.
    """
    lab = np.asarray(lab, dtype=np.float64)
    flat = lab.reshape(-1, 3)

    def in_gamut(test):
        linear = lab_to_linear_rgb(test)
        return ((linear > -1e-9) & (linear < 1.0 + 1e-9)).all(axis=-1)

    scale = np.ones(len(flat))
    out = ~in_gamut(flat)
    if out.any():
        subset = flat[out]
        lo = np.zeros(len(subset))
        hi = np.ones(len(subset))
        for _ in range(iters):
            mid = (lo + hi) / 2.0
            test = np.concatenate([subset[:, :1], subset[:, 1:] * mid[:, None]], axis=-1)
            good = in_gamut(test)
            lo = np.where(good, mid, lo)
            hi = np.where(good, hi, mid)
        scale[out] = lo
    fitted = np.concatenate([flat[:, :1], flat[:, 1:] * scale[:, None]], axis=-1)
    return fitted.reshape(lab.shape), scale.reshape(lab.shape[:-1])


def _nearest_channel_value(lut: np.ndarray, wanted: np.ndarray) -> np.ndarray:
    """Index into a strictly increasing LUT whose value is closest to ``wanted``."""
    idx = np.searchsorted(lut, wanted)
    hi = np.clip(idx, 0, 255)
    lo = np.clip(idx - 1, 0, 255)
    pick_lo = np.abs(lut[lo] - wanted) <= np.abs(lut[hi] - wanted)
    return np.where(pick_lo, lo, hi)


def _solve_luminance_lattice(pix: np.ndarray, target_l: np.ndarray) -> np.ndarray:
    """Move integer RGB pixels to lattice points matching a target Lab L.

    Green (the dominant luminance channel) moves at most one step; red and
    then blue (the finest channel) are solved exactly in 1-D. Among the
    three green branches the closest L wins, with smaller total moves
    breaking near-ties to limit chroma drift.
    """
    lut_r, lut_g, lut_b = CHANNEL_LUMINANCE_LUTS
    y_target = linear_y_from_lab_l(target_l)
    best_cand = pix.copy()
    best_score = np.full(len(pix), np.inf)
    for dg in (0, -1, 1):
        g = np.clip(pix[:, 1] + dg, 0, 255)
        r = _nearest_channel_value(lut_r, y_target - lut_g[g] - lut_b[pix[:, 2]])
        b = _nearest_channel_value(lut_b, y_target - lut_g[g] - lut_r[r])
        cand = np.stack([r, g, b], axis=1)
        d_l = np.abs(lab_luminance_of_srgb_int(cand) - target_l)
        score = d_l * 1e4 + np.linalg.norm(cand - pix, axis=1)
        better = score < best_score
        best_cand[better] = cand[better]
        best_score = np.where(better, score, best_score)
    return best_cand


# Near gamut corners two channels pin at their bounds and no single-channel
# move is fine enough; an exhaustive small cube finds the multi-channel
# combination that is.
_CUBE_OFFSETS = np.array(
    [(dr, dg, db) for dr in range(-6, 7) for dg in range(-6, 7) for db in range(-6, 7)]
)
_CUBE_NORMS = np.linalg.norm(_CUBE_OFFSETS, axis=-1)


def _scan_cube(pix: np.ndarray, target_l: np.ndarray) -> np.ndarray:
    cand = np.clip(pix[:, None, :] + _CUBE_OFFSETS[None, :, :], 0, 255)
    d_l = np.abs(lab_luminance_of_srgb_int(cand) - target_l[:, None])
    best = np.argmin(d_l * 1e4 + _CUBE_NORMS[None, :], axis=1)
    return cand[np.arange(len(cand)), best]


def quantize_preserving_luminance(lab_target: np.ndarray) -> np.ndarray:
    """In-gamut Lab to uint8 sRGB whose decoded L stays within tolerance.

    Plain rounding can move L by up to ~0.25 L units; offending pixels are
    re-solved on the uint8 lattice.
    """
    lab_target = np.asarray(lab_target, dtype=np.float64)
    target_l = lab_target[..., 0]
    q = np.clip(np.round(lab_to_rgb(lab_target) * 255.0), 0, 255).astype(np.int64)
    for fix in (_solve_luminance_lattice, _scan_cube):
        bad = np.abs(lab_luminance_of_srgb_int(q) - target_l) > _L_QUANT_TOLERANCE
        if not bad.any():
            break
        q[bad] = fix(q[bad], target_l[bad])
    return q.astype(np.uint8)


@dataclass(frozen=True)
class ColorizedImage:
    """Colorization result: float Lab/RGB planes plus the 8-bit wire image."""

    lab: np.ndarray
    rgb: np.ndarray
    rgb_uint8: np.ndarray
    chroma_clipped_fraction: float

    @property
    def shape(self) -> tuple[int, int]:
        return self.lab.shape[0], self.lab.shape[1]

    def png_bytes(self) -> bytes:
        from culturecolor.imaging import encode_png

        return encode_png(self.rgb_uint8)


def colorize(
    model: Colorizer,
    gray: np.ndarray,
    palette: Palette,
    context: ContextInput,
    seed: int = 0,
) -> ColorizedImage:
    """Colorize a grayscale image (values in [0, 1], any size) with a palette.

    The image is resized to the working resolution for chroma prediction;
    chroma is upscaled back so the output matches the input size, and the
    L plane is the input grayscale scaled to Lab L.
    """
    from culturecolor.imaging import resize_gray, upscale_nearest

    gray = np.asarray(gray, dtype=np.float64)
    if gray.ndim != 2 or gray.size == 0:
        raise ValueError(f"expected a non-empty (H, W) grayscale array, got shape {gray.shape}")
    if gray.min() < 0.0 or gray.max() > 1.0:
        raise ValueError("grayscale values must lie in [0, 1]")
    palette = convert_palette(palette, ColorSpace.RGB)

    resolution = model.config.resolution
    gray_work = gray if gray.shape == (resolution, resolution) else resize_gray(gray, resolution)
    ab_work = model.predict_chroma(gray_work, palette, context, seed=seed)
    ab = ab_work if ab_work.shape[:2] == gray.shape else upscale_nearest(ab_work, gray.shape)

    lab = np.concatenate([gray[..., None] * 100.0, ab], axis=-1)
    fitted, scale = fit_chroma_to_gamut(lab)
    rgb = lab_to_rgb(fitted)
    rgb_uint8 = quantize_preserving_luminance(fitted)
    clipped = float((scale < 1.0 - 1e-9).mean())
    if clipped > 0.5:
        logger.warning("chroma reduced on %.0f%% of pixels to stay in gamut", clipped * 100.0)
    return ColorizedImage(
        lab=fitted,
        rgb=rgb,
        rgb_uint8=rgb_uint8,
        chroma_clipped_fraction=clipped,
    )


def palette_adherence(rgb_image: np.ndarray, palette: Palette, threshold: float = 25.0) -> float:
    """Fraction of pixels within ``threshold`` deltaE76 of their nearest palette color."""
    rgb_image = np.asarray(rgb_image, dtype=np.float64)
    if rgb_image.ndim != 3 or rgb_image.shape[-1] != 3:
        raise ValueError(f"expected (H, W, 3) RGB image, got shape {rgb_image.shape}")
    lab = rgb_to_lab(rgb_image).reshape(-1, 3)
    palette_lab = rgb_to_lab(convert_palette(palette, ColorSpace.RGB).to_array())
    nearest = delta_e(lab[:, None, :], palette_lab[None, :, :]).min(axis=1)
    return float((nearest < threshold).mean())


# ---------------------------------------------------------------------------
# Training.
# ---------------------------------------------------------------------------

# One example: (context, palette, working-res grayscale, normalized target chroma).
ColorizerExample = tuple[ContextInput, Palette, np.ndarray, np.ndarray]


def colorizer_examples_from_records(
    records,
    vocabulary,
    category_vocab,
    encoder_image_size: int,
    resolution: int,
    image_loader=None,
) -> list[ColorizerExample]:
    """Build training examples; targets are the images' own chroma planes."""
    from culturecolor.imaging import load_image, resize_gray, resize_rgb

    image_loader = image_loader or load_image
    examples = []
    for record in records:
        rgb = resize_rgb(image_loader(record.image_ref), resolution)
        lab = rgb_to_lab(rgb)
        gray = np.clip(lab[..., 0] / 100.0, 0.0, 1.0)
        ab_norm = np.clip(lab[..., 1:] / AB_SCALE, -1.0, 1.0)
        context = ContextInput(
            tokens=vocabulary.encode(" ".join(record.keywords)),
            image=resize_gray(gray, encoder_image_size),
            category_id=category_vocab.id_of(record.category),
        )
        examples.append((context, record.palette, gray, ab_norm))
    return examples


def _colorizer_batch(model: Colorizer, batch: Sequence[ColorizerExample]):
    dtype = model.generator.condition.weight.dtype
    contexts = [ctx for ctx, _, _, _ in batch]
    tokens, images, categories = collate_contexts(contexts, dtype=dtype)
    palettes = [list(convert_palette(pal, ColorSpace.RGB)) for _, pal, _, _ in batch]
    colors, mask = collate_prefixes(palettes, PALETTE_SLOTS, dtype=dtype)
    gray = torch.stack([torch.as_tensor(g, dtype=dtype) for _, _, g, _ in batch]).unsqueeze(1)
    real_ab = torch.stack(
        [torch.as_tensor(ab, dtype=dtype).permute(2, 0, 1) for _, _, _, ab in batch]
    )
    return tokens, images, categories, colors, mask, gray, real_ab


def train_step_colorizer(
    model: Colorizer,
    batch: Sequence[ColorizerExample],
    opt_d: torch.optim.Optimizer,
    opt_g: torch.optim.Optimizer,
    noise_rng: torch.Generator,
) -> tuple[float, float, float]:
    """One D update then one G update; returns (L_D, L_G, recon)."""
    cfg = model.config
    tokens, images, categories, colors, mask, gray, real_ab = _colorizer_batch(model, batch)
    dtype = real_ab.dtype

    opt_d.zero_grad()
    fused = model.encoder(tokens, images, categories, colors, mask)
    z = torch.randn(len(batch), cfg.noise_dim, generator=noise_rng, dtype=dtype)
    with torch.no_grad():
        fake_ab = model.generator(gray, fused.y.detach(), z)
    d_loss = loss_discriminator(
        model.discriminator(torch.cat([gray, real_ab], dim=1), fused.y),
        model.discriminator(torch.cat([gray, fake_ab], dim=1), fused.y),
        cfg.alpha,
    )
    if not torch.isfinite(d_loss):
        raise FloatingPointError(f"discriminator loss diverged: {float(d_loss)}")
    d_loss.backward()
    opt_d.step()

    opt_g.zero_grad()
    with torch.no_grad():
        fused = model.encoder(tokens, images, categories, colors, mask)
    z = torch.randn(len(batch), cfg.noise_dim, generator=noise_rng, dtype=dtype)
    fake_ab = model.generator(gray, fused.y, z)
    g_loss = loss_generator(model.discriminator(torch.cat([gray, fake_ab], dim=1), fused.y), cfg.alpha)
    recon = torch.nn.functional.l1_loss(fake_ab, real_ab)
    total = g_loss + cfg.recon_weight * recon
    if not torch.isfinite(total):
        raise FloatingPointError(f"generator loss diverged: {float(total)}")
    total.backward()
    opt_g.step()

    return float(d_loss.detach()), float(g_loss.detach()), float(recon.detach())


def train_colorizer(
    model: Colorizer,
    examples: Sequence[ColorizerExample],
    steps: int,
    log_path: str | Path | None = None,
) -> list[dict]:
    """LSGAN colorizer training; deterministic for a fixed config seed."""
    if not examples:
        raise ValueError("no training examples")
    cfg = model.config
    # beta1 = 0.5 damps the oscillation adversarial training is prone to.
    opt_d = torch.optim.Adam(
        list(model.discriminator.parameters()) + list(model.encoder.parameters()),
        lr=cfg.lr_d, betas=(0.5, 0.999),
    )
    opt_g = torch.optim.Adam(model.generator.parameters(), lr=cfg.lr_g, betas=(0.5, 0.999))
    batch_rng = np.random.default_rng(cfg.seed)
    noise_rng = torch.Generator().manual_seed(cfg.seed)

    history = []
    log_file = open(log_path, "w", encoding="utf-8") if log_path else None
    try:
        for step in range(steps):
            picks = batch_rng.integers(0, len(examples), size=min(cfg.batch_size, len(examples)))
            batch = [examples[i] for i in picks]
            d_loss, g_loss, recon = train_step_colorizer(model, batch, opt_d, opt_g, noise_rng)
            entry = {"step": step, "L_D": d_loss, "L_G": g_loss, "recon": recon}
            history.append(entry)
            if log_file:
                log_file.write(json.dumps(entry) + "\n")
    finally:
        if log_file:
            log_file.close()
    return history
