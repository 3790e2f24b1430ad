"""Autoregressive conditional GAN for 5-color palette generation.

The generator proposes the next palette color from noise plus the fused
multi-modal context (which includes the colors already emitted); the
discriminator scores whether a color is a plausible next color for that
context. Both are trained with least-squares losses:

    L_D = alpha * (D(x, y) - 1)^2 + (1 - alpha) * D(G(z, y), y)^2
    L_G = alpha * (D(G(z, y), y) - 1)^2

Training batches are teacher-forced: prefixes come from ground-truth
palettes, one (example, step) pair per sample.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import torch
from torch import nn

from culturecolor.colors import Color, ColorSpace, Palette, convert
from culturecolor.encoders import (
    ContextEncoder,
    ContextInput,
    EncoderConfig,
    FusionWeights,
    collate_contexts,
    collate_prefixes,
)

PREFIX_SLOTS = 4  # a full palette is never a prefix


@dataclass(frozen=True)
class GanConfig:
    """Training hyperparameters; alpha balances the two LSGAN loss terms."""

    alpha: float = 0.5
    noise_dim: int = 16
    hidden_dim: int = 64
    lr_g: float = 1e-3
    lr_d: float = 1e-3
    batch_size: int = 32
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.noise_dim < 1 or self.hidden_dim < 1 or self.batch_size < 1:
            raise ValueError(f"invalid GAN config: {self}")

    def to_json_obj(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json_obj(cls, obj: dict) -> "GanConfig":
        return cls(**obj)


def _check_alpha(alpha: float) -> None:
    if not 0.0 < float(alpha) < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")


def loss_discriminator(score_real, score_fake, alpha: float):
    """alpha*(D_real - 1)^2 + (1-alpha)*D_fake^2, mean-reduced over batches."""
    _check_alpha(alpha)
    real_term = (score_real - 1.0) ** 2
    fake_term = score_fake**2
    if isinstance(real_term, torch.Tensor) or isinstance(fake_term, torch.Tensor):
        real_term = torch.as_tensor(real_term).mean()
        fake_term = torch.as_tensor(fake_term).mean()
    return alpha * real_term + (1.0 - alpha) * fake_term


def loss_generator(score_fake, alpha: float):
    """alpha*(D_fake - 1)^2, mean-reduced over batches."""
    _check_alpha(alpha)
    term = (score_fake - 1.0) ** 2
    if isinstance(term, torch.Tensor):
        term = term.mean()
    return alpha * term


class ColorGenerator(nn.Module):
    """3-layer MLP from (noise, context) to an RGB color in [0, 1]^3."""

    def __init__(self, noise_dim: int, y_dim: int, hidden_dim: int):
        super().__init__()
        self.noise_dim = noise_dim
        self.net = nn.Sequential(
            nn.Linear(noise_dim + y_dim, hidden_dim),
            nn.LeakyReLU(0.2),
            nn.Linear(hidden_dim, hidden_dim),
            nn.LeakyReLU(0.2),
            nn.Linear(hidden_dim, 3),
            nn.Sigmoid(),
        )

    def forward(self, z: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
        if z.shape[-1] != self.noise_dim:
            raise ValueError(f"noise dim {z.shape[-1]} != configured {self.noise_dim}")
        if z.shape[0] != y.shape[0]:
            raise ValueError(f"batch mismatch: z {z.shape[0]} vs y {y.shape[0]}")
        return self.net(torch.cat([z, y], dim=-1))


class NextColorDiscriminator(nn.Module):
    """3-layer MLP scoring (color, context); linear output head (LSGAN)."""

    def __init__(self, y_dim: int, hidden_dim: int):
        super().__init__()
        self.net = nn.Sequential(
            nn.Linear(3 + y_dim, hidden_dim),
            nn.LeakyReLU(0.2),
            nn.Linear(hidden_dim, hidden_dim),
            nn.LeakyReLU(0.2),
            nn.Linear(hidden_dim, 1),
        )

    def forward(self, x: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
        if x.shape[-1] != 3:
            raise ValueError(f"color input must have 3 channels, got {x.shape[-1]}")
        if x.shape[0] != y.shape[0]:
            raise ValueError(f"batch mismatch: x {x.shape[0]} vs y {y.shape[0]}")
        return self.net(torch.cat([x, y], dim=-1)).squeeze(-1)


class PaletteGan:
    """Context encoder + generator + discriminator for next-color prediction."""

    kind = "palette_gan"

    def __init__(
        self,
        encoder_config: EncoderConfig,
        gan_config: GanConfig,
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
        self.gan_config = gan_config
        self.fusion_weights = fusion_weights or FusionWeights.for_palette()
        self.vocabulary = vocabulary
        self.category_names = list(category_names) if category_names else None
        torch.manual_seed(gan_config.seed)
        self.encoder = ContextEncoder(encoder_config, self.fusion_weights, palette_slots=PREFIX_SLOTS)
        self.generator = ColorGenerator(gan_config.noise_dim, self.encoder.y_dim, gan_config.hidden_dim)
        self.discriminator = NextColorDiscriminator(self.encoder.y_dim, gan_config.hidden_dim)

    def config_obj(self) -> dict:
        return {
            "kind": self.kind,
            "encoder": self.encoder_config.to_json_obj(),
            "gan": self.gan_config.to_json_obj(),
            "fusion_weights": asdict(self.fusion_weights),
            "categories": self.category_names,
        }

    def modules(self) -> dict[str, nn.Module]:
        return {"encoder": self.encoder, "generator": self.generator, "discriminator": self.discriminator}

    def eval_mode(self) -> "PaletteGan":
        for module in self.modules().values():
            module.eval()
        return self

    def generator_forward(self, z: torch.Tensor, y: torch.Tensor) -> Color:
        """Single-sample convenience wrapper returning a Color."""
        with torch.no_grad():
            rgb = self.generator(z.reshape(1, -1), y.reshape(1, -1))[0]
        return Color.rgb(*(float(v) for v in rgb))

    def discriminator_forward(self, x: Color, y: torch.Tensor) -> float:
        rgb = convert(x, ColorSpace.RGB)
        xt = torch.tensor([rgb.channels], dtype=y.dtype)
        with torch.no_grad():
            return float(self.discriminator(xt, y.reshape(1, -1))[0])

    def sample_palette(self, context: ContextInput, seed: int = 0) -> Palette:
        """Autoregressively emit 5 colors; deterministic for a fixed seed."""
        rng = torch.Generator().manual_seed(int(seed))
        prefix: list[Color] = []
        with torch.no_grad():
            for _ in range(5):
                fused = self.encoder.encode_one(context, prefix)
                z = torch.randn(1, self.gan_config.noise_dim, generator=rng,
                                dtype=self.generator.net[0].weight.dtype)
                rgb = self.generator(z, fused.y)[0]
                prefix.append(Color.rgb(*(float(v) for v in rgb)))
        return Palette(tuple(prefix))

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
    def load(cls, path) -> "PaletteGan":
        from culturecolor.checkpoint import load_checkpoint
        from culturecolor.encoders import Vocabulary

        payload = load_checkpoint(path, expected_kind=cls.kind)
        config = payload["config"]
        vocab = Vocabulary(payload["vocab_tokens"]) if payload.get("vocab_tokens") else None
        model = cls(
            EncoderConfig.from_json_obj(config["encoder"]),
            GanConfig.from_json_obj(config["gan"]),
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


# ---------------------------------------------------------------------------
# Training.
# ---------------------------------------------------------------------------

TrainingExample = tuple[ContextInput, Palette]
# One teacher-forced sample: the prefix is palette[:t], the target palette[t].
TrainingTriple = tuple[ContextInput, Palette, int]


def expand_to_steps(examples: Sequence[TrainingExample]) -> list[TrainingTriple]:
    """Every (context, palette) example becomes five next-color prediction steps."""
    return [(ctx, pal, t) for ctx, pal in examples for t in range(5)]


def _batch_tensors(model: PaletteGan, batch: Sequence[TrainingTriple]):
    contexts = [ctx for ctx, _, _ in batch]
    dtype = model.generator.net[0].weight.dtype
    tokens, images, categories = collate_contexts(contexts, dtype=dtype)
    prefixes, targets = [], []
    for ctx, palette, t in batch:
        if not 0 <= t <= 4:
            raise ValueError(f"step index {t} outside 0..4")
        rgb_palette = [convert(c, ColorSpace.RGB) for c in palette]
        prefixes.append(rgb_palette[:t])
        targets.append(rgb_palette[t].channels)
    colors, mask = collate_prefixes(prefixes, PREFIX_SLOTS, dtype=dtype)
    x = torch.tensor(targets, dtype=dtype)
    return tokens, images, categories, colors, mask, x


def train_step(
    model: PaletteGan,
    batch: Sequence[TrainingTriple],
    opt_d: torch.optim.Optimizer,
    opt_g: torch.optim.Optimizer,
    noise_rng: torch.Generator,
) -> tuple[float, float]:
    """One discriminator update then one generator update on a batch.

    The context encoder is trained with the discriminator; the generator
    consumes the fused context as a fixed input in its own step.
    """
    alpha = model.gan_config.alpha
    tokens, images, categories, colors, mask, x = _batch_tensors(model, batch)
    dtype = x.dtype

    # Discriminator (and encoder) step.
    opt_d.zero_grad()
    fused = model.encoder(tokens, images, categories, colors, mask)
    z = torch.randn(len(batch), model.gan_config.noise_dim, generator=noise_rng, dtype=dtype)
    with torch.no_grad():
        fake = model.generator(z, fused.y.detach())
    d_loss = loss_discriminator(
        model.discriminator(x, fused.y), model.discriminator(fake, fused.y), alpha
    )
    if not torch.isfinite(d_loss):
        raise FloatingPointError(f"discriminator loss diverged: {float(d_loss)}")
    d_loss.backward()
    opt_d.step()

    # Generator step on the refreshed (frozen) context encoding.
    opt_g.zero_grad()
    with torch.no_grad():
        fused = model.encoder(tokens, images, categories, colors, mask)
    z = torch.randn(len(batch), model.gan_config.noise_dim, generator=noise_rng, dtype=dtype)
    g_loss = loss_generator(model.discriminator(model.generator(z, fused.y), fused.y), alpha)
    if not torch.isfinite(g_loss):
        raise FloatingPointError(f"generator loss diverged: {float(g_loss)}")
    g_loss.backward()
    opt_g.step()

    return float(d_loss.detach()), float(g_loss.detach())


def train_palette_gan(
    model: PaletteGan,
    examples: Sequence[TrainingExample],
    steps: int,
    log_path: str | Path | None = None,
) -> list[dict]:
    """Alternating 1:1 LSGAN training over teacher-forced next-color batches.

    Fully deterministic for a fixed ``model.gan_config.seed``. Returns (and
    optionally logs as JSONL) per-step loss records.
    """
    if not examples:
        raise ValueError("no training examples")
    config = model.gan_config
    triples = expand_to_steps(examples)
    # beta1 = 0.5 damps the oscillation adversarial training is prone to.
    opt_d = torch.optim.Adam(
        list(model.discriminator.parameters()) + list(model.encoder.parameters()),
        lr=config.lr_d, betas=(0.5, 0.999),
    )
    opt_g = torch.optim.Adam(model.generator.parameters(), lr=config.lr_g, betas=(0.5, 0.999))
    batch_rng = np.random.default_rng(config.seed)
    noise_rng = torch.Generator().manual_seed(config.seed)

    history = []
    log_file = open(log_path, "w", encoding="utf-8") if log_path else None
    try:
        for step in range(steps):
            picks = batch_rng.integers(0, len(triples), size=min(config.batch_size, len(triples)))
            batch = [triples[i] for i in picks]
            d_loss, g_loss = train_step(model, batch, opt_d, opt_g, noise_rng)
            entry = {"step": step, "L_D": d_loss, "L_G": g_loss}
            history.append(entry)
            if log_file:
                log_file.write(json.dumps(entry) + "\n")
    finally:
        if log_file:
            log_file.close()
    return history


def examples_from_records(
    records: Iterable,
    vocabulary,
    category_vocab,
    image_size: int,
    image_loader=None,
) -> list[TrainingExample]:
    """Build (ContextInput, Palette) training pairs from dataset records."""
    from culturecolor.imaging import load_image, resize_gray, to_grayscale

    image_loader = image_loader or (lambda ref: to_grayscale(load_image(ref)))
    examples = []
    for record in records:
        gray = resize_gray(image_loader(record.image_ref), image_size)
        tokens = vocabulary.encode(" ".join(record.keywords))
        context = ContextInput(
            tokens=tokens, image=gray, category_id=category_vocab.id_of(record.category)
        )
        examples.append((context, record.palette))
    return examples
