"""Single-file model checkpoints, versioned by a hash of their config.

A checkpoint bundles the config JSON, all parameter tensors, and the
vocabulary hash. Loading recomputes the config hash and refuses to
proceed on mismatch.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import torch

FORMAT_VERSION = 1


def config_hash(config_obj: dict) -> str:
    payload = json.dumps(config_obj, sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def model_version(config_obj: dict) -> str:
    """Short version tag derived from the config hash."""
    return config_hash(config_obj)[:12]


def save_checkpoint(
    path: str | Path,
    config_obj: dict,
    state_dicts: dict[str, dict],
    vocab_hash: str = "",
    vocab_tokens: dict[str, int] | None = None,
) -> None:
    payload = {
        "format_version": FORMAT_VERSION,
        "config": config_obj,
        "config_hash": config_hash(config_obj),
        "vocab_hash": vocab_hash,
        "vocab_tokens": vocab_tokens,
        "state": state_dicts,
    }
    torch.save(payload, str(path))


def load_checkpoint(path: str | Path, expected_kind: str | None = None) -> dict:
    """Load and verify a checkpoint; raises ValueError on any mismatch."""
    payload = torch.load(str(path), map_location="cpu", weights_only=True)
    if payload.get("format_version") != FORMAT_VERSION:
        raise ValueError(
            f"{path}: unsupported checkpoint format {payload.get('format_version')!r}"
        )
    stored = payload.get("config_hash")
    actual = config_hash(payload["config"])
    if stored != actual:
        raise ValueError(f"{path}: config hash mismatch (stored {stored}, computed {actual})")
    if expected_kind is not None and payload["config"].get("kind") != expected_kind:
        raise ValueError(
            f"{path}: checkpoint kind {payload['config'].get('kind')!r} != expected {expected_kind!r}"
        )
    if payload.get("vocab_tokens") is not None:
        from culturecolor.encoders import Vocabulary

        if Vocabulary(payload["vocab_tokens"]).content_hash() != payload.get("vocab_hash"):
            raise ValueError(f"{path}: vocabulary hash mismatch")
    return payload
