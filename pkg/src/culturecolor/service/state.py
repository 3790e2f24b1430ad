"""Server-side state: sessions, the durable feedback log, model snapshots."""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from culturecolor.colors import Palette
from culturecolor.colorizer import Colorizer
from culturecolor.encoders import ContextInput
from culturecolor.palette_gan import PaletteGan


@dataclass
class Session:
    session_id: str
    text: str
    category: str
    image_sha256: str
    gray_full: np.ndarray
    context: ContextInput
    original_palette: Palette
    model_version: str
    adjusted_palette: Palette | None = None
    created_at: float = field(default_factory=time.time)

    @property
    def active_palette(self) -> Palette:
        return self.adjusted_palette or self.original_palette


class SessionStore:
    """In-memory TTL session store; sessions are losable, feedback is not."""

    def __init__(self, ttl_seconds: float = 3600.0):
        self.ttl = ttl_seconds
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def _prune(self) -> None:
        cutoff = time.time() - self.ttl
        for key in [k for k, s in self._sessions.items() if s.created_at < cutoff]:
            del self._sessions[key]

    def create(self, **kwargs) -> Session:
        session = Session(session_id=uuid.uuid4().hex, **kwargs)
        with self._lock:
            self._prune()
            self._sessions[session.session_id] = session
        return session

    def get(self, session_id: str) -> Session | None:
        with self._lock:
            self._prune()
            return self._sessions.get(session_id)

    def set_adjusted(self, session_id: str, palette: Palette) -> None:
        with self._lock:
            self._sessions[session_id].adjusted_palette = palette


class FeedbackLog:
    """Append-only JSONL of palette adjustments; images stored by content hash."""

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.path = self.data_dir / "feedback.jsonl"
        self.images_dir = self.data_dir / "images"
        self.images_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def store_image(self, png_bytes: bytes) -> str:
        sha = hashlib.sha256(png_bytes).hexdigest()
        target = self.images_dir / f"{sha}.png"
        if not target.exists():
            target.write_bytes(png_bytes)
        return sha

    def append(self, session: Session, adjusted: Palette) -> dict:
        """Write one feedback line durably (flush + fsync) before returning."""
        record = {
            "session_id": session.session_id,
            "original_palette": session.original_palette.to_hex(),
            "adjusted_palette": adjusted.to_hex(),
            "context": {
                "text": session.text,
                "category": session.category,
                "image_sha256": session.image_sha256,
            },
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
            "model_version": session.model_version,
        }
        line = json.dumps(record, ensure_ascii=False) + "\n"
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line)
                fh.flush()
                os.fsync(fh.fileno())
        return record


class ModelRegistry:
    """Holds immutable model snapshots; reloads swap attributes atomically."""

    def __init__(self):
        self.palette_model: PaletteGan | None = None
        self.colorizer_model: Colorizer | None = None

    def load_palette(self, path: str | Path) -> None:
        self.palette_model = PaletteGan.load(path)

    def load_colorizer(self, path: str | Path) -> None:
        self.colorizer_model = Colorizer.load(path)
