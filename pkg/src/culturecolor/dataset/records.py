"""Dataset records, category vocabulary, and JSONL load/store.

Wire format is one JSON object per line:
``{"image": str, "palette": ["#RRGGBB" x 5], "keywords": [str], "category": str}``.
"""

from __future__ import annotations

import json
import logging
import unicodedata
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from culturecolor.colors import Palette

logger = logging.getLogger(__name__)

# The corpus this toolkit was built around uses 14 style categories.
DEFAULT_CATEGORIES = [
    "punk",
    "hiphop",
    "techno",
    "indie",
    "rock",
    "rap",
    "electronic",
    "street",
    "skateboard",
    "anime",
    "gaming",
    "graffiti",
    "cyberpunk",
    "vaporwave",
]


def clean_keywords(keywords: Iterable[str]) -> tuple[str, ...]:
    """Normalize keywords: NFC, lowercase, punctuation stripped, empties dropped."""
    cleaned = []
    for word in keywords:
        word = unicodedata.normalize("NFC", str(word)).lower()
        word = "".join(ch for ch in word if not unicodedata.category(ch).startswith("P"))
        word = word.strip()
        if word:
            cleaned.append(word)
    return tuple(cleaned)


class CategoryVocabulary:
    """Ordered, closed set of category names with stable integer ids."""

    def __init__(self, categories: Iterable[str]):
        names = [str(c) for c in categories]
        if len(names) != len(set(names)):
            raise ValueError("duplicate category names")
        if not names:
            raise ValueError("category vocabulary is empty")
        self._names = names
        self._ids = {name: i for i, name in enumerate(names)}

    @classmethod
    def default(cls) -> "CategoryVocabulary":
        return cls(DEFAULT_CATEGORIES)

    @classmethod
    def load(cls, path: str | Path) -> "CategoryVocabulary":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(data, list):
            raise ValueError(f"category vocabulary file must be a JSON array: {path}")
        return cls(data)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self._names, ensure_ascii=False, indent=2), encoding="utf-8")

    @property
    def names(self) -> list[str]:
        return list(self._names)

    def __len__(self) -> int:
        return len(self._names)

    def __contains__(self, name: str) -> bool:
        return name in self._ids

    def id_of(self, name: str) -> int:
        if name not in self._ids:
            raise ValueError(f"unknown category: {name!r} (known: {self._names})")
        return self._ids[name]

    def name_of(self, index: int) -> str:
        if not 0 <= index < len(self._names):
            raise ValueError(f"category id {index} out of range [0, {len(self._names)})")
        return self._names[index]


@dataclass(frozen=True)
class DatasetRecord:
    """One training example: image reference, curated palette, keywords, category."""

    image_ref: str
    palette: Palette
    keywords: tuple[str, ...]
    category: str

    def __post_init__(self):
        keywords = clean_keywords(self.keywords)
        if not keywords:
            raise ValueError(f"record {self.image_ref!r}: no keywords left after cleaning")
        object.__setattr__(self, "keywords", keywords)

    def validate_category(self, vocabulary: CategoryVocabulary) -> None:
        if self.category not in vocabulary:
            raise ValueError(f"record {self.image_ref!r}: unknown category {self.category!r}")

    def to_json_obj(self) -> dict:
        return {
            "image": self.image_ref,
            "palette": self.palette.to_hex(),
            "keywords": list(self.keywords),
            "category": self.category,
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "DatasetRecord":
        missing = {"image", "palette", "keywords", "category"} - set(obj)
        if missing:
            raise ValueError(f"missing fields: {sorted(missing)}")
        palette = obj["palette"]
        if not isinstance(palette, list) or len(palette) != 5:
            raise ValueError(f"palette length must be 5, got {len(palette) if isinstance(palette, list) else type(palette).__name__}")
        return cls(
            image_ref=str(obj["image"]),
            palette=Palette.from_hex(palette),
            keywords=tuple(obj["keywords"]),
            category=str(obj["category"]),
        )


def load_dataset(
    path: str | Path,
    vocabulary: CategoryVocabulary | None = None,
    strict: bool = True,
) -> tuple[list[DatasetRecord], list[tuple[int, str]]]:
    """Load a JSONL dataset file.

    Returns ``(records, errors)`` where errors is a list of
    ``(line_number, message)``. With ``strict`` the first invalid record
    raises; otherwise invalid lines are logged and skipped.
    """
    vocabulary = vocabulary or CategoryVocabulary.default()
    records: list[DatasetRecord] = []
    errors: list[tuple[int, str]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                record = DatasetRecord.from_json_obj(obj)
                record.validate_category(vocabulary)
            except (ValueError, json.JSONDecodeError) as exc:
                message = f"line {lineno}: {exc}"
                if strict:
                    raise ValueError(f"{path}: {message}") from exc
                logger.warning("skipping invalid record (%s)", message)
                errors.append((lineno, str(exc)))
                continue
            records.append(record)
    return records, errors


def save_dataset(records: Iterable[DatasetRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record.to_json_obj(), ensure_ascii=False) + "\n")
