"""Walk an image folder, embed every decodable image, write one EMBF file.

Row order is the lexicographic sort of relative paths, so the id <-> row
mapping is reproducible across runs and machines; float payloads may vary
with hardware, ids and shape are the contract.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .embf import write_embf

logger = logging.getLogger("clide_embed")

IMAGE_SUFFIXES = {".jpg", ".jpeg", ".png", ".bmp", ".gif", ".webp", ".tif", ".tiff"}


@dataclass
class ExtractionManifest:
    model_id: str
    preprocessing: str
    embedding_dim: int
    out_path: str
    l2_normalized: bool = False
    images: list[str] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.images)

    def to_json(self) -> dict:
        return {
            "model_id": self.model_id,
            "preprocessing": self.preprocessing,
            "embedding_dim": self.embedding_dim,
            "out_path": self.out_path,
            "l2_normalized": self.l2_normalized,
            "n": self.n,
            "images": self.images,
            "skipped": self.skipped,
        }


def list_images(folder) -> list[str]:
    """Relative paths of all image files under ``folder``, sorted."""
    root = Path(folder)
    paths = [
        p.relative_to(root).as_posix()
        for p in root.rglob("*")
        if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES
    ]
    return sorted(paths)


def extract(
    folder, out, batch_size: int = 16, encoder=None, l2_normalize: bool = False
) -> ExtractionManifest:
    """Embed every image under ``folder`` into ``out`` (EMBF).

    Undecodable files are skipped with a warning and recorded in the
    manifest; a folder with no decodable image is an error. The manifest
    JSON is written next to the output file.

    ``l2_normalize`` rescales each row to unit norm before writing. Cosine
    neighbor selection downstream is indifferent to it, but the likelihood
    is not, so this is an explicit experiment toggle (off by default) and
    recorded in the manifest.
    """
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    if encoder is None:
        from .encoder import ClipEncoder

        encoder = ClipEncoder()

    root = Path(folder)
    if not root.is_dir():
        raise FileNotFoundError(f"not a directory: {folder}")
    candidates = list_images(root)
    if not candidates:
        raise ValueError(f"no image files under {folder}")

    manifest = ExtractionManifest(
        model_id=getattr(encoder, "model_id", type(encoder).__name__),
        preprocessing=getattr(encoder, "preprocessing", "unspecified"),
        embedding_dim=encoder.embedding_dim,
        out_path=str(out),
        l2_normalized=l2_normalize,
    )

    rows: list[np.ndarray] = []
    batch_images: list = []
    batch_paths: list[str] = []

    def flush():
        if not batch_images:
            return
        vectors = encoder.encode(batch_images)
        if vectors.shape != (len(batch_images), encoder.embedding_dim):
            raise RuntimeError(
                f"encoder returned shape {vectors.shape}, "
                f"expected ({len(batch_images)}, {encoder.embedding_dim})"
            )
        rows.append(np.asarray(vectors, dtype=np.float32))
        manifest.images.extend(batch_paths)
        for img in batch_images:
            img.close()
        batch_images.clear()
        batch_paths.clear()

    for rel in candidates:
        try:
            with Image.open(root / rel) as img:
                batch_images.append(img.convert("RGB"))
            batch_paths.append(rel)
        except (UnidentifiedImageError, OSError) as exc:
            logger.warning("skipping %s: %s", rel, exc)
            manifest.skipped.append(rel)
            continue
        if len(batch_images) >= batch_size:
            flush()
    flush()

    if not manifest.images:
        raise ValueError(f"no decodable images under {folder}")

    payload = np.vstack(rows)
    if l2_normalize:
        norms = np.linalg.norm(payload, axis=1, keepdims=True)
        if (norms == 0).any():
            raise ValueError("cannot normalize a zero-norm embedding row")
        payload = payload / norms
    write_embf(payload, manifest.images, out)
    with open(str(out) + ".manifest.json", "w", encoding="utf-8") as fh:
        fh.write(json.dumps(manifest.to_json(), indent=2) + "\n")
    return manifest
