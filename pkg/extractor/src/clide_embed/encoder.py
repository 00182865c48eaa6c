"""Image encoders producing fixed-width embedding rows.

The production encoder is CLIP ViT-L/14 via transformers, loaded lazily so
the package imports without torch installed. Anything with an
``embedding_dim`` and an ``encode(images) -> (n, d) float32`` works, which
is how tests substitute a deterministic stand-in.
"""

from __future__ import annotations

import numpy as np

CLIP_MODEL_ID = "openai/clip-vit-large-patch14"


class ClipEncoder:
    """CLIP image tower; emits raw (unnormalized) 768-d image features.

    Cosine selection downstream is normalization-invariant, so the vectors
    are stored as the encoder produces them.
    """

    embedding_dim = 768

    def __init__(self, model_id: str = CLIP_MODEL_ID, device: str = "cpu"):
        import torch
        from transformers import CLIPModel, CLIPProcessor

        self.model_id = model_id
        self._torch = torch
        self._device = device
        self._model = CLIPModel.from_pretrained(model_id).to(device).eval()
        self._processor = CLIPProcessor.from_pretrained(model_id)
        width = int(self._model.config.projection_dim)
        if width != self.embedding_dim:
            raise RuntimeError(
                f"{model_id} produces {width}-d embeddings, expected {self.embedding_dim}"
            )

    @property
    def preprocessing(self) -> str:
        return "CLIP published preprocessing (resize, center-crop, normalize)"

    def encode(self, images) -> np.ndarray:
        inputs = self._processor(images=images, return_tensors="pt").to(self._device)
        with self._torch.no_grad():
            features = self._model.get_image_features(**inputs)
        return features.cpu().numpy().astype(np.float32)
