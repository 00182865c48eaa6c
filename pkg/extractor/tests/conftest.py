import numpy as np
import pytest
from PIL import Image


class PixelProjectionEncoder:
    """Deterministic stand-in for the CLIP tower: grayscale 8x8 thumbnail
    projected to 768 dimensions by a fixed seeded matrix. Content-dependent,
    hardware-independent, no model weights needed."""

    model_id = "stub-pixel-projection"
    preprocessing = "8x8 grayscale thumbnail, fixed random projection"
    embedding_dim = 768

    def __init__(self):
        rng = np.random.default_rng(1234)
        self._projection = rng.standard_normal((64, 768)).astype(np.float32)

    def encode(self, images):
        rows = []
        for img in images:
            thumb = img.convert("L").resize((8, 8), Image.BILINEAR)
            pixels = np.asarray(thumb, dtype=np.float32).reshape(64) / 255.0
            rows.append(pixels @ self._projection)
        return np.stack(rows).astype(np.float32)


@pytest.fixture()
def stub_encoder():
    return PixelProjectionEncoder()


def write_gradient_image(path, seed, size=(32, 32), noise=0.05):
    """Smooth diagonal gradient plus mild noise; the 'real photo' stand-in."""
    rng = np.random.default_rng(seed)
    xx, yy = np.meshgrid(np.linspace(0, 1, size[0]), np.linspace(0, 1, size[1]))
    base = 0.5 * xx + 0.5 * yy
    img = np.clip(base + rng.normal(0, noise, size), 0, 1)
    Image.fromarray((img * 255).astype(np.uint8)).save(path)


def write_noise_image(path, seed, size=(32, 32)):
    """Uniform pixel noise; the 'generated' stand-in."""
    rng = np.random.default_rng(seed)
    img = rng.uniform(0, 1, size)
    Image.fromarray((img * 255).astype(np.uint8)).save(path)
