"""Image-folder embedding extraction for the clide detector."""

from .extract import ExtractionManifest, extract, list_images

__version__ = "0.1.0"

__all__ = ["ExtractionManifest", "extract", "list_images"]
