"""Image-directory embedding extractor emitting the .emb format."""

from .encoder import Encoder, load_encoder
from .errors import ConfigError, ExtractError, ModelLoadError, NoImagesError
from .extract import ExtractResult, ExtractSpec, extract
from .writer import write_emb, write_manifest

__version__ = "0.1.0"
