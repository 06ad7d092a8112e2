"""Errors raised by the extractor."""


class ExtractError(Exception):
    """Base class for extractor failures."""


class ConfigError(ExtractError):
    """Bad extraction settings (unknown model, invalid pooling, ...)."""


class ModelLoadError(ExtractError):
    """The encoder or its weights could not be loaded."""


class NoImagesError(ExtractError):
    """The input directory yielded no decodable images."""
