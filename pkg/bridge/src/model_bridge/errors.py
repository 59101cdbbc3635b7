"""Bridge error types."""


class BridgeError(Exception):
    """Base class for bridge failures."""


class DatasetError(BridgeError):
    """The dataset directory is missing files or malformed."""


class ModelLoadError(BridgeError):
    """The requested model cannot be constructed or loaded."""


class ShapeError(BridgeError):
    """The model emitted an unusable embedding shape (e.g. zero tokens)."""
