"""model_bridge: export time-series model embeddings into the embedprobe
interchange format."""

__version__ = "0.1.0"

from .errors import BridgeError, DatasetError, ModelLoadError, ShapeError
from .export import BridgeConfig, export_embeddings
from .models import load_model

__all__ = [
    "__version__",
    "BridgeConfig",
    "BridgeError",
    "DatasetError",
    "ModelLoadError",
    "ShapeError",
    "export_embeddings",
    "load_model",
]
