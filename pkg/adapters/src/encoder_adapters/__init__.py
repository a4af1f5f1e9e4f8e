"""Image encoders served as subprocess adapters for hvsbench sweeps.

The package talks to the benchmark exclusively through its published
external interfaces: the JSON-lines handshake/request/response
protocol and the VFMF array container.  It never imports the
benchmark itself.
"""

from .featureio import FeatureIOError, read_array, write_array
from .models import (AdapterSpec, ModelLoadError, REGISTRY, build_model,
                     variants, weights_available)
from .protocol import serve

__version__ = "0.1.0"

__all__ = [
    "AdapterSpec", "FeatureIOError", "ModelLoadError", "REGISTRY",
    "build_model", "read_array", "serve", "variants", "weights_available",
    "write_array", "__version__",
]
