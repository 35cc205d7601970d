"""Reference stdio adapter for the point-cloud classifier wire protocol.

The server speaks newline-delimited JSON on stdin/stdout: a hello line
first, then exactly one response per request with the request id echoed.
"""

from .encoding import canonical_encode, cloud_key
from .handlers import (
    centroid_from_file,
    constant,
    identity_completion,
    lookup_from_file,
)
from .server import BridgeConfig, serve

__version__ = "0.1.0"

__all__ = [
    "BridgeConfig",
    "canonical_encode",
    "centroid_from_file",
    "cloud_key",
    "constant",
    "identity_completion",
    "lookup_from_file",
    "serve",
]
