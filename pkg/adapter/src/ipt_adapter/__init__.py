"""Model-side reference adapter for the ipt-probe wire protocol.

Wraps any classifier callable behind the framed stdio/TCP protocol and
ships a dependency-free nearest-centroid baseline for integration tests.
"""

__version__ = "0.1.0"

from .baseline import CentroidBaseline, video_mean_color
from .protocol import ConnectionClosed, ProtocolError, decode_message, encode_message
from .server import serve_connection, serve_stdio, serve_tcp

__all__ = [
    "CentroidBaseline",
    "ConnectionClosed",
    "ProtocolError",
    "decode_message",
    "encode_message",
    "serve_connection",
    "serve_stdio",
    "serve_tcp",
    "video_mean_color",
]
