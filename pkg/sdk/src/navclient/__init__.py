"""Client SDK for the navigation policy wire protocol."""

from navclient.greedy import GreedyPolicy
from navclient.session import (
    ACTIONS,
    PROTOCOL_VERSION,
    EpisodeResult,
    Observation,
    Session,
    SessionError,
    StdioTransport,
    TcpTransport,
    connect,
)

__version__ = "0.1.0"
