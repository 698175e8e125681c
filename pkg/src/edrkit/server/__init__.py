"""Management server: REST API, auth, and persistence."""

from .app import ServerConfig, ServerState, create_app
from .storage import ServerStore

__all__ = ["ServerConfig", "ServerState", "ServerStore", "create_app"]
