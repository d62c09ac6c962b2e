"""Three-server serving pipeline: app server, model server, embedding server."""

from .config import ServeConfig, load_config
from .run import run_servers

__all__ = ["ServeConfig", "load_config", "run_servers"]
