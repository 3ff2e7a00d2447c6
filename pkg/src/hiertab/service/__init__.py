"""HTTP service and persistent session store for the mixed-initiative loop."""

from .config import ServiceConfig, load_config
from .store import SessionStore, StoreError
from .app import create_app

__all__ = ["ServiceConfig", "load_config", "SessionStore", "StoreError", "create_app"]
