"""Job-based HTTP analysis service."""

from .app import create_app
from .config import ServiceConfig, load_config
from .store import JobStore

__all__ = ["create_app", "ServiceConfig", "load_config", "JobStore"]
