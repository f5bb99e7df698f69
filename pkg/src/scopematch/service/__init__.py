from .app import create_app
from .config import ServiceConfig
from .jobs import JobStore

__all__ = ["ServiceConfig", "JobStore", "create_app"]
