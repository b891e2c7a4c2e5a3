"""Interactive preference-optimization sessions over HTTP."""

from .app import create_app
from .store import Session, SessionError, SessionStore

__all__ = ["Session", "SessionError", "SessionStore", "create_app"]
