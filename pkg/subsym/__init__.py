"""Levy market models built as subordinated Brownian motion."""

from subsym.core.config import settings

__version__ = settings.APP_VERSION
