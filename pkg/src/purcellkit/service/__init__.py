"""FastAPI service exposing the toolkit as JSON endpoints."""

from .app import create_app

__all__ = ["create_app"]
