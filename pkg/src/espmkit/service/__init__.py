"""HTTP front end: request/response schemas and the FastAPI application.

The service wraps the core package one operation per endpoint; handlers
are plain functions over the pydantic models, so the command-line client
can call them in-process or over HTTP interchangeably.
"""

from .app import create_app
from . import schemas

__all__ = ["create_app", "schemas"]
