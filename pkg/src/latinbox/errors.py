"""Shared exception types."""

from __future__ import annotations

__all__ = ["SizeCapError"]


class SizeCapError(ValueError):
    """An exact kernel was asked to exceed its hard size cap."""
