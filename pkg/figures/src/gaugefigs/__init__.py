"""Figure rendering over trajectory CSV + metadata JSON archives."""

from __future__ import annotations

__version__ = "0.1.0"
