"""Open-system dynamics of lattice gauge theories under 1/f^beta noise."""

from __future__ import annotations

__version__ = "0.1.0"
