"""Exact, certified and Monte-Carlo computations for matchings in uniform set families."""

from __future__ import annotations

__version__ = "0.1.0"
