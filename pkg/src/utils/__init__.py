"""Shared utilities."""

from src.utils.streams import RandomStreams, named_stream

__all__ = ["RandomStreams", "named_stream"]
