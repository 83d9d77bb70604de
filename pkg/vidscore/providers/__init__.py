# vidscore/providers/__init__.py
from .base import JudgeProvider
from .registry import available_providers, get_provider

__all__ = ["JudgeProvider", "available_providers", "get_provider"]
