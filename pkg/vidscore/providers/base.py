# vidscore/providers/base.py
from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Any, Dict


class JudgeProvider(ABC):
    """
    All judge back-ends MUST implement this interface.
    """

    name: str

    @abstractmethod
    async def run(self, payload: Dict[str, Any]) -> Dict[str, Any]:
        """
        Sends one chat-completion request and returns the response dict.
        Must raise TransientEndpointError on retryable failures and
        EndpointError on everything else.
        """
        raise NotImplementedError

    async def aclose(self) -> None:
        return None
