"""Output sinks for command results."""

import logging
import sys
from abc import ABC, abstractmethod
from typing import TextIO

logger = logging.getLogger(__name__)


class Emitter(ABC):
    """Abstract interface for writing a command's primary output."""

    @abstractmethod
    def emit(self, text: str) -> None:
        """Write the output text.

        Args:
            text: Complete output (CSV, JSON) including its trailing newline
        """
        pass

    @abstractmethod
    def describe(self) -> str:
        """Human-readable destination, used in log lines."""
        pass


class StreamEmitter(Emitter):
    """Writes to a text stream (stdout by default)."""

    def __init__(self, stream: TextIO | None = None):
        self.stream = stream

    def emit(self, text: str) -> None:
        stream = self.stream or sys.stdout
        stream.write(text)
        stream.flush()

    def describe(self) -> str:
        return "stdout"


class FileEmitter(Emitter):
    """Writes to a file, replacing its contents."""

    def __init__(self, path: str):
        self.path = path

    def emit(self, text: str) -> None:
        with open(self.path, 'w', encoding="utf-8", newline="") as f:
            f.write(text)
        logger.info(f"Wrote {len(text)} bytes to {self.path}")

    def describe(self) -> str:
        return self.path


def get_emitter(out: str | None) -> Emitter:
    """File emitter for --out, stdout otherwise."""
    if out and out != "-":
        return FileEmitter(out)
    return StreamEmitter()
