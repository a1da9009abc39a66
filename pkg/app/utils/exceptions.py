"""
app/utils/exceptions.py

Typed errors raised by the memory services and mapped to exit codes by the CLI.
"""

from typing import Optional


class SceneMemoryError(Exception):
    """Base class for every error raised by this package"""


class ConfigurationError(SceneMemoryError, ValueError):
    """Invalid construction parameters or run configuration"""

    def __init__(self, message: str, key: Optional[str] = None):
        self.key = key
        if key and key not in message:
            message = f"{key}: {message}"
        super().__init__(message)


class SerializationError(SceneMemoryError, ValueError):
    """Malformed document; location names the record or line"""

    def __init__(self, message: str, location: Optional[str] = None):
        self.location = location
        if location:
            message = f"{location}: {message}"
        super().__init__(message)


class SceneGraphError(SceneMemoryError, ValueError):
    """Referential integrity violation in the scene graph"""


class RegistryError(SceneMemoryError, ValueError):
    """Skill registry violation"""


class EmbeddingError(SceneMemoryError):
    """Remote embedding failure"""


class EmbeddingTimeoutError(EmbeddingError):
    """Embedding request exceeded its timeout"""


class EmbeddingResponseError(EmbeddingError):
    """Non-success status or malformed response body"""

    def __init__(self, message: str, status_code: Optional[int] = None):
        self.status_code = status_code
        super().__init__(message)


class EmbeddingDimensionError(EmbeddingError):
    """Provider returned a vector of the wrong dimension"""

    def __init__(self, expected: int, received: int):
        self.expected = expected
        self.received = received
        super().__init__(f"Embedding dimension drift: expected {expected}, received {received}")
