"""Aspect-based retrieval of scientific abstracts with a domain knowledge base."""

from aspectir.errors import AspectIRError, EntityNotInKBError, FormatError

__version__ = "0.1.0"

__all__ = ["AspectIRError", "EntityNotInKBError", "FormatError", "__version__"]
