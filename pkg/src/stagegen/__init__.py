"""Two-stage identity-preserving text-to-video orchestration toolkit."""

__version__ = "0.1.0"
