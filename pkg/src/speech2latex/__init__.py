"""Speech-to-LaTeX pipeline: corpus ingestion, k-NN retrieval of
demonstrative examples, in-context prompt assembly, generation clients,
edit-distance evaluation, and an HTTP service."""

__version__ = "0.1.0"
