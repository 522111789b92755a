"""NVQ - per-vector learned non-uniform scalar quantization of embedding vectors."""

__version__ = "0.1.0"
