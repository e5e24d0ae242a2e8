"""Graph augmentation and representation-audit toolkit."""

__version__ = "0.1.0"

from .graph import Graph, GraphDataset, connected_components, degree, validate  # noqa: E402

__all__ = ["Graph", "GraphDataset", "connected_components", "degree", "validate", "__version__"]
