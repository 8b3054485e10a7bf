"""Exception hierarchy shared across the package."""


class EhgnnError(Exception):
    """Base class for all library errors."""


class DimensionError(EhgnnError, ValueError):
    """Operand shapes do not line up."""


class UnknownOpError(EhgnnError, ValueError):
    pass


class AutodiffError(EhgnnError, RuntimeError):
    """Misuse of the reverse-mode engine (non-scalar loss, reused graph, ...)."""


class MissingGradientError(AutodiffError):
    pass


class GraphError(EhgnnError, ValueError):
    """A graph violates one of its structural invariants."""


class EndpointOutOfRangeError(GraphError, IndexError):
    pass


class SelfLoopError(GraphError):
    pass


class DuplicateEdgeError(GraphError):
    pass


class FeatureShapeError(GraphError):
    pass


class StructureError(GraphError):
    """A dual hypergraph is not 2-regular or not in positional layout."""


class EncodingError(EhgnnError, ValueError):
    """Edge features are not one-hot where a categorical encoding is required."""


class GraphFormatError(EhgnnError, ValueError):
    """Malformed graph file."""


class ConfigError(EhgnnError, ValueError):
    pass


class TrainingError(EhgnnError, RuntimeError):
    pass
