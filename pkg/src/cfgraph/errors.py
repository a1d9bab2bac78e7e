"""Exception hierarchy shared across the package."""


class CausalError(Exception):
    """Base class for user-facing errors (CLI exit code 1)."""


class GraphError(CausalError):
    pass


class UnknownNodeError(GraphError, KeyError):
    def __init__(self, node):
        self.node = node
        super().__init__(f"unknown node {node!r}")

    def __str__(self):
        return self.args[0]


class CycleError(GraphError):
    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__("cycle detected: " + " -> ".join(self.cycle + self.cycle[:1]))


class PathLimitError(GraphError):
    def __init__(self, limit):
        self.limit = limit
        super().__init__(f"path enumeration exceeded the cap of {limit} paths")


class OverlapError(CausalError):
    pass


class ModelError(CausalError):
    """Invalid model parameters (CPT rows, coefficients, noise, domains)."""


class UnsupportedQueryError(CausalError):
    pass


class ZeroProbabilityError(CausalError):
    def __init__(self, event):
        self.event = dict(event)
        desc = ", ".join(f"{k}={v}" for k, v in self.event.items())
        super().__init__(f"conditioning event has probability 0: {desc}")


class StateSpaceError(CausalError):
    def __init__(self, size, cap):
        self.size = size
        self.cap = cap
        super().__init__(f"joint state space has {size} states, cap is {cap}")


class TemporalError(CausalError):
    pass


class SchemaError(CausalError):
    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


class InternalInvariantError(Exception):
    """A check that should be impossible to fail did fail (CLI exit code 2)."""
