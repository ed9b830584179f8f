"""Exception types shared across the package."""


class CapacityError(ValueError):
    """Requested system is larger than the dense representation allows."""


class GridError(ValueError):
    """Field-map grid is malformed, non-uniform or too coarse."""


class IntegrationError(RuntimeError):
    """Time integration failed or produced an invalid density matrix."""


class ScenarioError(ValueError):
    """Scenario document failed validation."""
