"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Vector or matrix sizes do not agree."""


class ValidationError(ValueError):
    """A value violates a type invariant (nonfinite entry, bad sign, asymmetry)."""


class VariantError(ValueError):
    """An operation was called on a model variant it does not support."""


class SimulationError(RuntimeError):
    """Integration produced a nonfinite state.

    Carries the 1-based index of the offending step and the time it would
    have completed at.
    """

    def __init__(self, step_index: int, time: float):
        self.step_index = step_index
        self.time = time
        super().__init__(
            f"nonfinite state after step {step_index} (t = {time:.6g})"
        )


class InsufficientMarginError(ValueError):
    """A lower-bound formula came out nonpositive under every convention."""


class ConfigError(ValueError):
    """Experiment configuration is malformed; ``path`` names the bad field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")
