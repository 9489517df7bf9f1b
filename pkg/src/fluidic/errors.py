"""Exception types shared across the package."""


class FluidicError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(FluidicError):
    """A netlist document or CLI value could not be parsed."""


class ValidationError(FluidicError):
    """A netlist violates its structural invariants."""

    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(str(v) for v in self.violations)
        super().__init__(f"netlist validation failed: {lines}")


class DesignRuleError(FluidicError):
    """A builder precondition on injected concentrations or geometry failed."""


class StabilityError(FluidicError):
    """An explicit time step exceeds the stability bound."""

    def __init__(self, dt, bound):
        self.dt = dt
        self.bound = bound
        super().__init__(
            f"time step {dt:g} s violates the stability rule; "
            f"the permitted bound is {bound:g} s"
        )


class SynthesisError(FluidicError):
    """A truth table or expression cannot be compiled to a netlist."""
