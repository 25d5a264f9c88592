"""Exception hierarchy for pxe"""

from typing import Dict, Optional


class PxeError(Exception):
    """Base class for all pxe errors"""

    exit_code = 1


class ConfigError(PxeError):
    """Run configuration could not be read or is inconsistent"""

    exit_code = 1


class StructuralError(PxeError, ValueError):
    """Shape, grid or axis mismatch between objects that must agree"""

    exit_code = 1


class MediumValidationError(PxeError):
    """Medium violates a hard requirement (lower bound, radii, positivity)"""

    exit_code = 2

    def __init__(self, message: str, z: Optional[float] = None, tau: Optional[float] = None):
        super().__init__(message)
        self.z = z
        self.tau = tau


class SolverError(PxeError):
    """Numerical solver failure"""

    exit_code = 3


class SolverConvergenceError(SolverError):
    """Krylov iteration stopped before reaching the requested tolerance"""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(f"{message} (relative residual {residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


class MeshAlignmentError(PxeError, ValueError):
    """A depth that must lie on the macro mesh does not"""

    exit_code = 1


class SynthesisError(SolverError):
    """One or more per-frequency solves failed; synthesis aborted"""

    def __init__(self, message: str, failures: Dict[float, str]):
        super().__init__(message)
        self.failures = failures


class LedgerDomainError(PxeError, ValueError):
    """Bootstrap ledger called outside 0 <= s < r < 1"""

    exit_code = 1
