"""Exception hierarchy.

Configuration-type errors map to CLI exit code 2, numerical guards to 3.
"""


class NmmbError(Exception):
    """Base class for all package errors."""


class DomainError(NmmbError, ValueError):
    """An argument lies outside the domain of the operation."""


class ConfigurationError(NmmbError, ValueError):
    """Inconsistent geometry, mesh or scenario settings."""


class ConfigParseError(ConfigurationError):
    def __init__(self, message, key=None, line=None):
        where = []
        if key is not None:
            where.append(f"key {key!r}")
        if line is not None:
            where.append(f"line {line}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(message + suffix)
        self.key = key
        self.line = line


class NumericalError(NmmbError, ArithmeticError):
    """A numerical guard tripped (factorisation failure, no convergence)."""


class ResourceError(NumericalError):
    """A size guard was exceeded."""


class CutoffTooLowError(NumericalError):
    def __init__(self, defect, tol):
        super().__init__(
            f"spectral basis is incomplete for this state: completeness defect "
            f"{defect:.3e} exceeds {tol:.1e}; raise e_cut or use the complete basis"
        )
        self.defect = defect
        self.tol = tol


class PauliExclusionError(NumericalError):
    """Fermionic orbitals are linearly dependent."""
