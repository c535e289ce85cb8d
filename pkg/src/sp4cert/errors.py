"""Error taxonomy shared by every sp4cert module.

All exceptions raised on purpose by this package derive from
:class:`Sp4CertError`, so callers can catch one base class at the CLI
boundary and map it to an exit code.  The distinctions matter:

* ``DomainError``        -- an argument is outside the documented domain
                            (division by a non-unit, index outside the
                            Weyl chamber, negative truncation depth, ...).
* ``PrecisionError``     -- an exact answer was requested but the tracked
                            precision cannot certify one.
* ``UnsupportedBackend`` -- the operation is only defined for one field
                            backend (e.g. integral part needs a series
                            field, not a p-adic one).
* ``WrongCharacteristic``-- the construction requires p odd (or p = 2)
                            and the configured field disagrees.
* ``BudgetError``        -- an enumeration or matrix would exceed the
                            configured cardinality/size budget.
* ``ConvergenceError``   -- an iterative spectral routine failed to meet
                            its certified residual.
* ``HypothesisError``    -- a verified-inequality hypothesis is violated
                            by the requested parameters.
* ``PathError``          -- no hypothesis-compatible descent path exists
                            from the requested chamber point.
* ``AdmissibilityError`` -- the integrability exponent is outside the
                            admissible range of the decay machinery.
* ``InternalError``      -- an internal invariant failed; always a bug.
"""

from __future__ import annotations


class Sp4CertError(Exception):
    """Base class of every deliberate sp4cert exception."""


class DomainError(Sp4CertError):
    """Argument outside the documented domain of an operation."""


class PrecisionError(Sp4CertError):
    """Tracked precision is insufficient to certify the requested answer."""


class UnsupportedBackend(Sp4CertError):
    """Operation undefined for the configured field backend."""


class WrongCharacteristic(Sp4CertError):
    """Construction requires a different residue characteristic."""


class BudgetError(Sp4CertError):
    """Requested computation exceeds the configured budget."""


class ConvergenceError(Sp4CertError):
    """Iterative routine failed to reach its certified tolerance."""


class HypothesisError(Sp4CertError):
    """Parameters violate a hypothesis of the inequality being applied."""


class PathError(Sp4CertError):
    """No admissible descent path exists from the requested point."""


class AdmissibilityError(Sp4CertError):
    """Integrability exponent outside the admissible range."""


class InternalError(Sp4CertError):
    """Internal invariant violated; indicates a bug in sp4cert itself."""
