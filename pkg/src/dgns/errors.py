"""Exception types raised by the solver stack."""


class DGNSError(Exception):
    """Base class for all solver errors."""


class SingularSystemError(DGNSError):
    """Saddle-point factorization or solve broke down.

    Usually indicates an inf-sup deficient velocity/pressure pairing or a
    penalty parameter too small for the symmetric variant.
    """


class NonFiniteStateError(DGNSError):
    """A time step produced NaN or Inf coefficients (blow-up)."""


class NoConvergenceError(DGNSError):
    """Fixed-point iteration failed to reach tolerance within max_iters."""
