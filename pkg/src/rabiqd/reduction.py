"""Partial trace over the cavity and extraction of the two-qubit X form."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .hilbert import BasisSpec

log = logging.getLogger(__name__)

# positions of a 4x4 two-qubit matrix that an X state requires to vanish
OFF_X_POSITIONS = ((0, 1), (0, 2), (1, 0), (2, 0), (1, 3), (3, 1), (2, 3), (3, 2))

X_RESIDUAL_LIMIT = 1e-4      # above this the state is not meaningfully X-form
POPULATION_CLAMP = -1e-8     # tiny negatives below this are a real error
_HERM_TOL = 1e-6
_TRACE_TOL = 1e-6


def partial_trace_cavity(state, basis: BasisSpec) -> np.ndarray:
    """Trace the joint density matrix over the cavity mode.

    ``state`` may be anything with a ``rho`` attribute or a bare matrix.
    Returns the 4x4 atomic matrix in the standard basis |ee>, |eg>, |ge>, |gg>.
    """
    rho = getattr(state, "rho", state)
    if rho.shape != (basis.dim, basis.dim):
        raise ValueError(
            f"state dimension {rho.shape} does not match basis dim {basis.dim}"
        )
    nf = basis.field_dim
    blocks = rho.reshape(4, nf, 4, nf)
    return np.einsum("anbn->ab", blocks)


@dataclass
class XState:
    """The seven independent entries of a two-qubit X-form density matrix.

    ``residual_offx`` is the largest magnitude found among the eight entries
    that the X form requires to vanish; it is carried along so downstream
    code can tell how well the structure actually held.
    """

    rho11: float
    rho22: float
    rho33: float
    rho44: float
    rho14: complex
    rho23: complex
    residual_offx: float = 0.0

    def populations(self) -> tuple[float, float, float, float]:
        return (self.rho11, self.rho22, self.rho33, self.rho44)

    def as_matrix(self) -> np.ndarray:
        m = np.zeros((4, 4), dtype=complex)
        m[0, 0], m[1, 1], m[2, 2], m[3, 3] = self.populations()
        m[0, 3] = self.rho14
        m[3, 0] = np.conj(self.rho14)
        m[1, 2] = self.rho23
        m[2, 1] = np.conj(self.rho23)
        return m


def to_xstate(rho_ab: np.ndarray, residual_limit: float = X_RESIDUAL_LIMIT) -> XState:
    """Extract the X-form entries of a 4x4 density matrix.

    The eight off-X entries are required to vanish; their largest magnitude
    is recorded as ``residual_offx`` and a residual at or above
    ``residual_limit`` raises, since the X-only formulas downstream would
    silently miscompute.  Population entries in [POPULATION_CLAMP, 0) are
    clamped to zero (with a log warning) so entropy formulas never see a
    negative probability.
    """
    rho_ab = np.asarray(rho_ab)
    if rho_ab.shape != (4, 4):
        raise ValueError(f"expected a 4x4 matrix, got shape {rho_ab.shape}")
    herm_dev = np.max(np.abs(rho_ab - rho_ab.conj().T))
    if herm_dev > _HERM_TOL:
        raise ValueError(f"matrix is not Hermitian (max deviation {herm_dev:.2e})")
    trace_dev = abs(np.trace(rho_ab).real - 1.0)
    if trace_dev > _TRACE_TOL:
        raise ValueError(f"matrix trace deviates from 1 by {trace_dev:.2e}")

    residual = max(abs(rho_ab[i, j]) for i, j in OFF_X_POSITIONS)
    if residual >= residual_limit:
        raise ValueError(
            f"off-X residual {residual:.3e} >= {residual_limit:.1e}; "
            "state is outside the X-preserving class"
        )

    pops = []
    for k in range(4):
        p = rho_ab[k, k].real
        if p < 0.0:
            if p < POPULATION_CLAMP:
                raise ValueError(f"population rho{k + 1}{k + 1} = {p:.3e} is negative")
            log.warning("clamping tiny negative population rho%d%d = %.3e", k + 1, k + 1, p)
            p = 0.0
        pops.append(p)

    return XState(
        rho11=pops[0],
        rho22=pops[1],
        rho33=pops[2],
        rho44=pops[3],
        rho14=complex(rho_ab[0, 3]),
        rho23=complex(rho_ab[1, 2]),
        residual_offx=float(residual),
    )
