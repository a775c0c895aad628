"""Hamiltonians, the cavity-loss master equation, and time propagation.

The master equation is

    drho/dt = -i [H, rho] - (kappa/2) (a†a rho - 2 a rho a† + rho a†a)

with a single photon-loss channel.  Propagation uses an embedded
Dormand-Prince 5(4) pair on the matrix-valued ODE with the density matrix
flattened only for step-size control.  Everything is integrated in
dimensionless time tau = omega * t, so H and kappa are divided by omega
internally.

Two right-hand-side routes exist on purpose: :func:`lindblad_rhs` is the
straightforward dense form valid for any matrix, while the propagator uses
a faster variant that assumes Hermitian input (every Runge-Kutta stage of a
Hermitian initial state is Hermitian, since the generator preserves
Hermiticity).  The two are cross-checked in the test suite.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np
import scipy.sparse as sparse

from .hilbert import (
    BasisSpec,
    annihilation,
    atomic_operator,
    build_basis,
    vacuum_density,
)

log = logging.getLogger(__name__)

# density-matrix invariants checked at every sample
TRACE_TOL = 1e-8
HERM_TOL = 1e-8
POSITIVITY_TOL = 1e-8

DEFAULT_N_MAX = 50
DEFAULT_REL_TOL = 1e-9
DEFAULT_ABS_TOL = 1e-12

# trailing-window steady-state detector defaults
DEFAULT_STEADY_WINDOW = 200.0
DEFAULT_STEADY_TOL = 1e-8

INITIAL_STATES = ("vacuum",)

# Dormand-Prince 5(4) tableau; stage 7 is FSAL
_DP_A = (
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
)
_DP_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_DP_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200,
                  22 / 525, -1 / 40])
_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
_ERR_EXPONENT = -0.2   # 1 / -(order of the error estimate)
# PI step control (Hairer's beta stabilization); damps the accept/reject
# oscillation when the step is stability-limited by the decay terms
_PI_BETA = 0.04
_PI_EXPONENT = -(0.2 - 0.75 * _PI_BETA)


class ConfigError(ValueError):
    """A simulation parameter is invalid; ``field`` names the offender."""

    def __init__(self, field: str, message: str):
        super().__init__(message)
        self.field = field


class DynamicsError(RuntimeError):
    """Evolution broke a density-matrix invariant beyond tolerance."""

    def __init__(self, message: str, t: float = math.nan,
                 trace_dev: float = math.nan, min_eig: float = math.nan):
        super().__init__(message)
        self.t = t
        self.trace_dev = trace_dev
        self.min_eig = min_eig


@dataclass
class SimConfig:
    """All physical and numerical parameters of one run.

    Units: omega sets the scale; all other rates and frequencies are
    interpreted in the same units and times are reported as omega * t.
    Config files therefore read like dimensionless parameter sets with
    omega = 1.
    """

    omega: float = 1.0
    omega0: float = 1.01
    g: float = 0.35
    kappa: float = 0.2
    rwa: bool = False
    n_max: int = DEFAULT_N_MAX
    t_max: float = 500.0
    sample_interval: float = 0.5
    integrator_rel_tol: float = DEFAULT_REL_TOL
    integrator_abs_tol: float = DEFAULT_ABS_TOL
    initial_state: str = "vacuum"

    def validate(self) -> "SimConfig":
        if not self.omega > 0:
            raise ConfigError("omega", f"omega must be > 0, got {self.omega}")
        if not np.isfinite(self.omega0):
            raise ConfigError("omega0", f"omega0 must be finite, got {self.omega0}")
        if self.g < 0:
            raise ConfigError("g", f"g must be >= 0, got {self.g}")
        if self.kappa < 0:
            raise ConfigError("kappa", f"kappa must be >= 0, got {self.kappa}")
        if not isinstance(self.rwa, bool):
            raise ConfigError("rwa", f"rwa must be a boolean, got {self.rwa!r}")
        if not isinstance(self.n_max, int) or self.n_max < 0:
            raise ConfigError("n_max", f"n_max must be a non-negative integer, got {self.n_max!r}")
        if not self.t_max > 0:
            raise ConfigError("t_max", f"t_max must be > 0, got {self.t_max}")
        if not self.sample_interval > 0:
            raise ConfigError("sample_interval",
                              f"sample_interval must be > 0, got {self.sample_interval}")
        if not self.integrator_rel_tol > 0:
            raise ConfigError("integrator_rel_tol",
                              f"integrator_rel_tol must be > 0, got {self.integrator_rel_tol}")
        if not self.integrator_abs_tol > 0:
            raise ConfigError("integrator_abs_tol",
                              f"integrator_abs_tol must be > 0, got {self.integrator_abs_tol}")
        if self.initial_state not in INITIAL_STATES:
            raise ConfigError("initial_state",
                              f"initial_state must be one of {INITIAL_STATES}, "
                              f"got {self.initial_state!r}")
        return self

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class SystemState:
    """Joint density matrix at one sampled dimensionless time.

    ``herm_drift`` records the largest |rho - rho†| deviation produced by
    the integrator since the previous sample, before re-symmetrization;
    ``trace_dev`` and ``min_eig`` are the per-sample invariant diagnostics.
    """

    rho: np.ndarray
    t: float
    herm_drift: float = 0.0
    trace_dev: float = 0.0
    min_eig: float = 0.0


def build_hamiltonian(config: SimConfig, basis: BasisSpec) -> np.ndarray:
    """Two-atom Hamiltonian on the truncated space, full or RWA form."""
    a = annihilation(basis)
    ad = a.conj().T
    sz = (atomic_operator(basis, "A", "sigma_z")
          + atomic_operator(basis, "B", "sigma_z"))
    sp = (atomic_operator(basis, "A", "sigma_plus")
          + atomic_operator(basis, "B", "sigma_plus"))
    sm = sp.conj().T
    h = 0.5 * config.omega0 * sz + config.omega * (ad @ a)
    if config.rwa:
        h += config.g * (sp @ a + sm @ ad)
    else:
        h += config.g * (sp + sm) @ (a + ad)
    return h


def _shift_a_left(x: np.ndarray, field_dim: int, sqrt_n: np.ndarray) -> np.ndarray:
    """a @ x using the block ladder structure (rows shift within each block)."""
    out = np.zeros_like(x)
    if field_dim > 1:
        xv = x.reshape(4, field_dim, x.shape[1])
        out.reshape(4, field_dim, x.shape[1])[:, :-1, :] = sqrt_n[None, :, None] * xv[:, 1:, :]
    return out


def _shift_adag_right(x: np.ndarray, field_dim: int, sqrt_n: np.ndarray) -> np.ndarray:
    """x @ a† using the block ladder structure (columns shift within each block)."""
    out = np.zeros_like(x)
    if field_dim > 1:
        xv = x.reshape(x.shape[0], 4, field_dim)
        out.reshape(x.shape[0], 4, field_dim)[:, :, :-1] = sqrt_n[None, None, :] * xv[:, :, 1:]
    return out


def _sandwich_a(rho: np.ndarray, out: np.ndarray, field_dim: int,
                ladder_outer: np.ndarray) -> None:
    """out = c * a rho a† in one fused strided pass.

    (a rho a†)[qm, pn] = sqrt((m+1)(n+1)) rho[q(m+1), p(n+1)], so on the
    (4, nf, 4, nf) view it is a single shifted multiply by the outer product
    of the ladder factors (with any scalar prefactor folded in).
    """
    out4 = out.reshape(4, field_dim, 4, field_dim)
    if field_dim > 1:
        rho4 = rho.reshape(4, field_dim, 4, field_dim)
        np.multiply(rho4[:, 1:, :, 1:], ladder_outer[None, :, None, :],
                    out=out4[:, :-1, :, :-1])
        out4[:, -1, :, :] = 0.0
        out4[:, :-1, :, -1] = 0.0
    else:
        out4[...] = 0.0


def lindblad_rhs(H: np.ndarray, kappa: float, state) -> np.ndarray:
    """Right-hand side -i[H, rho] - (kappa/2)(a†a rho - 2 a rho a† + rho a†a).

    Valid for any square matrix ``rho`` (Hermitian or not); the photon-loss
    operator is reconstructed from the dimension, which must be 4*(n_max+1).
    """
    rho = getattr(state, "rho", state)
    rho = np.asarray(rho, dtype=complex)
    if H.shape != rho.shape or rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"dimension mismatch: H {H.shape} vs rho {rho.shape}")
    if rho.shape[0] % 4 != 0:
        raise ValueError(f"dimension {rho.shape[0]} is not 4*(n_max+1)")
    out = -1j * (H @ rho - rho @ H)
    if kappa != 0.0:
        basis = build_basis(rho.shape[0] // 4 - 1)
        a = annihilation(basis)
        ad = a.conj().T
        n_op = ad @ a
        out += kappa * (a @ rho @ ad) - 0.5 * kappa * (n_op @ rho + rho @ n_op)
    return out


def _make_hermitian_rhs(h_sparse, kappa: float, field_dim: int):
    """Fast master-equation RHS assuming (and preserving) Hermitian input.

    Splits the generator as (M + M†) + kappa a rho a† with
    M = -i H rho - (kappa/4)(n_i + n_j) rho, which halves the matrix
    products for Hermitian input.  The returned function reuses internal
    buffers: callers must copy the result before the next invocation.
    """
    dim = h_sparse.shape[0]
    nvec = np.tile(np.arange(field_dim, dtype=float), 4)
    # (kappa/4)(n_i + n_j) elementwise weights; half of the Hermitian pair
    anticomm_w = 0.25 * kappa * (nvec[:, None] + nvec[None, :])
    sqrt_n = np.sqrt(np.arange(1.0, field_dim))
    ladder_outer = kappa * np.outer(sqrt_n, sqrt_n)
    buf_m = np.empty((dim, dim), dtype=complex)
    buf_out = np.empty((dim, dim), dtype=complex)
    buf_jump = np.empty((dim, dim), dtype=complex)

    def rhs(rho: np.ndarray) -> np.ndarray:
        hr = h_sparse @ rho
        np.multiply(hr, -1j, out=hr)
        if kappa != 0.0:
            np.multiply(anticomm_w, rho, out=buf_m)
            np.subtract(hr, buf_m, out=hr)
        np.conjugate(hr.T, out=buf_m)
        np.add(hr, buf_m, out=buf_out)
        if kappa != 0.0:
            _sandwich_a(rho, buf_jump, field_dim, ladder_outer)
            np.add(buf_out, buf_jump, out=buf_out)
        return buf_out

    return rhs


def _scaled_rms(x: np.ndarray, scale: np.ndarray) -> float:
    return float(np.sqrt(np.mean((np.abs(x) / scale) ** 2)))


def _initial_step(rhs, rho0, f0, rtol, atol, max_step):
    """Hairer-style starting step size estimate."""
    y0 = rho0.ravel()
    g0 = f0.ravel()
    scale = atol + rtol * np.abs(y0)
    d0 = _scaled_rms(y0, scale)
    d1 = _scaled_rms(g0, scale)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    h0 = min(h0, max_step)
    f1 = rhs(rho0 + h0 * f0)
    d2 = _scaled_rms(f1.ravel() - g0, scale) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, max_step)


def _propagate(rhs, rho0: np.ndarray, targets: np.ndarray, rtol: float,
               atol: float) -> Iterator[tuple[float, np.ndarray, float]]:
    """Yield (t, rho, herm_drift) at each target time after t=0.

    The density matrix is re-symmetrized after every accepted step (before
    the FSAL stage, so its reuse as the next first stage stays exact) and
    the pre-symmetrization deviation is tracked as ``herm_drift``.
    """
    dim = rho0.shape[0]
    n2 = dim * dim
    rho = rho0.copy()
    k = np.empty((7, n2), dtype=complex)
    stage = np.empty(n2, dtype=complex)
    err_c = np.empty(n2, dtype=complex)
    scale = np.empty(n2, dtype=float)
    work_r = np.empty(n2, dtype=float)
    f0 = rhs(rho).copy()
    k[0] = f0.ravel()
    h = _initial_step(rhs, rho, f0, rtol, atol, max_step=float(targets[-1]))
    t = 0.0
    herm_drift = 0.0
    rejected = False
    err_prev = 1e-4

    for target in targets:
        while target - t > 1e-12 * max(1.0, target):
            h_eff = min(h, target - t)
            clipped = h_eff < h
            y = rho.ravel()
            for s, a_row in enumerate(_DP_A, start=1):
                np.matmul(a_row, k[:s], out=stage)
                np.multiply(stage, h_eff, out=stage)
                np.add(stage, y, out=stage)
                k[s] = rhs(stage.reshape(dim, dim)).ravel()
            y_new = y + h_eff * (_DP_B @ k[:6])
            m = y_new.reshape(dim, dim)
            np.conjugate(m.T, out=stage.reshape(dim, dim))
            m_conj = stage.reshape(dim, dim)
            np.abs(y_new - stage, out=work_r)
            drift = float(work_r.max())
            # symmetrize in place, then evaluate the FSAL stage there so its
            # reuse as k1 of the next step is exact
            np.add(m, m_conj, out=m)
            m *= 0.5
            k[6] = rhs(m).ravel()
            np.matmul(_DP_E, k, out=err_c)
            np.abs(y, out=scale)
            np.abs(y_new, out=work_r)
            np.maximum(scale, work_r, out=scale)
            scale *= rtol
            scale += atol
            np.abs(err_c, out=work_r)
            work_r *= h_eff
            work_r /= scale
            err_norm = float(np.sqrt(np.dot(work_r, work_r) / n2))

            if err_norm <= 1.0:
                t = target if clipped and (target - t) <= h_eff * (1 + 1e-12) else t + h_eff
                rho = m
                k[0] = k[6]
                herm_drift = max(herm_drift, drift)
                if err_norm == 0.0:
                    factor = _MAX_FACTOR
                else:
                    factor = min(_MAX_FACTOR,
                                 max(_MIN_FACTOR,
                                     _SAFETY * err_norm ** _PI_EXPONENT
                                     * err_prev ** _PI_BETA))
                err_prev = max(err_norm, 1e-4)
                if rejected:
                    factor = min(factor, 1.0)
                rejected = False
                if clipped:
                    # keep the controller's proposal unless the error asks to shrink
                    h = min(h, h_eff * factor) if factor < 1.0 else h
                else:
                    h = h_eff * factor
            else:
                rejected = True
                h = h_eff * max(_MIN_FACTOR, _SAFETY * err_norm ** _ERR_EXPONENT)
            if h < 1e-13 * max(1.0, abs(t)):
                raise DynamicsError(
                    f"integrator step size collapsed at t={t:.6g}", t=t)
        yield t, rho.copy(), herm_drift
        herm_drift = 0.0


def _sample_times(t_max: float, interval: float) -> np.ndarray:
    count = int(math.floor(t_max / interval + 1e-9))
    return interval * np.arange(1, count + 1)


def _check_state(rho: np.ndarray, t: float, herm_drift: float) -> tuple[float, float]:
    trace_dev = abs(np.trace(rho).real - 1.0)
    min_eig = float(np.linalg.eigvalsh(rho)[0])
    if trace_dev > TRACE_TOL or min_eig < -POSITIVITY_TOL or herm_drift > HERM_TOL:
        raise DynamicsError(
            f"invariant violation at t={t:.6g}: trace deviation {trace_dev:.3e}, "
            f"min eigenvalue {min_eig:.3e}, hermiticity drift {herm_drift:.3e}",
            t=t, trace_dev=trace_dev, min_eig=min_eig)
    return trace_dev, min_eig


def evolve(config: SimConfig, rho0: np.ndarray | None = None) -> Iterator[SystemState]:
    """Propagate the master equation, yielding one state per sample time.

    The first yielded state is the initial condition at t = 0.  ``rho0``
    overrides the configured initial state (testing hook; must already be a
    valid density matrix on the configured basis).  Raises
    :class:`DynamicsError` if any sample violates the trace, Hermiticity or
    positivity invariants.
    """
    config.validate()
    basis = build_basis(config.n_max)
    h = build_hamiltonian(config, basis) / config.omega
    kappa = config.kappa / config.omega

    if rho0 is None:
        rho = vacuum_density(basis)
    else:
        if rho0.shape != (basis.dim, basis.dim):
            raise ValueError(f"rho0 shape {rho0.shape} does not match basis dim {basis.dim}")
        rho = np.asarray(rho0, dtype=complex).copy()

    trace_dev, min_eig = _check_state(rho, 0.0, 0.0)
    yield SystemState(rho=rho.copy(), t=0.0, herm_drift=0.0,
                      trace_dev=trace_dev, min_eig=min_eig)

    targets = _sample_times(config.t_max, config.sample_interval)
    if targets.size == 0:
        return
    rhs = _make_hermitian_rhs(sparse.csr_array(h), kappa, basis.field_dim)
    for t, rho_t, drift in _propagate(rhs, rho, targets,
                                      config.integrator_rel_tol,
                                      config.integrator_abs_tol):
        trace_dev, min_eig = _check_state(rho_t, t, drift)
        yield SystemState(rho=rho_t, t=t, herm_drift=drift,
                          trace_dev=trace_dev, min_eig=min_eig)


def detect_steady_state(trajectory, window: float = DEFAULT_STEADY_WINDOW,
                        tol: float = DEFAULT_STEADY_TOL) -> tuple[bool, SystemState]:
    """Trailing-window steady-state test on a sampled trajectory.

    Reached iff the trajectory spans at least ``window`` and the largest
    elementwise deviation between any sample in the trailing window and the
    final sample is below ``tol``.  Returns (reached, final state).
    """
    states = list(trajectory)
    if not states:
        raise ValueError("trajectory must be non-empty")
    last = states[-1]
    if last.t - states[0].t < window:
        return False, last
    cutoff = last.t - window
    delta = 0.0
    for s in states:
        if s.t >= cutoff:
            delta = max(delta, float(np.max(np.abs(s.rho - last.rho))))
    return delta < tol, last
