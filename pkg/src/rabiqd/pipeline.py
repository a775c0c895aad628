"""Experiment orchestration: single runs, parameter sweeps and the
Fock-truncation convergence study."""

from __future__ import annotations

import logging
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .correlations import (
    CorrelationRecord,
    concurrence_x,
    discord_x,
    expectation,
    mutual_information,
)
from .dynamics import (
    DEFAULT_STEADY_TOL,
    DEFAULT_STEADY_WINDOW,
    ConfigError,
    SimConfig,
    SystemState,
    evolve,
)
from .hilbert import build_basis, excitation_operators
from .reduction import partial_trace_cavity, to_xstate

log = logging.getLogger(__name__)

CONVERGENCE_TOL = 1e-10
SWEEP_AXES = ("g", "kappa")
_STEADY_SNAPSHOTS = 16   # full-state snapshots kept per detector window


@dataclass
class RunResult:
    """Everything produced by one evolution: records plus the final state."""

    config: SimConfig
    records: list[CorrelationRecord]
    final_state: SystemState
    steady_reached: bool
    max_x_residual: float
    wall_time: float


@dataclass
class SweepSpec:
    """One-axis parameter sweep around a base configuration."""

    base: SimConfig
    axis: str
    values: list[float]
    label: str

    def validate(self) -> "SweepSpec":
        if self.axis not in SWEEP_AXES:
            raise ConfigError("axis", f"sweep axis must be one of {SWEEP_AXES}, got {self.axis!r}")
        if not self.values:
            raise ConfigError("values", "sweep values must be non-empty")
        for v in self.values:
            if not np.isfinite(v) or v < 0:
                raise ConfigError("values", f"invalid value {v!r} for sweep axis {self.axis}")
        if not self.label or any(c in self.label for c in "/\\"):
            raise ConfigError("label", f"label must be a non-empty plain name, got {self.label!r}")
        self.base.validate()
        return self


@dataclass
class ConvergenceReport:
    """Per-pair truncation differences for an ascending list of n_max values.

    ``max_deltas[i]`` compares runs at n_values[i] and n_values[i+1] on the
    smaller space (the larger run truncated); ``max_deltas_embedded[i]``
    zero-pads the smaller run into the larger space instead, which also
    counts the population living above the lower cutoff.  ``converged_at``
    is the first n whose step-up difference is below CONVERGENCE_TOL.
    """

    n_values: list[int]
    max_deltas: list[float]
    max_deltas_embedded: list[float]
    converged_at: int | None


def run(config: SimConfig, stop_at_steady: bool = False,
        steady_window: float = DEFAULT_STEADY_WINDOW,
        steady_tol: float = DEFAULT_STEADY_TOL) -> RunResult:
    """Evolve one configuration and assemble a CorrelationRecord per sample.

    The steady-state detector runs in streaming mode over at most
    _STEADY_SNAPSHOTS full-state snapshots per trailing window; with
    ``stop_at_steady`` the evolution stops at the first detection.
    """
    config.validate()
    basis = build_basis(config.n_max)
    n_total_op, n_atoms_op = excitation_operators(basis)
    snap_spacing = steady_window / _STEADY_SNAPSHOTS
    snapshots: deque[SystemState] = deque()
    records: list[CorrelationRecord] = []
    max_residual = 0.0
    reached = False
    state = None
    start = time.perf_counter()

    for state in evolve(config):
        rho_ab = partial_trace_cavity(state, basis)
        x = to_xstate(rho_ab)
        max_residual = max(max_residual, x.residual_offx)
        discord = discord_x(x)
        minfo = mutual_information(rho_ab)
        records.append(CorrelationRecord(
            t=state.t,
            discord=discord,
            concurrence=concurrence_x(x),
            mutual_info=minfo,
            classical_corr=minfo - discord,
            n_total=expectation(state, n_total_op),
            n_atoms=expectation(state, n_atoms_op),
            trace_dev=state.trace_dev,
            herm_dev=state.herm_drift,
            min_eig=state.min_eig,
        ))

        if not snapshots or state.t - snapshots[-1].t >= snap_spacing - 1e-9:
            snapshots.append(state)
        while len(snapshots) > 1 and snapshots[1].t <= state.t - steady_window:
            snapshots.popleft()
        if snapshots[0].t <= state.t - steady_window:
            delta = max(float(np.max(np.abs(s.rho - state.rho))) for s in snapshots)
            if delta < steady_tol:
                reached = True
                if stop_at_steady:
                    log.info("steady state detected at t=%.6g", state.t)
                    break

    return RunResult(config=config, records=records, final_state=state,
                     steady_reached=reached, max_x_residual=max_residual,
                     wall_time=time.perf_counter() - start)


def run_single(config: SimConfig) -> list[CorrelationRecord]:
    """One record per sample over the configured horizon."""
    return run(config).records


def run_sweep(spec: SweepSpec, workers: int = 1, stop_at_steady: bool = False,
              steady_window: float = DEFAULT_STEADY_WINDOW,
              steady_tol: float = DEFAULT_STEADY_TOL) -> dict[float, RunResult]:
    """Run the sweep, returning results keyed by axis value in spec order.

    Runs are independent; with ``workers > 1`` they execute on a thread
    pool (the numerical kernels release the GIL in BLAS/sparse calls).
    Any failing run aborts the whole sweep.
    """
    spec.validate()
    configs = [spec.base.replace(**{spec.axis: float(v)}) for v in spec.values]

    def one(value_config):
        value, config = value_config
        try:
            return run(config, stop_at_steady=stop_at_steady,
                       steady_window=steady_window, steady_tol=steady_tol)
        except Exception:
            log.error("sweep %r failed at %s=%g", spec.label, spec.axis, value)
            raise

    pairs = list(zip(spec.values, configs))
    if workers <= 1:
        results = [one(p) for p in pairs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, pairs))
    return {float(v): r for v, r in zip(spec.values, results)}


def _truncate_to(rho: np.ndarray, n_small: int, n_large: int) -> np.ndarray:
    nf_l, nf_s = n_large + 1, n_small + 1
    blocks = rho.reshape(4, nf_l, 4, nf_l)
    return blocks[:, :nf_s, :, :nf_s].reshape(4 * nf_s, 4 * nf_s)


def _embed_into(rho: np.ndarray, n_small: int, n_large: int) -> np.ndarray:
    nf_l, nf_s = n_large + 1, n_small + 1
    out = np.zeros((4, nf_l, 4, nf_l), dtype=complex)
    out[:, :nf_s, :, :nf_s] = rho.reshape(4, nf_s, 4, nf_s)
    return out.reshape(4 * nf_l, 4 * nf_l)


def convergence_study(config: SimConfig, n_values: list[int]) -> ConvergenceReport:
    """Compare whole sampled trajectories across an ascending n_max ladder.

    For each consecutive pair the maximum over all sample times of the
    elementwise density-matrix difference is reported, both truncated to the
    smaller space and with the smaller run zero-padded into the larger one.
    """
    if len(n_values) < 2:
        raise ConfigError("n_values", "need at least two n_max values to difference")
    if any(not isinstance(n, (int, np.integer)) or n < 0 for n in n_values):
        raise ConfigError("n_values", f"n_max values must be non-negative integers: {n_values}")
    if any(b <= a for a, b in zip(n_values, n_values[1:])):
        raise ConfigError("n_values", f"n_max values must be strictly ascending: {n_values}")

    def trajectory(n):
        states = list(evolve(config.replace(n_max=int(n))))
        return [s.rho for s in states]

    max_deltas: list[float] = []
    max_deltas_embedded: list[float] = []
    prev = trajectory(n_values[0])
    for n_prev, n_cur in zip(n_values, n_values[1:]):
        cur = trajectory(n_cur)
        if len(cur) != len(prev):
            raise RuntimeError("truncation runs produced different sample grids")
        d_trunc = 0.0
        d_embed = 0.0
        for rho_s, rho_l in zip(prev, cur):
            d_trunc = max(d_trunc, float(np.max(np.abs(
                rho_s - _truncate_to(rho_l, n_prev, n_cur)))))
            d_embed = max(d_embed, float(np.max(np.abs(
                _embed_into(rho_s, n_prev, n_cur) - rho_l))))
        max_deltas.append(d_trunc)
        max_deltas_embedded.append(d_embed)
        log.info("truncation n_max %d -> %d: max delta %.3e (embedded %.3e)",
                 n_prev, n_cur, d_trunc, d_embed)
        prev = cur

    converged_at = None
    for n, delta in zip(n_values, max_deltas):
        if delta < CONVERGENCE_TOL:
            converged_at = int(n)
            break
    return ConvergenceReport(n_values=[int(n) for n in n_values],
                             max_deltas=max_deltas,
                             max_deltas_embedded=max_deltas_embedded,
                             converged_at=converged_at)


def concurrence_zero_runs(records: list[CorrelationRecord]) -> list[tuple[int, int]]:
    """Maximal index ranges [i, j] where the concurrence is exactly zero.

    Zero here means the exact 0.0 produced when both branches of the X-form
    concurrence are non-positive, so no threshold is involved.
    """
    runs = []
    start = None
    for i, rec in enumerate(records):
        if rec.concurrence == 0.0:
            if start is None:
                start = i
        elif start is not None:
            runs.append((start, i - 1))
            start = None
    if start is not None:
        runs.append((start, len(records) - 1))
    return runs


def death_rebirth_count(records: list[CorrelationRecord]) -> tuple[int, float]:
    """Count sudden-death/rebirth events and the terminal dead span.

    Returns (number of exact-zero intervals that are followed by a positive
    concurrence again, duration of the trailing all-zero interval; 0.0 if
    the trajectory ends alive).
    """
    runs = concurrence_zero_runs(records)
    rebirths = 0
    terminal_span = 0.0
    for start, end in runs:
        preceded = start > 0
        followed = end < len(records) - 1
        if preceded and followed:
            rebirths += 1
        if not followed:
            terminal_span = records[-1].t - records[start].t
    return rebirths, terminal_span
