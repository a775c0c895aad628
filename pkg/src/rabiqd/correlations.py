"""Two-qubit correlation measures.

Concurrence is computed both from the X-form closed expression and from the
general Wootters spin-flip spectrum (the latter doubles as an oracle for the
former).  Quantum discord is computed from the X-state closed form and,
independently, by brute-force minimization of the measured conditional
entropy over all projective measurements on atom B.  All entropies are
base 2 with the 0*log(0) = 0 convention.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .reduction import XState

_LOG_EPS = 1e-15          # probabilities below this contribute 0 to entropies
_EIG_CLAMP = -1e-8        # eigenvalues below this indicate a broken state
_IMAG_TOL = 1e-8
_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0

_SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]])
_SPIN_FLIP = np.kron(_SIGMA_Y, _SIGMA_Y).real   # real matrix with +-1 entries


@dataclass
class CorrelationRecord:
    """One output row of a simulation run."""

    t: float
    discord: float
    concurrence: float
    mutual_info: float
    classical_corr: float
    n_total: float
    n_atoms: float
    trace_dev: float
    herm_dev: float
    min_eig: float


def _plogp(p):
    """Elementwise -p*log2(p) with 0 log 0 = 0; accepts scalars or arrays."""
    p = np.asarray(p, dtype=float)
    safe = np.where(p > _LOG_EPS, p, 1.0)
    return np.where(p > _LOG_EPS, -safe * np.log2(safe), 0.0)


def binary_entropy(alpha: float) -> float:
    """Shannon entropy of a {alpha, 1-alpha} distribution, in bits.

    Canonicalized on min(alpha, 1-alpha) so exact complement pairs give
    bitwise-identical results.
    """
    lo = min(alpha, 1.0 - alpha)
    return float(_plogp(lo) + _plogp(1.0 - lo))


def von_neumann_entropy(rho: np.ndarray) -> float:
    """Base-2 von Neumann entropy, clamping tiny negative eigenvalues."""
    w = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if w[0] < _EIG_CLAMP:
        raise ValueError(f"density matrix has eigenvalue {w[0]:.3e} < {_EIG_CLAMP:.0e}")
    return float(np.sum(_plogp(np.clip(w, 0.0, None))))


def reduced_atom(rho_ab: np.ndarray, which: str) -> np.ndarray:
    """Single-qubit reduced state of a 4x4 two-qubit matrix ('A' or 'B')."""
    r = np.asarray(rho_ab).reshape(2, 2, 2, 2)
    if which == "A":
        return np.einsum("abcb->ac", r)
    if which == "B":
        return np.einsum("abad->bd", r)
    raise ValueError(f"which must be 'A' or 'B', got {which!r}")


def concurrence_x(x: XState) -> float:
    """Concurrence of an X-form state: 2 max{0, |r23| - sqrt(r11 r44), |r14| - sqrt(r22 r33)}."""
    c1 = abs(x.rho23) - np.sqrt(max(x.rho11 * x.rho44, 0.0))
    c2 = abs(x.rho14) - np.sqrt(max(x.rho22 * x.rho33, 0.0))
    return 2.0 * max(0.0, c1, c2)


def concurrence_general(rho_ab: np.ndarray) -> float:
    """Wootters concurrence of an arbitrary two-qubit density matrix.

    Uses the spin-flip spectrum: the eigenvalues of
    rho (sy x sy) rho* (sy x sy) are real and non-negative, and
    C = max{0, l1 - l2 - l3 - l4} with l_i the decreasing square roots.
    """
    rho_ab = np.asarray(rho_ab, dtype=complex)
    r_tilde = rho_ab @ _SPIN_FLIP @ rho_ab.conj() @ _SPIN_FLIP
    ev = np.linalg.eigvals(r_tilde)
    lam = np.sqrt(np.clip(ev.real, 0.0, None))
    lam.sort()
    return float(max(0.0, lam[3] - lam[2] - lam[1] - lam[0]))


def discord_x(x: XState) -> float:
    """Quantum discord of an X-form state (measurement on atom B).

    D = min{Q1, Q2} with Q_j = M(r11 + r33) + sum_i l_i log2 l_i + P_j,
    where l_i are the eigenvalues of the state, P1 = M(tau) with
    tau = (1 + sqrt((1 - 2(r33 + r44))^2 + 4(|r23| + |r14|)^2)) / 2,
    P2 = -sum_i r_ii log2 r_ii - M(r11 + r33), and M is the binary entropy.
    """
    pops = np.array(x.populations())
    lam = np.clip(np.linalg.eigvalsh(x.as_matrix()), 0.0, None)
    neg_s_ab = -float(np.sum(_plogp(lam)))      # sum_i l_i log2 l_i
    m_b = binary_entropy(x.rho11 + x.rho33)
    tau = 0.5 * (1.0 + np.sqrt((1.0 - 2.0 * (x.rho33 + x.rho44)) ** 2
                               + 4.0 * (abs(x.rho23) + abs(x.rho14)) ** 2))
    p1 = binary_entropy(tau)
    p2 = float(np.sum(_plogp(pops))) - m_b
    q1 = m_b + neg_s_ab + p1
    q2 = m_b + neg_s_ab + p2
    return max(0.0, min(q1, q2))


def mutual_information(rho_ab: np.ndarray) -> float:
    """Total correlations S(rho_A) + S(rho_B) - S(rho_AB), in bits."""
    return (von_neumann_entropy(reduced_atom(rho_ab, "A"))
            + von_neumann_entropy(reduced_atom(rho_ab, "B"))
            - von_neumann_entropy(rho_ab))


def _measured_conditional_entropy(rho_ab: np.ndarray):
    """Build f(theta, phi) -> conditional entropy of A after measuring B.

    The projector on B along the Bloch direction u(theta, phi) yields the
    unnormalized conditional state M(u) = Tr_B[rho (I x P_u)]
    = (T0 + ux Tx + uy Ty + uz Tz)/2; the four 2x2 coefficient matrices are
    precomputed so both grid (array) and refinement (scalar) evaluations are
    cheap closed forms of the 2x2 traces and determinants.
    """
    r = np.asarray(rho_ab, dtype=complex).reshape(2, 2, 2, 2)
    paulis = (
        np.eye(2, dtype=complex),
        np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
        np.array([[0.0, -1.0j], [1.0j, 0.0]]),
        np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
    )
    t = [np.einsum("abcd,db->ac", r, s) for s in paulis]

    def entropy_terms(m00, m11, m01_sq):
        tr = (m00 + m11).real
        det = (m00 * m11).real - m01_sq
        disc = np.sqrt(np.clip(tr * tr - 4.0 * det, 0.0, None))
        mu1 = np.clip(0.5 * (tr + disc), 0.0, None)
        mu2 = np.clip(0.5 * (tr - disc), 0.0, None)
        p = np.clip(tr, 0.0, None)
        # p * S(M/p) = -mu1 log mu1 - mu2 log mu2 + p log p
        return _plogp(mu1) + _plogp(mu2) - _plogp(p)

    def cond_entropy(theta, phi):
        ux = np.sin(theta) * np.cos(phi)
        uy = np.sin(theta) * np.sin(phi)
        uz = np.cos(theta)
        m00 = 0.5 * (t[0][0, 0] + ux * t[1][0, 0] + uy * t[2][0, 0] + uz * t[3][0, 0])
        m11 = 0.5 * (t[0][1, 1] + ux * t[1][1, 1] + uy * t[2][1, 1] + uz * t[3][1, 1])
        m01 = 0.5 * (t[0][0, 1] + ux * t[1][0, 1] + uy * t[2][0, 1] + uz * t[3][0, 1])
        m01_sq = (m01 * np.conj(m01)).real
        s_plus = entropy_terms(m00, m11, m01_sq)
        # complementary outcome: M' = T0 - M
        n00 = t[0][0, 0] - m00
        n11 = t[0][1, 1] - m11
        n01 = t[0][0, 1] - m01
        s_minus = entropy_terms(n00, n11, (n01 * np.conj(n01)).real)
        return s_plus + s_minus

    return cond_entropy


def _golden_min(f, lo, hi, n_shrink=28):
    """Golden-section minimum of a smooth 1-d function on [lo, hi]."""
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(n_shrink):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return (c, fc) if fc < fd else (d, fd)


def discord_bruteforce(rho_ab: np.ndarray, grid: int = 64, refine_iters: int = 50) -> float:
    """Quantum discord by direct minimization over projective measurements on B.

    Two stages: a coarse grid of ``grid`` polar by ``2*grid`` azimuthal
    angles, then ``refine_iters`` alternating golden-section line searches
    around the best grid point.  Serves as the independent oracle for
    :func:`discord_x`.
    """
    if grid < 64:
        raise ValueError("grid must provide at least 64 points per angle")
    rho_ab = np.asarray(rho_ab, dtype=complex)
    cond_entropy = _measured_conditional_entropy(rho_ab)

    thetas = np.linspace(0.0, np.pi, grid)
    phis = np.linspace(0.0, 2.0 * np.pi, 2 * grid, endpoint=False)
    th_grid, ph_grid = np.meshgrid(thetas, phis, indexing="ij")
    values = cond_entropy(th_grid, ph_grid)
    i, j = np.unravel_index(np.argmin(values), values.shape)
    theta, phi = float(th_grid[i, j]), float(ph_grid[i, j])
    best = float(values[i, j])

    w_theta = thetas[1] - thetas[0]
    w_phi = phis[1] - phis[0]
    for it in range(refine_iters):
        if it % 2 == 0:
            lo = max(0.0, theta - w_theta)
            hi = min(np.pi, theta + w_theta)
            theta, val = _golden_min(lambda th: float(cond_entropy(th, phi)), lo, hi)
            w_theta *= 0.5
        else:
            # phi is periodic; no clipping needed
            phi, val = _golden_min(lambda ph: float(cond_entropy(theta, ph)),
                                   phi - w_phi, phi + w_phi)
            w_phi *= 0.5
        best = min(best, val)

    s_b = von_neumann_entropy(reduced_atom(rho_ab, "B"))
    s_ab = von_neumann_entropy(rho_ab)
    return max(0.0, s_b - s_ab + best)


def expectation(state, op: np.ndarray) -> float:
    """Tr(rho op) for a Hermitian observable; rejects non-real results."""
    rho = getattr(state, "rho", state)
    if rho.shape != op.shape:
        raise ValueError(f"state shape {rho.shape} does not match operator {op.shape}")
    val = complex(np.einsum("ij,ji->", rho, op))
    if abs(val.imag) >= _IMAG_TOL:
        raise ValueError(f"expectation value has imaginary part {val.imag:.3e}")
    return float(val.real)


def random_x_state(rng: np.random.Generator) -> np.ndarray:
    """Random X-form density matrix (positive by construction, unit trace).

    The {11,14,41,44} and {22,23,32,33} blocks are sampled as independent
    normalized Wishart-style draws G G†.
    """
    blocks = []
    for _ in range(2):
        g = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        blocks.append(g @ g.conj().T)
    total = (np.trace(blocks[0]) + np.trace(blocks[1])).real
    outer = blocks[0] / total
    inner = blocks[1] / total
    m = np.zeros((4, 4), dtype=complex)
    m[0, 0], m[0, 3], m[3, 0], m[3, 3] = outer[0, 0], outer[0, 1], outer[1, 0], outer[1, 1]
    m[1, 1], m[1, 2], m[2, 1], m[2, 2] = inner[0, 0], inner[0, 1], inner[1, 0], inner[1, 1]
    return m


def random_pure_state(rng: np.random.Generator) -> np.ndarray:
    """Density matrix of a Haar-random pure two-qubit state."""
    psi = rng.normal(size=4) + 1j * rng.normal(size=4)
    psi /= np.linalg.norm(psi)
    return np.outer(psi, psi.conj())
