"""Truncated Hilbert space and elementary operators for two two-level atoms
coupled to one bosonic cavity mode.

Basis convention, fixed for the whole package: the product order is
atom A (x) atom B (x) field with the field index fastest, so a cavity trace
is a contiguous block sum.  Within each atom factor component 0 is the
excited state ``e`` and component 1 the ground state ``g``; the two-qubit
blocks therefore come out in the standard order |ee>, |eg>, |ge>, |gg>.
The flat index of |i_A, j_B, n> is

    index = (q_A * 2 + q_B) * (n_max + 1) + n,   q = 0 for e, 1 for g.

Operators are plain complex ndarrays (dense at these dimensions, at most a
few hundred); callers that want sparse storage can convert without loss.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ATOM_LEVELS = ("e", "g")

_SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
_SIGMA_PLUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)   # |e><g|
_SIGMA_MINUS = _SIGMA_PLUS.conj().T

_ATOM_OPS = {
    "sigma_z": _SIGMA_Z,
    "sigma_plus": _SIGMA_PLUS,
    "sigma_minus": _SIGMA_MINUS,
}


@dataclass(frozen=True)
class BasisSpec:
    """Truncated product basis |i_A, j_B, n> with n = 0 .. n_max."""

    n_max: int
    atom_count: int = 2

    def __post_init__(self):
        if self.n_max < 0:
            raise ValueError("n_max must be >= 0")
        if self.atom_count != 2:
            raise ValueError("exactly two atoms are supported")

    @property
    def field_dim(self) -> int:
        return self.n_max + 1

    @property
    def dim(self) -> int:
        return 4 * (self.n_max + 1)

    def index(self, atom_a: str, atom_b: str, n: int) -> int:
        """Flat index of the product state |atom_a, atom_b, n>."""
        qa = ATOM_LEVELS.index(atom_a)
        qb = ATOM_LEVELS.index(atom_b)
        if not 0 <= n <= self.n_max:
            raise ValueError(f"Fock index {n} outside 0..{self.n_max}")
        return (qa * 2 + qb) * self.field_dim + n


def build_basis(n_max: int) -> BasisSpec:
    """Basis for two atoms and a field truncated at Fock number n_max."""
    return BasisSpec(n_max=n_max)


def basis_state(basis: BasisSpec, atom_a: str, atom_b: str, n: int) -> np.ndarray:
    """Unit vector for the product state |atom_a, atom_b, n>."""
    vec = np.zeros(basis.dim, dtype=complex)
    vec[basis.index(atom_a, atom_b, n)] = 1.0
    return vec


def vacuum_density(basis: BasisSpec) -> np.ndarray:
    """Density matrix of the zero-excitation state |g_A, g_B, 0>."""
    vec = basis_state(basis, "g", "g", 0)
    return np.outer(vec, vec.conj())


def identity(basis: BasisSpec) -> np.ndarray:
    return np.eye(basis.dim, dtype=complex)


def _field_annihilation(field_dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, field_dim, dtype=float)), 1).astype(complex)


def _embed(basis: BasisSpec, op_a: np.ndarray, op_b: np.ndarray, op_f: np.ndarray) -> np.ndarray:
    return np.kron(np.kron(op_a, op_b), op_f)


def annihilation(basis: BasisSpec) -> np.ndarray:
    """Cavity annihilation operator, identity on both atom factors."""
    i2 = np.eye(2, dtype=complex)
    return _embed(basis, i2, i2, _field_annihilation(basis.field_dim))


def creation(basis: BasisSpec) -> np.ndarray:
    return annihilation(basis).conj().T


def atomic_operator(basis: BasisSpec, which_atom: str, kind: str) -> np.ndarray:
    """Pseudo-spin operator acting on one atom factor only.

    Parameters
    ----------
    which_atom : "A" or "B"
    kind : "sigma_z", "sigma_plus" or "sigma_minus"
    """
    try:
        op = _ATOM_OPS[kind]
    except KeyError:
        raise ValueError(f"unknown operator kind {kind!r}") from None
    i2 = np.eye(2, dtype=complex)
    i_f = np.eye(basis.field_dim, dtype=complex)
    if which_atom == "A":
        return _embed(basis, op, i2, i_f)
    if which_atom == "B":
        return _embed(basis, i2, op, i_f)
    raise ValueError(f"which_atom must be 'A' or 'B', got {which_atom!r}")


def excitation_operators(basis: BasisSpec) -> tuple[np.ndarray, np.ndarray]:
    """Total and atomic excitation-number operators (N_total, N_atoms).

    N_total = a†a + σ₊ᴬσ₋ᴬ + σ₊ᴮσ₋ᴮ and N_atoms is the purely atomic part.
    Both are real diagonal in the product basis.
    """
    a = annihilation(basis)
    n_field = a.conj().T @ a
    n_atoms = np.zeros_like(n_field)
    for atom in ("A", "B"):
        sp = atomic_operator(basis, atom, "sigma_plus")
        n_atoms += sp @ sp.conj().T
    return n_field + n_atoms, n_atoms
