"""Dense operator utilities for small lattice Hilbert spaces.

All operators are square complex128 ndarrays. Tensor factors are ordered
most-significant first, so kron(A, B) acts on index i_A * dim_B + i_B.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_HILBERT_DIM = 4096
HERMITICITY_TOL = 1e-10

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
ID2 = np.eye(2, dtype=complex)


class CapacityError(ValueError):
    """Requested Hilbert-space dimension exceeds the configured maximum."""


def _as_square(op: np.ndarray, name: str = "operator") -> np.ndarray:
    m = np.asarray(op, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {m.shape}")
    return m


def kron(a: np.ndarray, b: np.ndarray, max_dim: int = MAX_HILBERT_DIM) -> np.ndarray:
    """Tensor product a (x) b with a capacity check on the result dimension."""
    a = _as_square(a, "a")
    b = _as_square(b, "b")
    dim = a.shape[0] * b.shape[0]
    if dim > max_dim:
        raise CapacityError(
            f"kron result dimension {dim} exceeds maximum {max_dim}"
        )
    return np.kron(a, b)


def kron_all(ops: list[np.ndarray], max_dim: int = MAX_HILBERT_DIM) -> np.ndarray:
    """Tensor product of a list of operators, left factor most significant."""
    if not ops:
        raise ValueError("kron_all needs at least one operator")
    dim = 1
    for op in ops:
        dim *= _as_square(op).shape[0]
    if dim > max_dim:
        raise CapacityError(
            f"kron_all result dimension {dim} exceeds maximum {max_dim}"
        )
    out = np.asarray(ops[0], dtype=complex)
    for op in ops[1:]:
        out = np.kron(out, op)
    return out


def embed_site_operator(
    op: np.ndarray,
    factor: int,
    local_dims: list[int],
    max_dim: int = MAX_HILBERT_DIM,
) -> np.ndarray:
    """Embed a local operator at tensor-factor position `factor`.

    `local_dims` lists the dimension of every factor in order; identities fill
    the remaining slots.
    """
    op = _as_square(op, "local operator")
    if not 0 <= factor < len(local_dims):
        raise ValueError(f"factor index {factor} out of range for {len(local_dims)} factors")
    if op.shape[0] != local_dims[factor]:
        raise ValueError(
            f"local operator dimension {op.shape[0]} does not match factor dimension "
            f"{local_dims[factor]}"
        )
    factors = [np.eye(d, dtype=complex) for d in local_dims]
    factors[factor] = op
    return kron_all(factors, max_dim=max_dim)


def hermiticity_defect(op: np.ndarray) -> float:
    """Max-norm asymmetry |op - op^dagger|_max."""
    op = _as_square(op)
    return float(np.max(np.abs(op - op.conj().T)))


def require_hermitian(op: np.ndarray, tol: float = HERMITICITY_TOL, name: str = "operator") -> np.ndarray:
    op = _as_square(op, name)
    defect = hermiticity_defect(op)
    if defect > tol:
        raise ValueError(f"{name} is not Hermitian: max asymmetry {defect:.3e} > {tol:.1e}")
    return op


@dataclass
class HermitianEigensystem:
    """Eigendecomposition H = U diag(e) U^dagger with a fixed phase convention.

    Eigenvalues ascend; each eigenvector column is rephased so its
    largest-magnitude component is real and positive (first index wins ties),
    which pins the decomposition for reproducible downstream output.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def to_eigenbasis(self, op: np.ndarray) -> np.ndarray:
        """Transform a lab-basis operator into this eigenbasis."""
        op = _as_square(op)
        if op.shape[0] != self.dim:
            raise ValueError(f"operator dimension {op.shape[0]} does not match {self.dim}")
        u = self.eigenvectors
        return u.conj().T @ op @ u

    def from_eigenbasis(self, op: np.ndarray) -> np.ndarray:
        op = _as_square(op)
        if op.shape[0] != self.dim:
            raise ValueError(f"operator dimension {op.shape[0]} does not match {self.dim}")
        u = self.eigenvectors
        return u @ op @ u.conj().T

    def bohr_frequencies(self) -> np.ndarray:
        """Matrix of transition frequencies w[a, b] = e_a - e_b."""
        e = self.eigenvalues
        return e[:, None] - e[None, :]


def hermitian_eig(h: np.ndarray, tol: float = HERMITICITY_TOL) -> HermitianEigensystem:
    """Diagonalize a Hermitian operator with the fixed phase convention."""
    h = require_hermitian(h, tol=tol, name="hamiltonian")
    vals, vecs = np.linalg.eigh(h)
    for k in range(vecs.shape[1]):
        col = vecs[:, k]
        i = int(np.argmax(np.abs(col)))
        pivot = col[i]
        mag = abs(pivot)
        if mag > 0.0:
            vecs[:, k] = col * (pivot.conjugate() / mag)
    return HermitianEigensystem(eigenvalues=vals, eigenvectors=vecs)


def expectation(
    rho: np.ndarray,
    obs: np.ndarray,
    trace_tol: float = 1e-6,
    imag_tol: float = 1e-8,
) -> float:
    """Re Tr(rho obs) for a unit-trace state, warning on imaginary residue."""
    rho = _as_square(rho, "state")
    obs = _as_square(obs, "observable")
    if rho.shape != obs.shape:
        raise ValueError(f"shape mismatch {rho.shape} vs {obs.shape}")
    tr = np.trace(rho)
    if abs(tr - 1.0) > trace_tol:
        raise ValueError(f"state trace {tr} deviates from 1 beyond {trace_tol:.1e}")
    val = np.sum(rho * obs.T)
    if abs(val.imag) > imag_tol:
        import warnings

        warnings.warn(
            f"expectation has imaginary part {val.imag:.3e}", RuntimeWarning, stacklevel=2
        )
    return float(val.real)


def commutator_norm(a: np.ndarray, b: np.ndarray) -> float:
    """Frobenius norm of [a, b]."""
    a = _as_square(a, "a")
    b = _as_square(b, "b")
    return float(np.linalg.norm(a @ b - b @ a))
