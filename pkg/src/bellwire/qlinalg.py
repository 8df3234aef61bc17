"""Dense complex linear algebra for small multi-qubit Hilbert spaces (dim <= 16).

All operators are plain ``numpy`` arrays of complex128 (i.e. pairs of 64-bit
floats).  Subsystem 0 is always the slowest-varying (leftmost) tensor factor;
every piece of dispatch and measurement code in this package relies on that
single convention.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MAX_DIM = 16

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-10
EIGENVALUE_TOL = 1e-8

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)

KET_0 = np.array([1, 0], dtype=complex)
KET_1 = np.array([0, 1], dtype=complex)


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(m.T)


def matrices_close(a: np.ndarray, b: np.ndarray, tol: float) -> bool:
    """Entrywise equality within an explicit absolute tolerance."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        return False
    return bool(np.max(np.abs(a - b)) <= tol) if a.size else True


def is_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    return matrices_close(m, dagger(m), tol)


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product; subsystem order follows the leftmost-slowest convention."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def kron_all(mats) -> np.ndarray:
    out = np.array([[1.0 + 0j]])
    for m in mats:
        out = np.kron(out, np.asarray(m, dtype=complex))
    return out


def ket(bits: str) -> np.ndarray:
    """Computational basis ket from a bit string, e.g. ``ket("01")``."""
    v = np.array([1.0 + 0j])
    for b in bits:
        v = np.kron(v, KET_0 if b == "0" else KET_1)
    return v


def projector(vec: np.ndarray) -> np.ndarray:
    v = np.asarray(vec, dtype=complex)
    v = v / np.linalg.norm(v)
    return np.outer(v, np.conj(v))


def phi_plus_state() -> np.ndarray:
    """Density matrix of (|00> + |11>)/sqrt(2)."""
    return projector(ket("00") + ket("11"))


def werner_state(v: float) -> np.ndarray:
    """v * |phi+><phi+| + (1 - v) * I/4."""
    return v * phi_plus_state() + (1.0 - v) * np.eye(4, dtype=complex) / 4.0


def hermitian_eig(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix.

    Returns eigenvalues in ascending order and the matrix whose columns are the
    corresponding orthonormal eigenvectors.  Non-Hermitian input is rejected.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not is_hermitian(m):
        raise ValueError("matrix is not Hermitian within 1e-10")
    vals, vecs = np.linalg.eigh(m)
    return vals.real, vecs


def expectation(rho: "DensityMatrix | np.ndarray", obs: "Observable | np.ndarray") -> float:
    """Tr(rho * O).  The imaginary part must vanish below 1e-9 and is discarded."""
    r = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    o = obs.matrix if isinstance(obs, Observable) else np.asarray(obs, dtype=complex)
    if r.shape != o.shape:
        raise ValueError(f"dimension mismatch: state {r.shape} vs observable {o.shape}")
    val = np.trace(r @ o)
    if abs(val.imag) >= 1e-9:
        raise ValueError(f"expectation has non-negligible imaginary part {val.imag:.3e}")
    return float(val.real)


def partial_trace(m: np.ndarray, keep, dims) -> np.ndarray:
    """Trace out all subsystems not listed in ``keep``.

    ``dims`` gives per-subsystem dimensions in tensor order; their product must
    equal the matrix dimension.  ``keep`` preserves the listed subsystems in
    the order given.
    """
    m = np.asarray(m, dtype=complex)
    dims = list(dims)
    n = len(dims)
    keep = list(keep)
    if int(np.prod(dims)) != m.shape[0] or m.shape[0] != m.shape[1]:
        raise ValueError(f"dims {dims} incompatible with matrix shape {m.shape}")
    if any(k < 0 or k >= n for k in keep) or len(set(keep)) != len(keep):
        raise ValueError(f"invalid subsystem indices {keep} for {n} subsystems")
    traced = [i for i in range(n) if i not in keep]
    t = m.reshape(dims + dims)
    # Contract row/column indices of each traced subsystem, highest index first
    # so earlier positions stay valid.
    for i in sorted(traced, reverse=True):
        t = np.trace(t, axis1=i, axis2=i + (t.ndim // 2))
    d_keep = int(np.prod([dims[k] for k in keep])) if keep else 1
    out = t.reshape(d_keep, d_keep)
    if keep != sorted(keep):
        order = np.argsort(np.argsort(keep))
        sorted_dims = [dims[k] for k in sorted(keep)]
        t = out.reshape(sorted_dims + sorted_dims)
        perm = list(order) + [len(keep) + int(i) for i in order]
        out = np.transpose(t, perm).reshape(d_keep, d_keep)
    return out


def _check_power_of_two(dim: int) -> None:
    if dim < 1 or dim > MAX_DIM or (dim & (dim - 1)) != 0:
        raise ValueError(f"dimension {dim} is not a power of 2 within [1, {MAX_DIM}]")


@dataclass(frozen=True)
class DensityMatrix:
    """A validated quantum state: Hermitian, unit trace, positive semidefinite."""

    matrix: np.ndarray
    dim: int = field(init=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", m)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"density matrix must be square, got {m.shape}")
        dim = m.shape[0]
        _check_power_of_two(dim)
        object.__setattr__(self, "dim", dim)
        if not is_hermitian(m):
            raise ValueError("density matrix is not Hermitian within 1e-10")
        tr = np.trace(m)
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"trace {tr} differs from 1 beyond 1e-10")
        eigs = np.linalg.eigvalsh(m)
        if eigs.min() < -PSD_TOL:
            raise ValueError(f"negative eigenvalue {eigs.min():.3e} below -1e-10")
        m.setflags(write=False)

    def reduced(self, keep, dims) -> "DensityMatrix":
        return DensityMatrix(partial_trace(self.matrix, keep, dims))


@dataclass(frozen=True)
class Observable:
    """A two-outcome observable: Hermitian with eigenvalues in {-1, +1}."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", m)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"observable must be square, got {m.shape}")
        if not is_hermitian(m):
            raise ValueError("observable is not Hermitian within 1e-10")
        eigs = np.linalg.eigvalsh(m)
        if np.max(np.abs(np.abs(eigs) - 1.0)) > EIGENVALUE_TOL:
            raise ValueError(f"eigenvalues {eigs} are not +/-1 within 1e-8")
        m.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def outcome_projectors(self) -> tuple[np.ndarray, np.ndarray]:
        """Projectors onto the +1 and -1 eigenspaces."""
        vals, vecs = hermitian_eig(self.matrix)
        plus = vecs[:, vals > 0]
        p_plus = plus @ dagger(plus)
        return p_plus, np.eye(self.dim, dtype=complex) - p_plus


def sign_observable(effective: np.ndarray, planar: bool = False) -> np.ndarray:
    """Observable with eigenvalues +/-1 maximizing Tr(O * effective).

    This is the sign decomposition of the Hermitian ``effective`` operator:
    each eigenprojector is weighted by the sign of its eigenvalue (zero
    eigenvalues map to +1 for determinism).  With ``planar`` the operator is
    first projected onto the real (z-x plane) span, so the result stays a
    real-symmetric qubit observable.
    """
    e = np.asarray(effective, dtype=complex)
    if planar:
        e = e.real.astype(complex)
    vals, vecs = hermitian_eig(e)
    signs = np.where(vals >= 0.0, 1.0, -1.0)
    return (vecs * signs) @ dagger(vecs)
