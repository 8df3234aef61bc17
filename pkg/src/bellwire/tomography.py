"""Synthetic two-qubit tomography and polarization-visibility analysis.

Horizontal and vertical polarization map to |0> and |1>.  Reconstruction is
linear inversion from the nine two-axis Pauli settings followed by projection
onto the positive cone (eigenvalue clipping and trace renormalization);
maximum-likelihood fitting is deliberately out of scope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import qlinalg
from .qlinalg import DensityMatrix, Observable

AXES = ("x", "y", "z")
PAULI = {"x": qlinalg.PAULI_X, "y": qlinalg.PAULI_Y, "z": qlinalg.PAULI_Z}
SETTINGS = tuple((a1, a2) for a1 in AXES for a2 in AXES)


@dataclass(frozen=True)
class TomographyCounts:
    """Outcome counts for each of the nine local Pauli-axis pairs.

    ``counts[(axis1, axis2)]`` is a (2, 2) array over (+,-) x (+,-) outcome
    indices summing to ``shots``.
    """

    counts: dict
    shots: int

    def __post_init__(self):
        clean = {}
        for setting, table in self.counts.items():
            if setting not in SETTINGS:
                raise ValueError(f"unknown setting {setting}")
            table = np.asarray(table, dtype=np.int64)
            if table.shape != (2, 2) or table.min() < 0:
                raise ValueError(f"bad count table for setting {setting}")
            if int(table.sum()) != self.shots:
                raise ValueError(f"setting {setting} counts do not sum to shots")
            clean[setting] = table
        object.__setattr__(self, "counts", clean)


@dataclass(frozen=True)
class VisibilityCurve:
    theta1: float
    theta2: np.ndarray
    rate: np.ndarray
    visibility: float
    degenerate: bool = False

    def __post_init__(self):
        if not self.degenerate and not -1e-9 <= self.visibility <= 1.0 + 1e-6:
            raise ValueError(f"fitted visibility {self.visibility} outside [0, 1]")


def _setting_probabilities(rho: np.ndarray, setting) -> np.ndarray:
    projs = [Observable(PAULI[a]).outcome_projectors() for a in setting]
    p = np.zeros((2, 2))
    for i in range(2):
        for j in range(2):
            op = qlinalg.kron(projs[0][i], projs[1][j])
            p[i, j] = max(0.0, float(np.trace(op @ rho).real))
    return p / p.sum()


def synthesize_tomography_counts(
    rho: DensityMatrix, shots: int, seed: int
) -> TomographyCounts:
    """Multinomial outcome counts for every setting; deterministic per seed."""
    if rho.dim != 4:
        raise ValueError("tomography expects a two-qubit state")
    if shots < 1:
        raise ValueError("need at least one shot per setting")
    rng = np.random.default_rng(seed)
    counts = {}
    for setting in SETTINGS:
        p = _setting_probabilities(rho.matrix, setting)
        counts[setting] = rng.multinomial(shots, p.reshape(4)).reshape(2, 2)
    return TomographyCounts(counts=counts, shots=shots)


def exact_tomography_expectations(rho: DensityMatrix) -> dict:
    """Infinite-shot limit: exact outcome probabilities instead of counts."""
    return {s: _setting_probabilities(rho.matrix, s) for s in SETTINGS}


def _pauli_expectations(tables: dict) -> np.ndarray:
    """4x4 table of <s_i x s_j> with index 0 = identity, estimated from data.

    Two-axis values come from their own setting; single-axis marginals are
    averaged over the three partner settings.
    """
    e = np.zeros((4, 4))
    e[0, 0] = 1.0
    sign = np.array([1.0, -1.0])
    freq = {s: np.asarray(t, dtype=float) / np.asarray(t, dtype=float).sum() for s, t in tables.items()}
    for i, a1 in enumerate(AXES, start=1):
        for j, a2 in enumerate(AXES, start=1):
            e[i, j] = float(sign @ freq[(a1, a2)] @ sign)
    for i, a1 in enumerate(AXES, start=1):
        e[i, 0] = float(np.mean([sign @ freq[(a1, a2)].sum(axis=1) for a2 in AXES]))
    for j, a2 in enumerate(AXES, start=1):
        e[0, j] = float(np.mean([sign @ freq[(a1, a2)].sum(axis=0) for a1 in AXES]))
    return e


def reconstruct_density(counts: TomographyCounts | dict) -> DensityMatrix:
    """Linear inversion from Pauli expectations, then PSD projection.

    Accepts synthesized counts or the exact probability tables from
    :func:`exact_tomography_expectations`.  Negative eigenvalues are clipped
    at zero and the trace renormalized, so the result is always a valid state.
    """
    tables = counts.counts if isinstance(counts, TomographyCounts) else counts
    missing = [s for s in SETTINGS if s not in tables]
    if missing:
        raise ValueError(f"missing tomography settings: {missing}")
    e = _pauli_expectations(tables)
    basis = [np.eye(2, dtype=complex), PAULI["x"], PAULI["y"], PAULI["z"]]
    rho = np.zeros((4, 4), dtype=complex)
    for i in range(4):
        for j in range(4):
            rho += e[i, j] * qlinalg.kron(basis[i], basis[j])
    rho /= 4.0
    vals, vecs = np.linalg.eigh(rho)
    vals = np.clip(vals, 0.0, None)
    rho = (vecs * vals) @ np.conj(vecs.T)
    rho /= np.trace(rho).real
    return DensityMatrix(rho)


def fidelity_to_bell_state(rho: DensityMatrix) -> float:
    """<phi+| rho |phi+> for a two-qubit state."""
    if rho.dim != 4:
        raise ValueError("expected a two-qubit state")
    phi = (qlinalg.ket("00") + qlinalg.ket("11")) / math.sqrt(2.0)
    val = float(np.real(np.conj(phi) @ rho.matrix @ phi))
    return min(max(val, 0.0), 1.0)


def polarizer_projector(theta: float) -> np.ndarray:
    """Projector onto cos(theta)|H> + sin(theta)|V>."""
    vec = math.cos(theta) * qlinalg.KET_0 + math.sin(theta) * qlinalg.KET_1
    return qlinalg.projector(vec)


def visibility_curve(rho: DensityMatrix, theta1: float, theta2_grid) -> VisibilityCurve:
    """Coincidence fringe behind two polarizers and its fitted contrast.

    The rate is Tr[rho (P(theta1) x P(theta2))]; the fit is least squares to
    A + B cos(2 (theta2 - phase)) with the angular frequency pinned to the
    polarizer period, and V = B/A = (max - min)/(max + min).
    """
    if rho.dim != 4:
        raise ValueError("expected a two-qubit state")
    theta2 = np.asarray(list(theta2_grid), dtype=float)
    if theta2.size < 3:
        raise ValueError("need at least three analyzer angles to fit")
    p1 = polarizer_projector(theta1)
    rate = np.array(
        [
            float(np.trace(qlinalg.kron(p1, polarizer_projector(t2)) @ rho.matrix).real)
            for t2 in theta2
        ]
    )
    design = np.column_stack([np.ones_like(theta2), np.cos(2 * theta2), np.sin(2 * theta2)])
    coeffs, *_ = np.linalg.lstsq(design, rate, rcond=None)
    offset, c_cos, c_sin = coeffs
    amplitude = math.hypot(c_cos, c_sin)
    if offset <= 1e-12 or amplitude <= 1e-12 * max(1.0, offset):
        return VisibilityCurve(
            theta1=theta1, theta2=theta2, rate=rate, visibility=0.0, degenerate=True
        )
    visibility = amplitude / offset
    return VisibilityCurve(theta1=theta1, theta2=theta2, rate=rate, visibility=visibility)
