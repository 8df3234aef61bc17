"""Independent oracles used by the tests.

Everything here deliberately avoids the library's optimization and
partial-trace code paths: the grid search eliminates two angles analytically
and scans the rest; the brute-force protocol value works on the full
three-qubit dispatched states; the bootstrap resamples raw counts.
"""

from __future__ import annotations

import numpy as np

from bellwire import qlinalg
from bellwire.protocol import ProtocolSpec, dispatch_state
from bellwire.tables import CASE_TO_SETTING2_PARTY, case_for_triple


def planar_triangle_value(angles: np.ndarray, s: float) -> np.ndarray:
    """Bell value of the twelve-term functional for planar (z-x) observables.

    ``angles`` has shape (..., 6) holding (a0, a1, b0, b1, c0, c1); the pair
    correlator on the dispatched state is cos(u)cos(v) + s*sin(u)sin(v) with
    s = sin(2 theta).
    """
    a0, a1, b0, b1, c0, c1 = np.moveaxis(np.asarray(angles, dtype=float), -1, 0)

    def corr(u, v):
        return np.cos(u) * np.cos(v) + s * np.sin(u) * np.sin(v)

    def block(u0, u1, v0, v1):
        return corr(u0, v0) + corr(u0, v1) + corr(u1, v0) - corr(u1, v1)

    return block(a0, a1, b0, b1) + block(a0, a1, c0, c1) + block(b0, b1, c0, c1)


def grid_search_optimum(s: float, base_points: int = 24, passes: int = 4) -> float:
    """Coarse grid over four angles with the first party's pair eliminated
    analytically, then local refinement around the best cell."""

    def reduced_value(b0, b1, c0, c1):
        cos_sum = np.cos(b0) + np.cos(b1) + np.cos(c0) + np.cos(c1)
        sin_sum = np.sin(b0) + np.sin(b1) + np.sin(c0) + np.sin(c1)
        cos_diff = np.cos(b0) - np.cos(b1) + np.cos(c0) - np.cos(c1)
        sin_diff = np.sin(b0) - np.sin(b1) + np.sin(c0) - np.sin(c1)
        best_a0 = np.hypot(cos_sum, s * sin_sum)
        best_a1 = np.hypot(cos_diff, s * sin_diff)
        chsh_bc = (
            np.cos(b0) * np.cos(c0) + s * np.sin(b0) * np.sin(c0)
            + np.cos(b0) * np.cos(c1) + s * np.sin(b0) * np.sin(c1)
            + np.cos(b1) * np.cos(c0) + s * np.sin(b1) * np.sin(c0)
            - np.cos(b1) * np.cos(c1) - s * np.sin(b1) * np.sin(c1)
        )
        return chsh_bc + best_a0 + best_a1

    centers = np.zeros(4)
    half_width = np.pi
    best = -np.inf
    for _ in range(passes):
        axes = [
            np.linspace(c - half_width, c + half_width, base_points)
            for c in centers
        ]
        grids = np.meshgrid(*axes, indexing="ij")
        values = reduced_value(*grids)
        idx = np.unravel_index(np.argmax(values), values.shape)
        best = float(values[idx])
        centers = np.array([axes[k][idx[k]] for k in range(4)])
        half_width /= base_points / 2.5
    return best


def brute_force_bell_value(spec: ProtocolSpec, terms: dict, measurements=None) -> float:
    """Functional value via full 8x8 operator traces on the dispatched states."""
    meas = spec.measurements if measurements is None else measurements
    eye = np.eye(2, dtype=complex)
    total = 0.0
    for triple, coeff in terms.items():
        case, _pair = case_for_triple(triple)
        q = CASE_TO_SETTING2_PARTY[case]
        rho = dispatch_state(spec, [2 if p == q else triple[p] for p in range(3)]).matrix
        ops = [eye if p == q else meas[p][triple[p]] for p in range(3)]
        value = np.trace(qlinalg.kron_all(ops) @ rho).real
        total += coeff * float(value) * spec.classical_bias[q]
    return total


def bootstrap_stderr(
    cell_counts: np.ndarray, classical_counts: np.ndarray, replicas: int, seed: int
) -> float:
    """Poisson-resampled standard deviation of the two-ratio estimator."""
    rng = np.random.default_rng(seed)
    signs = np.array([[1.0, -1.0], [-1.0, 1.0]])
    estimates = []
    for _ in range(replicas):
        cell = rng.poisson(cell_counts).astype(float)
        classical = rng.poisson(classical_counts).astype(float)
        if cell.sum() == 0 or classical.sum() == 0:
            continue
        ratio = (signs * cell).sum() / cell.sum()
        contrast = (classical[0] - classical[1]) / classical.sum()
        estimates.append(ratio * contrast)
    return float(np.std(estimates, ddof=1))
