"""Alternating eigen-optimization lower bounds on quantum values.

For a fixed shared state, each party's observable update is the sign
decomposition of its effective operator (the optimum of a linear objective
over Hermitian matrices with +/-1 eigenvalues); for fixed observables the
state update is the top eigenvector of the Bell operator.  Both steps are
exact maximizations, so the objective sequence is non-decreasing and the
final value is always a valid lower bound.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import qlinalg
from .bellcore import BellFunctional, QuantumStrategy
from .qlinalg import DensityMatrix, Observable

DEFAULT_RESTARTS = 20
DEFAULT_ITERS = 200
CONVERGENCE_GAIN = 1e-10
MONOTONICITY_SLACK = 1e-9


@dataclass(frozen=True)
class SeesawResult:
    value: float
    strategy: QuantumStrategy
    objective_trace: tuple[float, ...]


def _correlation_weights(f: BellFunctional) -> dict:
    """Expand the functional over products of observables.

    Writing each outcome element as (I + s*O)/2 turns the probability-form
    functional into sum over (inputs, party subset) of w * tensor(O or I);
    the weights w are independent of the observables and computed once.
    """
    m = f.scenario.n_parties
    weights: dict = {}
    scale = 2.0**-m
    for (inputs, outputs), coeff in f.terms.items():
        signs = [1 - 2 * a for a in outputs]
        for subset in itertools.product((False, True), repeat=m):
            w = coeff * scale * math.prod(s for s, in_s in zip(signs, subset) if in_s)
            key = (inputs, subset)
            weights[key] = weights.get(key, 0.0) + w
    return {k: w for k, w in weights.items() if abs(w) > 1e-15}


def _operator(weights, observables, dims) -> np.ndarray:
    d = math.prod(dims)
    total = np.zeros((d, d), dtype=complex)
    eyes = [np.eye(k, dtype=complex) for k in dims]
    for (inputs, subset), w in weights.items():
        total += w * qlinalg.kron_all(
            observables[p][inputs[p]] if subset[p] else eyes[p] for p in range(len(dims))
        )
    return total


def _effective_operators(weights, observables, rho, dims, party):
    """Per input of ``party``, the operator E with objective term Tr(O_input E)."""
    m = len(dims)
    eyes = [np.eye(k, dtype=complex) for k in dims]
    effective: dict[int, np.ndarray] = {}
    for (inputs, subset), w in weights.items():
        if not subset[party]:
            continue
        others = qlinalg.kron_all(
            eyes[p] if p == party else (observables[p][inputs[p]] if subset[p] else eyes[p])
            for p in range(m)
        )
        cond = qlinalg.partial_trace(others @ rho, keep=[party], dims=dims)
        x = inputs[party]
        effective[x] = effective.get(x, np.zeros_like(cond)) + w * cond
    return effective


def _initial_observables(rng: np.random.Generator, scenario, dims):
    obs = []
    for p in range(scenario.n_parties):
        row = []
        for _ in range(scenario.inputs_per_party[p]):
            if dims[p] == 2:
                angle = rng.uniform(0.0, 2.0 * np.pi)
                row.append(np.cos(angle) * qlinalg.PAULI_Z + np.sin(angle) * qlinalg.PAULI_X)
            else:
                h = rng.normal(size=(dims[p], dims[p]))
                row.append(qlinalg.sign_observable(h + h.T))
        obs.append(row)
    return obs


def seesaw(
    f: BellFunctional,
    local_dims,
    seed: int = 0,
    restarts: int = DEFAULT_RESTARTS,
    iters: int = DEFAULT_ITERS,
) -> SeesawResult:
    """Best quantum value found over seeded random restarts (a lower bound)."""
    dims = tuple(int(d) for d in local_dims)
    if math.prod(dims) > qlinalg.MAX_DIM:
        raise ValueError(f"total dimension {math.prod(dims)} exceeds {qlinalg.MAX_DIM}")
    sc = f.scenario
    if len(dims) != sc.n_parties:
        raise ValueError("one local dimension per party required")
    weights = _correlation_weights(f)
    rng = np.random.default_rng(seed)

    best: tuple[float, list, np.ndarray, tuple] | None = None
    for _ in range(max(1, restarts)):
        observables = _initial_observables(rng, sc, dims)
        op = _operator(weights, observables, dims)
        vals, vecs = qlinalg.hermitian_eig(op)
        rho = qlinalg.projector(vecs[:, -1])
        objective = float(np.trace(op @ rho).real)
        trace = [objective]
        for _ in range(max(1, iters)):
            for p in range(sc.n_parties):
                for x, eff in _effective_operators(weights, observables, rho, dims, p).items():
                    observables[p][x] = qlinalg.sign_observable(eff)
            op = _operator(weights, observables, dims)
            vals, vecs = qlinalg.hermitian_eig(op)
            rho = qlinalg.projector(vecs[:, -1])
            new_objective = float(vals[-1])
            if new_objective < objective - MONOTONICITY_SLACK:
                raise AssertionError(
                    f"seesaw objective decreased: {objective} -> {new_objective}"
                )
            gain = new_objective - objective
            objective = new_objective
            trace.append(objective)
            if gain < CONVERGENCE_GAIN:
                break
        if best is None or objective > best[0]:
            best = (objective, observables, rho, tuple(trace))

    value, observables, rho, trace = best
    strategy = QuantumStrategy(
        scenario=sc,
        state=DensityMatrix(rho),
        observables=tuple(tuple(Observable(o) for o in row) for row in observables),
        local_dims=dims,
    )
    return SeesawResult(value=value, strategy=strategy, objective_trace=trace)
