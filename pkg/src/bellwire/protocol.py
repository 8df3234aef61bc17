"""Exact simulation of the dynamical swap protocol.

A two-qubit state cos(theta)|00> + sin(theta)|11> is produced between the
first two slots, a single-qubit state sits in the third, and the source
permutes the three particles according to which party announced setting 2.
That party's output is a classical +/-1 signal with mean ``beta``; the other
two measure their shared pair.  Everything here is exact (no sampling).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from . import qlinalg
from .bellcore import CorrelatorFunctional, Scenario
from .qlinalg import DensityMatrix, Observable
from .tables import (
    CASE_TO_PAIR,
    CASE_TO_SETTING2_PARTY,
    CorrelatorEstimate,
    CorrelatorTable,
    TRIPLES,
    case_for_triple,
)

DEFAULT_SWAP_RULES = ((2, 1, 0), (0, 2, 1), (0, 1, 2))
UNIFORM_CASE_PROBS = (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)
EXPERIMENT_CASE_PROBS = (0.33549, 0.33241, 0.33210)
EXPERIMENT_BIAS = 0.97


def default_measurements() -> tuple[tuple[np.ndarray, np.ndarray], ...]:
    """Detector-setting observables: A0=C0=sz, A1=C1=sx, By=(sz+(-1)^y sx)/sqrt2."""
    sz, sx = qlinalg.PAULI_Z, qlinalg.PAULI_X
    b = [(sz + (-1) ** y * sx) / math.sqrt(2.0) for y in range(2)]
    return ((sz, sx), tuple(b), (sz, sx))


def epr_state(theta: float) -> DensityMatrix:
    """Projector onto cos(theta)|00> + sin(theta)|11>, theta in (0, pi/2)."""
    if not 0.0 < theta < math.pi / 2.0:
        raise ValueError(f"theta {theta} outside (0, pi/2)")
    vec = math.cos(theta) * qlinalg.ket("00") + math.sin(theta) * qlinalg.ket("11")
    return DensityMatrix(qlinalg.projector(vec))


def swap_operator() -> np.ndarray:
    """S|ij> = |ji| on two qubits; Hermitian, unitary, S^2 = I."""
    s = np.zeros((4, 4), dtype=complex)
    for i in range(2):
        for j in range(2):
            s[2 * i + j, 2 * j + i] = 1.0
    return s


def permute_subsystems(rho: np.ndarray, perm, dims) -> np.ndarray:
    """Density matrix after relabeling: output slot i carries input slot perm[i]."""
    dims = list(dims)
    n = len(dims)
    perm = list(perm)
    if sorted(perm) != list(range(n)):
        raise ValueError(f"{perm} is not a permutation of {list(range(n))}")
    t = np.asarray(rho, dtype=complex).reshape(dims + dims)
    axes = perm + [n + p for p in perm]
    d = int(np.prod(dims))
    return np.transpose(t, axes).reshape(d, d)


@dataclass(frozen=True)
class ProtocolSpec:
    """Protocol configuration: source state, dispatch rules, measurements, biases.

    ``swap_rules[q]`` is the particle permutation applied when party ``q``
    holds setting 2; ``classical_bias[q]`` is the mean of that party's +/-1
    classical output; ``case_probs`` follow the QRNG case encoding.
    """

    theta: float
    base_state_c: np.ndarray = None
    swap_rules: tuple = DEFAULT_SWAP_RULES
    measurements: tuple = None
    classical_bias: tuple[float, float, float] = (1.0, 1.0, 1.0)
    case_probs: tuple[float, float, float] = UNIFORM_CASE_PROBS

    def __post_init__(self):
        if not 0.0 < self.theta < math.pi / 2.0:
            raise ValueError(f"theta {self.theta} outside (0, pi/2)")
        base = self.base_state_c
        if base is None:
            base = qlinalg.projector(qlinalg.KET_0)
        base = np.asarray(base, dtype=complex)
        DensityMatrix(base)  # validates
        object.__setattr__(self, "base_state_c", base)

        meas = self.measurements
        if meas is None:
            meas = default_measurements()
        meas = tuple(
            tuple(np.asarray(m, dtype=complex) for m in row) for row in meas
        )
        if len(meas) != 3 or any(len(row) != 2 for row in meas):
            raise ValueError("measurements must give each party observables for inputs 0 and 1")
        for row in meas:
            for m in row:
                Observable(m)  # validates
        object.__setattr__(self, "measurements", meas)

        rules = tuple(tuple(int(i) for i in p) for p in self.swap_rules)
        if len(rules) != 3 or any(sorted(p) != [0, 1, 2] for p in rules):
            raise ValueError("swap_rules must map each party to a 3-particle permutation")
        object.__setattr__(self, "swap_rules", rules)

        bias = tuple(float(b) for b in self.classical_bias)
        if len(bias) != 3 or any(not -1.0 <= b <= 1.0 for b in bias):
            raise ValueError("classical_bias entries must lie in [-1, 1]")
        object.__setattr__(self, "classical_bias", bias)

        probs = tuple(float(p) for p in self.case_probs)
        if len(probs) != 3 or any(p < 0.0 for p in probs):
            raise ValueError("case_probs must be nonnegative")
        if abs(sum(probs) - 1.0) > 1e-12:
            raise ValueError(f"case_probs sum {sum(probs)} differs from 1 beyond 1e-12")
        object.__setattr__(self, "case_probs", probs)

    def with_measurements(self, measurements) -> "ProtocolSpec":
        return replace(self, measurements=measurements)

    def with_theta(self, theta: float) -> "ProtocolSpec":
        return replace(self, theta=theta)


def paper_default(theta: float = math.pi / 4.0) -> ProtocolSpec:
    return ProtocolSpec(theta=theta)


def experiment() -> ProtocolSpec:
    """Preset matching the published run: bias 0.97, measured case frequencies."""
    return ProtocolSpec(
        theta=math.pi / 4.0,
        classical_bias=(EXPERIMENT_BIAS,) * 3,
        case_probs=EXPERIMENT_CASE_PROBS,
    )

PRESETS = {"paper-default": paper_default, "experiment": experiment}


def dispatch_state(spec: ProtocolSpec, inputs, visibility: float = 1.0) -> DensityMatrix:
    """Three-qubit state sent out for the given input triple.

    Exactly one input must equal 2.  With ``visibility`` v < 1 the entangled
    pair is replaced by v * pure + (1 - v) * I/4 before dispatch.
    """
    inputs = tuple(int(x) for x in inputs)
    twos = [p for p, x in enumerate(inputs) if x == 2]
    if len(twos) != 1:
        raise ValueError(f"inputs {inputs} must contain exactly one setting 2")
    pair = epr_state(spec.theta).matrix
    if visibility != 1.0:
        pair = visibility * pair + (1.0 - visibility) * np.eye(4, dtype=complex) / 4.0
    rho = qlinalg.kron(pair, spec.base_state_c)
    rho = permute_subsystems(rho, spec.swap_rules[twos[0]], (2, 2, 2))
    return DensityMatrix(rho)


def _pair_state(spec: ProtocolSpec, case: int, visibility: float = 1.0) -> np.ndarray:
    q = CASE_TO_SETTING2_PARTY[case]
    triple = [0, 0, 0]
    triple[q] = 2
    rho = dispatch_state(spec, triple, visibility=visibility).matrix
    r, s = CASE_TO_PAIR[case]
    return qlinalg.partial_trace(rho, keep=[r, s], dims=(2, 2, 2))


def exact_correlators(
    spec: ProtocolSpec, visibility: float = 1.0, measurements=None
) -> CorrelatorTable:
    """The twelve exact triple correlators: pair expectation times classical bias."""
    meas = spec.measurements if measurements is None else measurements
    entries = {}
    for triple in TRIPLES:
        case, (xr, xs) = case_for_triple(triple)
        q = CASE_TO_SETTING2_PARTY[case]
        r, s = CASE_TO_PAIR[case]
        rho_pair = _pair_state(spec, case, visibility=visibility)
        op = qlinalg.kron(meas[r][xr], meas[s][xs])
        corr = float(np.trace(op @ rho_pair).real) * spec.classical_bias[q]
        entries[triple] = CorrelatorEstimate(estimate=corr, stderr=0.0, n_events=0)
    return CorrelatorTable(entries)


def protocol_functional_triples(f: CorrelatorFunctional) -> list:
    if f.scenario != Scenario.uniform(3, 3):
        raise ValueError("protocol functionals live on the 3-party, 3-setting scenario")
    for triple in f.terms:
        case_for_triple(triple)  # rejects triples without exactly one setting 2
    return list(f.terms.items())


def exact_bell_value(
    spec: ProtocolSpec, f: CorrelatorFunctional, visibility: float = 1.0, measurements=None
) -> float:
    table = exact_correlators(spec, visibility=visibility, measurements=measurements)
    return sum(coeff * table.entry(t).estimate for t, coeff in protocol_functional_triples(f))


# -- Measurement optimization --------------------------------------------------

@dataclass(frozen=True)
class ProtocolOptimum:
    value: float
    measurements: tuple
    objective_trace: tuple[float, ...]


def _protocol_terms(spec: ProtocolSpec, f: CorrelatorFunctional, visibility: float):
    pair_states = [_pair_state(spec, case, visibility=visibility) for case in range(3)]
    terms = []
    for triple, coeff in protocol_functional_triples(f):
        case, (xr, xs) = case_for_triple(triple)
        q = CASE_TO_SETTING2_PARTY[case]
        r, s = CASE_TO_PAIR[case]
        terms.append((coeff * spec.classical_bias[q], r, xr, s, xs, pair_states[case]))
    return terms


def _protocol_value(terms, meas) -> float:
    return sum(
        w * float(np.trace(qlinalg.kron(meas[r][xr], meas[s][xs]) @ rho).real)
        for w, r, xr, s, xs, rho in terms
    )


def optimize_protocol_measurements(
    spec: ProtocolSpec,
    f: CorrelatorFunctional,
    seed: int = 0,
    restarts: int = 20,
    iters: int = 200,
    planar: bool = True,
) -> ProtocolOptimum:
    """Seesaw over per-party qubit observables shared across all three blocks.

    Measurements default to the real z-x plane; ``planar=False`` opens the
    full Bloch sphere (the dispatched correlators carry no y-components, so
    it buys nothing, which the flag lets one confirm).  The classical biases
    stay fixed.  Deterministic for a given seed.
    """
    terms = _protocol_terms(spec, f, visibility=1.0)
    rng = np.random.default_rng(seed)
    eye = np.eye(2, dtype=complex)
    best = None
    for _ in range(max(1, restarts)):
        meas = []
        for _p in range(3):
            row = []
            for _x in range(2):
                angle = rng.uniform(0.0, 2.0 * math.pi)
                obs = math.cos(angle) * qlinalg.PAULI_Z + math.sin(angle) * qlinalg.PAULI_X
                if not planar:
                    azimuth = rng.uniform(0.0, 2.0 * math.pi)
                    polar = math.acos(rng.uniform(-1.0, 1.0))
                    obs = (
                        math.sin(polar) * math.cos(azimuth) * qlinalg.PAULI_X
                        + math.sin(polar) * math.sin(azimuth) * qlinalg.PAULI_Y
                        + math.cos(polar) * qlinalg.PAULI_Z
                    )
                row.append(obs)
            meas.append(row)

        objective = _protocol_value(terms, meas)
        trace = [objective]
        for _ in range(max(1, iters)):
            for p in range(3):
                effective = {0: np.zeros((2, 2), dtype=complex), 1: np.zeros((2, 2), dtype=complex)}
                for w, r, xr, s, xs, rho in terms:
                    if p == r:
                        cond = qlinalg.partial_trace(
                            qlinalg.kron(eye, meas[s][xs]) @ rho, keep=[0], dims=(2, 2)
                        )
                        effective[xr] += w * cond
                    elif p == s:
                        cond = qlinalg.partial_trace(
                            qlinalg.kron(meas[r][xr], eye) @ rho, keep=[1], dims=(2, 2)
                        )
                        effective[xs] += w * cond
                for x, eff in effective.items():
                    meas[p][x] = qlinalg.sign_observable(eff, planar=planar)
            new_objective = _protocol_value(terms, meas)
            if new_objective < objective - 1e-9:
                raise AssertionError(
                    f"protocol seesaw objective decreased: {objective} -> {new_objective}"
                )
            gain = new_objective - objective
            objective = new_objective
            trace.append(objective)
            if gain < 1e-12:
                break
        if best is None or objective > best[0]:
            best = (objective, meas, tuple(trace))

    value, meas, trace = best
    measurements = tuple(tuple(m for m in row) for row in meas)
    return ProtocolOptimum(value=value, measurements=measurements, objective_trace=trace)


# -- Threshold scan and noise robustness ----------------------------------------

@dataclass(frozen=True)
class ScanResult:
    sin2theta: tuple[float, ...]
    values: tuple[float, ...]
    bound: float
    threshold: float | None
    message: str


def theta_threshold_scan(
    spec: ProtocolSpec,
    f: CorrelatorFunctional,
    sin2theta_grid,
    optimized: bool = False,
    bound: float | None = None,
    seed: int = 0,
    restarts: int = 12,
    iters: int = 200,
    refine_tol: float = 1e-6,
) -> ScanResult:
    """Scan the Bell value over sin(2 theta) and locate the violation threshold.

    The grid must be ascending in (0, 1].  The smallest grid point whose value
    exceeds the bound is refined by bisection (against the previous grid point,
    or 0 where the curve provably sits at the bound) down to ``refine_tol``.
    """
    grid = [float(s) for s in sin2theta_grid]
    if not grid or any(not 0.0 < s <= 1.0 for s in grid) or grid != sorted(grid):
        raise ValueError("grid must be ascending values in (0, 1]")
    if bound is None:
        if f.declared_bound is None:
            raise ValueError("no bound declared and none supplied")
        bound = float(f.declared_bound)

    def value_at(s: float) -> float:
        test_spec = spec.with_theta(0.5 * math.asin(s))
        if optimized:
            return optimize_protocol_measurements(
                test_spec, f, seed=seed, restarts=restarts, iters=iters
            ).value
        return exact_bell_value(test_spec, f)

    values = [value_at(s) for s in grid]
    violation_tol = 1e-9
    first = next((i for i, v in enumerate(values) if v > bound + violation_tol), None)
    if first is None:
        return ScanResult(
            sin2theta=tuple(grid),
            values=tuple(values),
            bound=bound,
            threshold=None,
            message="no violation in range",
        )
    lo = grid[first - 1] if first > 0 else 0.0
    hi = grid[first]
    while hi - lo > refine_tol:
        mid = 0.5 * (lo + hi)
        if mid <= 0.0:
            break
        if value_at(mid) > bound + violation_tol:
            hi = mid
        else:
            lo = mid
    return ScanResult(
        sin2theta=tuple(grid),
        values=tuple(values),
        bound=bound,
        threshold=hi,
        message="threshold found",
    )


def critical_visibility(
    spec: ProtocolSpec,
    f: CorrelatorFunctional,
    measurements=None,
    bound: float | None = None,
) -> float:
    """Werner noise threshold: the v solving value(v) = bound.

    The entangled pair becomes v * pure + (1 - v) * I/4; the Bell value is
    affine in v, so the solution is closed-form.  A bipartite functional is
    evaluated directly on the mixed pair with the given two-party
    measurements; the tripartite protocol functional goes through dispatch.
    """
    if bound is None:
        if f.declared_bound is None:
            raise ValueError("no bound declared and none supplied")
        bound = float(f.declared_bound)

    if f.scenario.n_parties == 2:
        if measurements is None:
            raise ValueError("bipartite visibility needs explicit two-party measurements")
        pure = epr_state(spec.theta).matrix

        def value_at(v: float) -> float:
            rho = v * pure + (1.0 - v) * np.eye(4, dtype=complex) / 4.0
            total = 0.0
            for inputs, coeff in f.terms.items():
                op = qlinalg.kron(measurements[0][inputs[0]], measurements[1][inputs[1]])
                total += coeff * float(np.trace(op @ rho).real)
            return total

    else:
        def value_at(v: float) -> float:
            return exact_bell_value(spec, f, visibility=v, measurements=measurements)

    value_1 = value_at(1.0)
    value_0 = value_at(0.0)
    if value_1 <= bound:
        raise ValueError(f"no violation at full visibility: value {value_1} <= bound {bound}")
    return (bound - value_0) / (value_1 - value_0)


def fit_classical_bias(spec: ProtocolSpec, published: dict) -> float:
    """Least-squares single bias scaling the exact beta=1 correlators onto data."""
    unit = replace(spec, classical_bias=(1.0, 1.0, 1.0))
    table = exact_correlators(unit)
    num = 0.0
    den = 0.0
    for triple, value in published.items():
        model = table.entry(triple).estimate
        num += model * float(value)
        den += model * model
    if den == 0.0:
        raise ValueError("all model correlators vanish; bias is unidentifiable")
    return num / den


# -- JSON interchange -----------------------------------------------------------

def _matrix_to_json(m: np.ndarray) -> dict:
    return {"re": np.asarray(m).real.tolist(), "im": np.asarray(m).imag.tolist()}


def _matrix_from_json(d) -> np.ndarray:
    return np.asarray(d["re"], dtype=float) + 1j * np.asarray(d["im"], dtype=float)


def spec_to_json(spec: ProtocolSpec) -> dict:
    zero = qlinalg.projector(qlinalg.KET_0)
    doc = {
        "theta": spec.theta,
        "base_state_c": "zero"
        if qlinalg.matrices_close(spec.base_state_c, zero, 0.0)
        else _matrix_to_json(spec.base_state_c),
        "swap_rules": {str(q): list(p) for q, p in enumerate(spec.swap_rules)},
        "classical_bias": list(spec.classical_bias),
        "case_probs": list(spec.case_probs),
    }
    defaults = default_measurements()
    if all(
        qlinalg.matrices_close(spec.measurements[p][x], defaults[p][x], 0.0)
        for p in range(3)
        for x in range(2)
    ):
        doc["measurements"] = "paper-default"
    else:
        doc["measurements"] = [
            [_matrix_to_json(m) for m in row] for row in spec.measurements
        ]
    return doc


def spec_from_json(doc: dict) -> ProtocolSpec:
    base = doc.get("base_state_c", "zero")
    base_state = None if base == "zero" else _matrix_from_json(base)
    meas_doc = doc.get("measurements", "paper-default")
    measurements = (
        None
        if meas_doc == "paper-default"
        else tuple(tuple(_matrix_from_json(m) for m in row) for row in meas_doc)
    )
    rules_doc = doc.get("swap_rules")
    swap_rules = (
        DEFAULT_SWAP_RULES
        if rules_doc is None
        else tuple(tuple(rules_doc[str(q)]) for q in range(3))
    )
    return ProtocolSpec(
        theta=float(doc["theta"]),
        base_state_c=base_state,
        swap_rules=swap_rules,
        measurements=measurements,
        classical_bias=tuple(doc.get("classical_bias", (1.0, 1.0, 1.0))),
        case_probs=tuple(doc.get("case_probs", UNIFORM_CASE_PROBS)),
    )


def save_spec(spec: ProtocolSpec, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(spec_to_json(spec), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_spec(path) -> ProtocolSpec:
    with open(path, encoding="utf-8") as fh:
        return spec_from_json(json.load(fh))
