"""Linear Bell functionals: representation, evaluation, and bounds.

A scenario fixes the number of parties and their input/output ranges; a
functional is a coefficient table over (inputs, outputs) in probability form,
or over input tuples in full-correlator form for binary outcomes.  Classical
bounds come from exhaustive deterministic-strategy enumeration, no-signaling
bounds from an in-repo simplex LP over the no-signaling polytope.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass

import numpy as np

from . import qlinalg
from .qlinalg import DensityMatrix, Observable
from .simplex import solve_lp_max

ENUMERATION_GUARD = 10**7
LP_VARIABLE_GUARD = 5000

NONNEGATIVITY_TOL = 1e-12
NORMALIZATION_TOL = 1e-10
NO_SIGNALING_TOL = 1e-9


class GuardExceededError(Exception):
    """A size guard tripped; the requested computation is out of scope."""


@dataclass(frozen=True)
class Scenario:
    n_parties: int
    inputs_per_party: tuple[int, ...]
    outputs_per_party: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "inputs_per_party", tuple(int(k) for k in self.inputs_per_party))
        object.__setattr__(self, "outputs_per_party", tuple(int(k) for k in self.outputs_per_party))
        if self.n_parties < 1:
            raise ValueError("need at least one party")
        if len(self.inputs_per_party) != self.n_parties or len(self.outputs_per_party) != self.n_parties:
            raise ValueError("per-party counts must match n_parties")
        if any(k < 1 for k in self.inputs_per_party + self.outputs_per_party):
            raise ValueError("input/output counts must be >= 1")

    @classmethod
    def uniform(cls, n_parties: int, inputs: int, outputs: int = 2) -> "Scenario":
        return cls(n_parties, (inputs,) * n_parties, (outputs,) * n_parties)

    @property
    def binary(self) -> bool:
        return all(k == 2 for k in self.outputs_per_party)

    def input_tuples(self):
        return itertools.product(*(range(k) for k in self.inputs_per_party))

    def output_tuples(self):
        return itertools.product(*(range(k) for k in self.outputs_per_party))

    def n_input_tuples(self) -> int:
        return math.prod(self.inputs_per_party)

    def n_output_tuples(self) -> int:
        return math.prod(self.outputs_per_party)

    def check_term(self, inputs, outputs=None) -> None:
        if len(inputs) != self.n_parties or any(
            not 0 <= x < k for x, k in zip(inputs, self.inputs_per_party)
        ):
            raise ValueError(f"input tuple {inputs} outside scenario ranges")
        if outputs is not None:
            if len(outputs) != self.n_parties or any(
                not 0 <= a < k for a, k in zip(outputs, self.outputs_per_party)
            ):
                raise ValueError(f"output tuple {outputs} outside scenario ranges")


def _sign(output: int) -> int:
    """Binary outcomes are coded 0 -> +1, 1 -> -1."""
    return 1 - 2 * output


@dataclass(frozen=True)
class BellFunctional:
    """Probability-form functional: sum of alpha * P(outputs | inputs)."""

    scenario: Scenario
    terms: dict
    declared_bound: float | None = None

    def __post_init__(self):
        clean = {}
        for (inputs, outputs), coeff in self.terms.items():
            inputs = tuple(int(x) for x in inputs)
            outputs = tuple(int(a) for a in outputs)
            self.scenario.check_term(inputs, outputs)
            if coeff != 0.0:
                clean[(inputs, outputs)] = float(coeff)
        object.__setattr__(self, "terms", clean)


@dataclass(frozen=True)
class CorrelatorFunctional:
    """Full-correlator functional over binary outcomes: sum of c * <prod A>."""

    scenario: Scenario
    terms: dict
    declared_bound: float | None = None

    def __post_init__(self):
        if not self.scenario.binary:
            raise ValueError("correlator functionals require binary outcomes")
        clean = {}
        for inputs, coeff in self.terms.items():
            inputs = tuple(int(x) for x in inputs)
            self.scenario.check_term(inputs)
            if coeff != 0.0:
                clean[inputs] = float(coeff)
        object.__setattr__(self, "terms", clean)


@dataclass(frozen=True)
class Behavior:
    """Conditional probability table P(outputs | inputs) with no-signaling checks."""

    scenario: Scenario
    probabilities: np.ndarray  # shape (n_input_tuples, n_output_tuples)

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        expected = (self.scenario.n_input_tuples(), self.scenario.n_output_tuples())
        if p.shape != expected:
            raise ValueError(f"probability table shape {p.shape}, expected {expected}")
        if p.min() < -NONNEGATIVITY_TOL:
            raise ValueError(f"negative probability {p.min():.3e}")
        norms = p.sum(axis=1)
        if np.max(np.abs(norms - 1.0)) > NORMALIZATION_TOL:
            raise ValueError("normalization violated beyond 1e-10")
        object.__setattr__(self, "probabilities", p)
        p.setflags(write=False)
        err = self.no_signaling_violation()
        if err > NO_SIGNALING_TOL:
            raise ValueError(f"no-signaling violated by {err:.3e}")

    def _tensor(self) -> np.ndarray:
        sc = self.scenario
        return self.probabilities.reshape(sc.inputs_per_party + sc.outputs_per_party)

    def prob(self, outputs, inputs) -> float:
        sc = self.scenario
        i = int(np.ravel_multi_index(tuple(inputs), sc.inputs_per_party))
        o = int(np.ravel_multi_index(tuple(outputs), sc.outputs_per_party))
        return float(self.probabilities[i, o])

    def no_signaling_violation(self) -> float:
        """Largest deviation of any rest-of-parties marginal across one party's inputs."""
        sc = self.scenario
        t = self._tensor()
        n = sc.n_parties
        worst = 0.0
        for p in range(n):
            marg = t.sum(axis=n + p)  # sum over party p's output
            # axes now: all inputs, then outputs of parties != p
            slices = np.moveaxis(marg, p, 0)
            diffs = slices - slices[:1]
            worst = max(worst, float(np.max(np.abs(diffs))))
        return worst

    def correlator(self, inputs) -> float:
        """<prod_p A_p> at the given input tuple (binary outcomes)."""
        sc = self.scenario
        if not sc.binary:
            raise ValueError("correlators require binary outcomes")
        sc.check_term(inputs)
        i = int(np.ravel_multi_index(tuple(inputs), sc.inputs_per_party))
        row = self.probabilities[i].reshape(sc.outputs_per_party)
        total = 0.0
        for outputs in sc.output_tuples():
            total += math.prod(_sign(a) for a in outputs) * row[outputs]
        return total


@dataclass(frozen=True)
class DeterministicStrategy:
    """Per party, a total map input -> output."""

    scenario: Scenario
    responses: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        sc = self.scenario
        resp = tuple(tuple(int(a) for a in r) for r in self.responses)
        if len(resp) != sc.n_parties:
            raise ValueError("one response map per party required")
        for p, r in enumerate(resp):
            if len(r) != sc.inputs_per_party[p]:
                raise ValueError(f"party {p} response map not total")
            if any(not 0 <= a < sc.outputs_per_party[p] for a in r):
                raise ValueError(f"party {p} responses outside output range")
        object.__setattr__(self, "responses", resp)

    def behavior(self) -> Behavior:
        sc = self.scenario
        p = np.zeros((sc.n_input_tuples(), sc.n_output_tuples()))
        for i, xs in enumerate(sc.input_tuples()):
            outs = tuple(self.responses[q][x] for q, x in enumerate(xs))
            p[i, int(np.ravel_multi_index(outs, sc.outputs_per_party))] = 1.0
        return Behavior(sc, p)


@dataclass(frozen=True)
class QuantumStrategy:
    """Shared state plus one two-outcome observable per party per input."""

    scenario: Scenario
    state: DensityMatrix
    observables: tuple[tuple[Observable, ...], ...]
    local_dims: tuple[int, ...]

    def __post_init__(self):
        sc = self.scenario
        dims = tuple(int(d) for d in self.local_dims)
        object.__setattr__(self, "local_dims", dims)
        obs = tuple(tuple(o for o in row) for row in self.observables)
        object.__setattr__(self, "observables", obs)
        if len(dims) != sc.n_parties or math.prod(dims) != self.state.dim:
            raise ValueError("local dimensions do not multiply to the state dimension")
        if len(obs) != sc.n_parties:
            raise ValueError("one observable row per party required")
        for p, row in enumerate(obs):
            if len(row) != sc.inputs_per_party[p]:
                raise ValueError(f"party {p} needs {sc.inputs_per_party[p]} observables")
            for o in row:
                if o.dim != dims[p]:
                    raise ValueError(f"party {p} observable has wrong dimension")


def evaluate_functional(f: BellFunctional, behavior: Behavior) -> float:
    if f.scenario != behavior.scenario:
        raise ValueError("functional and behavior scenarios differ")
    return sum(
        coeff * behavior.prob(outputs, inputs)
        for (inputs, outputs), coeff in f.terms.items()
    )


def evaluate_correlator_functional(f: CorrelatorFunctional, behavior: Behavior) -> float:
    if f.scenario != behavior.scenario:
        raise ValueError("functional and behavior scenarios differ")
    return sum(coeff * behavior.correlator(inputs) for inputs, coeff in f.terms.items())


def correlator_to_probability_form(f: CorrelatorFunctional) -> BellFunctional:
    """Expand <prod A> = sum over outputs of (-1)^(number of 1s) P(outputs|inputs)."""
    sc = f.scenario
    terms: dict = {}
    for inputs, coeff in f.terms.items():
        for outputs in sc.output_tuples():
            sgn = math.prod(_sign(a) for a in outputs)
            key = (inputs, outputs)
            terms[key] = terms.get(key, 0.0) + coeff * sgn
    return BellFunctional(sc, terms, declared_bound=f.declared_bound)


def quantum_behavior(strategy: QuantumStrategy) -> Behavior:
    """Born-rule behavior P(outputs|inputs) = Tr(tensor of outcome projectors * rho)."""
    sc = strategy.scenario
    rho = strategy.state.matrix
    projs = []
    for p, row in enumerate(strategy.observables):
        party_projs = []
        for obs in row:
            p_plus, p_minus = obs.outcome_projectors()
            for m in (p_plus, p_minus):
                if np.linalg.eigvalsh(m).min() < -1e-9:
                    raise ValueError("outcome projector not PSD")
            if not qlinalg.matrices_close(p_plus + p_minus, np.eye(obs.dim), 1e-9):
                raise ValueError("outcome projectors do not sum to identity")
            party_projs.append((p_plus, p_minus))
        projs.append(party_projs)

    table = np.zeros((sc.n_input_tuples(), sc.n_output_tuples()))
    for i, xs in enumerate(sc.input_tuples()):
        for o, outs in enumerate(sc.output_tuples()):
            op = qlinalg.kron_all(projs[p][xs[p]][outs[p]] for p in range(sc.n_parties))
            table[i, o] = float(np.trace(op @ rho).real)
    table = np.clip(table, 0.0, None)
    return Behavior(sc, table)


def _term_arrays(f: BellFunctional):
    n_terms = len(f.terms)
    m = f.scenario.n_parties
    t_inputs = np.zeros((n_terms, m), dtype=np.intp)
    t_outputs = np.zeros((n_terms, m), dtype=np.intp)
    coeffs = np.zeros(n_terms)
    for t, ((inputs, outputs), coeff) in enumerate(f.terms.items()):
        t_inputs[t] = inputs
        t_outputs[t] = outputs
        coeffs[t] = coeff
    return t_inputs, t_outputs, coeffs


def classical_bound(f: BellFunctional) -> tuple[float, DeterministicStrategy]:
    """Exact maximum over all deterministic strategies, with an attaining witness.

    Strategies are enumerated by mixed-radix counters over per-party response
    functions; argmax ties break to the first (lowest counter) strategy found.
    """
    sc = f.scenario
    n_strategies = math.prod(
        k_out**k_in for k_in, k_out in zip(sc.inputs_per_party, sc.outputs_per_party)
    )
    if n_strategies > ENUMERATION_GUARD:
        raise GuardExceededError(f"{n_strategies} deterministic strategies exceed the guard")

    t_inputs, t_outputs, coeffs = _term_arrays(f)
    party_responses = [
        list(itertools.product(range(k_out), repeat=k_in))
        for k_in, k_out in zip(sc.inputs_per_party, sc.outputs_per_party)
    ]
    best_value = -np.inf
    best_resp = None
    for responses in itertools.product(*party_responses):
        match = np.ones(len(coeffs), dtype=bool)
        for p, resp in enumerate(responses):
            match &= np.asarray(resp, dtype=np.intp)[t_inputs[:, p]] == t_outputs[:, p]
        value = float(coeffs[match].sum())
        if value > best_value:
            best_value = value
            best_resp = responses
    if best_resp is None:  # empty functional still has the all-zero strategy
        best_value = 0.0
        best_resp = tuple(tuple(0 for _ in range(k)) for k in sc.inputs_per_party)
    return best_value, DeterministicStrategy(sc, best_resp)


def _no_signaling_constraints(sc: Scenario) -> tuple[np.ndarray, np.ndarray]:
    """Equality constraints of the no-signaling polytope in chain form.

    Variables are P(outputs|inputs) flattened input-major.  Rows: one
    normalization per input tuple, then for each party the equality of the
    rest-of-parties marginal between adjacent values of that party's input.
    """
    n_in = sc.n_input_tuples()
    n_out = sc.n_output_tuples()
    n_vars = n_in * n_out

    def var(xs, outs):
        i = int(np.ravel_multi_index(xs, sc.inputs_per_party))
        o = int(np.ravel_multi_index(outs, sc.outputs_per_party))
        return i * n_out + o

    rows = []
    rhs = []
    for xs in sc.input_tuples():
        row = np.zeros(n_vars)
        for outs in sc.output_tuples():
            row[var(xs, outs)] = 1.0
        rows.append(row)
        rhs.append(1.0)

    for p in range(sc.n_parties):
        other_inputs = [range(k) for q, k in enumerate(sc.inputs_per_party) if q != p]
        other_outputs = [range(k) for q, k in enumerate(sc.outputs_per_party) if q != p]
        for x_p in range(1, sc.inputs_per_party[p]):
            for rest_in in itertools.product(*other_inputs):
                xs_hi = rest_in[:p] + (x_p,) + rest_in[p:]
                xs_lo = rest_in[:p] + (x_p - 1,) + rest_in[p:]
                for rest_out in itertools.product(*other_outputs):
                    row = np.zeros(n_vars)
                    for a_p in range(sc.outputs_per_party[p]):
                        outs = rest_out[:p] + (a_p,) + rest_out[p:]
                        row[var(xs_hi, outs)] += 1.0
                        row[var(xs_lo, outs)] -= 1.0
                    rows.append(row)
                    rhs.append(0.0)
    return np.array(rows), np.array(rhs)


def no_signaling_bound(f: BellFunctional) -> float:
    """Maximum of the functional over the no-signaling polytope (LP, ~1e-9 accurate)."""
    sc = f.scenario
    n_vars = sc.n_input_tuples() * sc.n_output_tuples()
    if n_vars > LP_VARIABLE_GUARD:
        raise GuardExceededError(f"{n_vars} LP variables exceed the guard")
    a_eq, b_eq = _no_signaling_constraints(sc)
    c = np.zeros(n_vars)
    n_out = sc.n_output_tuples()
    for (inputs, outputs), coeff in f.terms.items():
        i = int(np.ravel_multi_index(inputs, sc.inputs_per_party))
        o = int(np.ravel_multi_index(outputs, sc.outputs_per_party))
        c[i * n_out + o] += coeff
    value, _ = solve_lp_max(c, a_eq, b_eq)
    return value


def bell_operator(f: CorrelatorFunctional, observables) -> np.ndarray:
    """sum of coeff * (tensor of the term's per-party observables).

    With fixed measurements the quantum value of the functional is the largest
    eigenvalue of this Hermitian matrix.
    """
    dims = [row[0].dim for row in observables]
    for p, row in enumerate(observables):
        if len(row) != f.scenario.inputs_per_party[p]:
            raise ValueError(f"party {p} observable count mismatch")
        if any(o.dim != dims[p] for o in row):
            raise ValueError(f"party {p} observables have inconsistent dimensions")
    total = np.zeros((math.prod(dims), math.prod(dims)), dtype=complex)
    for inputs, coeff in f.terms.items():
        total += coeff * qlinalg.kron_all(
            observables[p][inputs[p]].matrix for p in range(f.scenario.n_parties)
        )
    if not qlinalg.is_hermitian(total):
        raise ValueError("Bell operator is not Hermitian")
    return total


def game_win_probability(f: CorrelatorFunctional, value: float) -> float:
    """Winning probability of the parity game with uniform inputs over the terms.

    For a functional with T terms and coefficients +/-1 the game value is
    1/2 + value / (2T).
    """
    coeffs = list(f.terms.values())
    if not coeffs:
        raise ValueError("functional has no terms")
    if any(abs(abs(c) - 1.0) > 1e-12 for c in coeffs):
        raise ValueError("parity-game form requires all coefficients +/-1")
    return 0.5 + value / (2.0 * len(coeffs))


def chsh() -> CorrelatorFunctional:
    """<A0B0> + <A0B1> + <A1B0> - <A1B1>, classical bound 2."""
    sc = Scenario.uniform(2, 2)
    terms = {(0, 0): 1.0, (0, 1): 1.0, (1, 0): 1.0, (1, 1): -1.0}
    return CorrelatorFunctional(sc, terms, declared_bound=2.0)


# -- JSON interchange ---------------------------------------------------------

def _scenario_to_json(sc: Scenario) -> dict:
    return {
        "parties": sc.n_parties,
        "inputs": list(sc.inputs_per_party),
        "outputs": list(sc.outputs_per_party),
    }


def _scenario_from_json(d: dict) -> Scenario:
    n = int(d["parties"])
    inputs = d["inputs"]
    outputs = d["outputs"]
    inputs = (inputs,) * n if isinstance(inputs, int) else tuple(inputs)
    outputs = (outputs,) * n if isinstance(outputs, int) else tuple(outputs)
    return Scenario(n, inputs, outputs)


def functional_to_json(f: CorrelatorFunctional | BellFunctional) -> dict:
    doc: dict = {"scenario": _scenario_to_json(f.scenario)}
    if isinstance(f, CorrelatorFunctional):
        doc["correlator_terms"] = [
            {"inputs": list(inputs), "coeff": coeff} for inputs, coeff in sorted(f.terms.items())
        ]
    else:
        doc["probability_terms"] = [
            {"inputs": list(inputs), "outputs": list(outputs), "coeff": coeff}
            for (inputs, outputs), coeff in sorted(f.terms.items())
        ]
    if f.declared_bound is not None:
        doc["declared_bound"] = f.declared_bound
    return doc


def functional_from_json(doc: dict) -> CorrelatorFunctional | BellFunctional:
    sc = _scenario_from_json(doc["scenario"])
    bound = doc.get("declared_bound")
    if "correlator_terms" in doc:
        terms = {tuple(t["inputs"]): float(t["coeff"]) for t in doc["correlator_terms"]}
        return CorrelatorFunctional(sc, terms, declared_bound=bound)
    if "probability_terms" in doc:
        terms = {
            (tuple(t["inputs"]), tuple(t["outputs"])): float(t["coeff"])
            for t in doc["probability_terms"]
        }
        return BellFunctional(sc, terms, declared_bound=bound)
    raise ValueError("functional document has neither correlator_terms nor probability_terms")


def save_functional(f, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(functional_to_json(f), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_functional(path):
    with open(path, encoding="utf-8") as fh:
        return functional_from_json(json.load(fh))
