"""Monte Carlo trials, coincidence counting, correlator estimates, P values.

Randomness is counter-based: trial ``i`` consumes exactly the four 64-bit
words of Philox counter block ``i`` under key ``seed`` (word 0 picks the
case, word 1 both pair inputs, word 2 the joint quantum outcome, word 3 the
classical +/-1 signal).  Any chunking of the trial range therefore produces
bit-identical tallies, serial or parallel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import qlinalg
from .bellcore import CorrelatorFunctional
from .protocol import ProtocolSpec, _pair_state, protocol_functional_triples
from .tables import (
    CASE_TO_PAIR,
    CASE_TO_SETTING2_PARTY,
    CorrelatorEstimate,
    CorrelatorTable,
    CountsTable,
    N_CASES,
    case_for_triple,
)

WORDS_PER_TRIAL = 4
DEFAULT_CHUNK = 1 << 16


@dataclass(frozen=True)
class TrialRecord:
    """One experimental trial: dispatch case, input triple, +/-1 outcomes."""

    case: int
    inputs: tuple[int, int, int]
    outcomes: tuple[int, int, int]

    def __post_init__(self):
        if not 0 <= self.case < N_CASES:
            raise ValueError(f"case {self.case} out of range")
        twos = [p for p, x in enumerate(self.inputs) if x == 2]
        if twos != [CASE_TO_SETTING2_PARTY[self.case]]:
            raise ValueError(f"inputs {self.inputs} inconsistent with case {self.case}")
        if any(o not in (-1, 1) for o in self.outcomes):
            raise ValueError(f"outcomes {self.outcomes} must be +/-1")


def _trial_uniforms(seed: int, lo: int, hi: int) -> np.ndarray:
    """Uniform doubles for trials [lo, hi), shape (hi-lo, 4); chunk-invariant."""
    bitgen = np.random.Philox(key=seed, counter=lo)
    gen = np.random.Generator(bitgen)
    return gen.random((hi - lo) * WORDS_PER_TRIAL).reshape(hi - lo, WORDS_PER_TRIAL)


def _outcome_distributions(spec: ProtocolSpec) -> np.ndarray:
    """Born probabilities P(a, b) per (case, xr, xs), flattened (++, +-, -+, --)."""
    probs = np.zeros((N_CASES, 2, 2, 4))
    for case in range(N_CASES):
        rho = _pair_state(spec, case)
        r, s = CASE_TO_PAIR[case]
        for xr in range(2):
            p_r = qlinalg.Observable(spec.measurements[r][xr]).outcome_projectors()
            for xs in range(2):
                p_s = qlinalg.Observable(spec.measurements[s][xs]).outcome_projectors()
                for ia in range(2):
                    for ib in range(2):
                        op = qlinalg.kron(p_r[ia], p_s[ib])
                        probs[case, xr, xs, 2 * ia + ib] = max(
                            0.0, float(np.trace(op @ rho).real)
                        )
                probs[case, xr, xs] /= probs[case, xr, xs].sum()
    return probs


def _decode_trials(spec: ProtocolSpec, uniforms: np.ndarray, outcome_probs: np.ndarray):
    """Vectorized map from uniform draws to (case, xr, xs, joint outcome, sign index)."""
    case_cum = np.cumsum(spec.case_probs)
    case_cum[-1] = np.inf  # absorb float round-off at the top end
    cases = np.searchsorted(case_cum, uniforms[:, 0], side="right").astype(np.intp)

    pair_idx = np.minimum((uniforms[:, 1] * 4).astype(np.intp), 3)
    xr = pair_idx >> 1
    xs = pair_idx & 1

    cum = np.cumsum(outcome_probs, axis=-1)
    cum[..., -1] = np.inf
    trial_cum = cum[cases, xr, xs]
    joint = (uniforms[:, 2][:, None] >= trial_cum).sum(axis=1).astype(np.intp)

    beta = np.asarray(spec.classical_bias)[np.asarray(CASE_TO_SETTING2_PARTY)[cases]]
    minus = (uniforms[:, 3] >= (1.0 + beta) / 2.0).astype(np.intp)
    return cases, xr, xs, joint, minus


def sample_trials(spec: ProtocolSpec, n: int, seed: int):
    """Yield ``n`` trial records, deterministically for a given seed."""
    if n < 1:
        raise ValueError("need at least one trial")
    outcome_probs = _outcome_distributions(spec)
    for lo in range(0, n, DEFAULT_CHUNK):
        hi = min(lo + DEFAULT_CHUNK, n)
        uniforms = _trial_uniforms(seed, lo, hi)
        cases, xr, xs, joint, minus = _decode_trials(spec, uniforms, outcome_probs)
        for i in range(hi - lo):
            case = int(cases[i])
            q = CASE_TO_SETTING2_PARTY[case]
            r, s = CASE_TO_PAIR[case]
            inputs = [0, 0, 0]
            inputs[q] = 2
            inputs[r], inputs[s] = int(xr[i]), int(xs[i])
            outcomes = [0, 0, 0]
            outcomes[r] = 1 - 2 * (int(joint[i]) >> 1)
            outcomes[s] = 1 - 2 * (int(joint[i]) & 1)
            outcomes[q] = 1 - 2 * int(minus[i])
            yield TrialRecord(case=case, inputs=tuple(inputs), outcomes=tuple(outcomes))


def accumulate_counts(trials) -> CountsTable:
    """Tally records into a counts table; order-independent by construction."""
    quantum = np.zeros((N_CASES, 2, 2, 2, 2), dtype=np.int64)
    classical = np.zeros((N_CASES, 2), dtype=np.int64)
    for rec in trials:
        case, (xr, xs) = case_for_triple(rec.inputs)
        if case != rec.case:
            raise ValueError(f"record case {rec.case} inconsistent with inputs {rec.inputs}")
        q = CASE_TO_SETTING2_PARTY[case]
        r, s = CASE_TO_PAIR[case]
        ia = (1 - rec.outcomes[r]) // 2
        ib = (1 - rec.outcomes[s]) // 2
        quantum[case, xr, xs, ia, ib] += 1
        classical[case, (1 - rec.outcomes[q]) // 2] += 1
    return CountsTable(quantum, classical)


def simulate_counts(
    spec: ProtocolSpec, n: int, seed: int, chunk_size: int = DEFAULT_CHUNK
) -> CountsTable:
    """Fused sampling and tallying; bit-identical for any chunk size."""
    if n < 1:
        raise ValueError("need at least one trial")
    if chunk_size < 1:
        raise ValueError("chunk size must be positive")
    outcome_probs = _outcome_distributions(spec)
    quantum = np.zeros((N_CASES, 2, 2, 2, 2), dtype=np.int64)
    classical = np.zeros((N_CASES, 2), dtype=np.int64)
    for lo in range(0, n, chunk_size):
        hi = min(lo + chunk_size, n)
        uniforms = _trial_uniforms(seed, lo, hi)
        cases, xr, xs, joint, minus = _decode_trials(spec, uniforms, outcome_probs)
        flat_q = np.ravel_multi_index((cases, xr, xs, joint >> 1, joint & 1), quantum.shape)
        quantum += np.bincount(flat_q, minlength=quantum.size).reshape(quantum.shape)
        flat_c = np.ravel_multi_index((cases, minus), classical.shape)
        classical += np.bincount(flat_c, minlength=classical.size).reshape(classical.shape)
    return CountsTable(quantum, classical)


def estimate_correlators(counts: CountsTable) -> CorrelatorTable:
    """The coincidence-ratio estimator with first-order Poisson error bars.

    estimate = [sum of signed quantum counts / their total] times the
    classical contrast (N+ - N-)/(N+ + N-); each raw count is treated as an
    independent Poisson variate and propagated through both ratios.
    """
    signs = np.array([[1.0, -1.0], [-1.0, 1.0]])  # (-1)^(odd number of -1 outcomes)
    entries = {}
    for case in range(N_CASES):
        n_hat = counts.classical[case]
        n_classical = int(n_hat.sum())
        for xr in range(2):
            for xs in range(2):
                cell = counts.quantum[case, xr, xs].astype(float)
                triple = _triple(case, xr, xs)
                n_events = int(cell.sum())
                if n_events == 0 or n_classical == 0:
                    entries[triple] = CorrelatorEstimate(
                        estimate=math.nan, stderr=math.nan, n_events=n_events, flagged=True
                    )
                    continue
                quantum_ratio = float((signs * cell).sum() / n_events)
                contrast = float((n_hat[0] - n_hat[1]) / n_classical)
                var = (
                    contrast**2 * max(0.0, 1.0 - quantum_ratio**2) / n_events
                    + quantum_ratio**2 * max(0.0, 1.0 - contrast**2) / n_classical
                )
                entries[triple] = CorrelatorEstimate(
                    estimate=quantum_ratio * contrast,
                    stderr=math.sqrt(var),
                    n_events=n_events,
                )
    return CorrelatorTable(entries)


def _triple(case: int, xr: int, xs: int) -> tuple[int, int, int]:
    triple = [0, 0, 0]
    triple[CASE_TO_SETTING2_PARTY[case]] = 2
    r, s = CASE_TO_PAIR[case]
    triple[r], triple[s] = xr, xs
    return tuple(triple)


def estimate_bell_value(table: CorrelatorTable, f: CorrelatorFunctional) -> tuple[float, float]:
    """Functional value of the estimates and its error assuming independent cells."""
    value = 0.0
    variance = 0.0
    for triple, coeff in protocol_functional_triples(f):
        entry = table.entry(triple)
        if entry.flagged:
            raise ValueError(f"correlator for triple {triple} is flagged (no events)")
        value += coeff * entry.estimate
        variance += coeff**2 * entry.stderr**2
    return value, math.sqrt(variance)


def p_value(
    observed: float,
    stderr: float,
    n_per_term: int,
    classical_bound: float,
    n_terms: int = 12,
) -> float:
    """Hoeffding-style tail bound on any local model reaching the observed value.

    The functional is read as a parity game with uniform inputs over its
    ``n_terms`` +/-1 terms, so a value v wins with probability
    1/2 + v/(2 * n_terms); the bound is exp(-2 N (p_obs - p_cl)^2) with
    N = n_per_term * n_terms total trials.  No Gaussian assumption enters;
    ``stderr`` is accepted for interface symmetry and sanity checks only.
    """
    if not (math.isfinite(observed) and math.isfinite(stderr)):
        raise ValueError("observed value and stderr must be finite")
    if n_per_term < 1:
        raise ValueError("need at least one trial per term")
    p_obs = 0.5 + observed / (2.0 * n_terms)
    p_cl = 0.5 + classical_bound / (2.0 * n_terms)
    if p_obs <= p_cl:
        return 1.0
    n_total = n_per_term * n_terms
    return math.exp(-2.0 * n_total * (p_obs - p_cl) ** 2)
