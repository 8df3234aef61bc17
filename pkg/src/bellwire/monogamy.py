"""Wired monogamy relations built from base Bell inequalities.

Wiring embeds a base m-partite functional onto every index-ordered m-subset of
n parties and sums the copies.  Non-participating parties have their inputs
fixed to 0 and their outputs summed out; under no-signaling the fixed input is
immaterial, and fixing it keeps the functional well-defined on arbitrary
tables.  The wired bound is c * C(n, m) with c the base functional's computed
classical bound.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass

from .bellcore import (
    BellFunctional,
    CorrelatorFunctional,
    GuardExceededError,
    Scenario,
    classical_bound,
    correlator_to_probability_form,
    functional_from_json,
    functional_to_json,
    no_signaling_bound,
)

BOUND_TOL = 1e-8


@dataclass(frozen=True)
class MonogamyRelation:
    functional: BellFunctional
    bound: float
    provenance: str


@dataclass(frozen=True)
class MonogamyReport:
    classical: float
    no_signaling: float
    bound: float
    holds: bool


def _as_probability_form(f: BellFunctional | CorrelatorFunctional) -> BellFunctional:
    if isinstance(f, CorrelatorFunctional):
        return correlator_to_probability_form(f)
    return f


def embed_on_parties(base: BellFunctional, n: int, parties) -> BellFunctional:
    """Lift a base functional onto the given parties of an n-party scenario.

    The base's k-th party is played by ``parties[k]``; everyone else gets
    input 0 and has their outputs summed over.  Requires a homogeneous base
    (all parties share the same input/output counts) so that any party can
    take any role.
    """
    sc = base.scenario
    parties = tuple(parties)
    if len(parties) != sc.n_parties or len(set(parties)) != len(parties):
        raise ValueError("need one distinct target party per base party")
    if any(not 0 <= p < n for p in parties):
        raise ValueError("target party index out of range")
    k_in = sc.inputs_per_party[0]
    k_out = sc.outputs_per_party[0]
    if any(k != k_in for k in sc.inputs_per_party) or any(
        k != k_out for k in sc.outputs_per_party
    ):
        raise ValueError("embedding requires a homogeneous base scenario")

    big = Scenario.uniform(n, k_in, k_out)
    others = [q for q in range(n) if q not in parties]
    terms: dict = {}
    for (inputs, outputs), coeff in base.terms.items():
        big_inputs = [0] * n
        for k, p in enumerate(parties):
            big_inputs[p] = inputs[k]
        for rest in itertools.product(range(k_out), repeat=len(others)):
            big_outputs = [0] * n
            for k, p in enumerate(parties):
                big_outputs[p] = outputs[k]
            for q, a in zip(others, rest):
                big_outputs[q] = a
            key = (tuple(big_inputs), tuple(big_outputs))
            terms[key] = terms.get(key, 0.0) + coeff
    return BellFunctional(big, terms)


def add_functionals(fs) -> BellFunctional:
    fs = list(fs)
    sc = fs[0].scenario
    if any(f.scenario != sc for f in fs):
        raise ValueError("functionals live on different scenarios")
    terms: dict = {}
    for f in fs:
        for key, coeff in f.terms.items():
            terms[key] = terms.get(key, 0.0) + coeff
    return BellFunctional(sc, terms)


def wire_m_of_n(base: BellFunctional | CorrelatorFunctional, n: int) -> MonogamyRelation:
    """Sum of the base over all C(n, m) index-ordered m-subsets of n parties."""
    base_prob = _as_probability_form(base)
    m = base_prob.scenario.n_parties
    if n < m:
        raise ValueError(f"cannot wire an {m}-partite base into {n} parties")
    n_subsets = math.comb(n, m)
    if n_subsets * len(base_prob.terms) * base_prob.scenario.outputs_per_party[0] ** (n - m) > 10**6:
        raise GuardExceededError("wired functional would exceed the size guard")
    c, _ = classical_bound(base_prob)
    pieces = [
        embed_on_parties(base_prob, n, subset)
        for subset in itertools.combinations(range(n), m)
    ]
    total = add_functionals(pieces)
    bound = c * n_subsets
    provenance = (
        f"wired {m}-of-{n}: base classical bound {c:.12g} summed over "
        f"{n_subsets} index-ordered subsets; non-participants fixed to input 0"
    )
    return MonogamyRelation(
        functional=BellFunctional(total.scenario, total.terms, declared_bound=bound),
        bound=bound,
        provenance=provenance,
    )


def wire_pairwise(base: BellFunctional | CorrelatorFunctional, n: int) -> MonogamyRelation:
    """All-pairs wiring of a bipartite base; bound c * C(n, 2)."""
    base_prob = _as_probability_form(base)
    if base_prob.scenario.n_parties != 2:
        raise ValueError("pairwise wiring requires a bipartite base")
    if n < 2:
        raise ValueError("need at least two parties")
    return wire_m_of_n(base_prob, n)


def tripartite_wired_chsh() -> CorrelatorFunctional:
    """The 12-term tripartite inequality with classical bound 6.

    Three blocks, one per party holding the third setting; signs are +,+,+,-
    within each block.  The term list is data, so alternate sign conventions
    can be loaded from JSON instead.
    """
    sc = Scenario.uniform(3, 3)
    terms: dict = {}
    for x, y in itertools.product(range(2), repeat=2):
        sign = -1.0 if x == 1 and y == 1 else 1.0
        terms[(x, y, 2)] = sign
        terms[(x, 2, y)] = sign
        terms[(2, x, y)] = sign
    return CorrelatorFunctional(sc, terms, declared_bound=6.0)


def verify_monogamy(relation: MonogamyRelation) -> MonogamyReport:
    """Compute both bounds of the wired functional and compare to the claim.

    A violated bound is reported, not raised: probing the claim is the point.
    """
    f = relation.functional
    classical, _ = classical_bound(f)
    ns = no_signaling_bound(f)
    return MonogamyReport(
        classical=classical,
        no_signaling=ns,
        bound=relation.bound,
        holds=bool(ns <= relation.bound + BOUND_TOL),
    )


def relation_to_json(relation: MonogamyRelation) -> dict:
    doc = functional_to_json(relation.functional)
    doc["bound"] = relation.bound
    doc["provenance"] = relation.provenance
    return doc


def relation_from_json(doc: dict) -> MonogamyRelation:
    f = functional_from_json(doc)
    if isinstance(f, CorrelatorFunctional):
        f = correlator_to_probability_form(f)
    return MonogamyRelation(
        functional=f, bound=float(doc["bound"]), provenance=str(doc.get("provenance", ""))
    )


def save_relation(relation: MonogamyRelation, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(relation_to_json(relation), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_relation(path) -> MonogamyRelation:
    with open(path, encoding="utf-8") as fh:
        return relation_from_json(json.load(fh))
