"""Count and correlator tables for the three-party dispatch experiment.

The trial cases follow the random-number-generator encoding: case 0 sends the
entangled pair to Alice and Bob (Charlie holds setting 2), case 1 to Bob and
Charlie, case 2 to Alice and Charlie.  Numbers in CSV output carry 10
significant digits.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

N_CASES = 3
CASE_TO_SETTING2_PARTY = (2, 0, 1)
CASE_TO_PAIR = ((0, 1), (1, 2), (0, 2))

# Evaluation order for the twelve input triples: the setting-2 slot walks
# from Charlie to Bob to Alice, matching the inequality's three blocks.
TRIPLES = tuple(
    [(x, y, 2) for x in range(2) for y in range(2)]
    + [(x, 2, z) for x in range(2) for z in range(2)]
    + [(2, y, z) for y in range(2) for z in range(2)]
)


def triple_for(case: int, pair_inputs: tuple[int, int]) -> tuple[int, int, int]:
    triple = [0, 0, 0]
    triple[CASE_TO_SETTING2_PARTY[case]] = 2
    r, s = CASE_TO_PAIR[case]
    triple[r], triple[s] = pair_inputs
    return tuple(triple)


def case_for_triple(triple) -> tuple[int, tuple[int, int]]:
    twos = [p for p, x in enumerate(triple) if x == 2]
    if len(twos) != 1:
        raise ValueError(f"triple {triple} must contain exactly one setting 2")
    case = CASE_TO_SETTING2_PARTY.index(twos[0])
    r, s = CASE_TO_PAIR[case]
    return case, (triple[r], triple[s])


def _fmt(x: float) -> str:
    return f"{x:.10g}"


@dataclass
class CountsTable:
    """Coincidence tallies per (case, pair inputs) plus per-case classical counts.

    ``quantum[case, xr, xs, ia, ib]`` counts outcome pairs with index 0 -> +1
    and 1 -> -1; ``classical[case]`` holds (N+ , N-) of the setting-2 output.
    """

    quantum: np.ndarray = field(
        default_factory=lambda: np.zeros((N_CASES, 2, 2, 2, 2), dtype=np.int64)
    )
    classical: np.ndarray = field(
        default_factory=lambda: np.zeros((N_CASES, 2), dtype=np.int64)
    )

    def __post_init__(self):
        self.quantum = np.asarray(self.quantum, dtype=np.int64)
        self.classical = np.asarray(self.classical, dtype=np.int64)
        if self.quantum.shape != (N_CASES, 2, 2, 2, 2) or self.classical.shape != (N_CASES, 2):
            raise ValueError("counts table has wrong shape")
        if self.quantum.min() < 0 or self.classical.min() < 0:
            raise ValueError("counts must be nonnegative")
        if int(self.quantum.sum()) != int(self.classical.sum()):
            raise ValueError("quantum and classical tallies disagree on the trial count")

    @property
    def n_trials(self) -> int:
        return int(self.classical.sum())

    def add(self, other: "CountsTable") -> "CountsTable":
        return CountsTable(self.quantum + other.quantum, self.classical + other.classical)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, CountsTable)
            and np.array_equal(self.quantum, other.quantum)
            and np.array_equal(self.classical, other.classical)
        )


@dataclass(frozen=True)
class CorrelatorEstimate:
    estimate: float
    stderr: float
    n_events: int
    flagged: bool = False

    def __post_init__(self):
        if not self.flagged:
            if not math.isfinite(self.estimate) or not math.isfinite(self.stderr):
                raise ValueError("non-finite unflagged estimate")
            if abs(self.estimate) > 1.0 + 3.0 * self.stderr + 1e-12:
                raise ValueError(
                    f"estimate {self.estimate} outside 1 + 3*stderr envelope"
                )


@dataclass(frozen=True)
class CorrelatorTable:
    """Estimated (or exact) correlators for the twelve input triples."""

    entries: dict

    def __post_init__(self):
        clean = {}
        for triple, entry in self.entries.items():
            triple = tuple(int(x) for x in triple)
            case_for_triple(triple)
            clean[triple] = entry
        object.__setattr__(self, "entries", clean)

    def entry(self, triple) -> CorrelatorEstimate:
        triple = tuple(int(x) for x in triple)
        if triple not in self.entries:
            raise KeyError(f"no correlator entry for triple {triple}")
        return self.entries[triple]


def counts_to_csv(table: CountsTable) -> str:
    out = io.StringIO()
    out.write("case,x,y,z,n_pp,n_pm,n_mp,n_mm,nhat_p,nhat_m\n")
    for case in range(N_CASES):
        for xr in range(2):
            for xs in range(2):
                x, y, z = triple_for(case, (xr, xs))
                q = table.quantum[case, xr, xs]
                out.write(
                    f"{case},{x},{y},{z},{q[0, 0]},{q[0, 1]},{q[1, 0]},{q[1, 1]},"
                    f"{table.classical[case, 0]},{table.classical[case, 1]}\n"
                )
    return out.getvalue()


def counts_from_csv(text: str) -> CountsTable:
    lines = [ln for ln in text.strip().splitlines() if ln]
    quantum = np.zeros((N_CASES, 2, 2, 2, 2), dtype=np.int64)
    classical = np.zeros((N_CASES, 2), dtype=np.int64)
    for ln in lines[1:]:
        parts = ln.split(",")
        case = int(parts[0])
        _, pair = case_for_triple(tuple(int(v) for v in parts[1:4]))
        xr, xs = pair
        quantum[case, xr, xs] = np.array(
            [int(v) for v in parts[4:8]], dtype=np.int64
        ).reshape(2, 2)
        classical[case] = [int(parts[8]), int(parts[9])]
    return CountsTable(quantum, classical)


def correlators_to_csv(table: CorrelatorTable) -> str:
    out = io.StringIO()
    out.write("x,y,z,estimate,stderr,n_events\n")
    for triple in TRIPLES:
        e = table.entry(triple)
        est = "nan" if e.flagged else _fmt(e.estimate)
        err = "nan" if e.flagged else _fmt(e.stderr)
        out.write(f"{triple[0]},{triple[1]},{triple[2]},{est},{err},{e.n_events}\n")
    return out.getvalue()


def correlators_from_csv(text: str) -> CorrelatorTable:
    lines = [ln for ln in text.strip().splitlines() if ln]
    entries = {}
    for ln in lines[1:]:
        parts = ln.split(",")
        triple = tuple(int(v) for v in parts[:3])
        est, err = float(parts[3]), float(parts[4])
        flagged = math.isnan(est)
        entries[triple] = CorrelatorEstimate(
            estimate=est, stderr=err, n_events=int(parts[5]), flagged=flagged
        )
    return CorrelatorTable(entries)
