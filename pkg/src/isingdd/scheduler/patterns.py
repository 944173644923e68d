"""Periodic sign patterns for the sublattice decoupling sequences.

A toggling pattern assigns a sign f in {+1,-1} to each of 8 slots of
duration 2 tau_p; a sign change between consecutive slots is realised by a
pi_x pulse of duration tau_p centred on the boundary. Four patterns drive a
16 tau_p block: the two idle sublattice sequences, plus the two sequences
that keep one chosen edge coupled for exactly half of the period (effective
coupling J/4 including the Hamiltonian's global 1/2).

The quadruple shipped as the canonical fixture is found by exhaustive
search over the full sign space. Besides the five defining constraint
classes it satisfies scheduling refinements that the numerical decoupling
tests rely on: no pattern flips across the period wrap (blocks concatenate
without split pulses), the pattern pairs that can sit on a coupled edge
never pulse simultaneously, and the one pair that shares flip boundaries
(the two idle sequences) shares them with cancelling frame signs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

SLOT_DURATION = 2.0  # tau_p units
N_SLOTS = 8
BLOCK_DURATION = SLOT_DURATION * N_SLOTS  # 16 tau_p

PATTERN_ROLES = ("A", "B", "C", "D")


@dataclass(frozen=True)
class TogglingPattern:
    """Sign per 2 tau_p slot; pulses sit on the interior flip boundaries."""

    signs: tuple[int, ...]

    def __post_init__(self):
        if any(s not in (-1, 1) for s in self.signs):
            raise ValueError("slot signs must be +1 or -1")

    @property
    def n_slots(self) -> int:
        return len(self.signs)

    def flip_boundaries(self) -> tuple[int, ...]:
        """Interior boundary indices k (time 2k tau_p) where the sign flips."""
        return tuple(
            k
            for k in range(1, self.n_slots)
            if self.signs[k] != self.signs[k - 1]
        )

    def flip_times(self) -> tuple[float, ...]:
        return tuple(SLOT_DURATION * k for k in self.flip_boundaries())

    def wraps_cleanly(self) -> bool:
        """True when consecutive periods join without a flip at the seam."""
        return self.signs[0] == self.signs[-1]

    def balanced(self) -> bool:
        return sum(self.signs) == 0

    def cyclic_flip_count(self) -> int:
        return sum(
            1
            for k in range(self.n_slots)
            if self.signs[k] != self.signs[k - 1]
        )

    def sign_at(self, t: float) -> int:
        """Slot sign at time t within the period (hard-flip idealization)."""
        slot = int(t // SLOT_DURATION) % self.n_slots
        return self.signs[slot]


def _product_sum(a: TogglingPattern, b: TogglingPattern) -> int:
    return int(np.dot(a.signs, b.signs))


def _shared_flip_cancellation(a: TogglingPattern, b: TogglingPattern) -> bool:
    """Simultaneous flips are tolerable iff their frame signs sum to zero.

    When two coupled qubits pulse at the same boundary, the leading coupling
    error per event carries the sign f_a f_b of the slot just before it;
    events cancel pairwise when those signs sum to zero over the period.
    """
    shared = set(a.flip_boundaries()) & set(b.flip_boundaries())
    return sum(a.signs[k - 1] * b.signs[k - 1] for k in shared) == 0


def _disjoint_flips(a: TogglingPattern, b: TogglingPattern) -> bool:
    return not (set(a.flip_boundaries()) & set(b.flip_boundaries()))


def check_quadruple(
    patterns: dict[str, TogglingPattern], scheduling: bool = True
) -> dict[str, bool]:
    """Independent slot-arithmetic audit of the five constraint classes.

    Returns one boolean per constraint; ``scheduling=True`` adds the
    refinements the compiler depends on.
    """
    a, b, c, d = (patterns[r] for r in PATTERN_ROLES)
    report = {
        "balanced": all(p.balanced() for p in (a, b, c, d)),
        "idle_pair_orthogonal": _product_sum(a, b) == 0,
        "coupled_pair_half_retained": abs(_product_sum(c, d)) == c.n_slots // 2,
        "spectators_decoupled": _product_sum(c, b) == 0 and _product_sum(d, a) == 0,
        "even_flip_count": all(p.cyclic_flip_count() % 2 == 0 for p in (a, b, c, d)),
    }
    if scheduling:
        report.update(
            {
                "clean_wrap": all(p.wraps_cleanly() for p in (a, b, c, d)),
                "coupling_sign_positive": _product_sum(c, d) == c.n_slots // 2,
                "cd_flips_disjoint": _disjoint_flips(c, d),
                "cb_flips_disjoint": _disjoint_flips(c, b),
                "da_flips_disjoint": _disjoint_flips(d, a),
                "ab_shared_flips_cancel": _shared_flip_cancellation(a, b),
            }
        )
    return report


def _balanced_patterns(n_slots: int) -> list[TogglingPattern]:
    out = []
    for combo in itertools.combinations(range(n_slots), n_slots // 2):
        signs = [-1] * n_slots
        for k in combo:
            signs[k] = 1
        out.append(TogglingPattern(tuple(signs)))
    return out


def _key(patterns: tuple[TogglingPattern, ...]) -> tuple:
    # lexicographic with + before -, over the concatenated quadruple
    return tuple(0 if s == 1 else 1 for p in patterns for s in p.signs)


def pattern_search(
    n_slots: int = N_SLOTS, scheduling: bool = True
) -> dict[str, TogglingPattern] | None:
    """Exhaustively search sign patterns for a valid quadruple.

    Returns the lexicographically smallest (+ sorts before -) quadruple
    satisfying every constraint, or None when the slot count admits no
    solution. With ``scheduling=False`` only the five defining constraint
    classes are imposed.
    """
    if n_slots % 2 != 0:
        return None
    half = n_slots // 2
    cands = _balanced_patterns(n_slots)
    if scheduling:
        cands = [p for p in cands if p.wraps_cleanly()]
    sig = np.array([p.signs for p in cands])  # (m, n_slots)
    m = len(cands)
    gram = sig @ sig.T

    best = None
    for ia in range(m):
        a = cands[ia]
        for ib in np.nonzero(gram[ia] == 0)[0]:
            b = cands[ib]
            if scheduling and not _shared_flip_cancellation(a, b):
                continue
            c_idx = np.nonzero(gram[ib] == 0)[0]  # C orthogonal to B
            d_idx = np.nonzero(gram[ia] == 0)[0]  # D orthogonal to A
            for ic in c_idx:
                c = cands[ic]
                if scheduling and not _disjoint_flips(c, b):
                    continue
                for idd in d_idx:
                    if scheduling:
                        if gram[ic, idd] != half:
                            continue
                    elif abs(gram[ic, idd]) != half:
                        continue
                    d = cands[idd]
                    if scheduling and not (
                        _disjoint_flips(c, d) and _disjoint_flips(d, a)
                    ):
                        continue
                    quad = (a, b, c, d)
                    if best is None or _key(quad) < _key(best):
                        best = quad
    if best is None:
        return None
    return dict(zip(PATTERN_ROLES, best))


# Canonical fixture: pattern_search(8, scheduling=True). Frozen here so the
# compiler does not pay the search on import; a regression test re-derives it.
CANONICAL_PATTERNS: dict[str, TogglingPattern] = {
    "A": TogglingPattern((1, 1, 1, -1, -1, -1, -1, 1)),
    "B": TogglingPattern((1, -1, -1, 1, 1, -1, -1, 1)),
    "C": TogglingPattern((1, 1, -1, -1, -1, -1, 1, 1)),
    "D": TogglingPattern((1, -1, -1, -1, -1, 1, 1, 1)),
}


def save_patterns(patterns: dict[str, TogglingPattern], path) -> None:
    report = check_quadruple(patterns)
    with open(path, "w") as fh:
        fh.write("# sublattice toggling patterns, one sign per 2 tau_p slot\n")
        for role in PATTERN_ROLES:
            signs = " ".join("+" if s == 1 else "-" for s in patterns[role].signs)
            fh.write(f"pattern {role} {signs}\n")
        for name, ok in report.items():
            fh.write(f"# {name}: {'ok' if ok else 'VIOLATED'}\n")


def load_patterns(path) -> dict[str, TogglingPattern]:
    out = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tok = line.split()
            if tok[0] != "pattern" or len(tok) < 3:
                raise ValueError(f"unrecognised pattern line: {raw.rstrip()}")
            signs = tuple(1 if s == "+" else -1 for s in tok[2:])
            out[tok[1]] = TogglingPattern(signs)
    missing = set(PATTERN_ROLES) - set(out)
    if missing:
        raise ValueError(f"pattern file is missing roles {sorted(missing)}")
    return out
