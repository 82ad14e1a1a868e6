"""Analytic flip-based transfer and generation protocols.

The star protocols move the antisymmetric input-dimer state across the
hub by free evolution framed by instantaneous flips; the timing and
potential come from closed-form families indexed by integers.  The
generation protocols trade the hub amplitude for a dimer state with
half the couplings switched off.  The seven-site unit supports the two
flip-based transfer variants with its own timing family.

State naming on the star (sites 0,1 dimer, 2 hub, 3,4 dimer):
``I`` = (e0-e1)/sqrt2, ``L`` = (e0+e1)/sqrt2, ``c`` = e2,
``R`` = (e3+e4)/sqrt2, ``F`` = (e3-e4)/sqrt2.  The seven-site unit
uses the same names with its dimers (0,1) and (5,6) and hub 3.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .evolve import (
    HoppingFlip,
    PhaseFlip,
    ProtocolSchedule,
    Segment,
    end_hamiltonian,
)
from .lattice import TimedHamiltonian, build_seven, build_star
from .spectral import dimer_state

__all__ = [
    "TransferParams",
    "GenerationParams",
    "solve_transfer_params",
    "solve_seven_transfer_params",
    "fastest_transfer_params",
    "solve_generation_params",
    "phase_flip",
    "hopping_flip",
    "build_schedule",
    "cls_state",
    "target_locally_symmetric",
]

_STAR_HOPPING_PAIRS = {"J1J3": ((0, 2), (2, 3)), "J2J4": ((1, 2), (2, 4))}
_SEVEN_HOPPING_PAIRS = {"J2J6": ((1, 2), (4, 6)), "J1J5": ((0, 2), (4, 5))}


def cls_state(graph, name):
    """Named localized state as a length-5 or length-7 real vector."""
    if graph == "star":
        n, dim_in, dim_out, hub = 5, (0, 1), (3, 4), 2
    elif graph == "seven":
        n, dim_in, dim_out, hub = 7, (0, 1), (5, 6), 3
    else:
        raise ValueError(f"unknown graph {graph!r}")
    if name == "I":
        return dimer_state(n, dim_in)
    if name == "L":
        return dimer_state(n, dim_in, antisymmetric=False)
    if name == "F":
        return dimer_state(n, dim_out)
    if name == "R":
        return dimer_state(n, dim_out, antisymmetric=False)
    if name == "c":
        vec = np.zeros(n)
        vec[hub] = 1.0
        return vec
    raise ValueError(f"unknown state {name!r}")


def _require_int(value, label):
    if value != int(value):
        raise ValueError(f"{label} must be an integer")
    return int(value)


@dataclass(frozen=True)
class TransferParams:
    """Potential and duration of one flip-transfer family member.

    ``graph`` = 'star': v = J(4 k1/(1+2 k2) - 2) and
    T = pi (1+2 k2)/(2 J), making the symmetric sector return to
    itself while the flat sector picks up a minus sign over T.
    ``graph`` = 'seven': T = pi (2 k1 + 1)/(sqrt2 J) with free v
    (k2 unused); requires the inner couplings at sqrt3 * J.
    """

    v: float
    T: float
    k1: int
    k2: Optional[int]
    J: float
    graph: str = "star"

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"transfer time must be positive, got {self.T}")
        if self.graph == "star":
            expect_v = self.J * (4 * self.k1 / (1 + 2 * self.k2) - 2)
            expect_T = np.pi * (1 + 2 * self.k2) / (2 * self.J)
        elif self.graph == "seven":
            expect_v = self.v
            expect_T = np.pi * (2 * self.k1 + 1) / (np.sqrt(2.0) * self.J)
        else:
            raise ValueError(f"unknown graph {self.graph!r}")
        if abs(self.v - expect_v) > 1e-12 or abs(self.T - expect_T) > 1e-12:
            raise ValueError("(v, T) inconsistent with the family formulas")


def solve_transfer_params(k1, k2, J):
    """Star flip-transfer family member for integer indices (k1, k2).

    Raises for indices that give a non-positive duration.
    """
    k1 = _require_int(k1, "k1")
    k2 = _require_int(k2, "k2")
    if 1 + 2 * k2 == 0:
        raise ValueError("1 + 2*k2 must be nonzero")
    v = J * (4 * k1 / (1 + 2 * k2) - 2)
    T = np.pi * (1 + 2 * k2) / (2 * J)
    params = TransferParams(v=v, T=T, k1=k1, k2=k2, J=J)
    # the three sector phases the derivation rests on
    assert abs(np.exp(-1j * v * T) + 1) < 1e-9
    assert abs(np.exp(-1j * (v - 2 * J) * T) - 1) < 1e-9
    assert abs(np.exp(-1j * (v + 2 * J) * T) - 1) < 1e-9
    return params


def solve_seven_transfer_params(k, J, v=0.0):
    """Seven-site flip-transfer family member (inner couplings sqrt3*J)."""
    k = _require_int(k, "k")
    T = np.pi * (2 * k + 1) / (np.sqrt(2.0) * J)
    return TransferParams(v=v, T=T, k1=k, k2=None, J=J, graph="seven")


def fastest_transfer_params(J, k1_range=range(-2, 4), k2_range=range(0, 3)):
    """Star family member with minimal T, ties broken by smaller |v|,
    then by the smaller (k1, k2) pair.  Deterministic."""
    best = None
    for k2 in k2_range:
        for k1 in k1_range:
            try:
                p = solve_transfer_params(k1, k2, J)
            except ValueError:
                continue
            key = (p.T, abs(p.v), k1, k2)
            if best is None or key < best[0]:
                best = (key, p)
    if best is None:
        raise ValueError("no valid family member in the given index ranges")
    return best[1]


@dataclass(frozen=True)
class GenerationParams:
    """Hub-to-dimer generation family member.

    branch 1: v = sqrt2 J' (4k1'-1)/(1+4k2'), T = pi (4k1'-1)/(2v);
    branch 2: v = sqrt2 J' (4k1'+1)/(-1+4k2'), T = pi (4k1'+1)/(2v).
    Over T the (v - sqrt2 J') sector flips sign while the
    (v + sqrt2 J') sector returns, swapping hub and dimer exactly.
    """

    branch: int
    k1p: int
    k2p: int
    Jp: float
    v: float
    T: float

    def __post_init__(self):
        if self.branch not in (1, 2):
            raise ValueError("branch must be 1 or 2")
        if self.v == 0:
            raise ValueError("family point has v = 0")
        if not self.T > 0:
            raise ValueError(f"generation time must be positive, got {self.T}")
        root2 = np.sqrt(2.0)
        if self.branch == 1:
            ev = root2 * self.Jp * (4 * self.k1p - 1) / (1 + 4 * self.k2p)
            eT = np.pi * (4 * self.k1p - 1) / (2 * self.v)
        else:
            ev = root2 * self.Jp * (4 * self.k1p + 1) / (-1 + 4 * self.k2p)
            eT = np.pi * (4 * self.k1p + 1) / (2 * self.v)
        if abs(self.v - ev) > 1e-12 or abs(self.T - eT) > 1e-12:
            raise ValueError("(v, T) inconsistent with the family formulas")


def solve_generation_params(branch, k1p, k2p, Jp):
    """Generation family member; raises when the indices give v = 0,
    a vanishing denominator, or T <= 0."""
    if branch not in (1, 2):
        raise ValueError("branch must be 1 or 2")
    k1p = _require_int(k1p, "k1p")
    k2p = _require_int(k2p, "k2p")
    root2 = np.sqrt(2.0)
    if branch == 1:
        den = 1 + 4 * k2p
        num = 4 * k1p - 1
    else:
        den = -1 + 4 * k2p
        num = 4 * k1p + 1
    if den == 0:
        raise ValueError("denominator vanishes for these indices")
    v = root2 * Jp * num / den
    if v == 0:
        raise ValueError("family point has v = 0 (is Jp zero?)")
    T = np.pi * num / (2 * v)
    params = GenerationParams(branch=branch, k1p=k1p, k2p=k2p, Jp=Jp, v=v, T=T)
    assert abs(np.exp(-1j * (v - root2 * Jp) * T) + 1) < 1e-9
    assert abs(np.exp(-1j * (v + root2 * Jp) * T) - 1) < 1e-9
    return params


def phase_flip(psi, site):
    """Negate the amplitude on one site; exact and norm-preserving."""
    psi = np.array(psi)
    if not 0 <= site < psi.size:
        raise IndexError(f"site {site} outside the state")
    psi[site] = -psi[site]
    return psi


def hopping_flip(H, entry):
    """Negate one coupling (and its mirror) of a static Hamiltonian."""
    i, j = entry
    if i == j:
        raise ValueError("cannot sign-flip a diagonal entry")
    if not (0 <= i < H.n_sites and 0 <= j < H.n_sites):
        raise IndexError(f"entry {entry} outside the matrix")
    key = (min(i, j), max(i, j))
    if key in H.overrides:
        raise ValueError("entry is pulse-driven; flip its base before attaching")
    return H.with_entry(key, -H.base[key])


def _star_base(params):
    return build_star([params.J] * 4, params.v)


def _seven_base(params):
    root3 = np.sqrt(3.0)
    J = params.J
    return build_seven([J, J, root3 * J, root3 * J, J, J], params.v)


def _generation_hamiltonians(params):
    """In-half and out-half star Hamiltonians of the generation setup."""
    H_in = build_star([params.Jp, params.Jp, 0.0, 0.0], params.v)
    H_out = build_star([0.0, 0.0, params.Jp, params.Jp], params.v)
    return H_in, H_out


def _flip_transfer(T, variant, in_site, out_site, pair_entries):
    if variant == "phase-flip-transfer":
        return (PhaseFlip(0.0, in_site), Segment(0.0, T), PhaseFlip(T, out_site))
    a, b = pair_entries
    return (HoppingFlip(0.0, a), HoppingFlip(0.0, b),
            Segment(0.0, T),
            HoppingFlip(T, a), HoppingFlip(T, b))


def build_schedule(graph, variant, params, **options):
    """Schedule for one protocol variant on 'star' or 'seven'.

    Star variants: phase-flip-transfer, hopping-flip-transfer,
    generation (hub -> stored dimer state), reverse-generation
    (stored dimer state -> hub), piecewise-transfer (transfer routed
    through the hub in two generation-length halves).  Seven-site
    variants: the two flip transfers.  Options select which dimer
    member is flipped (``in_site``, ``out_site``), which coupling pair
    a hopping variant flips (``pair``: 'J1J3'/'J2J4' on the star,
    'J2J6'/'J1J5' on the seven-site unit), and whether generation ends
    with the flip to the antisymmetric state (``final_flip``).
    """
    if graph not in ("star", "seven"):
        raise ValueError(f"unknown graph {graph!r}")

    transfer_variants = ("phase-flip-transfer", "hopping-flip-transfer")
    if variant in transfer_variants:
        if not isinstance(params, TransferParams) or params.graph != graph:
            raise ValueError(f"{variant} on {graph} needs TransferParams "
                             f"solved for that graph")
        if graph == "star":
            base = _star_base(params)
            in_site = options.pop("in_site", 1)
            out_site = options.pop("out_site", 4)
            pairs = _STAR_HOPPING_PAIRS
            if in_site not in (0, 1) or out_site not in (3, 4):
                raise ValueError("star flips must hit one site of each dimer")
        else:
            base = _seven_base(params)
            in_site = options.pop("in_site", 1)
            out_site = options.pop("out_site", 6)
            pairs = _SEVEN_HOPPING_PAIRS
            if in_site not in (0, 1) or out_site not in (5, 6):
                raise ValueError("seven-site flips must hit one site of each dimer")
        pair = options.pop("pair", next(iter(pairs)))
        if options:
            raise TypeError(f"unknown options {sorted(options)}")
        if pair not in pairs:
            raise ValueError(f"unknown hopping pair {pair!r}")
        items = _flip_transfer(params.T, variant, in_site, out_site, pairs[pair])
        return ProtocolSchedule(base, items,
                                initial_state=cls_state(graph, "I"),
                                target_state=cls_state(graph, "F"))

    if graph == "seven":
        raise ValueError(f"variant {variant!r} is not defined for the "
                         "seven-site graph; only flip transfers are")
    if not isinstance(params, GenerationParams):
        raise ValueError(f"{variant} needs GenerationParams")
    H_in, H_out = _generation_hamiltonians(params)
    T = params.T

    if variant == "generation":
        final_flip = options.pop("final_flip", True)
        flip_site = options.pop("flip_site", 1)
        if options:
            raise TypeError(f"unknown options {sorted(options)}")
        items = [Segment(0.0, T)]
        target = cls_state("star", "L")
        if final_flip:
            items.append(PhaseFlip(T, flip_site))
            target = phase_flip(target, flip_site)
        return ProtocolSchedule(H_in, tuple(items),
                                initial_state=cls_state("star", "c"),
                                target_state=target)

    if variant == "reverse-generation":
        flip_site = options.pop("flip_site", 1)
        if options:
            raise TypeError(f"unknown options {sorted(options)}")
        items = (PhaseFlip(0.0, flip_site), Segment(0.0, T))
        return ProtocolSchedule(H_in, items,
                                initial_state=cls_state("star", "I"),
                                target_state=cls_state("star", "c"))

    if variant == "piecewise-transfer":
        in_site = options.pop("in_site", 1)
        out_site = options.pop("out_site", 4)
        if options:
            raise TypeError(f"unknown options {sorted(options)}")
        items = (
            PhaseFlip(0.0, in_site),
            Segment(0.0, T),
            Segment(T, 2 * T, H_out),
            PhaseFlip(2 * T, out_site),
        )
        return ProtocolSchedule(H_in, items,
                                initial_state=cls_state("star", "I"),
                                target_state=cls_state("star", "F"))

    raise ValueError(f"unknown variant {variant!r}")


def target_locally_symmetric(s):
    """Whether the schedule's final Hamiltonian treats the target
    dimer symmetrically (equal potentials, equal couplings outward).

    True by construction for single-site targets.
    """
    if s.target_state is None:
        raise ValueError("schedule declares no target state")
    support = np.flatnonzero(np.abs(s.target_state) > 1e-12)
    if support.size != 2:
        return True
    a, b = (int(x) for x in support)
    M = end_hamiltonian(s)
    rest = [k for k in range(M.shape[0]) if k not in (a, b)]
    return bool(abs(M[a, a] - M[b, b]) <= 1e-12
                and np.all(np.abs(M[rest, a] - M[rest, b]) <= 1e-12))
