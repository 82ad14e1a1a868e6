"""Site graphs, pulses, and time-dependent tight-binding Hamiltonians.

This module builds the three network geometries used throughout the
package and provides the machinery to make individual matrix entries
time dependent:

* a five-site star (two dimers coupled through a hub),
* a seven-site chain-of-hubs unit (two dimers, two connector sites,
  one central hub),
* a decorated Lieb lattice (DLL) of unit cells with one hub and two
  dimers each, with open boundary conditions.

A Hamiltonian is stored as a dense real symmetric ``base`` matrix plus
a mapping from matrix entries to :class:`Pulse` objects.  Conventions:
hbar = 1, energies in abstract units, times in inverse energy units.
All couplings and potentials are real, so Hermitian means symmetric
here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

__all__ = [
    "Pulse",
    "ConstantPulse",
    "LinearRamp",
    "CrabTransferPulse",
    "CreationStarPulse",
    "CreationSevenPulse",
    "TablePulse",
    "TimeMirrored",
    "SiteGraph",
    "TimedHamiltonian",
    "build_star",
    "build_seven",
    "build_dll",
    "attach_pulse",
    "evaluate_at",
    "evaluate_grid",
    "STAR_EDGES",
    "SEVEN_EDGES",
]

# Edge lists in coupling order.  Star sites: 0,1 first dimer, 2 hub,
# 3,4 second dimer.  Seven sites: 0,1 dimer, 2 connector, 3 central
# hub, 4 connector, 5,6 dimer.
STAR_EDGES = ((0, 2), (1, 2), (2, 3), (2, 4))
SEVEN_EDGES = ((0, 2), (1, 2), (2, 3), (3, 4), (4, 5), (4, 6))


class Pulse:
    """Scalar function of time attached to one Hamiltonian entry.

    Subclasses implement ``value(t)``, accepting a float or an ndarray
    of times and returning the same shape.  Pulses are immutable.
    """

    kind = "abstract"

    def value(self, t):
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantPulse(Pulse):
    """Entry held at a fixed value."""

    level: float
    kind = "constant"

    def value(self, t):
        return np.broadcast_to(np.float64(self.level), np.shape(t)).copy() \
            if np.ndim(t) else float(self.level)


@dataclass(frozen=True)
class LinearRamp(Pulse):
    """Linear interpolation from ``start`` to ``end`` over ``duration``.

    The declared endpoints are returned exactly at t <= 0 and
    t >= duration; no floating-point drift at the boundaries.
    """

    start: float
    end: float
    duration: float
    kind = "linear-ramp"

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError("ramp duration must be positive")

    def value(self, t):
        s = np.asarray(t, dtype=float) / self.duration
        v = self.start + (self.end - self.start) * s
        v = np.where(s <= 0.0, self.start, v)
        v = np.where(s >= 1.0, self.end, v)
        return v if np.ndim(t) else float(v)


@dataclass(frozen=True)
class CrabTransferPulse(Pulse):
    """Transfer-pulse ansatz: floor * (1 + envelope * bracket^2).

    value(t) = floor * (1 + sin(t / env_div) * (x sin(w t) + xp cos(w t))^2)

    with env_div = 2 on horizon 2*pi (star) or env_div = 4 on horizon
    4*pi (seven-site).  The envelope is non-negative on the horizon and
    the bracket enters squared, so the value never drops below
    ``floor`` there, and equals ``floor`` exactly at both ends.
    """

    floor: float
    x: float
    xp: float
    omega: float
    env_div: float = 2.0

    @property
    def kind(self):
        return "crab-star" if self.env_div == 2.0 else "crab-seven"

    def value(self, t):
        t = np.asarray(t, dtype=float)
        bracket = self.x * np.sin(self.omega * t) + self.xp * np.cos(self.omega * t)
        v = self.floor * (1.0 + np.sin(t / self.env_div) * bracket**2)
        return v if v.ndim else float(v)


@dataclass(frozen=True)
class CreationStarPulse(Pulse):
    """Oscillating creation pulse with a linear envelope.

    value(t) = (1 + x sin(w t) + xp sin(wp t)) * amplitude * (1 - t / horizon)

    The bracket is not squared; the value may become negative.  The
    linear factor vanishes exactly at t = horizon.  The plain ramp
    partner of this pulse is ``LinearRamp(amplitude, 0, horizon)``.
    """

    x: float
    xp: float
    omega: float
    omegap: float
    amplitude: float
    horizon: float
    kind = "creation-star"

    def value(self, t):
        t = np.asarray(t, dtype=float)
        bracket = 1.0 + self.x * np.sin(self.omega * t) + self.xp * np.sin(self.omegap * t)
        lin = np.where(t >= self.horizon, 0.0, 1.0 - t / self.horizon)
        v = bracket * self.amplitude * lin
        return v if v.ndim else float(v)


@dataclass(frozen=True)
class CreationSevenPulse(Pulse):
    """Seven-site creation pulse: floor * (1 + sin(t/2) * bracket).

    Unlike the transfer ansatz the bracket is not squared, so the
    coupling may become negative.  Equals ``floor`` exactly at t = 0
    and t = 2*pi.
    """

    floor: float
    x: float
    xp: float
    omega: float
    kind = "creation-seven"

    def value(self, t):
        t = np.asarray(t, dtype=float)
        bracket = self.x * np.sin(self.omega * t) + self.xp * np.cos(self.omega * t)
        v = self.floor * (1.0 + np.sin(t / 2.0) * bracket)
        return v if v.ndim else float(v)


@dataclass(frozen=True)
class TablePulse(Pulse):
    """Piecewise-linear interpolation through (time, value) samples.

    Values are held constant outside the sampled range.
    """

    times: tuple
    values: tuple
    kind = "custom-table"

    def __post_init__(self):
        if len(self.times) != len(self.values) or len(self.times) < 2:
            raise ValueError("table needs matching times/values, at least 2 points")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("table times must be strictly increasing")

    def value(self, t):
        v = np.interp(np.asarray(t, dtype=float), self.times, self.values)
        return v if np.ndim(t) else float(v)


@dataclass(frozen=True)
class TimeMirrored(Pulse):
    """Adapter evaluating an inner pulse at (horizon - t).

    Used to run a pulse profile in the opposite time direction, e.g.
    to turn a decoupling profile into the matching coupling profile.
    The reported kind is the inner pulse's kind.
    """

    inner: Pulse
    horizon: float

    @property
    def kind(self):
        return self.inner.kind

    def value(self, t):
        return self.inner.value(self.horizon - np.asarray(t, dtype=float)) \
            if np.ndim(t) else self.inner.value(self.horizon - t)


@dataclass(frozen=True)
class SiteGraph:
    """Static connectivity and site roles of a network.

    Parameters
    ----------
    n_sites : int
        Number of sites; indices are dense in [0, n_sites).
    edges : tuple of (int, int)
        Unordered coupling pairs, stored with i < j.
    labels : tuple of str
        Per-site role tag: 'dimer-upper', 'dimer-lower', 'hub' or
        'connector'.  Dimer partners are adjacent in index order,
        upper immediately before lower.
    positions : tuple of (float, float), optional
        Decorative 2D coordinates (present for the lattice case).
    """

    n_sites: int
    edges: tuple
    labels: tuple
    positions: tuple | None = None

    def __post_init__(self):
        seen = set()
        for i, j in self.edges:
            if i == j:
                raise ValueError(f"self-edge on site {i}")
            if not (0 <= i < self.n_sites and 0 <= j < self.n_sites):
                raise ValueError(f"edge ({i},{j}) outside site range")
            if i > j:
                raise ValueError(f"edge ({i},{j}) not stored in (low, high) order")
            if (i, j) in seen:
                raise ValueError(f"duplicate edge ({i},{j})")
            seen.add((i, j))
        if len(self.labels) != self.n_sites:
            raise ValueError("one label per site required")

    def dimers(self):
        """All dimer pairs (upper, lower), in site-index order."""
        out = []
        for i, lab in enumerate(self.labels):
            if lab == "dimer-upper":
                if i + 1 >= self.n_sites or self.labels[i + 1] != "dimer-lower":
                    raise ValueError(f"dimer-upper at {i} lacks a lower partner")
                out.append((i, i + 1))
        return tuple(out)

    def hubs(self):
        """All hub site indices."""
        return tuple(i for i, lab in enumerate(self.labels) if lab == "hub")

    def neighbors(self, site):
        """Sites sharing an edge with ``site``, ascending."""
        out = [j if i == site else i for i, j in self.edges if site in (i, j)]
        return tuple(sorted(out))


def _normalize_entry(entry, n):
    i, j = int(entry[0]), int(entry[1])
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"entry ({i},{j}) outside a {n}x{n} matrix")
    return (i, j) if i <= j else (j, i)


@dataclass(frozen=True)
class TimedHamiltonian:
    """Real symmetric matrix with optional per-entry pulse overrides.

    ``base`` holds the static couplings and on-site potentials.  Each
    override maps an entry (i, j) with i <= j to a :class:`Pulse`; the
    entry and its mirror take the pulse value instead of the base
    value.  Entries without an override are constant in time.
    Instances are immutable; modification helpers return new objects.
    """

    base: np.ndarray
    overrides: Mapping = field(default_factory=dict)

    def __post_init__(self):
        base = np.array(self.base, dtype=float)
        if base.ndim != 2 or base.shape[0] != base.shape[1]:
            raise ValueError("base must be a square matrix")
        if not np.allclose(base, base.T, atol=1e-12, rtol=0.0):
            raise ValueError("base must be symmetric")
        base.setflags(write=False)
        object.__setattr__(self, "base", base)
        fixed = {}
        for entry, pulse in dict(self.overrides).items():
            key = _normalize_entry(entry, base.shape[0])
            if not isinstance(pulse, Pulse):
                raise TypeError("override values must be Pulse instances")
            fixed[key] = pulse
        object.__setattr__(self, "overrides", fixed)

    @property
    def n_sites(self):
        return self.base.shape[0]

    @property
    def static(self):
        return not self.overrides

    def with_entry(self, entry, value):
        """New Hamiltonian with one static entry (and mirror) replaced."""
        i, j = _normalize_entry(entry, self.n_sites)
        base = np.array(self.base)
        base[i, j] = value
        base[j, i] = value
        return TimedHamiltonian(base, dict(self.overrides))

    def without_overrides(self):
        return TimedHamiltonian(np.array(self.base), {})


def build_star(J, v):
    """Five-site star Hamiltonian: four outer sites coupled to a hub.

    Parameters
    ----------
    J : sequence of 4 floats
        Couplings of outer sites (0, 1, 3, 4) to the hub, in the edge
        order ``STAR_EDGES``.
    v : sequence of 5 floats, or scalar
        On-site potentials in site order (dimer, hub, dimer).

    Returns
    -------
    TimedHamiltonian
    """
    J = np.broadcast_to(np.asarray(J, dtype=float), (4,))
    v = np.broadcast_to(np.asarray(v, dtype=float), (5,))
    base = np.diag(v).copy()
    for coupling, (i, j) in zip(J, STAR_EDGES):
        base[i, j] = base[j, i] = coupling
    return TimedHamiltonian(base, {})


def star_graph():
    """Connectivity and labels matching :func:`build_star`."""
    return SiteGraph(
        5,
        STAR_EDGES,
        ("dimer-upper", "dimer-lower", "hub", "dimer-upper", "dimer-lower"),
    )


def build_seven(J, v):
    """Seven-site unit: dimer - connector - hub - connector - dimer.

    Parameters
    ----------
    J : sequence of 6 floats
        Couplings in the edge order ``SEVEN_EDGES``: dimer sites 0 and
        1 to connector 2, connector 2 to hub 3, hub 3 to connector 4,
        connector 4 to dimer sites 5 and 6.
    v : sequence of 7 floats, or scalar
        On-site potentials.

    Returns
    -------
    TimedHamiltonian
    """
    J = np.broadcast_to(np.asarray(J, dtype=float), (6,))
    v = np.broadcast_to(np.asarray(v, dtype=float), (7,))
    base = np.diag(v).copy()
    for coupling, (i, j) in zip(J, SEVEN_EDGES):
        base[i, j] = base[j, i] = coupling
    return TimedHamiltonian(base, {})


def seven_graph():
    """Connectivity and labels matching :func:`build_seven`."""
    return SiteGraph(
        7,
        SEVEN_EDGES,
        ("dimer-upper", "dimer-lower", "connector", "hub", "connector",
         "dimer-upper", "dimer-lower"),
    )


def build_dll(cells_x, cells_y, J, v):
    """Decorated Lieb lattice with open boundaries.

    Each unit cell contributes one hub and two dimers (5 sites).  The
    horizontal dimer of cell (i, j) couples to the hubs of cells
    (i, j) and (i+1, j); the vertical dimer to the hubs of (i, j) and
    (i, j+1).  Dimers on the right or top boundary keep only their
    single adjacent hub.  Dimer sites never couple to each other.

    Parameters
    ----------
    cells_x, cells_y : int
        Cell counts, both >= 1.
    J : float
        Uniform hub-dimer coupling.
    v : float
        Uniform on-site potential.

    Returns
    -------
    (SiteGraph, TimedHamiltonian)
    """
    if cells_x < 1 or cells_y < 1:
        raise ValueError("need at least one cell in each direction")
    n = 5 * cells_x * cells_y

    def hub(i, j):
        return 5 * (j * cells_x + i)

    labels = []
    positions = []
    edges = []
    for j in range(cells_y):
        for i in range(cells_x):
            h = hub(i, j)
            labels += ["hub", "dimer-upper", "dimer-lower", "dimer-upper", "dimer-lower"]
            positions += [
                (float(i), float(j)),
                (i + 0.5, j + 0.18),
                (i + 0.5, j - 0.18),
                (i + 0.18, j + 0.5),
                (i - 0.18, j + 0.5),
            ]
            for s in (h + 1, h + 2):          # horizontal dimer
                edges.append(tuple(sorted((s, h))))
                if i + 1 < cells_x:
                    edges.append(tuple(sorted((s, hub(i + 1, j)))))
            for s in (h + 3, h + 4):          # vertical dimer
                edges.append(tuple(sorted((s, h))))
                if j + 1 < cells_y:
                    edges.append(tuple(sorted((s, hub(i, j + 1)))))

    base = np.full((n, n), 0.0)
    np.fill_diagonal(base, float(v))
    for i, j in edges:
        base[i, j] = base[j, i] = float(J)
    graph = SiteGraph(n, tuple(sorted(set(edges))), tuple(labels), tuple(positions))
    return graph, TimedHamiltonian(base, {})


def attach_pulse(H, entry, p):
    """New Hamiltonian with ``entry`` (and its mirror) driven by ``p``.

    The original Hamiltonian is unchanged.  Raises IndexError for an
    out-of-bounds entry.
    """
    key = _normalize_entry(entry, H.n_sites)
    overrides = dict(H.overrides)
    overrides[key] = p
    return TimedHamiltonian(np.array(H.base), overrides)


def evaluate_at(H, t):
    """Dense symmetric snapshot of ``H`` at time ``t``."""
    out = np.array(H.base)
    for (i, j), pulse in H.overrides.items():
        val = float(pulse.value(float(t)))
        out[i, j] = val
        out[j, i] = val
    return out


def evaluate_grid(H, times):
    """Stacked snapshots of ``H`` at an array of times.

    Returns an array of shape (len(times), n, n).  Pulse evaluation is
    vectorized over the time axis.
    """
    times = np.asarray(times, dtype=float)
    out = np.broadcast_to(H.base, (times.size,) + H.base.shape).copy()
    for (i, j), pulse in H.overrides.items():
        vals = np.asarray(pulse.value(times), dtype=float)
        out[:, i, j] = vals
        out[:, j, i] = vals
    return out
