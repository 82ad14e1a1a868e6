"""Time evolution, fidelity, and protocol-schedule execution.

Propagation convention: psi(t) = exp(-i H t) psi(0) with hbar = 1.
Static Hamiltonians are propagated by spectral decomposition; pulsed
ones by a fourth-order commutator-free exponential integrator (two
matrix exponentials of weighted Hamiltonian averages per step), which
is unitary up to roundoff.

A :class:`ProtocolSchedule` is an ordered timeline of instantaneous
events (phase flips on the state, sign flips on couplings) and
evolution segments.  Segments may carry their own pulsed Hamiltonian;
pulses inside a segment run on a segment-local clock starting at 0.
When a segment with its own Hamiltonian ends, the snapshot of that
Hamiltonian at the segment's end becomes the working Hamiltonian for
whatever follows, so reconfigurations (e.g. swapping which couplings
are active) are expressed by consecutive segments.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .lattice import (
    TimeMirrored,
    TimedHamiltonian,
    evaluate_at,
    evaluate_grid,
)

__all__ = [
    "evolve_static",
    "evolve_timedep",
    "evolve_timedep_fixed",
    "fidelity",
    "PhaseFlip",
    "HoppingFlip",
    "Segment",
    "ProtocolSchedule",
    "Trajectory",
    "run_schedule",
    "reverse_schedule",
    "end_hamiltonian",
]

# Gauss-Legendre nodes and exponential weights of the 4th-order
# commutator-free scheme.  Per step, with A1 = H(t + C1*h) and
# A2 = H(t + C2*h), the update is
#   psi <- exp(-i*h*(X1*A1 + X2*A2)) @ exp(-i*h*(X2*A1 + X1*A2)) @ psi
_C1 = 0.5 - np.sqrt(3.0) / 6.0
_C2 = 0.5 + np.sqrt(3.0) / 6.0
_X1 = (3.0 - 2.0 * np.sqrt(3.0)) / 12.0
_X2 = (3.0 + 2.0 * np.sqrt(3.0)) / 12.0

_N_MAX = 1 << 23        # step ceiling; beyond this the request is reported
_CHUNK = 4096           # steps exponentiated per batch (memory bound)
_CAL_STEPS = 64         # trial resolution for tolerance calibration


def _as_static_matrix(H):
    if isinstance(H, TimedHamiltonian):
        if not H.static:
            raise ValueError("Hamiltonian has pulse overrides; use evolve_timedep")
        return np.asarray(H.base)
    M = np.asarray(H)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("Hamiltonian must be a square matrix")
    if not np.allclose(M, M.conj().T, atol=1e-12, rtol=0.0):
        raise ValueError("Hamiltonian must be Hermitian")
    return M


def evolve_static(H, psi0, t):
    """Propagate ``psi0`` for duration ``t`` under a static Hamiltonian.

    Computes exp(-i H t) psi0 via spectral decomposition.  ``H`` may be
    a plain Hermitian matrix or a pulse-free :class:`TimedHamiltonian`.
    """
    M = _as_static_matrix(H)
    w, V = np.linalg.eigh(M)
    psi0 = np.asarray(psi0, dtype=complex)
    return (V * np.exp(-1j * w * float(t))) @ (V.conj().T @ psi0)


def _static_samples(M, psi0, durations):
    """States after each duration in ``durations`` under static M."""
    w, V = np.linalg.eigh(M)
    coef = V.conj().T @ np.asarray(psi0, dtype=complex)
    phases = np.exp(-1j * np.multiply.outer(np.asarray(durations, float), w))
    return (phases * coef) @ V.T


def _chain_product(stack):
    """Ordered product stack[-1] @ ... @ stack[0] by pairwise reduction."""
    if len(stack) == 0:
        raise ValueError("empty propagator stack")
    while len(stack) > 1:
        tail = stack[-1] if len(stack) % 2 else None
        if tail is not None:
            stack = stack[:-1]
        stack = stack[1::2] @ stack[0::2]
        if tail is not None:
            stack = np.concatenate([stack, tail[None]])
    return stack[0]


def _cf4_run(H, psi0, t0, t1, n_steps, record_every=None):
    """Fixed-step commutator-free propagation of psi over [t0, t1].

    Times refer to the pulse clock of ``H``.  Returns (final_state,
    samples) where samples is a list of states taken after every
    ``record_every`` steps (or None if not requested).
    """
    n = int(n_steps)
    h = (t1 - t0) / n
    if t0 + 0.5 * h == t0:
        raise RuntimeError(f"step size underflow: h={h!r} vanishes at t={t0!r}")
    psi = np.asarray(psi0, dtype=complex).copy()
    samples = [] if record_every else None
    done = 0
    while done < n:
        m = min(_CHUNK, n - done)
        ts = t0 + (done + np.arange(m)) * h
        A1 = evaluate_grid(H, ts + _C1 * h)
        A2 = evaluate_grid(H, ts + _C2 * h)
        stacked = np.concatenate([_X2 * A1 + _X1 * A2, _X1 * A1 + _X2 * A2])
        w, V = np.linalg.eigh(stacked)
        E = np.einsum("kij,kj,klj->kil", V, np.exp(-1j * h * w), V.conj())
        U = E[m:] @ E[:m]
        if record_every:
            marks = [k for k in range(1, m + 1)
                     if (done + k) % record_every == 0]
        else:
            marks = []
        start = 0
        for stop in marks:
            psi = _chain_product(U[start:stop]) @ psi
            samples.append(psi.copy())
            start = stop
        if start < m:
            psi = _chain_product(U[start:]) @ psi
        done += m
    return psi, samples


def evolve_timedep_fixed(H, psi0, t0, t1, n_steps):
    """Propagate under a pulsed Hamiltonian with a fixed step count."""
    if not t1 > t0:
        raise ValueError("need t1 > t0")
    final, _ = _cf4_run(H, psi0, t0, t1, n_steps)
    return final


def _calibrated_steps(H, psi0, t0, t1, tol):
    """Step count predicted to meet ``tol`` per unit time, from a trial
    pair at low resolution and the scheme's fourth-order error model."""
    budget = tol * (t1 - t0)
    coarse, _ = _cf4_run(H, psi0, t0, t1, _CAL_STEPS)
    fine, _ = _cf4_run(H, psi0, t0, t1, 2 * _CAL_STEPS)
    err = float(np.linalg.norm(coarse - fine))
    if err <= 0.25 * budget:
        return _CAL_STEPS, True
    n = int(np.ceil(_CAL_STEPS * (err / (0.25 * budget)) ** 0.25))
    return max(n, 2 * _CAL_STEPS), False


def evolve_timedep(H, psi0, t0, t1, tol):
    """Propagate under a pulsed Hamiltonian to a requested accuracy.

    Solves i dpsi/dt = H(t) psi with local error at most ``tol`` per
    unit time, verified by self-convergence: the returned state comes
    from a run whose deviation from a half-step companion is within
    tol*(t1-t0).  Raises RuntimeError if the required step count is
    unattainable (step-size underflow) rather than clamping.
    """
    if not (1e-14 <= tol <= 1e-6):
        raise ValueError("tol must lie in [1e-14, 1e-6]")
    if not t1 > t0:
        raise ValueError("need t1 > t0")
    budget = tol * (t1 - t0)
    n, _ = _calibrated_steps(H, psi0, t0, t1, tol)
    while True:
        if n > _N_MAX:
            raise RuntimeError(
                f"step size underflow: {n} steps needed for tol={tol:g} "
                f"over [{t0:g}, {t1:g}] exceeds the {_N_MAX} ceiling")
        coarse, _ = _cf4_run(H, psi0, t0, t1, n)
        fine, _ = _cf4_run(H, psi0, t0, t1, 2 * n)
        if np.linalg.norm(coarse - fine) <= budget:
            return fine
        n *= 2


def fidelity(psi, phi):
    """Squared overlap |<phi|psi>|^2; insensitive to global phases."""
    psi = np.asarray(psi)
    phi = np.asarray(phi)
    if psi.shape != phi.shape:
        raise ValueError(f"dimension mismatch: {psi.shape} vs {phi.shape}")
    return float(abs(np.vdot(phi, psi)) ** 2)


@dataclass(frozen=True)
class PhaseFlip:
    """Instantaneous sign flip of the state amplitude on one site."""

    time: float
    site: int


@dataclass(frozen=True)
class HoppingFlip:
    """Instantaneous sign flip of one coupling (and its mirror)."""

    time: float
    entry: tuple

    def __post_init__(self):
        i, j = self.entry
        if i == j:
            raise ValueError("cannot sign-flip a diagonal entry")
        object.__setattr__(self, "entry", (min(i, j), max(i, j)))


@dataclass(frozen=True)
class Segment:
    """Evolution interval.  ``H`` overrides the working Hamiltonian.

    With H=None the segment evolves under the schedule's working
    Hamiltonian (base plus accumulated coupling flips).  A segment
    with its own H runs the pulses on a clock starting at 0, and its
    end snapshot becomes the working Hamiltonian afterwards.
    """

    t_start: float
    t_end: float
    H: Optional[TimedHamiltonian] = None

    def __post_init__(self):
        if not self.t_end > self.t_start:
            raise ValueError("segment must have positive duration")

    @property
    def duration(self):
        return self.t_end - self.t_start


@dataclass(frozen=True)
class ProtocolSchedule:
    """Time-ordered flips and segments over a static base Hamiltonian.

    ``initial_state`` and ``target_state`` declare what the schedule is
    meant to do; executing it is the job of :func:`run_schedule`.
    Construction validates chronology (each segment starts where the
    previous one ended; flips sit at segment boundaries) and rejects
    same-time events acting on the same site or entry.
    """

    base: TimedHamiltonian
    items: tuple
    initial_state: Optional[np.ndarray] = None
    target_state: Optional[np.ndarray] = None

    def __post_init__(self):
        if not isinstance(self.base, TimedHamiltonian) or not self.base.static:
            raise ValueError("schedule base must be a pulse-free TimedHamiltonian")
        items = tuple(self.items)
        object.__setattr__(self, "items", items)
        t_now = None
        touched = set()
        for item in items:
            if isinstance(item, Segment):
                if t_now is not None and abs(item.t_start - t_now) > 1e-9:
                    raise ValueError(
                        f"segment starting at {item.t_start} does not begin at "
                        f"the current schedule time {t_now}")
                t_now = item.t_end
            elif isinstance(item, (PhaseFlip, HoppingFlip)):
                if t_now is None:
                    t_now = item.time
                elif abs(item.time - t_now) > 1e-9:
                    raise ValueError(
                        f"event at t={item.time} is not at a segment boundary "
                        f"(schedule time {t_now})")
                target = ("site", item.site) if isinstance(item, PhaseFlip) \
                    else ("entry", item.entry)
                key = (round(item.time, 10), target)
                if key in touched:
                    raise ValueError(
                        f"conflicting events at t={item.time} on {target}")
                touched.add(key)
            else:
                raise TypeError(f"unknown schedule item {item!r}")
        for state in (self.initial_state, self.target_state):
            if state is not None and len(state) != self.base.n_sites:
                raise ValueError("declared state has wrong dimension")

    @property
    def t_origin(self):
        if not self.items:
            return 0.0
        first = self.items[0]
        return first.t_start if isinstance(first, Segment) else first.time

    @property
    def t_final(self):
        t = self.t_origin
        for item in self.items:
            t = max(t, item.t_end if isinstance(item, Segment) else item.time)
        return t


@dataclass(frozen=True)
class Trajectory:
    """Sampled states along a schedule run.

    ``times`` are strictly increasing; a sample at an event time holds
    the post-event state.  ``events`` are (time, kind, detail) markers.
    """

    times: np.ndarray
    states: np.ndarray
    events: tuple

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        states = np.asarray(self.states, dtype=complex)
        if times.ndim != 1 or states.shape[0] != times.size:
            raise ValueError("one state per sample time required")
        if times.size > 1 and not np.all(np.diff(times) > 0):
            raise ValueError("sample times must be strictly increasing")
        times.setflags(write=False)
        states.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "events", tuple(self.events))

    @property
    def final_state(self):
        return self.states[-1]

    @property
    def norm_drift(self):
        return float(np.max(np.abs(np.linalg.norm(self.states, axis=1) - 1.0)))


class _Recorder:
    def __init__(self):
        self.times = []
        self.states = []

    def put(self, t, psi):
        # post-event samples overwrite a pre-event sample at the same time
        if self.times and abs(t - self.times[-1]) <= 1e-12:
            self.states[-1] = np.array(psi, dtype=complex)
        else:
            self.times.append(float(t))
            self.states.append(np.array(psi, dtype=complex))


def _segment_steps(H_seg, psi, duration, tol, n_chunks):
    """Step count for one pulsed segment, multiple of ``n_chunks``."""
    n, _ = _calibrated_steps(H_seg, psi, 0.0, duration, tol)
    n = max(n, n_chunks)
    n = int(np.ceil(n / n_chunks)) * n_chunks
    while True:
        if n > _N_MAX:
            raise RuntimeError("step size underflow in schedule segment")
        final, _ = _cf4_run(H_seg, psi, 0.0, duration, n)
        check, _ = _cf4_run(H_seg, psi, 0.0, duration, 2 * n)
        if np.linalg.norm(final - check) <= tol * duration:
            return n
        n *= 2


def run_schedule(s, psi0, samples_per_segment=33, tol=1e-11):
    """Execute a schedule from ``psi0`` and sample the state along it.

    Flips are applied as exact operations; static stretches use the
    spectral propagator; pulsed segments use the commutator-free
    integrator with step counts meeting ``tol`` per unit time by
    self-convergence.  Returns a :class:`Trajectory` whose last sample
    is the final state.
    """
    psi = np.asarray(psi0, dtype=complex).copy()
    if psi.shape != (s.base.n_sites,):
        raise ValueError("state dimension does not match the Hamiltonian")
    if samples_per_segment < 2:
        raise ValueError("need at least 2 samples per segment")
    rec = _Recorder()
    events = []
    working = np.array(s.base.base)
    rec.put(s.t_origin, psi)
    for item in s.items:
        if isinstance(item, PhaseFlip):
            if not 0 <= item.site < psi.size:
                raise IndexError(f"phase flip on invalid site {item.site}")
            psi = psi.copy()
            psi[item.site] = -psi[item.site]
            events.append((item.time, "phase-flip", f"site={item.site}"))
            rec.put(item.time, psi)
        elif isinstance(item, HoppingFlip):
            i, j = item.entry
            if not (0 <= i < psi.size and 0 <= j < psi.size):
                raise IndexError(f"hopping flip on invalid entry {item.entry}")
            working[i, j] = -working[i, j]
            working[j, i] = -working[j, i]
            events.append((item.time, "hopping-flip", f"entry=({i},{j})"))
        else:
            n_chunks = samples_per_segment - 1
            taus = item.duration * np.arange(1, n_chunks + 1) / n_chunks
            if item.H is None or item.H.static:
                M = working if item.H is None else np.asarray(item.H.base)
                states = _static_samples(M, psi, taus)
            else:
                n = _segment_steps(item.H, psi, item.duration, tol, n_chunks)
                _, samples = _cf4_run(item.H, psi, 0.0, item.duration, n,
                                      record_every=n // n_chunks)
                states = np.asarray(samples)
            for tau, state in zip(taus, states):
                rec.put(item.t_start + tau, state)
            psi = states[-1].copy()
            events.append((item.t_start, "segment",
                           f"t={item.t_start:g}..{item.t_end:g}"))
            if item.H is not None:
                working = evaluate_at(item.H, item.duration)
    return Trajectory(np.asarray(rec.times), np.asarray(rec.states), tuple(events))


def end_hamiltonian(s):
    """Static matrix the schedule leaves behind after its last item."""
    working = np.array(s.base.base)
    for item in s.items:
        if isinstance(item, HoppingFlip):
            i, j = item.entry
            working[i, j] = -working[i, j]
            working[j, i] = -working[j, i]
        elif isinstance(item, Segment) and item.H is not None:
            working = evaluate_at(item.H, item.duration)
    return working


def _mirror_pulses(H, duration):
    overrides = {entry: TimeMirrored(p, duration) if not isinstance(p, TimeMirrored)
                 else p.inner
                 for entry, p in H.overrides.items()}
    return TimedHamiltonian(np.array(H.base), overrides)


def reverse_schedule(s):
    """Schedule that runs ``s`` backwards in time.

    Items are reversed and re-anchored on the mirrored clock
    t -> t_origin + t_final - t; pulses inside segments are replayed
    backwards.  The base is the Hamiltonian ``s`` ends with.  For real
    Hamiltonians, running the reverse schedule on the conjugated final
    state and conjugating the result recovers the initial state.
    """
    t_lo, t_hi = s.t_origin, s.t_final

    def m(t):
        return t_lo + t_hi - t

    items = []
    for item in reversed(s.items):
        if isinstance(item, PhaseFlip):
            items.append(PhaseFlip(m(item.time), item.site))
        elif isinstance(item, HoppingFlip):
            items.append(HoppingFlip(m(item.time), item.entry))
        else:
            H_rev = None if item.H is None else _mirror_pulses(item.H, item.duration)
            items.append(Segment(m(item.t_end), m(item.t_start), H_rev))
    return ProtocolSchedule(
        TimedHamiltonian(end_hamiltonian(s)),
        tuple(items),
        initial_state=s.target_state,
        target_state=s.initial_state,
    )
