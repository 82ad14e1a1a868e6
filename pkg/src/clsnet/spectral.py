"""Eigen-analysis of network Hamiltonians.

Covers full spectra, permutation-symmetry checks, enumeration of
compact localized states (CLS) inside degenerate subspaces, and the
two partition block decompositions: the equitable partition of the
star under its outer four-cycle, and the nonequitable partition of the
seven-site unit into a 4x4 block R and a decoupled 3x3 block C0.

A CLS is an eigenvector with exactly zero amplitude outside a small
support.  Eigensolvers return arbitrary rotations inside a flat band,
so CLS detection searches each degenerate cluster for minimal-support
combinations rather than trusting raw eigenvector columns.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Optional

import numpy as np

from .lattice import SEVEN_EDGES, TimedHamiltonian

__all__ = [
    "SUPPORT_THRESHOLD",
    "CLUSTER_GAP",
    "Spectrum",
    "CompactState",
    "PartitionBlocks",
    "spectrum",
    "commutes_with_permutation",
    "find_cls",
    "dimer_state",
    "equitable_blocks_star",
    "nonequitable_blocks_seven",
]

# |amplitude| below this counts as zero when declaring a CLS support:
# far above eigensolver noise, far below any physical amplitude here
SUPPORT_THRESHOLD = 1e-10
# eigenvalues closer than this are grouped into one degenerate cluster
CLUSTER_GAP = 1e-9
# how close a projector eigenvalue must be to 1 to count as "inside"
_FLAT_TOL = 1e-12


def _as_matrix(H):
    if isinstance(H, TimedHamiltonian):
        if not H.static:
            raise ValueError("spectral analysis needs a pulse-free Hamiltonian")
        return np.asarray(H.base)
    M = np.asarray(H)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("Hamiltonian must be a square matrix")
    if not np.allclose(M, M.conj().T, atol=1e-12, rtol=0.0):
        raise ValueError("Hamiltonian must be Hermitian")
    return M


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues (ascending) and orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def clusters(self, gap=CLUSTER_GAP):
        """Index ranges of degenerate groups, split at gaps > ``gap``."""
        w = self.eigenvalues
        if w.size == 0:
            return []
        cuts = np.flatnonzero(np.diff(w) > gap) + 1
        return [range(a, b) for a, b in
                zip(np.r_[0, cuts], np.r_[cuts, w.size])]


@dataclass(frozen=True)
class CompactState:
    """Eigenvector with exactly zero amplitude outside ``support``."""

    vector: np.ndarray
    support: tuple
    energy: float


@dataclass(frozen=True)
class PartitionBlocks:
    """Reduced block matrices plus the bases lifting them back.

    ``bases[k]`` has orthonormal columns spanning block k's sector; a
    block eigenvector w lifts to the full-space vector bases[k] @ w.
    ``xi`` carries the J3^2 + J4^2 combination in the seven-site case.
    """

    blocks: tuple
    bases: tuple
    xi: Optional[float] = None

    def __post_init__(self):
        if len(self.blocks) != len(self.bases):
            raise ValueError("one lift basis per block required")
        for blk, B in zip(self.blocks, self.bases):
            if blk.shape != (B.shape[1], B.shape[1]):
                raise ValueError("basis width must match block size")
            gram = B.conj().T @ B
            if not np.allclose(gram, np.eye(B.shape[1]), atol=1e-12):
                raise ValueError("lift basis columns must be orthonormal")

    def union_eigenvalues(self):
        """All block eigenvalues pooled, ascending."""
        return np.sort(np.concatenate(
            [np.linalg.eigvalsh(b) for b in self.blocks]))

    def lift(self, block_index, w):
        """Full-space vector for a block-space vector ``w``."""
        return self.bases[block_index] @ np.asarray(w)

    def lifted_pairs(self):
        """(eigenvalue, lifted eigenvector) for every block eigenpair."""
        out = []
        for k, blk in enumerate(self.blocks):
            w, U = np.linalg.eigh(blk)
            for i in range(w.size):
                out.append((float(w[i]), self.lift(k, U[:, i])))
        return out


def spectrum(H):
    """Hermitian eigendecomposition wrapped as a :class:`Spectrum`."""
    M = _as_matrix(H)
    w, V = np.linalg.eigh(M)
    return Spectrum(w, V)


def commutes_with_permutation(H, perm):
    """Whether ``H`` commutes with the site permutation i -> perm[i]."""
    M = _as_matrix(H)
    perm = np.asarray(perm, dtype=int)
    n = M.shape[0]
    if perm.shape != (n,) or sorted(perm) != list(range(n)):
        raise ValueError("perm must be a bijection on the sites")
    S = np.zeros((n, n))
    S[perm, np.arange(n)] = 1.0
    return bool(np.max(np.abs(M @ S - S @ M)) <= 1e-12)


def dimer_state(n_sites, pair, antisymmetric=True):
    """(e_i -/+ e_j)/sqrt(2) on ``pair``, zero elsewhere."""
    i, j = pair
    vec = np.zeros(n_sites)
    vec[i] = 1 / np.sqrt(2.0)
    vec[j] = (-1 if antisymmetric else 1) / np.sqrt(2.0)
    return vec


def _null_space_columns(K, rtol=1e-8):
    """Orthonormal basis of the right null space of K (k x d)."""
    _, s, vh = np.linalg.svd(K, full_matrices=True)
    rank = int(np.sum(s > rtol))
    return vh[rank:].conj().T


def find_cls(H, max_support):
    """Compact localized eigenvectors with support size <= max_support.

    Each degenerate cluster is scanned over candidate supports in
    order of increasing size (lexicographic within a size).  A support
    qualifies when the cluster projector restricted to it has a unit
    eigenvalue; the unit eigenspace is then deflated against states
    already accepted in the cluster so the returned list is mutually
    orthogonal.  Amplitudes below SUPPORT_THRESHOLD are zeroed exactly
    and every state is re-verified as an eigenvector afterwards.
    """
    if max_support < 2:
        raise ValueError("max_support must be at least 2")
    M = _as_matrix(H)
    n = M.shape[0]
    spec = spectrum(M)
    found = []
    for cluster in spec.clusters():
        Vc = spec.eigenvectors[:, list(cluster)]
        weight = np.einsum("ij,ij->i", Vc, Vc.conj()).real
        accepted = []
        for size in range(2, min(max_support, n) + 1):
            for S in combinations(range(n), size):
                idx = list(S)
                if weight[idx].sum() < 1 - _FLAT_TOL:
                    continue
                sub = Vc[idx, :]
                lam, U = np.linalg.eigh(sub @ sub.conj().T)
                inside = lam >= 1 - _FLAT_TOL
                if not inside.any():
                    continue
                B = np.zeros((n, int(inside.sum())), dtype=Vc.dtype)
                B[idx, :] = U[:, inside]
                if accepted:
                    K = np.column_stack(accepted).conj().T @ B
                    B = B @ _null_space_columns(K)
                for vec in B.T:
                    vec = vec / np.linalg.norm(vec)
                    energy = float((vec.conj() @ M @ vec).real)
                    vec = np.where(np.abs(vec) < SUPPORT_THRESHOLD, 0.0, vec)
                    vec = vec / np.linalg.norm(vec)
                    if np.linalg.norm(M @ vec - energy * vec) > 1e-10:
                        continue
                    support = tuple(np.flatnonzero(np.abs(vec) > 0.0))
                    found.append(CompactState(vec, support, energy))
                    accepted.append(vec)
    return found


def _cycle_order(perm, start):
    order = [start]
    nxt = perm[start]
    while nxt != start:
        order.append(nxt)
        nxt = perm[nxt]
    return order


def _blocks_from_bases(M, bases, context):
    blocks = []
    for k, B in enumerate(bases):
        blocks.append(B.conj().T @ M @ B)
        for other in bases[k + 1:]:
            if np.max(np.abs(B.conj().T @ M @ other)) > 1e-12:
                raise ValueError(f"{context}: sectors are coupled, "
                                 "required symmetry is violated")
    return tuple(blocks)


def equitable_blocks_star(H, perm):
    """Block-diagonalize a star Hamiltonian over an outer four-cycle.

    ``perm`` must be a four-cycle on the outer sites that fixes the
    hub and commutes with H.  The symmetric sector gives a 2x2 block
    coupling the outer average to the hub with strength 2J; the three
    remaining one-dimensional sectors are flat.
    """
    M = _as_matrix(H)
    if M.shape != (5, 5):
        raise ValueError("expected a five-site star Hamiltonian")
    perm = tuple(int(p) for p in perm)
    if not commutes_with_permutation(M, perm):
        raise ValueError("Hamiltonian does not commute with the permutation")
    fixed = [i for i in range(5) if perm[i] == i]
    if len(fixed) != 1:
        raise ValueError("permutation must fix exactly the hub site")
    hub = fixed[0]
    cyc = _cycle_order(perm, min(i for i in range(5) if i != hub))
    if len(cyc) != 4:
        raise ValueError("permutation must cycle the four outer sites")
    e = np.eye(5)
    half = 0.5
    q_sym = half * (e[cyc[0]] + e[cyc[1]] + e[cyc[2]] + e[cyc[3]])
    bases = (
        np.column_stack([q_sym, e[hub]]),
        (e[cyc[0]] - e[cyc[2]])[:, None] / np.sqrt(2.0),
        (half * (e[cyc[0]] - e[cyc[1]] + e[cyc[2]] - e[cyc[3]]))[:, None],
        (e[cyc[1]] - e[cyc[3]])[:, None] / np.sqrt(2.0),
    )
    return PartitionBlocks(_blocks_from_bases(M, bases, "equitable star"), bases)


def nonequitable_blocks_seven(H7):
    """Nonequitable partition of the seven-site unit into R and C0.

    Requires equal potentials on all four dimer sites, equal
    potentials on both connectors, and equal outer couplings
    J1=J2=J5=J6; the inner couplings J3, J4 may differ.  R (4x4)
    couples the hub to the connector combination with strength
    sqrt(J3^2 + J4^2); C0 (3x3) is the orthogonal combination sector,
    decoupled from the hub.  Lift amplitudes carry the ratios
    J3/sqrt(xi) and J4/sqrt(xi).
    """
    M = _as_matrix(H7)
    if M.shape != (7, 7):
        raise ValueError("expected a seven-site Hamiltonian")
    allowed = np.diag(np.ones(7, dtype=bool))
    for i, j in SEVEN_EDGES:
        allowed[i, j] = allowed[j, i] = True
    if np.max(np.abs(M[~allowed])) > 1e-12:
        raise ValueError("matrix has couplings outside the seven-site pattern")
    v = np.diag(M)
    J1, J2, J3, J4, J5, J6 = (M[i, j] for (i, j) in SEVEN_EDGES)
    J_outer = (J1, J2, J5, J6)
    if max(J_outer) - min(J_outer) > 1e-12:
        raise ValueError("outer couplings J1=J2=J5=J6 required")
    dimer_v = (v[0], v[1], v[5], v[6])
    if max(dimer_v) - min(dimer_v) > 1e-12:
        raise ValueError("equal potentials on all dimer sites required")
    if abs(v[2] - v[4]) > 1e-12:
        raise ValueError("equal connector potentials required")
    xi = float(J3**2 + J4**2)
    if xi <= 0.0:
        raise ValueError("need J3^2 + J4^2 > 0")
    s = np.sqrt(xi)
    e = np.eye(7)
    basis_r = np.column_stack([
        e[3],
        (J3 * e[2] + J4 * e[4]) / s,
        (J3 * e[1] + J4 * e[5]) / s,
        (J3 * e[0] + J4 * e[6]) / s,
    ])
    basis_c = np.column_stack([
        (J4 * e[2] - J3 * e[4]) / s,
        (J4 * e[1] - J3 * e[5]) / s,
        (J4 * e[0] - J3 * e[6]) / s,
    ])
    bases = (basis_r, basis_c)
    return PartitionBlocks(_blocks_from_bases(M, bases, "nonequitable seven"),
                           bases, xi=xi)
