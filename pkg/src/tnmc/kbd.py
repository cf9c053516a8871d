"""Plaquette-auxiliary cluster sampler for the fully frustrated model.

Works on the checkerboard coarse-graining of a 2D lattice: the plaquettes
of one parity cover every bond exactly once, so drawing a three-state
auxiliary variable per active plaquette (freeze one opposite edge pair,
freeze the other, or free the plaquette) is an exact data augmentation of
the full Boltzmann weight.  Frozen pairs lock spins together; clusters
over locked pairs flip freely (the conditional is symmetric under a
cluster flip, so the flip probability is exactly 1/2).  Successive steps
alternate the checkerboard parity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .decomposition import NonFrustratedPlaquette, kbd_decompose
from .lattice import CouplingField, Lattice


@dataclass
class KBDStepStats:
    n_clusters: int
    flip_fraction: float
    n_locked_pairs: int


class KBDSampler:
    """Checkerboard plaquette cluster sampler.

    Requires every plaquette frustrated with uniform |K| (the fully
    frustrated couplings); raises NonFrustratedPlaquette otherwise.
    """

    def __init__(self, lattice: Lattice, coupling: CouplingField, rng,
                 single_cluster: bool = False):
        if len(lattice.dims) != 2 or len(lattice.plaquettes) == 0:
            raise ValueError("plaquette sampler needs a 2D lattice with faces")
        if np.any(coupling.site_field != 0):
            raise ValueError("plaquette sampler does not support site fields")
        self.lattice = lattice
        self.coupling = coupling
        self.rng = rng
        self.single_cluster = single_cluster
        self.decs = []
        for eids in lattice.plaquette_edges:
            self.decs.append(kbd_decompose(coupling.edge_K[eids]))
        if len({d.strength for d in self.decs}) != 1:
            raise NonFrustratedPlaquette("|K| must be uniform across plaquettes")
        K = self.decs[0].strength
        self.p_lock = 1.0 - np.exp(-4.0 * K)
        self.relations = np.array([d.relations for d in self.decs])
        self.parity = 0

    def sample_plaquettes(self, spins, parity, rng):
        """Auxiliary states (1: freeze (m,n)+(o,p), 2: freeze (n,o)+(p,m),
        3: free) for the plaquettes of one parity."""
        lat = self.lattice
        active = np.nonzero(lat.plaquette_parity == parity)[0]
        corners = lat.plaquettes[active]
        s = spins[corners]  # (P, 4) in order m, n, o, p
        rel = self.relations[active]
        in_a = (s[:, 0] * s[:, 1] == rel[:, 0]) & (s[:, 2] * s[:, 3] == rel[:, 2])
        in_b = (s[:, 1] * s[:, 2] == rel[:, 1]) & (s[:, 3] * s[:, 0] == rel[:, 3])
        u = rng.random(len(active))
        states = np.full(len(active), 3, dtype=np.int64)
        states[in_a & (u < self.p_lock)] = 1
        states[in_b & (u < self.p_lock)] = 2
        return active, states

    def locked_pairs(self, active, states):
        corners = self.lattice.plaquettes[active]
        pairs = []
        a = corners[states == 1]
        if len(a):
            pairs.append(a[:, [0, 1]])  # (m, n)
            pairs.append(a[:, [2, 3]])  # (o, p)
        b = corners[states == 2]
        if len(b):
            pairs.append(b[:, [1, 2]])  # (n, o)
            pairs.append(b[:, [3, 0]])  # (p, m)
        if pairs:
            return np.concatenate(pairs, axis=0)
        return np.zeros((0, 2), dtype=np.int64)

    def step(self, spins) -> KBDStepStats:
        """One update of the active parity; parities alternate per call."""
        lat = self.lattice
        active, states = self.sample_plaquettes(spins, self.parity, self.rng)
        self.parity = 1 - self.parity
        pairs = self.locked_pairs(active, states)
        n = lat.n_sites
        adj = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])),
                         shape=(n, n))
        n_clusters, labels = connected_components(adj, directed=False)
        if self.single_cluster:
            seed = int(self.rng.integers(n))
            members = labels == labels[seed]
            spins[members] = -spins[members]
            return KBDStepStats(n_clusters, 1.0, len(pairs))
        coin = self.rng.random(n_clusters) < 0.5
        flip = coin[labels]
        spins[flip] = -spins[flip]
        return KBDStepStats(n_clusters, float(coin.mean()), len(pairs))

    def plaquette_weight_log(self, spins, active, states) -> float:
        """log prod_i T^{h_i}(corners); used to assert flip symmetry."""
        total = 0.0
        for pid, state in zip(active, states):
            dec = self.decs[pid]
            corners = tuple(spins[self.lattice.plaquettes[pid]])
            in_a, in_b = dec.compatible(corners)
            if state == 1:
                w = dec.lock_coeff if in_a else 0.0
            elif state == 2:
                w = dec.lock_coeff if in_b else 0.0
            else:
                w = dec.uniform_weight
            if w == 0.0:
                return -np.inf
            total += np.log(w)
        return total
