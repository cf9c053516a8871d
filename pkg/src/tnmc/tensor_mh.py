"""Cluster Metropolis-Hastings with tensor-contraction proposals.

A sweep visits a fixed decomposition of the lattice into rectangular
clusters.  For each cluster, the spins inside are redrawn site by site in
raster order from conditionals obtained by contracting the cluster's
network (boundary spins enter as per-site weights); the same sequential
conditionals score the current configuration, and a Metropolis-Hastings
step corrects whatever bias bond truncation introduced.  With exact
contraction and the whole lattice as one cluster the proposal equals the
target and every step is accepted.

Supported decompositions: the full lattice (2D), rectangular tiles (2D),
and thickness-1 slabs of a 3D lattice (each slab is a 2D network; the
neighboring slabs act as per-site fields).  Bonds that do not fit a
cluster's open 2D grid (periodic wrap-arounds) are applied exactly as
weights once one endpoint is fixed and are simply left out of the
look-ahead contraction, which only affects proposal quality, never
correctness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .decomposition import boltzmann_matrix
from .grid import RasterBlock
from .lattice import CouplingField, Lattice
from .tensors import boundary_mps_contract, build_site_tensors, network_rows

PROB_FLOOR = 1e-300


@dataclass(frozen=True)
class ClusterScheme:
    kind: str                      # "full_lattice" | "tiles" | "slabs"
    tile_shape: Optional[tuple] = None
    axis: int = 0
    thickness: int = 1


def full_lattice() -> ClusterScheme:
    return ClusterScheme("full_lattice")


def tiles(height: int, width: int) -> ClusterScheme:
    return ClusterScheme("tiles", tile_shape=(int(height), int(width)))


def slabs(axis: int = 0, thickness: int = 1) -> ClusterScheme:
    return ClusterScheme("slabs", axis=axis, thickness=thickness)


def member_grids(lattice: Lattice, scheme: ClusterScheme):
    """Site-id grids (one 2D array per cluster) covering the lattice."""
    ids = np.arange(lattice.n_sites).reshape(lattice.dims)
    if scheme.kind == "full_lattice":
        if len(lattice.dims) != 2:
            raise ValueError("full-lattice clusters need a 2D lattice")
        return [ids]
    if scheme.kind == "tiles":
        if len(lattice.dims) != 2:
            raise ValueError("tile clusters need a 2D lattice")
        th, tw = scheme.tile_shape
        H, W = lattice.dims
        out = []
        for r0 in range(0, H, th):
            for c0 in range(0, W, tw):
                out.append(ids[r0:r0 + th, c0:c0 + tw])
        return out
    if scheme.kind == "slabs":
        if scheme.thickness != 1:
            raise NotImplementedError("only thickness-1 slabs are supported")
        if len(lattice.dims) == 2:
            return [np.take(ids, k, axis=scheme.axis)[None, :]
                    for k in range(lattice.dims[scheme.axis])]
        return [np.take(ids, k, axis=scheme.axis)
                for k in range(lattice.dims[scheme.axis])]
    raise ValueError(f"unknown cluster scheme {scheme.kind!r}")


@dataclass
class Proposal:
    """Proposed block spins plus forward / reverse proposal log-probs."""

    block_spins: np.ndarray
    log_q_fwd: float
    log_q_rev: float
    clamped: int = 0


class _Cluster:
    """One rectangular cluster: grid geometry, bond matrices, boundary."""

    def __init__(self, lattice: Lattice, coupling: CouplingField, grid):
        self.grid = np.asarray(grid)
        H, W = self.grid.shape
        self.shape = (H, W)
        self.flat_sites = self.grid.ravel()
        pos = {int(s): (r, c) for (r, c), s in np.ndenumerate(self.grid)}
        member = np.zeros(lattice.n_sites, dtype=bool)
        member[self.flat_sites] = True

        Bh = np.ones((H, max(W - 1, 0), 2, 2))
        Bv = np.ones((max(H - 1, 0), W, 2, 2))
        set_h = np.zeros((H, max(W - 1, 0)), dtype=bool)
        set_v = np.zeros((max(H - 1, 0), W), dtype=bool)
        self.extra = {}
        bnd_pos, bnd_nbr, bnd_K = [], [], []
        touching = []
        for eid, (i, j) in enumerate(lattice.edges):
            i, j = int(i), int(j)
            ii, jj = member[i], member[j]
            if not ii and not jj:
                continue
            touching.append(eid)
            K = coupling.edge_K[eid]
            if ii and jj:
                (ri, ci), (rj, cj) = pos[i], pos[j]
                placed = False
                if ri == rj and abs(ci - cj) == 1:
                    c0 = min(ci, cj)
                    if not set_h[ri, c0]:
                        Bh[ri, c0] = boltzmann_matrix(K)
                        set_h[ri, c0] = True
                        placed = True
                elif ci == cj and abs(ri - rj) == 1:
                    r0 = min(ri, rj)
                    if not set_v[r0, ci]:
                        Bv[r0, ci] = boltzmann_matrix(K)
                        set_v[r0, ci] = True
                        placed = True
                if not placed:
                    # wrap-around (or doubled) bond: weight the later site
                    a, b = sorted([(ri, ci), (rj, cj)])
                    self.extra.setdefault(b, []).append(
                        (a, boltzmann_matrix(K)))
            else:
                (r, c) = pos[i] if ii else pos[j]
                bnd_pos.append(r * W + c)
                bnd_nbr.append(j if ii else i)
                bnd_K.append(K)
        self.block = RasterBlock(H, W, Bh, Bv)
        self.touching_edges = np.array(touching, dtype=np.int64)
        self.bnd_pos = np.array(bnd_pos, dtype=np.int64)
        self.bnd_nbr = np.array(bnd_nbr, dtype=np.int64)
        self.bnd_K = np.array(bnd_K, dtype=np.float64)
        self.static = len(bnd_pos) == 0
        b = coupling.site_field[self.flat_sites]
        self.base_weights = np.exp(
            np.stack([b, -b], axis=-1)).reshape(H, W, 2)
        self.envs = None
        self.env_err = 0.0

    def weights(self, spins):
        w = self.base_weights.copy().reshape(-1, 2)
        if len(self.bnd_pos):
            arg = self.bnd_K * spins[self.bnd_nbr]
            fac = np.exp(np.stack([arg, -arg], axis=-1))
            np.multiply.at(w, self.bnd_pos, fac)
        return w.reshape(self.shape + (2,))


class TensorMHSampler:
    """Sequential cluster updates with tensor-network proposals.

    chi=None contracts exactly (bond dimensions grow as needed); a finite
    chi truncates the row environments, and the accept step keeps the
    chain exact regardless.
    """

    def __init__(self, lattice: Lattice, coupling: CouplingField,
                 scheme: ClusterScheme, chi, rng):
        self.lattice = lattice
        self.coupling = coupling
        self.scheme = scheme
        self.chi = chi
        self.rng = rng
        self.clusters = [_Cluster(lattice, coupling, g)
                         for g in member_grids(lattice, scheme)]
        for cl in self.clusters:
            if cl.static:
                cl.envs, cl.env_err = cl.block.build_envs(cl.base_weights, chi)

    def propose_cluster(self, spins, cluster_index: int):
        """Draw a proposal for one cluster and score the reverse move.

        Returns (proposal, weights, envs, trunc_err); weights and envs are
        passed through so the accept step can reuse them.
        """
        cl = self.clusters[cluster_index]
        if cl.static:
            w, envs, err = cl.base_weights, cl.envs, cl.env_err
        else:
            w = cl.weights(spins)
            envs, err = cl.block.build_envs(w, self.chi)
        prop, logq_f, clamps_f = cl.block.run(w, envs, rng=self.rng,
                                              extra=cl.extra)
        current = spins[cl.grid]
        _, logq_r, clamps_r = cl.block.run(w, envs, target=current,
                                           extra=cl.extra)
        return (Proposal(prop, logq_f, logq_r, clamps_f + clamps_r), err)

    def _subsystem_energy(self, spins, cl) -> float:
        e = cl.touching_edges
        i = self.lattice.edges[e, 0]
        j = self.lattice.edges[e, 1]
        bond = np.dot(self.coupling.edge_K[e],
                      spins[i].astype(np.float64) * spins[j])
        field = np.dot(self.coupling.site_field[cl.flat_sites],
                       spins[cl.flat_sites])
        return float(-bond - field)

    def mh_accept(self, spins, cluster_index: int, proposal: Proposal) -> bool:
        """Accept/reject against the exact subsystem energies; on accept
        the proposal is written into ``spins``."""
        cl = self.clusters[cluster_index]
        e_cur = self._subsystem_energy(spins, cl)
        scratch = spins.copy()
        scratch[cl.grid.ravel()] = proposal.block_spins.ravel()
        e_prop = self._subsystem_energy(scratch, cl)
        log_acc = (e_cur - e_prop) + (proposal.log_q_rev - proposal.log_q_fwd)
        if log_acc >= 0 or self.rng.random() < math.exp(log_acc):
            spins[cl.grid.ravel()] = proposal.block_spins.ravel()
            return True
        return False

    def sweep(self, spins):
        """Visit every cluster once; returns (accept_rate, max trunc err,
        clamped conditionals)."""
        accepted = 0
        max_err = 0.0
        clamps = 0
        for k in range(len(self.clusters)):
            proposal, err = self.propose_cluster(spins, k)
            max_err = max(max_err, err)
            clamps += proposal.clamped
            if self.mh_accept(spins, k, proposal):
                accepted += 1
        return accepted / len(self.clusters), max_err, clamps


def conditional_vector(lattice, coupling, observed: dict, site: int,
                       chi=None) -> np.ndarray:
    """Normalized p(spin at site = (+1, -1) | observed) by boundary-MPS
    contraction of the site-tensor network (the slow reference path; the
    sampler itself uses cached row environments).

    Nonpositive entries produced by aggressive truncation are clamped to a
    tiny floor before normalizing.
    """
    tset = build_site_tensors(lattice, coupling, observed, sampling_site=site)
    out = boundary_mps_contract(network_rows(tset), chi)
    v = np.maximum(out.data, PROB_FLOOR)
    return v / v.sum()
