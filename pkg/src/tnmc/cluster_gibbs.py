"""Bond-auxiliary cluster sampler family.

One Markov chain step draws a three-state auxiliary variable per bond
(lock-parallel / lock-antiparallel / free), finds clusters over the locked
bonds, and resamples each cluster's two admissible configurations from its
exact conditional.  Swendsen-Wang, Wolff, Niedermayer and the ghost-spin
field sampler are parameter choices of this one update.

The conditional of a cluster given everything else has exactly two
configurations with nonzero probability (the current one and the fully
flipped one); their log ratio is a sum over free bonds crossing the
cluster boundary, plus field or ghost-bond terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .decomposition import (FREE, LOCK_ANTIPARALLEL, LOCK_PARALLEL,
                            ghost_sw_params, niedermayer_params, sw_params)
from .lattice import CouplingField, Lattice

GIBBS = "gibbs"
WOLFF = "wolff_deterministic"


@dataclass
class BondRuleConfig:
    """Per-edge free-component weights plus flip policy.

    free_par / free_anti: (E,) arrays of the free-bond weights on parallel
    and antiparallel endpoint pairs.  ghost_par / ghost_anti: per-site
    weights of the field bonds to the ghost spin, or None when the ghost
    is off.  field_in_ratio: include site-field terms directly in the
    cluster flip ratio (the non-ghost way to handle a field).
    """

    free_par: np.ndarray
    free_anti: np.ndarray
    ghost_par: Optional[np.ndarray] = None
    ghost_anti: Optional[np.ndarray] = None
    flip_rule: str = GIBBS
    single_cluster: bool = False
    field_in_ratio: bool = False

    @property
    def ghost_mode(self) -> bool:
        return self.ghost_par is not None


def _edge_arrays(coupling, builder):
    decs = [builder(K) for K in coupling.edge_K]
    return (np.array([d.free_par for d in decs]),
            np.array([d.free_anti for d in decs]))


def sw_config(coupling: CouplingField) -> BondRuleConfig:
    par, anti = _edge_arrays(coupling, sw_params)
    return BondRuleConfig(par, anti)


def wolff_config(coupling: CouplingField) -> BondRuleConfig:
    par, anti = _edge_arrays(coupling, sw_params)
    return BondRuleConfig(par, anti, flip_rule=WOLFF, single_cluster=True)


def niedermayer_config(coupling: CouplingField, W: float) -> BondRuleConfig:
    par, anti = _edge_arrays(coupling, lambda K: niedermayer_params(W, K))
    return BondRuleConfig(par, anti)


def ghost_sw_config(coupling: CouplingField) -> BondRuleConfig:
    par, anti = _edge_arrays(coupling, sw_params)
    gdecs = [ghost_sw_params(b) for b in coupling.site_field]
    return BondRuleConfig(par, anti,
                          ghost_par=np.array([d.free_par for d in gdecs]),
                          ghost_anti=np.array([d.free_anti for d in gdecs]))


def field_sw_config(coupling: CouplingField) -> BondRuleConfig:
    """Field handled in the flip ratio instead of ghost bonds; inefficient
    at low temperature because the field term dominates the ratio."""
    par, anti = _edge_arrays(coupling, sw_params)
    return BondRuleConfig(par, anti, field_in_ratio=True)


@dataclass
class ClusterPartition:
    labels: np.ndarray      # per node; the ghost node is the last entry
    n_clusters: int
    has_ghost: bool


def sample_bonds(lattice: Lattice, coupling: CouplingField, spins,
                 config: BondRuleConfig, rng, ghost_spin: int = 1):
    """Draw the per-edge (and per-ghost-edge) auxiliary states given spins.

    States are conditionally independent given the endpoint spins; locking
    states are only ever drawn on compatible pairs.
    """
    i, j = lattice.edges[:, 0], lattice.edges[:, 1]
    par = spins[i] == spins[j]
    p_free_par = config.free_par * np.exp(-coupling.edge_K)
    p_free_anti = config.free_anti * np.exp(coupling.edge_K)
    u = rng.random(lattice.n_edges)
    states = np.where(par,
                      np.where(u < p_free_par, FREE, LOCK_PARALLEL),
                      np.where(u < p_free_anti, FREE, LOCK_ANTIPARALLEL))
    ghost_states = None
    if config.ghost_mode:
        gpar = spins == ghost_spin
        g_free_par = config.ghost_par * np.exp(-coupling.site_field)
        g_free_anti = config.ghost_anti * np.exp(coupling.site_field)
        ug = rng.random(lattice.n_sites)
        ghost_states = np.where(gpar,
                                np.where(ug < g_free_par, FREE, LOCK_PARALLEL),
                                np.where(ug < g_free_anti, FREE,
                                         LOCK_ANTIPARALLEL))
    return states, ghost_states


def find_clusters(lattice: Lattice, bond_states,
                  ghost_states=None) -> ClusterPartition:
    """Connected components over locked bonds (and locked ghost bonds)."""
    locked = bond_states != FREE
    rows = lattice.edges[locked, 0]
    cols = lattice.edges[locked, 1]
    n = lattice.n_sites
    has_ghost = ghost_states is not None
    if has_ghost:
        glocked = np.nonzero(ghost_states != FREE)[0]
        rows = np.concatenate([rows, glocked])
        cols = np.concatenate([cols, np.full(len(glocked), n)])
        n += 1
    adj = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    n_clusters, labels = connected_components(adj, directed=False)
    return ClusterPartition(labels, n_clusters, has_ghost)


def log_flip_ratio(lattice: Lattice, coupling: CouplingField, spins,
                   partition: ClusterPartition, cluster_id: int,
                   config: BondRuleConfig, ghost_spin: int = 1) -> float:
    """log of p(current cluster config) / p(flipped cluster config).

    Free bonds with one endpoint inside the cluster contribute
    +-log(free_par/free_anti) by their current parity; with a field in the
    ratio each cluster site adds 2*Btilde*s; ghost bonds crossing the
    boundary contribute the analogous ghost-weight ratio.  Locked bonds
    never cross a cluster boundary by construction.  A zero weight on the
    flipped side gives +inf: the flip is impossible, keep the current
    configuration.
    """
    labels = partition.labels
    in_c = labels[:lattice.n_sites] == cluster_id
    i, j = lattice.edges[:, 0], lattice.edges[:, 1]
    crossing = in_c[i] ^ in_c[j]
    total = 0.0
    if np.any(crossing):
        par = (spins[i[crossing]] == spins[j[crossing]])
        now = np.where(par, config.free_par[crossing],
                       config.free_anti[crossing])
        then = np.where(par, config.free_anti[crossing],
                        config.free_par[crossing])
        if np.any(then == 0.0):
            return math.inf
        with np.errstate(divide="ignore"):
            total += float(np.sum(np.log(now) - np.log(then)))
        if total == -math.inf:
            return -math.inf
    if config.field_in_ratio:
        total += 2.0 * float(np.dot(coupling.site_field[in_c], spins[in_c]))
    if config.ghost_mode:
        ghost_in = bool(labels[lattice.n_sites] == cluster_id)
        site_in = in_c
        g_cross = np.nonzero(site_in != ghost_in)[0]
        if len(g_cross):
            gpar = spins[g_cross] == ghost_spin
            now = np.where(gpar, config.ghost_par[g_cross],
                           config.ghost_anti[g_cross])
            then = np.where(gpar, config.ghost_anti[g_cross],
                            config.ghost_par[g_cross])
            if np.any(then == 0.0):
                return math.inf
            total += float(np.sum(np.log(now) - np.log(then)))
    return total


def _is_symmetric(config: BondRuleConfig) -> bool:
    """True when every flip ratio is identically 1, so clusters are
    independent fair coins (the Swendsen-Wang situation)."""
    if config.field_in_ratio:
        return False
    if not np.array_equal(config.free_par, config.free_anti):
        return False
    if config.ghost_mode and not np.array_equal(config.ghost_par,
                                                config.ghost_anti):
        return False
    return True


@dataclass
class StepStats:
    n_clusters: int
    flip_fraction: float


def tg_step(lattice: Lattice, coupling: CouplingField, spins, config,
            rng, ghost_spin: int = 1):
    """One full auxiliary-variable cluster update.

    Returns (spins, ghost_spin, stats).  ``spins`` is updated in place.
    """
    states, gstates = sample_bonds(lattice, coupling, spins, config, rng,
                                   ghost_spin)
    part = find_clusters(lattice, states, gstates)
    labels = part.labels
    site_labels = labels[:lattice.n_sites]

    if config.single_cluster:
        seed = int(rng.integers(lattice.n_sites))
        order = [int(labels[seed])]
    else:
        order = range(part.n_clusters)

    flipped = 0
    symmetric = _is_symmetric(config)
    if symmetric and not config.single_cluster:
        coin = rng.random(part.n_clusters) < 0.5
        flip_sites = coin[site_labels]
        spins[flip_sites] = -spins[flip_sites]
        if part.has_ghost and coin[labels[lattice.n_sites]]:
            ghost_spin = -ghost_spin
        flipped = int(coin.sum())
        return spins, ghost_spin, StepStats(part.n_clusters,
                                            flipped / part.n_clusters)

    for cid in order:
        logr = log_flip_ratio(lattice, coupling, spins, part, cid, config,
                              ghost_spin)
        if config.flip_rule == WOLFF:
            # deterministic flip proposal accepted with min(1, 1/r)
            if logr <= 0 or rng.random() < math.exp(-logr):
                do_flip = True
            else:
                do_flip = False
        else:
            # exact two-point conditional: flip with probability 1/(1+r)
            if logr == math.inf:
                do_flip = False
            elif logr == -math.inf:
                do_flip = True
            else:
                do_flip = rng.random() < 1.0 / (1.0 + math.exp(logr))
        if do_flip:
            members = site_labels == cid
            spins[members] = -spins[members]
            if part.has_ghost and labels[lattice.n_sites] == cid:
                ghost_spin = -ghost_spin
            flipped += 1
    n_updated = 1 if config.single_cluster else part.n_clusters
    return spins, ghost_spin, StepStats(part.n_clusters, flipped / n_updated)


def ghost_observable_transform(spins, ghost_spin: int) -> np.ndarray:
    """Measurements in ghost mode are taken on ghost * spins."""
    return ghost_spin * np.asarray(spins)
