"""Bond-matrix and plaquette-tensor decompositions behind the cluster samplers.

A bond with coupling K carries the 2x2 weight matrix
``[[e^K, e^-K], [e^-K, e^K]]`` (spin basis +1, -1).  Splitting it into a
lock-parallel part, a lock-antiparallel part, and a free part turns the
bond into a three-state auxiliary variable; the split is parameterized by
the free-part weights on parallel (``free_par``) and antiparallel
(``free_anti``) spin pairs.  Swendsen-Wang, Wolff and Niedermayer bond
rules are particular choices of these weights, and the same construction
applied to the site-field matrix gives the ghost-spin bond rule.

For the fully frustrated model the analogous split acts on the 4-index
plaquette tensor: two locking components freeze one opposite pair of
plaquette edges each, and a uniform component frees the plaquette.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Bond / plaquette auxiliary states.
LOCK_PARALLEL = 1
LOCK_ANTIPARALLEL = 2
FREE = 3


class NonDecomposable(ValueError):
    """No pair of disjoint locking patterns reproduces the plaquette tensor."""


class NonFrustratedPlaquette(NonDecomposable):
    """A plaquette whose bond signs admit satisfying all four bonds."""


def boltzmann_matrix(K: float) -> np.ndarray:
    """2x2 bond weight matrix [[e^K, e^-K], [e^-K, e^K]]."""
    if not math.isfinite(K):
        raise ValueError("coupling must be finite")
    up = math.exp(K)
    dn = math.exp(-K)
    return np.array([[up, dn], [dn, up]])


def ghost_matrix(field: float) -> np.ndarray:
    """Weight matrix of a site-field bond to the ghost spin; same form as
    ``boltzmann_matrix`` with the dimensionless field in place of K."""
    return boltzmann_matrix(field)


@dataclass(frozen=True)
class BondDecomposition:
    """Three-way split of a bond matrix.

    free_par / free_anti are the free-component weights on parallel and
    antiparallel pairs; legality requires 0 <= free_par <= e^K and
    0 <= free_anti <= e^-K so all three components stay nonnegative.
    """

    free_par: float
    free_anti: float
    coupling: float

    def __post_init__(self):
        hi_par = math.exp(self.coupling)
        hi_anti = math.exp(-self.coupling)
        if not 0.0 <= self.free_par <= hi_par * (1 + 1e-12):
            raise ValueError(
                f"free_par={self.free_par} outside [0, e^K={hi_par}]")
        if not 0.0 <= self.free_anti <= hi_anti * (1 + 1e-12):
            raise ValueError(
                f"free_anti={self.free_anti} outside [0, e^-K={hi_anti}]")

    def components(self):
        """The three matrices; they sum to ``boltzmann_matrix(coupling)``."""
        up = math.exp(self.coupling)
        dn = math.exp(-self.coupling)
        lock_par = np.diag([up - self.free_par] * 2)
        lock_anti = np.array([[0.0, dn - self.free_anti],
                              [dn - self.free_anti, 0.0]])
        free = np.array([[self.free_par, self.free_anti],
                         [self.free_anti, self.free_par]])
        return lock_par, lock_anti, free


def bond_state_probs(dec: BondDecomposition, si: int, sj: int) -> np.ndarray:
    """Probability vector over (lock-parallel, lock-antiparallel, free)
    given the endpoint spins."""
    K = dec.coupling
    if si == sj:
        p_free = dec.free_par * math.exp(-K)
        p = np.array([1.0 - p_free, 0.0, p_free])
    else:
        p_free = dec.free_anti * math.exp(K)
        p = np.array([0.0, 1.0 - p_free, p_free])
    if p.min() < -1e-12:
        raise ValueError(f"negative bond-state probability {p}")
    return np.clip(p, 0.0, 1.0)


def sw_params(K: float) -> BondDecomposition:
    """Swendsen-Wang point: free weights e^-|K| on both parities, so free
    bonds carry no spin dependence and locked bonds appear with the usual
    1 - e^-2|K| probability on satisfied pairs."""
    w = math.exp(-abs(K))
    return BondDecomposition(w, w, K)


def niedermayer_params(W: float, K: float) -> BondDecomposition:
    """Niedermayer bond rule with tunable inclusion parameter W.

    W < e^-K locks parallel and antiparallel pairs alike (free weights both
    W); above that threshold the antiparallel free weight saturates at
    e^-K and only parallel pairs keep a tunable inclusion probability
    1 - W e^-K.
    """
    if not 0.0 <= W <= math.exp(K):
        raise ValueError(f"W={W} outside [0, e^K={math.exp(K)}]")
    if W < math.exp(-K):
        return BondDecomposition(W, W, K)
    return BondDecomposition(W, math.exp(-K), K)


@dataclass(frozen=True)
class GhostDecomposition:
    """Three-way split of the ghost (site-field) bond matrix; mirrors
    BondDecomposition with the field in place of the coupling."""

    free_par: float
    free_anti: float
    field: float

    def __post_init__(self):
        if not 0.0 <= self.free_par <= math.exp(self.field) * (1 + 1e-12):
            raise ValueError("free_par outside [0, e^field]")
        if not 0.0 <= self.free_anti <= math.exp(-self.field) * (1 + 1e-12):
            raise ValueError("free_anti outside [0, e^-field]")

    def components(self):
        up = math.exp(self.field)
        dn = math.exp(-self.field)
        lock_par = np.diag([up - self.free_par] * 2)
        lock_anti = np.array([[0.0, dn - self.free_anti],
                              [dn - self.free_anti, 0.0]])
        free = np.array([[self.free_par, self.free_anti],
                         [self.free_anti, self.free_par]])
        return lock_par, lock_anti, free


def ghost_bond_probs(dec: GhostDecomposition, si: int, s_ghost: int) -> np.ndarray:
    """State probabilities for the bond between a site and the ghost spin."""
    b = dec.field
    if si == s_ghost:
        p_free = dec.free_par * math.exp(-b)
        p = np.array([1.0 - p_free, 0.0, p_free])
    else:
        p_free = dec.free_anti * math.exp(b)
        p = np.array([0.0, 1.0 - p_free, p_free])
    if p.min() < -1e-12:
        raise ValueError(f"negative ghost-state probability {p}")
    return np.clip(p, 0.0, 1.0)


def ghost_sw_params(field: float) -> GhostDecomposition:
    w = math.exp(-abs(field))
    return GhostDecomposition(w, w, field)


# -- plaquette decomposition (fully frustrated model) ------------------


def kbd_plaquette_tensor(couplings) -> np.ndarray:
    """4-index plaquette tensor T[m, n, o, p] = exp(sum_e K_e s s').

    Corners are in cyclic order with edges (m,n), (n,o), (o,p), (p,m);
    index 0 means spin +1 and index 1 means spin -1.
    """
    K = np.asarray(couplings, dtype=np.float64)
    if K.shape != (4,):
        raise ValueError("need exactly four plaquette couplings")
    s = np.array([1.0, -1.0])
    m, n, o, p = np.ix_(s, s, s, s)
    expo = K[0] * m * n + K[1] * n * o + K[2] * o * p + K[3] * p * m
    return np.exp(expo)


@dataclass(frozen=True)
class PlaquetteDecomposition:
    """Split of a frustrated plaquette tensor into two locking components
    plus a uniform one.

    Each locking pattern freezes one opposite pair of plaquette edges in
    its sign-satisfied orientation; ``lock_a`` freezes edges (m,n) and
    (o,p), ``lock_b`` freezes (n,o) and (p,m).  ``relations`` holds the
    sign each frozen edge enforces on its corner product.  The lock
    coefficient is e^2|K| - e^-2|K|, forced by requiring the three
    components to sum back to the plaquette tensor exactly.
    """

    couplings: tuple
    strength: float          # |K|
    lock_coeff: float        # e^{2|K|} - e^{-2|K|}
    uniform_weight: float    # e^{-2|K|}
    relations: tuple         # sign(K_e) per edge, order (mn, no, op, pm)

    def tensor(self) -> np.ndarray:
        return kbd_plaquette_tensor(self.couplings)

    def components(self):
        signs = self.relations
        s = np.array([1.0, -1.0])
        m, n, o, p = np.ix_(s, s, s, s)
        in_a = (m * n == signs[0]) & (o * p == signs[2])
        in_b = (n * o == signs[1]) & (p * m == signs[3])
        lock_a = self.lock_coeff * in_a.astype(float)
        lock_b = self.lock_coeff * in_b.astype(float)
        uniform = self.uniform_weight * np.ones((2, 2, 2, 2))
        return lock_a, lock_b, uniform

    def compatible(self, corner_spins):
        """Which locking patterns the corner configuration supports."""
        sm, sn, so, sp = corner_spins
        signs = self.relations
        in_a = (sm * sn == signs[0]) and (so * sp == signs[2])
        in_b = (sn * so == signs[1]) and (sp * sm == signs[3])
        return in_a, in_b

    def state_probs(self, corner_spins) -> np.ndarray:
        """Probabilities of (lock-a, lock-b, free) given the corner spins."""
        in_a, in_b = self.compatible(corner_spins)
        total = self.lock_coeff * (in_a + in_b) + self.uniform_weight
        return np.array([
            self.lock_coeff * in_a / total,
            self.lock_coeff * in_b / total,
            self.uniform_weight / total,
        ])


def kbd_decompose(couplings) -> PlaquetteDecomposition:
    """Decompose a frustrated plaquette with uniform |K|.

    Raises NonFrustratedPlaquette when the bond signs multiply to +1
    (all four bonds satisfiable at once, so no disjoint locking pair
    reproduces the tensor), and NonDecomposable when |K| is not uniform.
    """
    K = np.asarray(couplings, dtype=np.float64)
    if K.shape != (4,):
        raise ValueError("need exactly four plaquette couplings")
    strength = abs(K[0])
    if strength == 0 or not np.allclose(np.abs(K), strength, rtol=1e-12):
        raise NonDecomposable(f"|K| must be uniform and nonzero, got {K}")
    signs = np.sign(K)
    if signs.prod() > 0:
        raise NonFrustratedPlaquette(f"plaquette {K} is not frustrated")
    dec = PlaquetteDecomposition(
        couplings=tuple(float(k) for k in K),
        strength=float(strength),
        lock_coeff=math.exp(2 * strength) - math.exp(-2 * strength),
        uniform_weight=math.exp(-2 * strength),
        relations=tuple(int(s) for s in signs),
    )
    total = sum(dec.components())
    if not np.allclose(total, dec.tensor(), rtol=0, atol=1e-12 * math.exp(2 * strength)):
        raise NonDecomposable("component sum does not reproduce the tensor")
    return dec
