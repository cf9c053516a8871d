"""Sequential conditional sampling of a rectangular block of spins.

The block is an H x W open grid with 2x2 bond weight matrices absorbed at
the lower / left endpoint of each bond: ``Bh[r, c][s, s']`` couples
(r, c) to (r, c+1) and ``Bv[r, c][s, s']`` couples (r, c) to (r+1, c).
Spin indices are 0 for +1 and 1 for -1.  Per-site weight vectors carry
fields and bonds to spins outside the block.

Sites are visited in raster order (bottom row first, left to right).
The rows above the current one are summed over through a boundary MPS
("top environment") per row, compressed to bond dimension chi; rows
already visited collapse into per-column weight vectors, which is exact.
Within a row, right-to-left messages are built once and a left message is
updated as sites are fixed, so each site costs O(chi^2).

The same walk either draws spins (recording the proposal log-probability)
or scores a given configuration under identical conditionals, which is
what a Metropolis-Hastings correction needs for the reverse move.

Bonds that do not fit the open grid (e.g. periodic wrap-arounds inside
the block) can be declared as ``extra`` bonds: they are ignored while
summing over unvisited sites but applied exactly as weights once their
earlier endpoint has been fixed.  That only changes the proposal, not the
sampled target, since the accept step uses exact energies.
"""

from __future__ import annotations

import math

import numpy as np

from .tensors import _compress_mps

PROB_FLOOR = 1e-300


class RasterBlock:
    """Contraction engine for one rectangular block."""

    def __init__(self, H, W, Bh, Bv):
        self.H = int(H)
        self.W = int(W)
        self.Bh = np.asarray(Bh, dtype=np.float64).reshape(H, W - 1, 2, 2)
        self.Bv = np.asarray(Bv, dtype=np.float64).reshape(H - 1, W, 2, 2)

    # -- top environments ------------------------------------------------

    def _row_mps(self, r, weights):
        """A single row as an MPS over columns; physical leg = own spin."""
        W = self.W
        tensors = []
        for c in range(W):
            w = weights[r, c]
            if c + 1 < W:
                core = np.einsum("p,pb->pb", w, self.Bh[r, c])  # (p, b)
            else:
                core = w[:, None]  # (p, 1)
            if c == 0:
                A = core[None, :, :]  # (1, p, b)
            else:
                b = core.shape[1]
                A = np.zeros((2, 2, b))
                A[0, 0] = core[0]
                A[1, 1] = core[1]
            tensors.append(A)
        return tensors

    def _absorb_row_below(self, r, env, weights):
        """Absorb row r (as an MPO from below) into the environment MPS."""
        W = self.W
        out = []
        for c in range(W):
            w = weights[r, c]
            E = env[c]  # (k, pu, k')
            core = np.einsum("p,pu->pu", w, self.Bv[r, c])  # (p, pu)
            top = np.einsum("pu,kul->pkl", core, E)  # (p, k, k')
            if c + 1 < W:
                top = np.einsum("pkl,pb->pklb", top, self.Bh[r, c])
            else:
                top = top[..., None]
            if c == 0:
                A = top[None, ...]  # (1, p, k, k', b)
                la = 1
            else:
                A = np.zeros((2,) + top.shape)
                A[0, 0] = top[0]
                A[1, 1] = top[1]
                la = 2
            # bonds compose as (row bond, env bond) on both sides
            a, p, k, k2, b = A.shape
            out.append(A.transpose(0, 2, 1, 4, 3).reshape(a * k, p, b * k2))
        return out

    def build_envs(self, weights, chi):
        """Top environments for every row.

        envs[r] sums rows r+1..H-1 as an MPS whose physical legs are the
        spins of row r+1; envs[H-1] is None.  Returns (envs, max relative
        truncation error over all compressions).
        """
        H = self.H
        envs = [None] * H
        max_err = 0.0
        if H == 1:
            return envs, 0.0
        env = self._row_mps(H - 1, weights)
        env, max_err = self._normalize(env, chi, max_err)
        envs[H - 2] = env
        for r in range(H - 2, 0, -1):
            env = self._absorb_row_below(r, env, weights)
            env, max_err = self._normalize(env, chi, max_err)
            envs[r - 1] = env
        return envs, max_err

    @staticmethod
    def _normalize(env, chi, max_err):
        if chi is not None and max(t.shape[2] for t in env) > chi:
            env, err, _ = _compress_mps(env, chi)
            max_err = max(max_err, err)
        else:
            env = [t / np.abs(t).max() if np.abs(t).max() > 0 else t
                   for t in env]
        return env, max_err

    # -- sequential walk ---------------------------------------------------

    def run(self, weights, envs, rng=None, target=None, extra=None):
        """Sample the block (target=None) or score ``target`` spins.

        weights: (H, W, 2) per-site weight vectors (fields, capped bonds).
        envs:    output of build_envs for the same weights.
        extra:   dict (r, c) -> list of ((r0, c0), 2x2 weight matrix) for
                 in-block bonds outside the open grid; (r0, c0) must come
                 earlier in raster order, and the matrix is indexed
                 [s_earlier, s_here].
        Returns (spins (H, W) of +-1, log proposal probability, number of
        clamped nonpositive conditionals).
        """
        H, W = self.H, self.W
        spins = np.zeros((H, W), dtype=np.int8)
        idx = np.zeros((H, W), dtype=np.int64)
        logq = 0.0
        clamps = 0
        bot = np.ones((W, 2))
        for r in range(H):
            env = envs[r]
            if env is None:  # top row: nothing above
                G = [np.ones((2, 1, 1))] * W
            else:
                G = [np.einsum("au,kul->akl", self.Bv[r, c], env[c])
                     for c in range(W)]
            w_eff = weights[r] * bot  # (W, 2)

            # right-to-left messages over (env bond, own spin)
            R = [None] * (W + 1)
            R[W] = np.ones((1, 1))
            for c in range(W - 1, -1, -1):
                if c + 1 < W:
                    tmp = R[c + 1] @ self.Bh[r, c].T  # (k', a)
                else:
                    tmp = np.ones((G[c].shape[2], 2))
                msg = np.einsum("akl,la->ka", G[c], tmp) * w_eff[c][None, :]
                m = np.abs(msg).max()
                R[c] = msg / m if m > 0 else msg

            L = np.ones((1, 2))
            for c in range(W):
                w_site = w_eff[c].copy()
                if extra:
                    for (r0, c0), mat in extra.get((r, c), ()):
                        w_site = w_site * mat[idx[r0, c0]]
                if c + 1 < W:
                    tmp = R[c + 1] @ self.Bh[r, c].T  # (k', a)
                else:
                    tmp = np.ones((G[c].shape[2], 2))
                rvec = np.einsum("akl,la->ak", G[c], tmp)  # (a, k)
                p = w_site * np.einsum("ka,ak->a", L, rvec)
                if p.min() <= 0.0:
                    clamps += 1
                    p = np.maximum(p, PROB_FLOOR)
                p = p / p.sum()
                if target is not None:
                    s = 0 if target[r, c] == 1 else 1
                elif rng.random() < p[0]:
                    s = 0
                else:
                    s = 1
                logq += math.log(p[s])
                idx[r, c] = s
                spins[r, c] = 1 if s == 0 else -1
                # fold the fixed site into the left message
                val = np.einsum("k,kl->l", L[:, s], G[c][s]) * w_site[s]
                if c + 1 < W:
                    L = np.outer(val, self.Bh[r, c][s])
                else:
                    L = val[:, None]
                m = np.abs(L).max()
                if m > 0:
                    L = L / m
            if r + 1 < H:
                bot = np.stack([self.Bv[r, c][idx[r, c]] for c in range(W)])
        return spins, logq, clamps
