"""Dense tensors with named axes, SVD truncation, and boundary-MPS
contraction of 2D lattice networks.

The lattice network uses one tensor per site.  Each bond splits its 2x2
weight matrix between the two endpoints (symmetric square root for
ferromagnetic bonds; for antiferromagnetic bonds the real square root does
not exist, so the whole matrix goes to one endpoint and the identity to
the other).  A site that is already observed is not a tensor at all: it
caps each incident bond with a weight vector, which folds into the
neighbor as a plain per-spin weight.

Axis names follow the grid: "down", "right", "up", "left", plus "sample"
for the one site whose spin distribution is being read off.

Contraction values are carried as (mantissa, log_scale) pairs; large
lattices at strong coupling overflow doubles otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

GRID_AXES = ("down", "right", "up", "left")


class IndefiniteFactor(ValueError):
    """The bond matrix has a negative eigenvalue; no real symmetric root."""


@dataclass
class DenseTensor:
    """n-way real array with named axes and an extracted log scale."""

    data: np.ndarray
    axes: tuple
    log_scale: float = 0.0

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        self.axes = tuple(self.axes)
        if self.data.ndim != len(self.axes):
            raise ValueError(
                f"{self.data.ndim}-way data with {len(self.axes)} axis names")
        if len(set(self.axes)) != len(self.axes):
            raise ValueError(f"duplicate axis names in {self.axes}")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("tensor entries must be finite")
        if not math.isfinite(self.log_scale):
            raise ValueError("log_scale must be finite")

    @property
    def shape(self):
        return self.data.shape

    def axis(self, name: str) -> int:
        return self.axes.index(name)

    def value(self) -> np.ndarray:
        """Data with the log scale multiplied back in."""
        return self.data * math.exp(self.log_scale)

    def renamed(self, mapping: dict) -> "DenseTensor":
        return DenseTensor(self.data,
                           tuple(mapping.get(a, a) for a in self.axes),
                           self.log_scale)


def contract(a: DenseTensor, a_axes, b: DenseTensor, b_axes) -> DenseTensor:
    """Sum the tensor product of ``a`` and ``b`` over the paired named axes."""
    if isinstance(a_axes, str):
        a_axes = [a_axes]
    if isinstance(b_axes, str):
        b_axes = [b_axes]
    if len(a_axes) != len(b_axes):
        raise ValueError("axis lists must pair up")
    ia = [a.axis(n) for n in a_axes]
    ib = [b.axis(n) for n in b_axes]
    for pa, pb in zip(ia, ib):
        if a.data.shape[pa] != b.data.shape[pb]:
            raise ValueError(
                f"extent mismatch {a.data.shape[pa]} vs {b.data.shape[pb]}")
    out = np.tensordot(a.data, b.data, axes=(ia, ib))
    names = tuple(n for k, n in enumerate(a.axes) if k not in ia) + \
        tuple(n for k, n in enumerate(b.axes) if k not in ib)
    return DenseTensor(out, names, a.log_scale + b.log_scale)


def sqrt_boltzmann(B: np.ndarray) -> np.ndarray:
    """Symmetric matrix square root of a 2x2 bond matrix.

    Raises IndefiniteFactor when an eigenvalue is nonpositive (the case
    K < 0, where e^K - e^-K < 0); callers then fall back to the
    asymmetric split of ``bond_factor_pair``.
    """
    B = np.asarray(B, dtype=np.float64)
    if B.shape != (2, 2) or not np.allclose(B, B.T, rtol=0, atol=1e-12 * abs(B).max()):
        raise ValueError("need a symmetric 2x2 matrix")
    evals, evecs = np.linalg.eigh(B)
    if np.any(evals < -1e-14 * abs(evals).max()):
        raise IndefiniteFactor(f"eigenvalues {evals} not all nonnegative")
    return (evecs * np.sqrt(np.maximum(evals, 0.0))) @ evecs.T


def bond_factor_pair(K: float):
    """Factors (G_tail, G_head) with sum_m G_tail[s, m] G_head[s', m] =
    exp(K s s').  Symmetric square roots for K >= 0; for K < 0 the full
    matrix sits on the tail and the identity on the head."""
    from .decomposition import boltzmann_matrix

    B = boltzmann_matrix(K)
    if K >= 0:
        r = sqrt_boltzmann(B)
        return r, r
    return B, np.eye(2)


def basis_vector(spin: int) -> np.ndarray:
    """One-hot indicator of a spin value (+1 -> index 0, -1 -> index 1)."""
    if spin == 1:
        return np.array([1.0, 0.0])
    if spin == -1:
        return np.array([0.0, 1.0])
    raise ValueError(f"spin must be +1 or -1, got {spin}")


def delta_core(n_legs: int) -> np.ndarray:
    """n-way Kronecker delta: 1 where all indices agree."""
    core = np.zeros((2,) * n_legs)
    core[(0,) * n_legs] = 1.0
    core[(1,) * n_legs] = 1.0
    return core


def svd_truncate(matrix: np.ndarray, chi: int):
    """Rank-chi SVD truncation.

    Returns (U, s, Vt, truncation_error) where the error is the L2 norm
    fraction of the discarded singular values; chi at or above the rank
    gives the exact factorization with error 0.
    """
    if chi < 1:
        raise ValueError("chi must be >= 1")
    U, s, Vt = np.linalg.svd(np.asarray(matrix, dtype=np.float64),
                             full_matrices=False)
    total = float(np.dot(s, s))
    keep = min(chi, len(s))
    discarded = float(np.dot(s[keep:], s[keep:]))
    err = math.sqrt(discarded / total) if total > 0 else 0.0
    return U[:, :keep], s[:keep], Vt[:keep], err


# -- internal MPS helpers ----------------------------------------------


def _compress_mps(tensors, chi):
    """Plain SVD compression of an open-boundary MPS to bond dimension chi.

    One QR sweep left-to-right brings the chain to a canonical-enough form,
    then an SVD sweep right-to-left truncates each bond.  Returns the new
    tensors, the aggregate relative truncation error, and the extracted
    log norm.
    """
    tensors = list(tensors)
    n = len(tensors)
    log_norm = 0.0
    for c in range(n - 1):
        l, p, r = tensors[c].shape
        q, rmat = np.linalg.qr(tensors[c].reshape(l * p, r))
        tensors[c] = q.reshape(l, p, q.shape[1])
        tensors[c + 1] = np.tensordot(rmat, tensors[c + 1], axes=(1, 0))
    disc_sq = 0.0
    total_sq = 0.0
    for c in range(n - 1, 0, -1):
        l, p, r = tensors[c].shape
        U, s, Vt = np.linalg.svd(tensors[c].reshape(l, p * r),
                                 full_matrices=False)
        total_sq += float(np.dot(s, s))
        keep = min(chi, len(s)) if chi is not None else len(s)
        disc_sq += float(np.dot(s[keep:], s[keep:]))
        tensors[c] = Vt[:keep].reshape(keep, p, r)
        carry = U[:, :keep] * s[:keep]
        tensors[c - 1] = np.tensordot(tensors[c - 1], carry, axes=(2, 0))
    for c in range(n):
        m = float(np.abs(tensors[c]).max())
        if m == 0.0:
            return tensors, 0.0, -math.inf
        tensors[c] = tensors[c] / m
        log_norm += math.log(m)
    err = math.sqrt(disc_sq / total_sq) if total_sq > 0 else 0.0
    return tensors, err, log_norm


def _absorb_row(mps, row):
    """Contract a row of (down, right, up, left) tensors into the boundary
    MPS from below; bond dimensions multiply."""
    out = []
    for A, M in zip(mps, row):
        la, p, ra = A.shape
        d, r, u, l = M.shape
        if p != d:
            raise ValueError(f"bond extent mismatch: MPS {p} vs row {d}")
        # (la, d, ra) x (d, r, u, l) -> (la, l, u, ra, r)
        T = np.einsum("adb,drul->alubr", A, M)
        out.append(T.reshape(la * l, u, ra * r))
    return out


def _grid_array(t: DenseTensor, sample_slice=None):
    """Positional (down, right, up, left) array with extent-1 dummies for
    missing axes; optionally fixes the sample axis to one value."""
    data = t.data
    axes = list(t.axes)
    if "sample" in axes:
        if sample_slice is None:
            raise ValueError("tensor has an open sample axis")
        data = np.take(data, sample_slice, axis=axes.index("sample"))
        axes.remove("sample")
    unknown = set(axes) - set(GRID_AXES)
    if unknown:
        raise ValueError(f"unknown grid axes {unknown}")
    expanded = data.reshape(data.shape + (1,) * (4 - data.ndim))
    order = [axes.index(n) if n in axes else None for n in GRID_AXES]
    free = len(axes)
    perm = []
    for o in order:
        if o is None:
            perm.append(free)
            free += 1
        else:
            perm.append(o)
    return expanded.transpose(perm)


def boundary_mps_contract(rows, chi=None) -> DenseTensor:
    """Contract a rectangular network of site tensors bottom-to-top.

    ``rows`` is a list (bottom first) of lists of DenseTensors whose axes
    are drawn from down/right/up/left (missing axes mean extent 1), with
    at most one tensor carrying an extra "sample" axis.  Each row is
    absorbed into the running boundary MPS and the MPS is compressed to
    bond dimension ``chi`` afterwards (chi=None keeps the contraction
    exact).  Returns a scalar DenseTensor, or a length-2 tensor with axis
    "sample" when a sampling tensor is present.
    """
    sample_pos = None
    for rr, row in enumerate(rows):
        for cc, t in enumerate(row):
            if "sample" in t.axes:
                if sample_pos is not None:
                    raise ValueError("more than one sample axis in network")
                sample_pos = (rr, cc)
    log_in = sum(t.log_scale for row in rows for t in row)

    def run(sample_slice):
        mps = None
        log_scale = 0.0
        max_err = 0.0
        for rr, row in enumerate(rows):
            arrs = []
            for cc, t in enumerate(row):
                sl = sample_slice if (rr, cc) == sample_pos else None
                arrs.append(_grid_array(t, sl))
            for cc in range(len(arrs) - 1):
                if arrs[cc].shape[1] != arrs[cc + 1].shape[3]:
                    raise ValueError("horizontal bond extent mismatch")
            if mps is None:
                for a in arrs:
                    if a.shape[0] != 1:
                        raise ValueError("bottom row has an open down leg")
                mps = [a.reshape(a.shape[1], a.shape[2], a.shape[3])
                       .transpose(2, 1, 0) for a in arrs]
            else:
                mps = _absorb_row(mps, arrs)
            if chi is not None and max(t.shape[2] for t in mps) > chi:
                mps, err, ln = _compress_mps(mps, chi)
                max_err = max(max_err, err)
                if ln == -math.inf:
                    return 0.0, 0.0, max_err
                log_scale += ln
            else:
                for c in range(len(mps)):
                    m = float(np.abs(mps[c]).max())
                    if m == 0.0:
                        return 0.0, 0.0, max_err
                    mps[c] = mps[c] / m
                    log_scale += math.log(m)
        vec = np.ones((1, 1))
        for A in mps:
            if A.shape[1] != 1:
                raise ValueError("network left an up leg open")
            vec = vec @ A[:, 0, :]
        return float(vec[0, 0]), log_scale, max_err

    if sample_pos is None:
        val, ls, err = run(None)
        out = DenseTensor(np.array(val), (), log_in + ls)
    else:
        v0, ls0, e0 = run(0)
        v1, ls1, e1 = run(1)
        ref = max(ls0, ls1)
        data = np.array([v0 * math.exp(ls0 - ref), v1 * math.exp(ls1 - ref)])
        out = DenseTensor(data, ("sample",), log_in + ref)
    out.truncation_error = err if sample_pos is None else max(e0, e1)
    return out


# -- site tensors for conditional sampling ------------------------------


@dataclass
class SiteTensorSet:
    """Per-site tensors of a partially observed 2D open-boundary network.

    Observed sites do not appear; their weight vectors are folded into the
    neighbors.  ``log_const`` collects the weight of edges between two
    observed sites and the field weights of observed sites, so the product
    of all tensors times exp(log_const) is the true restricted partition
    sum.
    """

    tensors: dict
    log_const: float
    dims: tuple
    observed: dict
    sampling_site: object = None


def build_site_tensors(lattice, coupling, observed: dict,
                       sampling_site=None) -> SiteTensorSet:
    """Site tensors for a 2D open lattice with some spins observed.

    Each unobserved site gets one tensor: its field weight times one bond
    factor per open leg, with legs toward observed neighbors capped by the
    observed spin's weight vector.  ``sampling_site`` (if given) keeps its
    spin index open under the axis name "sample".
    """
    if len(lattice.dims) != 2 or lattice.boundary != "open":
        raise ValueError("site tensors are built for open 2D lattices")
    if sampling_site is not None and sampling_site in observed:
        raise ValueError("sampling site cannot be observed")
    H, W = lattice.dims

    def leg_dirs(site):
        r, c = lattice.site_coords(site)
        out = []
        if r > 0:
            out.append(("down", lattice.site_id((r - 1, c))))
        if c + 1 < W:
            out.append(("right", lattice.site_id((r, c + 1))))
        if r + 1 < H:
            out.append(("up", lattice.site_id((r + 1, c))))
        if c > 0:
            out.append(("left", lattice.site_id((r, c - 1))))
        return out

    log_const = 0.0
    for site, spin in observed.items():
        log_const += coupling.site_field[site] * spin
    for i, j in lattice.edges:
        if int(i) in observed and int(j) in observed:
            K = coupling.edge_K[lattice.edge_id(int(i), int(j))]
            log_const += K * observed[int(i)] * observed[int(j)]

    tensors = {}
    for site in range(lattice.n_sites):
        if site in observed:
            continue
        b = coupling.site_field[site]
        weight = np.array([math.exp(b), math.exp(-b)])
        open_legs = []
        for direction, nbr in leg_dirs(site):
            K = coupling.edge_K[lattice.edge_id(site, nbr)]
            tail, head = bond_factor_pair(K)
            mine, theirs = (tail, head) if site < nbr else (head, tail)
            if nbr in observed:
                cap = theirs[0 if observed[nbr] == 1 else 1]
                weight = weight * (mine @ cap)
            else:
                open_legs.append((direction, mine))
        # T[s, legs...] = weight[s] * prod_a G_a[s, leg_a], summed over the
        # spin s unless this is the sampling site.
        arr = weight
        names = []
        for direction, G in open_legs:
            arr = np.einsum("s...,sm->s...m", arr, G)
            names.append(direction)
        if site == sampling_site:
            tensors[site] = DenseTensor(arr, tuple(["sample"] + names))
        else:
            tensors[site] = DenseTensor(arr.sum(axis=0), tuple(names))
    return SiteTensorSet(tensors, log_const, (H, W), dict(observed),
                         sampling_site)


def network_rows(tset: SiteTensorSet):
    """Arrange a SiteTensorSet on its grid, bottom row first; observed
    positions become scalar placeholders."""
    H, W = tset.dims
    rows = []
    for r in range(H):
        row = []
        for c in range(W):
            site = r * W + c
            if site in tset.tensors:
                row.append(tset.tensors[site])
            else:
                row.append(DenseTensor(np.array(1.0), ()))
        rows.append(row)
    return rows
