"""Square / cubic lattice geometry, spin states, couplings, and energy.

Sites are numbered row-major over ``dims`` (the last axis varies fastest),
so for a 2D lattice ``dims = [H, W]`` the site at row ``r``, column ``c``
has id ``r * W + c``.  Edges are enumerated per site in ascending site id,
and per site in axis order (+axis0, +axis1[, +axis2]); the position in
``edges`` is the edge id.  This ordering is deterministic, which keeps
seeded simulations reproducible across runs.

All couplings are dimensionless: ``edge_K[e] = beta * J_e`` and
``site_field[i] = beta * B_i``.  Temperature sweeps rescale the coupling
field instead of carrying beta separately.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OPEN = "open"
PERIODIC = "periodic"


class Lattice:
    """Nearest-neighbor lattice on a 2D or 3D grid.

    Attributes:
        dims: side lengths (2 or 3 entries).
        boundary: "open" or "periodic".
        n_sites: number of sites.
        edges: (E, 2) int array of site pairs; row index is the edge id.
        plaquettes: (P, 4) int array of corner sites in cyclic order
            (lower-left, lower-right, upper-right, upper-left); 2D only.
        plaquette_edges: (P, 4) edge ids (bottom, right, top, left).
        plaquette_parity: (P,) checkerboard parity of each plaquette.
    """

    def __init__(self, dims, boundary=OPEN):
        if not 2 <= len(dims) <= 3:
            raise ValueError(f"dims must have 2 or 3 entries, got {len(dims)}")
        if any(d < 2 for d in dims):
            raise ValueError(f"every dim must be >= 2, got {dims}")
        if boundary not in (OPEN, PERIODIC):
            raise ValueError(f"unknown boundary {boundary!r}")
        self.dims = tuple(int(d) for d in dims)
        self.boundary = boundary
        self.n_sites = int(np.prod(self.dims))

        self.edges = self._build_edges()
        self.n_edges = len(self.edges)
        self._edge_lookup = {}
        for eid, (i, j) in enumerate(self.edges):
            self._edge_lookup[(int(i), int(j))] = eid
            self._edge_lookup[(int(j), int(i))] = eid

        if len(self.dims) == 2:
            self.plaquettes, self.plaquette_edges, self.plaquette_parity = (
                self._build_plaquettes()
            )
        else:
            self.plaquettes = np.zeros((0, 4), dtype=np.int64)
            self.plaquette_edges = np.zeros((0, 4), dtype=np.int64)
            self.plaquette_parity = np.zeros(0, dtype=np.int64)

        self._build_neighbor_arrays()

    # -- construction ------------------------------------------------

    def site_id(self, coords):
        return int(np.ravel_multi_index([c % d for c, d in zip(coords, self.dims)],
                                        self.dims))

    def site_coords(self, site):
        return tuple(int(c) for c in np.unravel_index(site, self.dims))

    def _build_edges(self):
        ndim = len(self.dims)
        pairs = []
        for site in range(self.n_sites):
            coords = np.unravel_index(site, self.dims)
            for axis in range(ndim):
                c = coords[axis]
                if c + 1 < self.dims[axis]:
                    nxt = list(coords)
                    nxt[axis] = c + 1
                    pairs.append((site, self.site_id(nxt)))
                elif self.boundary == PERIODIC:
                    nxt = list(coords)
                    nxt[axis] = 0
                    pairs.append((site, self.site_id(nxt)))
        return np.asarray(pairs, dtype=np.int64)

    def _build_plaquettes(self):
        H, W = self.dims
        rows = range(H) if self.boundary == PERIODIC else range(H - 1)
        cols = range(W) if self.boundary == PERIODIC else range(W - 1)
        if self.boundary == PERIODIC and (H < 3 or W < 3):
            # wrap edges are doubled for L=2; plaquette/edge lookup is ambiguous
            rows, cols = range(0), range(0)
        corners, eids, parity = [], [], []
        for r in rows:
            for c in cols:
                m = self.site_id((r, c))
                n = self.site_id((r, c + 1))
                o = self.site_id((r + 1, c + 1))
                p = self.site_id((r + 1, c))
                corners.append((m, n, o, p))
                eids.append((self._edge_lookup[(m, n)], self._edge_lookup[(n, o)],
                             self._edge_lookup[(o, p)], self._edge_lookup[(p, m)]))
                parity.append((r + c) % 2)
        return (np.asarray(corners, dtype=np.int64).reshape(-1, 4),
                np.asarray(eids, dtype=np.int64).reshape(-1, 4),
                np.asarray(parity, dtype=np.int64))

    def _build_neighbor_arrays(self):
        """Padded (site -> incident edge / neighbor) tables for vectorized updates."""
        deg = np.zeros(self.n_sites, dtype=np.int64)
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        maxdeg = int(deg.max())
        nbr = np.zeros((self.n_sites, maxdeg), dtype=np.int64)
        nbr_edge = np.full((self.n_sites, maxdeg), self.n_edges, dtype=np.int64)
        fill = np.zeros(self.n_sites, dtype=np.int64)
        for eid, (i, j) in enumerate(self.edges):
            nbr[i, fill[i]] = j
            nbr_edge[i, fill[i]] = eid
            fill[i] += 1
            nbr[j, fill[j]] = i
            nbr_edge[j, fill[j]] = eid
            fill[j] += 1
        self.neighbors = nbr
        self.neighbor_edges = nbr_edge  # padded with n_edges (maps to K=0 slot)
        self.degrees = deg

    def edge_id(self, i, j):
        return self._edge_lookup[(i, j)]

    def site_parity(self):
        """Two-coloring by coordinate sum; valid for open boundaries or even dims."""
        coords = np.unravel_index(np.arange(self.n_sites), self.dims)
        return np.sum(coords, axis=0) % 2

    def __repr__(self):
        return f"Lattice(dims={list(self.dims)}, boundary={self.boundary!r})"


def build_lattice(dims, boundary=OPEN) -> Lattice:
    """Build a 2D square or 3D cubic nearest-neighbor lattice."""
    return Lattice(dims, boundary)


@dataclass
class CouplingField:
    """One disorder realization: per-edge couplings and per-site fields."""

    edge_K: np.ndarray
    site_field: np.ndarray

    def __post_init__(self):
        self.edge_K = np.asarray(self.edge_K, dtype=np.float64)
        self.site_field = np.asarray(self.site_field, dtype=np.float64)
        if not np.all(np.isfinite(self.edge_K)):
            raise ValueError("edge couplings must be finite")
        if not np.all(np.isfinite(self.site_field)):
            raise ValueError("site fields must be finite")

    def scaled(self, factor) -> "CouplingField":
        """Rescale the whole field, e.g. J-field times beta."""
        return CouplingField(self.edge_K * factor, self.site_field * factor)

    def with_field(self, site_field) -> "CouplingField":
        return CouplingField(self.edge_K, np.broadcast_to(
            np.asarray(site_field, dtype=np.float64), self.site_field.shape).copy())


def sample_disorder(lattice: Lattice, kind: str, K: float, rng=None) -> CouplingField:
    """Draw one coupling realization.

    kind:
        "ferro"    -- every edge gets +K (K > 0 required).
        "pm_J"     -- each edge independently +K or -K with probability 1/2.
        "gaussian" -- edge_K ~ Normal(0, K^2).

    Site fields are zero; set them separately via ``with_field``.
    """
    E = lattice.n_edges
    if kind == "ferro":
        if K <= 0:
            raise ValueError("ferro coupling must be positive")
        edge_K = np.full(E, float(K))
    elif kind == "pm_J":
        if K <= 0:
            raise ValueError("pm_J coupling scale must be positive")
        if rng is None:
            raise ValueError("pm_J disorder needs an rng")
        signs = rng.integers(0, 2, size=E) * 2 - 1
        edge_K = float(K) * signs.astype(np.float64)
    elif kind == "gaussian":
        if rng is None:
            raise ValueError("gaussian disorder needs an rng")
        edge_K = rng.normal(0.0, float(K), size=E)
    else:
        raise ValueError(f"unknown disorder kind {kind!r}")
    return CouplingField(edge_K, np.zeros(lattice.n_sites))


def ffi_couplings(lattice: Lattice, K: float) -> CouplingField:
    """Fully frustrated couplings on a periodic 2D lattice with even width.

    Horizontal bonds are +K; vertical bonds alternate sign by column, so
    every plaquette carries exactly one antiferromagnetic bond.
    """
    if len(lattice.dims) != 2:
        raise ValueError("fully frustrated couplings are 2D only")
    if lattice.boundary == PERIODIC and lattice.dims[1] % 2 != 0:
        raise ValueError("periodic fully frustrated lattice needs even width")
    if K <= 0:
        raise ValueError("coupling strength must be positive")
    edge_K = np.empty(lattice.n_edges)
    for eid, (i, j) in enumerate(lattice.edges):
        ri, ci = lattice.site_coords(i)
        rj, cj = lattice.site_coords(j)
        if ri == rj:  # horizontal
            edge_K[eid] = K
        else:  # vertical: sign set by column parity
            edge_K[eid] = -K if ci % 2 else K
    return CouplingField(edge_K, np.zeros(lattice.n_sites))


def random_spins(n_sites: int, rng) -> np.ndarray:
    return (rng.integers(0, 2, size=n_sites) * 2 - 1).astype(np.int8)


def energy(lattice: Lattice, coupling: CouplingField, spins) -> float:
    """Dimensionless energy beta*H = -sum_e K_e s_i s_j - sum_i Btilde_i s_i."""
    s = np.asarray(spins)
    i, j = lattice.edges[:, 0], lattice.edges[:, 1]
    bond = np.dot(coupling.edge_K, s[i] * s[j])
    field = np.dot(coupling.site_field, s)
    return float(-bond - field)


def local_fields(lattice: Lattice, coupling: CouplingField, spins) -> np.ndarray:
    """Per-site h_i = sum_j K_ij s_j + Btilde_i, so a flip at i changes
    beta*H by 2 s_i h_i."""
    s = np.asarray(spins, dtype=np.float64)
    K_pad = np.append(coupling.edge_K, 0.0)
    nbr_K = K_pad[lattice.neighbor_edges]
    return (nbr_K * s[lattice.neighbors]).sum(axis=1) + coupling.site_field


def magnetization(spins) -> float:
    return float(np.mean(spins))
