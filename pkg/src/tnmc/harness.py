"""Experiment driver: configuration, chain orchestration, CSV persistence,
summary statistics, and the sampler benchmark.

A run is a grid over (beta, disorder realization); the replicas of one
realization run in lockstep inside one worker so the replica overlap can
be recorded per sweep.  Chain seeds derive from the master seed by hashing
(master, beta index, realization index, replica index), so results are
reproducible regardless of worker scheduling; per-sweep wall times are the
one column that is not reproducible by nature.

Output files per run directory:
    chain_<beta>_<realization>_<replica>.csv
        header comments, then rows
        sweep,beta_H,mag,q,accept,t0_ms,trunc_err
    summary.csv
        L,beta,observable,value,ci_lo,ci_hi,tau
"""

from __future__ import annotations

import configparser
import hashlib
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from statistics import NormalDist

import numpy as np

from . import cluster_gibbs, tensor_mh
from .kbd import KBDSampler
from .lattice import (OPEN, PERIODIC, build_lattice, energy, ffi_couplings,
                      magnetization, random_spins, sample_disorder)
from .metropolis import MetropolisSampler
from .observables import (binder_ratio, integrated_autocorrelation,
                          lag1_autocorrelation, confidence_interval,
                          specific_heat, spin_overlap, susceptibility)

MODELS = ("ising2d", "ising3d", "ea2d_pmJ", "ffi2d", "ising2d_field")
SAMPLERS = ("metropolis", "sw", "wolff", "niedermayer", "ghost_sw",
            "field_sw", "bond_cluster", "kbd", "tnmh")

CHAIN_HEADER = "sweep,beta_H,mag,q,accept,t0_ms,trunc_err"
SUMMARY_HEADER = "L,beta,observable,value,ci_lo,ci_hi,tau"


@dataclass
class ExperimentConfig:
    model: str
    L: int
    betas: tuple
    sampler: str
    n_disorder: int = 1
    n_replicas: int = 1
    burn_in: int = 10
    sweeps: int = 100
    master_seed: int = 1
    out_dir: str = "run_out"
    threads: int = 1
    boundary: str = ""            # "" = model default
    field: float = 0.0            # site field per unit beta (field models)
    sampler_W: float = 1.0        # niedermayer
    sampler_chi: int = 0          # tnmh; 0 = exact contraction
    sampler_scheme: str = "full"  # tnmh: full | tiles:HxW | slabs
    free_par: float = -1.0        # bond_cluster explicit weights
    free_anti: float = -1.0
    alpha: float = 0.1            # CI significance

    def validate(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}")
        if self.sampler not in SAMPLERS:
            raise ValueError(f"unknown sampler {self.sampler!r}")
        if self.L < 2:
            raise ValueError("L must be >= 2")
        if not self.betas or any(b <= 0 for b in self.betas):
            raise ValueError("need positive beta values")
        if min(self.n_disorder, self.n_replicas, self.sweeps) < 1:
            raise ValueError("counts must be positive")
        if self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")
        if self.sampler == "kbd" and self.model != "ffi2d":
            raise ValueError("the plaquette sampler needs the ffi2d model")
        if self.model == "ffi2d" and self.sampler not in ("kbd", "metropolis"):
            raise ValueError("ffi2d supports kbd or metropolis")
        if self.sampler in ("ghost_sw", "field_sw") \
                and self.model != "ising2d_field":
            raise ValueError("ghost/field samplers need the ising2d_field model")
        if self.model == "ising2d_field" and self.field == 0.0:
            raise ValueError("ising2d_field needs a nonzero field")
        if self.sampler == "tnmh" and self.model == "ising3d" \
                and self.sampler_scheme == "full":
            raise ValueError("3D lattices need the slabs scheme")
        self.boundary_resolved()

    def boundary_resolved(self) -> str:
        if self.boundary:
            if self.boundary not in (OPEN, PERIODIC):
                raise ValueError(f"unknown boundary {self.boundary!r}")
            return self.boundary
        return {"ising2d": PERIODIC, "ising3d": PERIODIC, "ea2d_pmJ": OPEN,
                "ffi2d": PERIODIC, "ising2d_field": OPEN}[self.model]


def load_config(path) -> ExperimentConfig:
    """Parse the INI experiment file (sections model/sampler/run)."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    read = cp.read(path)
    if not read:
        raise FileNotFoundError(path)
    model = cp["model"]
    sampler = cp["sampler"] if cp.has_section("sampler") else {}
    run = cp["run"] if cp.has_section("run") else {}
    betas = tuple(float(x) for x in model["beta"].replace(",", " ").split())
    cfg = ExperimentConfig(
        model=model.get("kind", "ising2d"),
        L=int(model.get("L", "4")),
        betas=betas,
        boundary=model.get("boundary", ""),
        field=float(model.get("field", "0")),
        sampler=sampler.get("kind", "sw"),
        sampler_W=float(sampler.get("W", "1.0")),
        sampler_chi=int(sampler.get("chi", "0")),
        sampler_scheme=sampler.get("scheme", "full"),
        free_par=float(sampler.get("free_par", "-1")),
        free_anti=float(sampler.get("free_anti", "-1")),
        n_disorder=int(run.get("n_disorder", "1")),
        n_replicas=int(run.get("n_replicas", "1")),
        burn_in=int(run.get("burn_in", "10")),
        sweeps=int(run.get("sweeps", "100")),
        master_seed=int(run.get("master_seed", "1")),
        out_dir=run.get("out_dir", "run_out"),
        threads=int(run.get("threads", "1")),
        alpha=float(run.get("alpha", "0.1")),
    )
    cfg.validate()
    return cfg


def derive_seed(master_seed: int, *parts) -> int:
    """Pure seed derivation; no global RNG anywhere."""
    text = ":".join([str(master_seed)] + [str(p) for p in parts])
    digest = hashlib.sha256(text.encode()).digest()
    return int.from_bytes(digest[:8], "little")


def _build_model(cfg: ExperimentConfig, disorder_idx: int):
    bc = cfg.boundary_resolved()
    dims = [cfg.L] * (3 if cfg.model == "ising3d" else 2)
    lattice = build_lattice(dims, bc)
    if cfg.model == "ea2d_pmJ":
        rng = np.random.default_rng(derive_seed(cfg.master_seed, "disorder",
                                                disorder_idx))
        base = sample_disorder(lattice, "pm_J", 1.0, rng)
    elif cfg.model == "ffi2d":
        base = ffi_couplings(lattice, 1.0)
    else:
        base = sample_disorder(lattice, "ferro", 1.0)
    if cfg.model == "ising2d_field":
        base = base.with_field(np.full(lattice.n_sites, cfg.field))
    return lattice, base


class _Chain:
    """One chain: sampler, its state, and per-sweep measurement."""

    def __init__(self, cfg, lattice, coupling, seed):
        self.lattice = lattice
        self.coupling = coupling
        self.rng = np.random.default_rng(seed)
        self.spins = random_spins(lattice.n_sites, self.rng)
        self.ghost = 1
        self.kind = cfg.sampler
        chi = None if cfg.sampler_chi <= 0 else cfg.sampler_chi
        if self.kind == "metropolis":
            self.sampler = MetropolisSampler(lattice, coupling, self.rng)
        elif self.kind == "kbd":
            self.sampler = KBDSampler(lattice, coupling, self.rng)
        elif self.kind == "tnmh":
            scheme = _parse_scheme(cfg.sampler_scheme, lattice)
            self.sampler = tensor_mh.TensorMHSampler(lattice, coupling,
                                                     scheme, chi, self.rng)
        else:
            self.tg_config = _bond_config(self.kind, coupling, cfg)
            self.sampler = None

    def sweep(self):
        """Advance one sweep; returns (acceptance-like stat, trunc_err)."""
        if self.kind == "metropolis":
            return self.sampler.sweep(self.spins), 0.0
        if self.kind == "kbd":
            stats = self.sampler.step(self.spins)
            return stats.flip_fraction, 0.0
        if self.kind == "tnmh":
            rate, err, _ = self.sampler.sweep(self.spins)
            return rate, err
        self.spins, self.ghost, stats = cluster_gibbs.tg_step(
            self.lattice, self.coupling, self.spins, self.tg_config, self.rng,
            self.ghost)
        return stats.flip_fraction, 0.0

    def measured_spins(self):
        if self.kind == "ghost_sw":
            return cluster_gibbs.ghost_observable_transform(self.spins,
                                                            self.ghost)
        return self.spins


def _parse_scheme(text: str, lattice):
    if text == "full":
        return tensor_mh.full_lattice()
    if text == "slabs":
        return tensor_mh.slabs(axis=0)
    if text.startswith("tiles:"):
        h, w = text.split(":", 1)[1].lower().split("x")
        return tensor_mh.tiles(int(h), int(w))
    raise ValueError(f"unknown cluster scheme {text!r}")


def _bond_config(kind, coupling, cfg):
    if kind == "sw":
        return cluster_gibbs.sw_config(coupling)
    if kind == "wolff":
        return cluster_gibbs.wolff_config(coupling)
    if kind == "niedermayer":
        return cluster_gibbs.niedermayer_config(coupling, cfg.sampler_W)
    if kind == "ghost_sw":
        return cluster_gibbs.ghost_sw_config(coupling)
    if kind == "field_sw":
        return cluster_gibbs.field_sw_config(coupling)
    if kind == "bond_cluster":
        if cfg.free_par < 0 or cfg.free_anti < 0:
            raise ValueError("bond_cluster needs free_par and free_anti")
        E = coupling.edge_K.shape[0]
        return cluster_gibbs.BondRuleConfig(np.full(E, cfg.free_par),
                                            np.full(E, cfg.free_anti))
    raise ValueError(f"unknown bond sampler {kind!r}")


@dataclass
class ChainRecord:
    beta: float
    disorder: int
    replica: int
    beta_H: np.ndarray
    mag: np.ndarray
    q: np.ndarray           # nan when not replicated
    accept: np.ndarray
    t0_ms: np.ndarray
    trunc: np.ndarray
    seed: int


def _run_cell(cfg: ExperimentConfig, beta_idx: int, disorder_idx: int):
    """All replicas of one (beta, realization) in lockstep."""
    beta = cfg.betas[beta_idx]
    lattice, base = _build_model(cfg, disorder_idx)
    coupling = base.scaled(beta)
    chains = []
    for rep in range(cfg.n_replicas):
        seed = derive_seed(cfg.master_seed, beta_idx, disorder_idx, rep)
        chains.append(_Chain(cfg, lattice, coupling, seed))
    for _ in range(cfg.burn_in):
        for ch in chains:
            ch.sweep()
    M = cfg.sweeps
    recs = [ChainRecord(beta, disorder_idx, rep, np.zeros(M), np.zeros(M),
                        np.full(M, np.nan), np.zeros(M), np.zeros(M),
                        np.zeros(M),
                        derive_seed(cfg.master_seed, beta_idx, disorder_idx,
                                    rep))
            for rep in range(cfg.n_replicas)]
    for t in range(M):
        for ch, rec in zip(chains, recs):
            tic = time.perf_counter()
            acc, trunc = ch.sweep()
            rec.t0_ms[t] = (time.perf_counter() - tic) * 1e3
            s = ch.measured_spins()
            rec.beta_H[t] = energy(lattice, coupling, s)
            rec.mag[t] = magnetization(s)
            rec.accept[t] = acc
            rec.trunc[t] = trunc
        if cfg.n_replicas >= 2:
            qv = spin_overlap(chains[0].measured_spins(),
                              chains[1].measured_spins())
            for rec in recs:
                rec.q[t] = qv
    return recs


def _cell_worker(args):
    cfg_dict, beta_idx, disorder_idx = args
    cfg = ExperimentConfig(**cfg_dict)
    return beta_idx, disorder_idx, _run_cell(cfg, beta_idx, disorder_idx)


def _fmt(x) -> str:
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return f"{x:.12g}"


def write_chain_csv(path: Path, cfg: ExperimentConfig, rec: ChainRecord):
    from . import __version__

    lines = [
        f"# tnmc chain record v1 (tnmc {__version__})",
        f"# model={cfg.model} L={cfg.L} boundary={cfg.boundary_resolved()} "
        f"beta={_fmt(rec.beta)} disorder={rec.disorder} replica={rec.replica}",
        f"# sampler={cfg.sampler} chi={cfg.sampler_chi} "
        f"scheme={cfg.sampler_scheme} W={_fmt(cfg.sampler_W)}",
        f"# master_seed={cfg.master_seed} chain_seed={rec.seed} "
        f"burn_in={cfg.burn_in} sweeps={cfg.sweeps}",
        "# sweep definition: metropolis = N single-site attempts; "
        "sw/wolff/niedermayer/ghost = one bond-state + cluster-flip pass; "
        "kbd = one checkerboard-parity plaquette pass; "
        "tnmh = one proposal pass over all clusters",
        CHAIN_HEADER,
    ]
    for t in range(len(rec.beta_H)):
        lines.append(",".join([
            str(t), _fmt(rec.beta_H[t]), _fmt(rec.mag[t]), _fmt(rec.q[t]),
            _fmt(rec.accept[t]), _fmt(rec.t0_ms[t]), _fmt(rec.trunc[t])]))
    path.write_text("\n".join(lines) + "\n")


def _series_ci(series, alpha):
    """Single-chain interval with the AR(1) long-run inflation."""
    x = np.asarray(series, dtype=np.float64)
    rho = lag1_autocorrelation(x)
    rho = min(rho, 1.0 - 1e-9)
    se = math.sqrt(x.var(ddof=1) / len(x) * (1 + rho) / (1 - rho)) \
        if len(x) > 1 else 0.0
    z = NormalDist().inv_cdf(1 - alpha / 2)
    return x.mean() - z * se, x.mean() + z * se


def _normal_ci(values, alpha):
    v = np.asarray(values, dtype=np.float64)
    if len(v) < 2:
        return math.nan, math.nan
    se = v.std(ddof=1) / math.sqrt(len(v))
    z = NormalDist().inv_cdf(1 - alpha / 2)
    return float(v.mean() - z * se), float(v.mean() + z * se)


def summarize(cfg: ExperimentConfig, records) -> list:
    """Aggregate chain records into summary rows (one per observable)."""
    n_sites = cfg.L ** (3 if cfg.model == "ising3d" else 2)
    rows = []
    for b_idx, beta in enumerate(cfg.betas):
        cell = [r for r in records if r.beta == beta]
        by_dis = {}
        for r in cell:
            by_dis.setdefault(r.disorder, []).append(r)
        taus = [float(integrated_autocorrelation(r.beta_H)) for r in cell
                if len(r.beta_H) >= 10]
        tau = float(np.mean(taus)) if taus else math.nan

        # energy per site: realization x sweep ensemble, replica 0
        ens = np.stack([sorted(rs, key=lambda r: r.replica)[0].beta_H
                        for rs in by_dis.values()]) / n_sites
        if ens.shape[0] >= 2 and ens.shape[1] >= 2:
            lo, hi, mu, _ = confidence_interval(ens, cfg.alpha)
        else:
            mu = float(ens.mean())
            lo, hi = _series_ci(ens.ravel(), cfg.alpha)
        rows.append((cfg.L, beta, "energy_per_site", mu, lo, hi, tau))

        ce_vals = [specific_heat([np.concatenate([r.beta_H for r in rs])],
                                 n_sites) for rs in by_dis.values()]
        lo, hi = _normal_ci(ce_vals, cfg.alpha)
        rows.append((cfg.L, beta, "c_e", float(np.mean(ce_vals)), lo, hi, tau))

        m_abs, m2s, m4s = [], [], []
        for rs in by_dis.values():
            m = np.concatenate([r.mag for r in rs])
            m_abs.append(np.abs(m).mean())
            m2s.append((m ** 2).mean())
            m4s.append((m ** 4).mean())
        lo, hi = _normal_ci(m_abs, cfg.alpha)
        rows.append((cfg.L, beta, "m_abs", float(np.mean(m_abs)), lo, hi, tau))
        if min(m2s) > 0:
            g_each = [binder_ratio([m2], [m4]) for m2, m4 in zip(m2s, m4s)]
            lo, hi = _normal_ci(g_each, cfg.alpha)
            rows.append((cfg.L, beta, "g_m", binder_ratio(m2s, m4s), lo, hi,
                         tau))

        if cfg.n_replicas >= 2:
            q2s, q4s = [], []
            for rs in by_dis.values():
                q = rs[0].q
                q2s.append((q ** 2).mean())
                q4s.append((q ** 4).mean())
            g_each = [binder_ratio([q2], [q4]) for q2, q4 in zip(q2s, q4s)]
            lo, hi = _normal_ci(g_each, cfg.alpha)
            rows.append((cfg.L, beta, "g_q", binder_ratio(q2s, q4s), lo, hi,
                         tau))
            chi_each = [susceptibility([q2], n_sites) for q2 in q2s]
            lo, hi = _normal_ci(chi_each, cfg.alpha)
            rows.append((cfg.L, beta, "chi_q",
                         susceptibility(q2s, n_sites), lo, hi, tau))
    return rows


def write_summary_csv(path: Path, rows):
    lines = [SUMMARY_HEADER]
    for (L, beta, name, value, lo, hi, tau) in rows:
        lines.append(",".join([str(L), _fmt(beta), name, _fmt(value),
                               _fmt(lo), _fmt(hi), _fmt(tau)]))
    path.write_text("\n".join(lines) + "\n")


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> Path:
    """Run the full grid, write chain CSVs and summary.csv; returns the
    output directory."""
    cfg.validate()
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tasks = [(b, d) for b in range(len(cfg.betas))
             for d in range(cfg.n_disorder)]
    records = []
    if cfg.threads > 1:
        args = [(cfg.__dict__.copy(), b, d) for (b, d) in tasks]
        with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(_cell_worker, args))
        results.sort(key=lambda r: (r[0], r[1]))
        for _, _, recs in results:
            records.extend(recs)
    else:
        for (b, d) in tasks:
            records.extend(_run_cell(cfg, b, d))
    for rec in records:
        name = f"chain_{_fmt(rec.beta)}_{rec.disorder}_{rec.replica}.csv"
        write_chain_csv(out / name, cfg, rec)
    rows = summarize(cfg, records)
    write_summary_csv(out / "summary.csv", rows)
    return out


def read_summary(path) -> list:
    rows = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != SUMMARY_HEADER:
            raise ValueError(f"unexpected summary header {header!r}")
        for line in fh:
            L, beta, name, value, lo, hi, tau = line.strip().split(",")
            rows.append((int(L), float(beta), name, float(value), float(lo),
                         float(hi), float(tau)))
    return rows


# -- benchmark ----------------------------------------------------------


BENCH_HEADER = ("L,sampler,tau,t0_ms_median,tau_t0_ms,"
                "tau_ratio_vs_metropolis,tau_t0_ratio_vs_metropolis")


def benchmark_tau_t0(L_values, beta: float, sweeps: int, master_seed: int,
                     tnmh_chi: int = 16, burn_in: int = 50,
                     boundary: str = OPEN) -> list:
    """Autocorrelation time and per-sweep cost for the single-site baseline
    against full-lattice tensor proposals, on the 2D ferromagnet.

    One sweep is N single-site attempts (metropolis) or one full-lattice
    proposal (tnmh); the normalization is stated in the output.  Returns
    rows per (L, sampler) with the tnmh rows carrying ratios against the
    metropolis rows.
    """
    rows = []
    for L in L_values:
        lattice = build_lattice([L, L], boundary)
        coupling = sample_disorder(lattice, "ferro", 1.0).scaled(beta)
        cell = {}
        for kind in ("metropolis", "tnmh"):
            rng = np.random.default_rng(derive_seed(master_seed, kind, L))
            spins = random_spins(lattice.n_sites, rng)
            if kind == "metropolis":
                sampler = MetropolisSampler(lattice, coupling, rng)
                step = lambda: sampler.sweep(spins)
            else:
                # skip truncation entirely when chi already covers the
                # exact boundary bond dimension 2^(L/2)
                chi = None if 2 ** (L // 2) <= tnmh_chi else tnmh_chi
                sampler = tensor_mh.TensorMHSampler(
                    lattice, coupling, tensor_mh.full_lattice(), chi, rng)
                step = lambda: sampler.sweep(spins)
            for _ in range(burn_in):
                step()
            energies = np.zeros(sweeps)
            times = np.zeros(sweeps)
            for t in range(sweeps):
                tic = time.perf_counter()
                step()
                times[t] = (time.perf_counter() - tic) * 1e3
                energies[t] = energy(lattice, coupling, spins)
            tau = float(integrated_autocorrelation(energies))
            t0 = float(np.median(times))
            cell[kind] = (tau, t0)
            if kind == "metropolis":
                rows.append((L, kind, tau, t0, tau * t0, math.nan, math.nan))
        m_tau, m_t0 = cell["metropolis"]
        t_tau, t_t0 = cell["tnmh"]
        rows.append((L, "tnmh", t_tau, t_t0, t_tau * t_t0,
                     m_tau / t_tau, (m_tau * m_t0) / (t_tau * t_t0)))
    return rows


def write_bench_csv(path: Path, rows):
    lines = [BENCH_HEADER]
    for (L, kind, tau, t0, taut0, r_tau, r_tt) in rows:
        lines.append(",".join([str(L), kind, _fmt(tau), _fmt(t0), _fmt(taut0),
                               _fmt(r_tau), _fmt(r_tt)]))
    path.write_text("\n".join(lines) + "\n")
