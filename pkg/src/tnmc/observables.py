"""Estimators over recorded chains: overlap, Binder ratio, susceptibility,
specific heat, autocorrelation time, and the disorder-ensemble confidence
interval.

Averaging order matters everywhere: thermal averages are taken per
disorder realization first, then averaged over realizations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np


class DegenerateAutocorrelation(ValueError):
    """Lag-1 autocorrelation at or above 1; the error estimate diverges."""


def spin_overlap(s1, s2) -> float:
    """Absolute site-averaged replica overlap |sum_i a_i b_i / n|."""
    a = np.asarray(s1)
    b = np.asarray(s2)
    if a.shape != b.shape:
        raise ValueError("replica configurations differ in length")
    return abs(float(np.mean(a * b)))


def binder_ratio(q2_means, q4_means) -> float:
    """Disorder-averaged 0.5 * <3 - <q^4>_T / <q^2>_T^2>_J.

    Inputs are per-realization thermal means; the ratio is formed inside
    the disorder average.
    """
    q2 = np.asarray(q2_means, dtype=np.float64)
    q4 = np.asarray(q4_means, dtype=np.float64)
    if np.any(q2 <= 0):
        raise ValueError("second moment must be positive")
    return float(np.mean(0.5 * (3.0 - q4 / q2 ** 2)))


def susceptibility(q2_means, n_sites: int) -> float:
    """N times the disorder average of the thermal <q^2>."""
    return float(n_sites * np.mean(np.asarray(q2_means, dtype=np.float64)))


def specific_heat(energy_series, n_sites: int) -> float:
    """Var(beta H) / N per realization, then disorder-averaged.

    ``energy_series`` is one series or a list of per-realization series of
    dimensionless energies.
    """
    series = np.atleast_2d(np.asarray(energy_series, dtype=np.float64))
    if series.shape[1] < 2:
        raise ValueError("need at least two samples")
    return float(np.mean(series.var(axis=1) / n_sites))


@dataclass
class TauEstimate:
    tau: float
    window: int
    degenerate: bool = False
    suspicious: bool = False

    def __float__(self):
        return self.tau


def integrated_autocorrelation(series) -> TauEstimate:
    """tau = 1 + 2 sum_k rho_k, summing until the first negative rho_k.

    A constant series has no autocorrelation structure; it returns tau=1
    flagged degenerate.  tau < 0.5 is flagged suspicious rather than
    clamped.
    """
    x = np.asarray(series, dtype=np.float64)
    M = len(x)
    if M < 10:
        raise ValueError("need at least 10 samples")
    x = x - x.mean()
    c0 = float(np.dot(x, x)) / M
    if c0 == 0.0:
        return TauEstimate(1.0, 0, degenerate=True)
    total = 0.0
    k = 1
    while k < M:
        ck = float(np.dot(x[:-k], x[k:])) / M
        rho = ck / c0
        if rho < 0:
            break
        total += rho
        k += 1
    tau = 1.0 + 2.0 * total
    return TauEstimate(tau, k, suspicious=tau < 0.5)


def lag1_autocorrelation(series) -> float:
    x = np.asarray(series, dtype=np.float64)
    x = x - x.mean()
    c0 = float(np.dot(x, x))
    if c0 == 0.0:
        return 0.0
    return float(np.dot(x[:-1], x[1:])) / c0


def confidence_interval(ensemble, alpha: float):
    """Normal interval for the grand mean of an (N realizations, M samples)
    ensemble.

    The standard error combines per-realization sample variances inflated
    by the AR(1) long-run factor (1 + rho_1) / (1 - rho_1):

        sigma_hat = (1/N) sqrt( sum_i (s_i^2 / M) (1+rho_i)/(1-rho_i) )

    Returns (lo, hi, mean, sigma_hat).  Realizations with rho_1 >= 1
    raise DegenerateAutocorrelation.
    """
    A = np.asarray(ensemble, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] < 2 or A.shape[1] < 2:
        raise ValueError("need an (N>=2, M>=2) ensemble")
    N, M = A.shape
    mu = float(A.mean())
    var_sum = 0.0
    for i in range(N):
        s2 = float(A[i].var(ddof=1))
        rho = lag1_autocorrelation(A[i])
        if rho >= 1.0 - 1e-12:
            raise DegenerateAutocorrelation(f"realization {i} has rho_1={rho}")
        var_sum += (s2 / M) * (1.0 + rho) / (1.0 - rho)
    sigma = math.sqrt(var_sum) / N
    z = NormalDist().inv_cdf(1.0 - alpha / 2.0)
    return (mu - sigma * z, mu + sigma * z, mu, sigma)


def rescale_for_collapse(points, eta: float):
    """Finite-size rescaling: x -> beta - ln(L)/2; Binder values pass
    through, susceptibilities are scaled by L^-(2-eta).

    ``points`` is an iterable of (L, beta, value); returns a list of
    (x, value) with the susceptibility scaling applied when
    ``eta is not None`` is interpreted by the caller -- here values are
    always scaled, so pass eta=None for Binder data.
    """
    out = []
    for (L, beta, value) in points:
        x = beta - math.log(L) / 2.0
        if eta is None:
            out.append((x, value))
        else:
            out.append((x, value * L ** (-(2.0 - eta))))
    return out
