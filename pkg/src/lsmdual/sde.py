"""Euler-Maruyama integration of the two diffusion families.

Stepping stone sites carry gene frequencies in [0,1] with drift
migration + s*x*(1-x) - m*x and noise sqrt(2*r*x*(1-x)); super-random-walk
sites carry masses in [0,inf) with drift migration + beta*z - gamma*z^2 and
noise sqrt(alpha*z) or sqrt(2*alpha*z) depending on the convention switch.
Proposals leaving the state space are clamped and the clamp frequency is
reported; at the default step sizes clamping is rare and the dt-refinement
check in the test suite guards the bias.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .kernels import Kernel
from .models import Config, NoiseConvention, SrwParams, SsmParams, Variant
from .rng import Seed
from .gillespie import Trajectory, _resolve_rng

DEFAULT_DT = 1e-3


def _migration_matrix(q: Optional[Kernel], n_sites: int) -> np.ndarray:
    """M[j,i] = q(j,i) so that drift_i = (x @ M)_i - x_i * colsum_i."""
    M = np.zeros((n_sites, n_sites))
    if q is not None:
        if q.n_sites != n_sites:
            raise ValueError("kernel/site-count mismatch")
        for j, i, w in q.pairs():
            M[j, i] = float(w)
    return M


@dataclass
class SdeBatch:
    """Final-time states of a batch of SDE paths plus clamp accounting."""

    final: np.ndarray  # (n_paths, n_sites)
    clamp_fraction: float
    dt: float
    n_steps: int


def _euler_batch(
    drift, scale_fn, x0_batch: np.ndarray, t_end: float, dt: float, rng,
    lo: float, hi: Optional[float],
) -> SdeBatch:
    n_steps = max(1, int(round(t_end / dt)))
    h = t_end / n_steps
    sq = np.sqrt(h)
    X = np.array(x0_batch, dtype=float)
    clamps = 0
    for _ in range(n_steps):
        noise = rng.standard_normal(X.shape)
        X = X + drift(X) * h + scale_fn(X) * sq * noise
        bad = X < lo
        if hi is not None:
            bad |= X > hi
        clamps += int(np.count_nonzero(bad))
        np.clip(X, lo, hi, out=X)
    return SdeBatch(X, clamps / (n_steps * X.size), h, n_steps)


def ssm_batch(
    p: SsmParams,
    q: Optional[Kernel],
    x0: Union[Config, np.ndarray],
    t_end: float,
    n_paths: int,
    seed: Union[Seed, int, np.random.Generator],
    dt: float = DEFAULT_DT,
) -> SdeBatch:
    """Final-time states of n_paths stepping stone paths (vectorized)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    rng, _ = _resolve_rng(seed)
    if isinstance(x0, Config):
        if x0.variant is not Variant.UNIT_REAL:
            raise ValueError("stepping stone states live in [0,1]")
        x0_batch = np.tile(np.array(x0.values, dtype=float), (n_paths, 1))
    else:
        x0_batch = np.array(x0, dtype=float)
    n_sites = x0_batch.shape[1]
    M = _migration_matrix(q, n_sites)
    colsum = M.sum(axis=0)
    s, m, r = float(p.s), float(p.m), float(p.r)

    def drift(X):
        return X @ M - X * colsum + s * X * (1.0 - X) - m * X

    def scale(X):
        return np.sqrt(np.clip(2.0 * r * X * (1.0 - X), 0.0, None))

    return _euler_batch(drift, scale, x0_batch, float(t_end), dt, rng, 0.0, 1.0)


def srw_batch(
    p: SrwParams,
    q: Optional[Kernel],
    z0: Union[Config, np.ndarray],
    t_end: float,
    n_paths: int,
    seed: Union[Seed, int, np.random.Generator],
    dt: float = DEFAULT_DT,
) -> SdeBatch:
    """Final-time states of n_paths super-random-walk paths (vectorized)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    rng, _ = _resolve_rng(seed)
    if isinstance(z0, Config):
        if z0.variant is not Variant.NONNEG_REAL:
            raise ValueError("super random walk states are nonnegative reals")
        z0_batch = np.tile(np.array(z0.values, dtype=float), (n_paths, 1))
    else:
        z0_batch = np.array(z0, dtype=float)
    n_sites = z0_batch.shape[1]
    M = _migration_matrix(q, n_sites)
    colsum = M.sum(axis=0)
    alpha, beta, gamma = float(p.alpha), float(p.beta), float(p.gamma)
    noise_coeff = alpha if p.noise_convention is NoiseConvention.SQRT_ALPHA else 2.0 * alpha

    def drift(Z):
        return Z @ M - Z * colsum + beta * Z - gamma * Z * Z

    def scale(Z):
        return np.sqrt(np.clip(noise_coeff * Z, 0.0, None))

    return _euler_batch(drift, scale, z0_batch, float(t_end), dt, rng, 0.0, None)


def _sample_trajectory(batch_fn, x0: Config, sample_times: Sequence[float], variant):
    """Run one path, recording states at the sample times by chaining segments."""
    times = [float(s) for s in sample_times]
    if times[0] != 0.0 or any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("sample times must be strictly increasing and start at 0")
    states = [x0]
    current = np.array([x0.values], dtype=float)
    clamp = 0.0
    for t0, t1 in zip(times, times[1:]):
        out = batch_fn(current, t1 - t0)
        current = out.final
        clamp = max(clamp, out.clamp_fraction)
        states.append(Config(variant, tuple(float(v) for v in current[0])))
    return states, clamp


def simulate_ssm(
    p: SsmParams,
    q: Optional[Kernel],
    x0: Config,
    t_end: float,
    dt: float = DEFAULT_DT,
    seed: Union[Seed, int] = 0,
    sample_times: Optional[Sequence[float]] = None,
) -> Tuple[Trajectory, float]:
    """One stepping stone path sampled at the given times; returns (trajectory, clamp fraction)."""
    rng, seed_obj = _resolve_rng(seed)
    if sample_times is None:
        sample_times = (0.0, float(t_end)) if t_end > 0 else (0.0,)
    states, clamp = _sample_trajectory(
        lambda x, span: ssm_batch(p, q, x, span, 1, rng, dt),
        x0, sample_times, Variant.UNIT_REAL,
    )
    return Trajectory(np.array(sample_times), states, "ssm", seed_obj), clamp


def simulate_srw(
    p: SrwParams,
    q: Optional[Kernel],
    z0: Config,
    t_end: float,
    dt: float = DEFAULT_DT,
    seed: Union[Seed, int] = 0,
    sample_times: Optional[Sequence[float]] = None,
) -> Tuple[Trajectory, float]:
    """One super-random-walk path sampled at the given times; returns (trajectory, clamp fraction)."""
    rng, seed_obj = _resolve_rng(seed)
    if sample_times is None:
        sample_times = (0.0, float(t_end)) if t_end > 0 else (0.0,)
    states, clamp = _sample_trajectory(
        lambda z, span: srw_batch(p, q, z, span, 1, rng, dt),
        z0, sample_times, Variant.NONNEG_REAL,
    )
    return Trajectory(np.array(sample_times), states, "srw", seed_obj), clamp
