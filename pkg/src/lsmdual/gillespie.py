"""Event-driven simulation of the jump models.

Two engines share one channel-table representation of the generators:

* ``simulate_jump_process`` runs a single trajectory with incremental rate
  updates (jumps touch at most two sites, so only channels watching a
  changed site are recomputed) and records states at requested sample times.
  No time discretization anywhere — holding times are exact exponentials.
* ``batch_final_states`` advances many replicas in lockstep with vectorized
  numpy draws; statistically it realizes the same law and is the workhorse
  behind the Monte-Carlo estimators and mean-field runs. Agreement of the
  two engines (and of both against uniformization) is part of the test
  suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .kernels import Kernel
from .models import Channel, Config, JumpModel, Variant, OCC, VAC, PAIRS
from .rng import Seed, make_rng


@dataclass
class Trajectory:
    """States of one run observed at fixed sample times (t=0 first)."""

    times: np.ndarray
    states: List[Config]
    model_kind: str
    seed: Optional[Seed]
    n_events: int = 0

    def final(self) -> Config:
        return self.states[-1]


def _resolve_rng(seed) -> Tuple[np.random.Generator, Optional[Seed]]:
    if isinstance(seed, np.random.Generator):
        return seed, None
    if isinstance(seed, Seed):
        return seed.rng(), seed
    s = Seed(int(seed))
    return s.rng(), s


def _float_channels(channels: Sequence[Channel]) -> List[Channel]:
    return [
        Channel(float(ch.const), ch.i, ch.fi, ch.j, ch.fj, ch.delta, ch.room_cap)
        for ch in channels
    ]


def simulate_jump_process(
    model: JumpModel,
    q: Optional[Kernel],
    x0: Config,
    t_end: float,
    sample_times: Optional[Sequence[float]] = None,
    seed: Union[Seed, int, np.random.Generator] = 0,
) -> Trajectory:
    """Exact next-event simulation of a jump model up to ``t_end``.

    ``sample_times`` defaults to (0, t_end). The trajectory is deterministic
    given the seed. Formal (negative-rate) models are rejected.
    """
    if not model.is_process():
        raise ValueError("formal models cannot be simulated")
    if x0.variant is not model.variant():
        raise ValueError("initial configuration has the wrong variant")
    rng, seed_obj = _resolve_rng(seed)
    channels = _float_channels(model.channels(q.promoted("float") if q else None))
    n_chan = len(channels)
    watchers: List[List[int]] = [[] for _ in range(x0.n_sites)]
    for c_idx, ch in enumerate(channels):
        for s in set(ch.watched()):
            watchers[s].append(c_idx)

    if sample_times is None:
        sample_times = (0.0, float(t_end)) if t_end > 0 else (0.0,)
    sample_times = [float(s) for s in sample_times]
    if any(b <= a for a, b in zip(sample_times, sample_times[1:])) or sample_times[0] != 0.0:
        raise ValueError("sample times must be strictly increasing and start at 0")
    if sample_times[-1] > t_end:
        raise ValueError("sample times beyond t_end")

    vals = list(x0.values)
    rates = np.array([ch.rate_at(vals) for ch in channels], dtype=float)
    total = float(rates.sum())
    t = 0.0
    out_states: List[Config] = []
    next_sample = 0
    n_events = 0
    events_since_refresh = 0

    def record_until(time_reached: float):
        nonlocal next_sample
        while next_sample < len(sample_times) and sample_times[next_sample] <= time_reached:
            out_states.append(Config(x0.variant, tuple(vals)))
            next_sample += 1

    while True:
        if total <= 0.0:
            break
        dt = rng.exponential(1.0 / total)
        if t + dt > t_end:
            break
        # states are sampled strictly before the event lands at t+dt
        record_until(np.nextafter(t + dt, t))
        t += dt
        u = rng.random() * total
        acc = 0.0
        chosen = n_chan - 1
        for c_idx in range(n_chan):
            acc += rates[c_idx]
            if u < acc:
                chosen = c_idx
                break
        ch = channels[chosen]
        touched = set()
        for site, dv in ch.delta:
            vals[site] += dv
            touched.add(site)
        for site in touched:
            for c_idx in watchers[site]:
                rates[c_idx] = channels[c_idx].rate_at(vals)
        n_events += 1
        events_since_refresh += 1
        if events_since_refresh >= 4096:
            # guard against float drift in the incremental total
            rates = np.array([c.rate_at(vals) for c in channels], dtype=float)
            events_since_refresh = 0
        total = float(rates.sum())
    record_until(t_end)
    return Trajectory(
        np.array(sample_times), out_states, model.kind, seed_obj, n_events
    )


# ---------------------------------------------------------------------------
# Vectorized many-replica engine
# ---------------------------------------------------------------------------

_FACTOR_CODES = {OCC: 0, VAC: 1, PAIRS: 2, "one": 3}


class VectorChannels:
    """Channel table compiled to flat arrays for lockstep multi-path stepping."""

    def __init__(self, channels: Sequence[Channel], n_sites: int):
        self.n_sites = n_sites
        self.consts = np.array([float(ch.const) for ch in channels])
        self.i_idx = np.array([ch.i if ch.i is not None else 0 for ch in channels])
        self.i_code = np.array(
            [_FACTOR_CODES[ch.fi] if ch.i is not None else 3 for ch in channels]
        )
        self.j_idx = np.array([ch.j if ch.j is not None else 0 for ch in channels])
        self.j_code = np.array(
            [_FACTOR_CODES[ch.fj] if ch.j is not None else 3 for ch in channels]
        )
        self.caps = np.array(
            [1 if ch.room_cap is None else ch.room_cap for ch in channels], dtype=float
        )
        deltas = np.zeros((len(channels), n_sites), dtype=np.int64)
        for k, ch in enumerate(channels):
            for site, dv in ch.delta:
                deltas[k, site] += dv
        self.deltas = deltas

    def rates(self, Y: np.ndarray) -> np.ndarray:
        """(n_paths, n_channels) rate matrix at states Y (n_paths, n_sites)."""
        out = np.broadcast_to(self.consts, (Y.shape[0], len(self.consts))).copy()
        for idx, code, side in ((self.i_idx, self.i_code, 0), (self.j_idx, self.j_code, 1)):
            vals = Y[:, idx].astype(float)
            factor = np.ones_like(vals)
            occ = code == 0
            vac = code == 1
            prs = code == 2
            factor[:, occ] = vals[:, occ]
            factor[:, vac] = self.caps[vac] - vals[:, vac]
            factor[:, prs] = vals[:, prs] * (vals[:, prs] - 1.0)
            out *= factor
        return out


def batch_final_states(
    model_or_channels: Union[JumpModel, Sequence[Channel]],
    q: Optional[Kernel],
    x0: Config,
    t_end: float,
    n_paths: int,
    seed: Union[Seed, int, np.random.Generator],
    x0_batch: Optional[np.ndarray] = None,
    max_iter: int = 10_000_000,
) -> np.ndarray:
    """Time-``t_end`` states of ``n_paths`` independent replicas, as an int array.

    Each iteration advances every unfinished replica by one event using
    shared vectorized draws; per-replica laws are the exact jump-process
    laws. ``x0_batch`` overrides the common initial state with one row per
    replica (used for random initial conditions).
    """
    if isinstance(model_or_channels, JumpModel):
        if not model_or_channels.is_process():
            raise ValueError("formal models cannot be simulated")
        channels = model_or_channels.channels(q.promoted("float") if q else None)
        n_sites = x0.n_sites
    else:
        channels = list(model_or_channels)
        n_sites = x0.n_sites
    vc = VectorChannels(_float_channels(channels), n_sites)
    rng, _ = _resolve_rng(seed)

    if x0_batch is not None:
        Y = np.array(x0_batch, dtype=np.int64)
        if Y.shape != (n_paths, n_sites):
            raise ValueError("x0_batch must be (n_paths, n_sites)")
    else:
        Y = np.tile(np.array(x0.values, dtype=np.int64), (n_paths, 1))
    t = np.zeros(n_paths)
    active = np.ones(n_paths, dtype=bool)
    t_end = float(t_end)
    if t_end == 0.0:
        return Y

    for _ in range(max_iter):
        if not active.any():
            return Y
        idx = np.nonzero(active)[0]
        R = vc.rates(Y[idx])
        tot = R.sum(axis=1)
        alive = tot > 0.0
        # absorbed replicas stay put for good
        if not alive.all():
            active[idx[~alive]] = False
            idx = idx[alive]
            if idx.size == 0:
                continue
            R = R[alive]
            tot = tot[alive]
        dt = rng.exponential(size=idx.size) / tot
        tnew = t[idx] + dt
        fire = tnew <= t_end
        done = idx[~fire]
        active[done] = False
        t[done] = t_end
        hot = idx[fire]
        if hot.size:
            t[hot] = tnew[fire]
            u = rng.random(hot.size) * tot[fire]
            cum = np.cumsum(R[fire], axis=1)
            chan = (cum > u[:, None]).argmax(axis=1)
            Y[hot] += vc.deltas[chan]
    raise RuntimeError("batch simulation exceeded the iteration budget")


def empirical_distribution(states: np.ndarray, space) -> np.ndarray:
    """Histogram replica states over an enumerated state space."""
    counts = np.zeros(space.size)
    base = space.base
    idx = np.zeros(len(states), dtype=np.int64)
    for col in range(states.shape[1]):
        idx = idx * base + states[:, col]
    uniq, cnt = np.unique(idx, return_counts=True)
    counts[uniq] = cnt
    return counts / len(states)
