"""Monte Carlo realization of the slotted radar/ALOHA network.

Every trial draws an independent Poisson network around an observer at the
origin (the typical radar, or equivalently the typical comm receiver whose
beam points back at its transmitter). Each trial's randomness is a pure
function of ``(master_seed, trial_index)``, so estimators give bit-identical
results for any worker count.

Nodes are generated in order of distance from the origin, by accumulating
unit exponential gaps of ``rate * r**2``. A realization in a larger window
therefore contains the smaller window's realization as a prefix.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .model import SystemParams, derived_constants, thinned_intensities

log = logging.getLogger(__name__)

TWO_PI = 2 * math.pi
# Nodes drawn per generator call. Part of the reproducibility contract:
# changing it changes every realization.
NODE_CHUNK = 512
TRIAL_BLOCK = 256
MAX_RESAMPLES = 16


class WindowTooSmall(ValueError):
    pass


class CoincidentNode(ArithmeticError):
    pass


class InsufficientTrials(ValueError):
    pass


class NonPositiveThreshold(ValueError):
    pass


@dataclass(frozen=True)
class SeedSpec:
    master_seed: int
    trial_index: int = 0
    attempt: int = 0

    def __post_init__(self):
        if not 0 <= self.master_seed < 2**64:
            raise ValueError(f"master seed must be an unsigned 64-bit integer, got {self.master_seed}")
        if self.trial_index < 0 or self.attempt < 0:
            raise ValueError("trial index and attempt must be non-negative")

    def generator(self) -> np.random.Generator:
        key = (self.trial_index,) if self.attempt == 0 else (self.trial_index, self.attempt)
        return np.random.default_rng(np.random.SeedSequence(self.master_seed, spawn_key=key))


@dataclass(frozen=True)
class Node:
    position: tuple[float, float]
    mark: int
    boresight: float
    d_c: float

    @property
    def receiver_position(self) -> tuple[float, float]:
        return (
            self.position[0] + self.d_c * math.cos(self.boresight),
            self.position[1] + self.d_c * math.sin(self.boresight),
        )


@dataclass(frozen=True, eq=False)
class NetworkRealization:
    """One sampled network. The typical node sits at the origin with mark 0.

    ``comm_slot`` is a slot drawn uniformly from the typical node's comm
    phase. ``mode`` records how much of the plane was sampled: the whole
    disc, the typical node's beam sector only, or only nodes mutually
    aligned with the typical node. The reduced modes are exact for anything
    observed at the origin, since other nodes can never interfere there.
    """

    positions: np.ndarray
    marks: np.ndarray
    boresights: np.ndarray
    lam: float
    window_radius: float
    typical_boresight: float
    aloha_key: int
    comm_slot: int
    d_c: float
    mode: str = "disc"

    def __len__(self) -> int:
        return len(self.marks)

    @property
    def nodes(self) -> list[Node]:
        return [self.node(i) for i in range(len(self))]

    def node(self, i: int) -> Node:
        x, y = self.positions[i]
        return Node((float(x), float(y)), int(self.marks[i]), float(self.boresights[i]), self.d_c)

    @property
    def typical(self) -> Node:
        return Node((0.0, 0.0), 0, self.typical_boresight, self.d_c)


def default_window_radius(p: SystemParams, lam: float) -> float:
    """About 20 mean nearest-aligned-interferer distances."""
    lambda_a = thinned_intensities(p, lam).lambda_a
    if lambda_a == 0:
        return 1.0
    return 20.0 / math.sqrt(math.pi * lambda_a)


def min_window_radius(p: SystemParams, lam: float) -> float:
    lambda_a = thinned_intensities(p, lam).lambda_a
    if lambda_a == 0:
        return 0.0
    return 5.0 / (2.0 * math.sqrt(lambda_a))


def _check_window(p: SystemParams, lam: float, window_radius: float) -> None:
    if not window_radius > 0:
        raise WindowTooSmall(f"window radius must be positive, got {window_radius!r}")
    floor = min_window_radius(p, lam)
    if window_radius < floor:
        raise WindowTooSmall(
            f"window radius {window_radius:.4g} m below {floor:.4g} m "
            "(5x the mean nearest-aligned-interferer distance)"
        )


SAMPLING_MODES = ("disc", "beam", "aligned")


def _sample(p: SystemParams, lam: float, window_radius: float, rng: np.random.Generator,
            mode: str) -> NetworkRealization:
    typical_boresight = float(rng.uniform(0.0, TWO_PI))
    aloha_key = int(rng.integers(0, 2**63))
    if p.M > p.M_r:
        comm_slot = int(rng.integers(p.M_r, p.M))
    else:
        comm_slot = int(rng.integers(1, p.M))

    if mode == "disc":
        width, centre, keep = TWO_PI, 0.0, 1.0
    elif mode == "beam":
        width, centre, keep = p.phi, typical_boresight, 1.0
    elif mode == "aligned":
        # independent thinning by "own beam covers the origin"
        width, centre, keep = p.phi, typical_boresight, p.phi / TWO_PI
    else:
        raise ValueError(f"unknown sampling mode {mode!r}")
    rate = lam * keep * width / 2  # nodes per unit r**2
    limit = rate * window_radius**2

    radii2, angles, marks, bores = [], [], [], []
    total = 0.0
    while limit > 0:
        g = total + np.cumsum(rng.standard_exponential(NODE_CHUNK))
        u = rng.random(NODE_CHUNK)
        mk = rng.integers(0, p.M, NODE_CHUNK)
        b = rng.random(NODE_CHUNK)
        n = int(np.searchsorted(g, limit, side="right"))
        radii2.append(g[:n])
        angles.append(u[:n])
        marks.append(mk[:n])
        bores.append(b[:n])
        if n < NODE_CHUNK:
            break
        total = g[-1]

    if radii2:
        r = np.sqrt(np.concatenate(radii2) / rate)
        ang = centre + width * (np.concatenate(angles) - 0.5)
        positions = np.column_stack((r * np.cos(ang), r * np.sin(ang)))
        marks_a = np.concatenate(marks)
        b = np.concatenate(bores)
        if mode == "aligned":
            bores_a = (ang + math.pi + p.phi * (b - 0.5)) % TWO_PI
        else:
            bores_a = TWO_PI * b
    else:
        positions = np.empty((0, 2))
        marks_a = np.empty(0, dtype=np.int64)
        bores_a = np.empty(0)
    return NetworkRealization(
        positions=positions, marks=marks_a, boresights=bores_a, lam=lam,
        window_radius=window_radius, typical_boresight=typical_boresight,
        aloha_key=aloha_key, comm_slot=comm_slot, d_c=p.d_c, mode=mode,
    )


def sample_network(p: SystemParams, lam: float, window_radius: float | None = None,
                   seed: SeedSpec | int = 0, *, mode: str = "disc") -> NetworkRealization:
    """Draw a Poisson network of density ``lam`` in a disc of ``window_radius``.

    ``mode="beam"`` keeps only the typical node's beam sector and
    ``mode="aligned"`` additionally keeps only nodes whose beam covers the
    origin (an independent thinning with probability ``phi / 2pi``).
    """
    thinned_intensities(p, lam)  # density check
    if window_radius is None:
        window_radius = default_window_radius(p, lam)
    _check_window(p, lam, window_radius)
    if not isinstance(seed, SeedSpec):
        seed = SeedSpec(seed)
    return _sample(p, lam, window_radius, seed.generator(), mode)


# -- activity ---------------------------------------------------------------

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix(z: np.ndarray) -> np.ndarray:
    z ^= z >> np.uint64(30)
    z *= _M1
    z ^= z >> np.uint64(27)
    z *= _M2
    z ^= z >> np.uint64(31)
    return z


def counter_uniform(key: int, node_ids, slots) -> np.ndarray:
    """Uniform [0, 1) draws that depend only on ``(key, node, slot)``.

    Two splitmix64 finalizer rounds; the same node makes the same ALOHA
    decision in a slot no matter which order slots are evaluated in.
    """
    node_ids, slots = np.broadcast_arrays(np.atleast_1d(np.asarray(node_ids, dtype=np.uint64)),
                                          np.atleast_1d(np.asarray(slots, dtype=np.uint64)))
    z = (node_ids + np.uint64(1)) * _GOLDEN
    z += np.uint64(key)
    z = _mix(z)
    z += (slots + np.uint64(1)) * _GOLDEN
    z = _mix(z)
    z >>= np.uint64(11)
    return z.astype(np.float64) * 2.0**-53


def _wrap(a: np.ndarray) -> np.ndarray:
    return (a + math.pi) % TWO_PI - math.pi


def _observer(net: NetworkRealization, position, boresight):
    pos = np.zeros(2) if position is None else np.asarray(position, dtype=float)
    bore = net.typical_boresight if boresight is None else float(boresight)
    return pos, bore


def aligned_indices(net: NetworkRealization, p: SystemParams, observer_position=None,
                    observer_boresight=None) -> np.ndarray:
    """Indices of nodes whose beam covers the observer and that lie in the
    observer's beam."""
    pos, bore = _observer(net, observer_position, observer_boresight)
    if len(net) == 0:
        return np.empty(0, dtype=np.int64)
    d = net.positions - pos
    ang = np.arctan2(d[:, 1], d[:, 0])
    half = p.phi / 2 + 1e-12
    ok = (np.abs(_wrap(ang - bore)) <= half) & (np.abs(_wrap(ang + math.pi - net.boresights)) <= half)
    return np.flatnonzero(ok)


def activity(net: NetworkRealization, p: SystemParams, idx: np.ndarray, slots) -> np.ndarray:
    """Activity codes for nodes ``idx`` over ``slots``: 0 idle, 1 radar pulse,
    2 comm packet. Shape ``(len(idx), len(slots))``."""
    slots = np.atleast_1d(np.asarray(slots, dtype=np.int64))
    phase = (slots[None, :] - net.marks[idx][:, None]) % p.M
    out = (phase == 0).astype(np.int8)
    comm = phase >= p.M_r
    if p.q_c < 1.0:
        if p.q_c > 0.0:
            u = counter_uniform(net.aloha_key, idx[:, None], slots[None, :])
            comm &= u < p.q_c
        else:
            comm[:] = False
    out[comm] = 2
    return out


def _powers(net: NetworkRealization, p: SystemParams, idx: np.ndarray, pos: np.ndarray) -> np.ndarray:
    dist = np.hypot(*(net.positions[idx] - pos).T)
    if np.any(dist == 0):
        raise CoincidentNode("interferer coincides with the observer")
    return derived_constants(p).K * dist ** (-p.alpha)


def active_aligned_interferers(net: NetworkRealization, p: SystemParams, slot: int,
                               observer_position=None, observer_boresight=None
                               ) -> list[tuple[Node, str]]:
    if slot < 0:
        raise ValueError("slot must be non-negative")
    idx = aligned_indices(net, p, observer_position, observer_boresight)
    kinds = activity(net, p, idx, [slot])[:, 0]
    names = {1: "radar", 2: "comm"}
    return [(net.node(int(i)), names[int(k)]) for i, k in zip(idx, kinds) if k]


def slot_interference(net: NetworkRealization, p: SystemParams, slot: int,
                      observer_position=None, observer_boresight=None) -> float:
    """Aggregate received power from active aligned interferers in ``slot``."""
    if slot < 0:
        raise ValueError("slot must be non-negative")
    pos, bore = _observer(net, observer_position, observer_boresight)
    idx = aligned_indices(net, p, pos, bore)
    active = activity(net, p, idx, [slot])[:, 0] > 0
    idx = idx[active]
    if idx.size == 0:
        return 0.0
    return float(np.sum(_powers(net, p, idx, pos)))


def window_interference(net: NetworkRealization, p: SystemParams) -> np.ndarray:
    """Interference at the typical radar in each echo slot ``1..M_r-1``.

    Equivalent to calling :func:`slot_interference` per slot, but uses the
    fact that a node's comm slots inside the window form one contiguous run.
    """
    n_slots = p.M_r - 1
    idx = aligned_indices(net, p)
    out = np.zeros(n_slots)
    if idx.size == 0:
        return out
    mark = net.marks[idx]
    # radar pulses of marks 1..M_r-1 land inside the window
    pulse = (mark >= 1) & (mark < p.M_r)
    # comm run [lo, M_r - 1 or mark - 1]
    lo = np.where(mark >= p.M_r, np.maximum(1, mark + p.M_r - p.M), np.maximum(1, mark - p.M_c))
    hi = np.where(mark >= p.M_r, p.M_r - 1, mark - 1)
    has_comm = (mark != 0) & (lo <= hi) & (p.q_c > 0)
    node_i = np.flatnonzero(pulse)
    slot_i = mark[pulse]
    if has_comm.any():
        c = np.flatnonzero(has_comm)
        lengths = hi[c] - lo[c] + 1
        rows = np.repeat(c, lengths)
        starts = np.cumsum(lengths) - lengths
        slots = np.arange(rows.size) - np.repeat(starts, lengths) + np.repeat(lo[c], lengths)
        if p.q_c < 1.0:
            fire = counter_uniform(net.aloha_key, idx[rows], slots) < p.q_c
            rows, slots = rows[fire], slots[fire]
        node_i = np.concatenate((node_i, rows))
        slot_i = np.concatenate((slot_i, slots))
    if node_i.size == 0:
        return out
    power = _powers(net, p, idx, np.zeros(2))
    return np.bincount(slot_i - 1, weights=power[node_i], minlength=n_slots)


def echo_window_max(net: NetworkRealization, p: SystemParams) -> float:
    if p.M_r < 2:
        raise ValueError("echo window is empty")
    return float(window_interference(net, p).max())


# -- ensembles ----------------------------------------------------------------

@dataclass(frozen=True)
class TrialEnsemble:
    """Per-trial interference statistics; empty arrays for unrequested kinds."""

    echo_maxima: np.ndarray
    slot_samples: np.ndarray
    trials: int
    resampled: int = 0


def _trial(p, lam, window_radius, seed: int, trial: int, echo: bool, slot: bool, mode: str):
    for attempt in range(MAX_RESAMPLES):
        rng = SeedSpec(seed, trial, attempt).generator()
        net = _sample(p, lam, window_radius, rng, mode)
        try:
            e = echo_window_max(net, p) if echo else math.nan
            s = slot_interference(net, p, net.comm_slot) if slot else math.nan
        except CoincidentNode:
            continue
        return e, s, attempt
    raise CoincidentNode(f"trial {trial}: {MAX_RESAMPLES} coincident realizations in a row")


def _run_block(args):
    p, lam, window_radius, seed, start, stop, echo, slot, mode = args
    out = np.empty((stop - start, 3))
    for j, t in enumerate(range(start, stop)):
        out[j] = _trial(p, lam, window_radius, seed, t, echo, slot, mode)
    return out


def run_ensemble(p: SystemParams, lam: float, trials: int, *, window_radius: float | None = None,
                 seed: int = 0, workers: int = 1, echo: bool = True, slot: bool = True,
                 mode: str = "aligned") -> TrialEnsemble:
    """Run ``trials`` independent realizations observed at the origin.

    Trials are split into fixed blocks; results are concatenated in trial
    order, so the worker count never affects the output.
    """
    if trials < 1:
        raise InsufficientTrials("need at least one trial")
    thinned_intensities(p, lam)
    if window_radius is None:
        window_radius = default_window_radius(p, lam)
    _check_window(p, lam, window_radius)
    SeedSpec(seed)
    if mode not in SAMPLING_MODES:
        raise ValueError(f"unknown sampling mode {mode!r}")
    jobs = [
        (p, lam, window_radius, seed, a, min(a + TRIAL_BLOCK, trials), echo, slot, mode)
        for a in range(0, trials, TRIAL_BLOCK)
    ]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(_run_block, jobs))
    else:
        blocks = [_run_block(j) for j in jobs]
    res = np.concatenate(blocks)
    resampled = int(res[:, 2].sum())
    if resampled:
        log.info("resampled %d realizations with coincident nodes", resampled)
    empty = np.empty(0)
    return TrialEnsemble(
        echo_maxima=res[:, 0].copy() if echo else empty,
        slot_samples=res[:, 1].copy() if slot else empty,
        trials=trials,
        resampled=resampled,
    )


# -- estimators ---------------------------------------------------------------

Z95 = 1.959963984540054


def binomial_half_width(p_hat: float, n: int) -> float:
    return Z95 * math.sqrt(p_hat * (1 - p_hat) / n)


def threshold_from_maxima(maxima: np.ndarray, pf_target: float) -> float:
    """Smallest order statistic exceeded by at most ``pf_target`` of the samples."""
    x = np.sort(np.asarray(maxima, dtype=float))
    n = x.size
    k = max(1, math.ceil((1 - pf_target) * n - 1e-9))
    return float(x[k - 1])


def calibrate_threshold(p: SystemParams, lam: float, trials: int = 10_000,
                        window_radius: float | None = None, seed: int = 0,
                        workers: int = 1) -> float:
    """Empirical ``1 - pf_target`` quantile of the echo-window maximum."""
    if trials < 1000:
        raise InsufficientTrials(f"threshold calibration needs >= 1000 trials, got {trials}")
    ens = run_ensemble(p, lam, trials, window_radius=window_radius, seed=seed,
                       workers=workers, slot=False)
    return threshold_from_maxima(ens.echo_maxima, p.pf_target)


@dataclass(frozen=True)
class FalseAlarmEstimate:
    p_f: float
    half_width: float
    trials: int


def estimate_false_alarm(p: SystemParams, lam: float, theta: float, trials: int = 10_000,
                         window_radius: float | None = None, seed: int = 0,
                         workers: int = 1) -> FalseAlarmEstimate:
    ens = run_ensemble(p, lam, trials, window_radius=window_radius, seed=seed,
                       workers=workers, slot=False)
    p_hat = float(np.mean(ens.echo_maxima > theta))
    return FalseAlarmEstimate(p_hat, binomial_half_width(p_hat, trials), trials)


def simulated_radar_range(p: SystemParams, theta_sim: float) -> float:
    if not theta_sim > 0:
        raise NonPositiveThreshold(f"threshold must be positive, got {theta_sim!r}")
    K = derived_constants(p).K
    return (K * p.sigma / (4 * math.pi * theta_sim)) ** (1 / (2 * p.alpha))


@dataclass(frozen=True)
class ThroughputEstimate:
    P_s: float
    P_s_half_width: float
    T: float
    T_half_width: float
    P_s_std_err: float
    trials: int


def success_indicator(p: SystemParams, interference: np.ndarray) -> np.ndarray:
    signal = derived_constants(p).K * p.d_c ** (-p.alpha)
    return signal > p.gamma * np.asarray(interference)


def estimate_throughput(p: SystemParams, lam: float, trials: int = 100_000,
                        window_radius: float | None = None, seed: int = 0,
                        workers: int = 1) -> ThroughputEstimate:
    """Monte Carlo success probability and throughput density.

    The observer at the origin is the typical receiver, its beam pointing at
    its transmitter ``d_c`` away; interference is taken in a uniformly drawn
    comm slot of that transmitter.
    """
    if trials < 1000:
        raise InsufficientTrials(f"throughput estimation needs >= 1000 trials, got {trials}")
    ens = run_ensemble(p, lam, trials, window_radius=window_radius, seed=seed,
                       workers=workers, echo=False)
    ps = float(np.mean(success_indicator(p, ens.slot_samples)))
    se = math.sqrt(ps * (1 - ps) / trials)
    rate = (1 - p.eps) * p.q_c * lam
    return ThroughputEstimate(
        P_s=ps, P_s_half_width=Z95 * se, T=rate * ps, T_half_width=rate * Z95 * se,
        P_s_std_err=se, trials=trials,
    )
