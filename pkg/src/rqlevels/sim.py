"""Discrete-event simulation of the inventory process, used as an independent oracle.

The simulator knows nothing about embedded chains: it draws an exponential
holding time at the current level, compares it with the earliest pending order
arrival and applies whichever comes first. Time at each level is accumulated
after a warm-up and split into batches for batch-means confidence intervals.

Streams are derived from ``(seed, replication index)`` with
:class:`numpy.random.SeedSequence`, and replications are merged in index order,
so results are bitwise identical whatever the worker count.
"""

from __future__ import annotations

import math
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy import stats

from .errors import ModelError, SimulationStalled
from .rate_model import LevelDistribution, SystemSpec

_CHUNK = 1 << 16
CONFIDENCE = 0.99


@dataclass(frozen=True)
class SimConfig:
    """Run-length settings. Event counts are demand events (unit decrements).

    Counters in the results cover the measured window only.

    ``warmup_events`` defaults to 10% of ``measured_events``. With several
    ``replications`` each one runs its own warm-up and an equal share of the
    measured events, and all batches are pooled.
    """

    seed: int = 0
    measured_events: int = 1_000_000
    warmup_events: Optional[int] = None
    batches: int = 20
    replications: int = 1

    def __post_init__(self):
        if self.batches < 2:
            raise ModelError("need at least 2 batches")
        if self.replications < 1:
            raise ModelError("need at least one replication")
        if self.measured_events < self.batches * self.replications:
            raise ModelError("measured_events must be at least batches * replications")
        if self.warmup_events is not None and self.warmup_events < 0:
            raise ModelError("warmup_events must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise ModelError("seed must be a 64-bit unsigned integer")

    @property
    def warmup(self) -> int:
        if self.warmup_events is None:
            return self.measured_events // 10
        return self.warmup_events


@dataclass(frozen=True)
class SimResult:
    empirical: LevelDistribution
    half_widths: np.ndarray  # per level, 99% batch-means half-width
    demand_events: int
    lost_sales: int
    orders_placed: int
    max_pending: int = 0
    transshipments_sent: int = 0
    batch_fractions: np.ndarray = field(default=None, repr=False)

    def half_width(self, level: int) -> float:
        return float(self.half_widths[level - self.empirical.floor_level])


@dataclass(frozen=True)
class SimState:
    level: int
    pending: tuple[float, ...] = ()  # absolute arrival times, ascending
    clock: float = 0.0


def step(spec: SystemSpec, state: SimState, rng: np.random.Generator):
    """Advance to the next event; returns ``(state, elapsed, kind)``.

    ``kind`` is ``"arrival"`` or ``"demand"``. Ties go to the arrival.
    """
    lam = spec.profile.rate(state.level)
    demand_in = rng.exponential(1.0 / lam) if lam > 0 else math.inf
    arrival_in = state.pending[0] - state.clock if state.pending else math.inf
    if math.isinf(demand_in) and math.isinf(arrival_in):
        raise SimulationStalled(f"no event possible at level {state.level}")
    q, r, tau = spec.policy.order_quantity, spec.policy.reorder_point, spec.policy.lead_time
    if arrival_in <= demand_in:
        clock = state.pending[0]
        return SimState(state.level + q, state.pending[1:], clock), arrival_in, "arrival"
    clock = state.clock + demand_in
    level = state.level - 1
    pending = state.pending
    if level + q * len(pending) == r:
        pending = pending + (clock + tau,)
    return SimState(level, pending, clock), demand_in, "demand"


def replication_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def _batch_edges(measured: int, batches: int) -> list[int]:
    size = measured // batches
    return [size * (b + 1) for b in range(batches - 1)] + [measured]


class _Replica(NamedTuple):
    occupancy: np.ndarray  # (batches, levels) time at each level
    demands: int
    lost: int
    orders: int
    max_pending: int


def _run_single(spec: SystemSpec, warmup: int, measured: int, batches: int, rng) -> _Replica:
    r, q, tau = spec.policy.reorder_point, spec.policy.order_quantity, spec.policy.lead_time
    floor, top, n0 = spec.floor_level, spec.top_level, spec.max_outstanding
    inv_rates = [1.0 / lam if lam > 0 else math.inf for lam in spec.profile.rates]
    occ = np.zeros((batches, top - floor + 1))
    row = [0.0] * (top - floor + 1)
    edges = _batch_edges(measured, batches)
    batch = 0
    next_edge = warmup + edges[0]
    total = warmup + measured

    level, clock = top, 0.0
    pending: deque = deque()
    demands = orders = max_pending = 0
    expo = rng.standard_exponential(_CHUNK)
    k = 0
    measuring = warmup == 0
    while demands < total:
        idx = level - floor
        scale = inv_rates[idx]
        if scale != math.inf:
            if k == _CHUNK:
                expo = rng.standard_exponential(_CHUNK)
                k = 0
            dt = expo[k] * scale
            k += 1
        else:
            dt = math.inf
        if pending and pending[0] - clock <= dt:
            at = pending.popleft()
            if measuring:
                row[idx] += at - clock
            clock = at
            level += q
            continue
        if dt == math.inf:
            raise SimulationStalled(f"no event possible at level {level}")
        if measuring:
            row[idx] += dt
        clock += dt
        level -= 1
        demands += 1
        if level + q * len(pending) == r:
            pending.append(clock + tau)
            orders += 1
            if len(pending) > max_pending:
                max_pending = len(pending)
                if max_pending > n0:
                    raise AssertionError(f"{max_pending} orders pending, bound is {n0}")
        if level < floor:
            raise AssertionError(f"level {level} fell below the floor {floor}")
        if not measuring:
            if demands == warmup:
                measuring = True
                orders = 0
        elif demands == next_edge:
            occ[batch] = row
            row = [0.0] * len(row)
            batch += 1
            if batch < batches:
                next_edge = warmup + edges[batch]
    return _Replica(occ, measured, 0, orders, max_pending)


def _split(total: int, parts: int) -> list[int]:
    base, extra = divmod(total, parts)
    return [base + (1 if i < extra else 0) for i in range(parts)]


def _summarise(occupancies: np.ndarray, floor: int):
    totals = occupancies.sum(axis=0)
    empirical = LevelDistribution.from_weights(floor, totals)
    fractions = occupancies / occupancies.sum(axis=1, keepdims=True)
    nb = fractions.shape[0]
    quantile = stats.t.ppf(0.5 + CONFIDENCE / 2, nb - 1)
    half = quantile * fractions.std(axis=0, ddof=1) / math.sqrt(nb)
    return empirical, half, fractions


def _map(fn, items, workers: int):
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def simulate(spec: SystemSpec, config: SimConfig, workers: int = 1) -> SimResult:
    """Time-weighted level occupancy after warm-up, with 99% batch-means half-widths.

    In the effective-rate model no demand is generated at the floor, so
    ``lost_sales`` is always 0 here; see :func:`simulate_transshipment` for a
    model with explicit customers.
    """
    shares = _split(config.measured_events, config.replications)

    def run(i):
        return _run_single(spec, config.warmup, shares[i], config.batches, replication_rng(config.seed, i))

    reps = _map(run, range(config.replications), workers)
    occ = np.concatenate([rep.occupancy for rep in reps])
    empirical, half, fractions = _summarise(occ, spec.floor_level)
    return SimResult(
        empirical=empirical,
        half_widths=half,
        demand_events=sum(rep.demands for rep in reps),
        lost_sales=0,
        orders_placed=sum(rep.orders for rep in reps),
        max_pending=max(rep.max_pending for rep in reps),
        batch_fractions=fractions,
    )


# ---------------------------------------------------------------------------
# two stores with lateral transshipment


class TransshipSimResult(NamedTuple):
    store_a: SimResult
    store_b: SimResult
    beta: "BetaPair"


def _run_pair(scenario, warmup: int, measured: int, batches: int, rng):
    stores = (scenario.store_a, scenario.store_b)
    tau = scenario.lead_time
    gam = np.array([s.demand_rate for s in stores])
    total_rate = gam.sum()
    p_a = gam[0] / total_rate
    r = [s.reorder_point for s in stores]
    cut = [s.transship_cutoff for s in stores]
    levels = [s.reorder_point + 1 for s in stores]
    pending = (deque(), deque())
    occ = [np.zeros((batches, r[m] + 2)) for m in range(2)]
    rows = [[0.0] * (r[m] + 2) for m in range(2)]
    customers = [0, 0]
    lost = [0, 0]
    orders = [0, 0]
    sent = [0, 0]
    edges = _batch_edges(measured, batches)
    batch, next_edge = 0, warmup + edges[0]
    total = warmup + measured
    measuring = warmup == 0
    clock = 0.0
    events = 0
    expo = rng.standard_exponential(_CHUNK) / total_rate
    unif = rng.random(_CHUNK)
    k = 0
    while events < total:
        if k == _CHUNK:
            expo = rng.standard_exponential(_CHUNK) / total_rate
            unif = rng.random(_CHUNK)
            k = 0
        dt, u = expo[k], unif[k]
        k += 1
        # order arrivals due before the next customer
        while True:
            a_next = pending[0][0] if pending[0] else math.inf
            b_next = pending[1][0] if pending[1] else math.inf
            m = 0 if a_next <= b_next else 1
            at = min(a_next, b_next)
            if at - clock > dt:
                break
            elapsed = at - clock
            if measuring:
                rows[0][levels[0]] += elapsed
                rows[1][levels[1]] += elapsed
            dt -= elapsed
            clock = at
            pending[m].popleft()
            levels[m] += 1
        if measuring:
            rows[0][levels[0]] += dt
            rows[1][levels[1]] += dt
        clock += dt
        m = 0 if u < p_a else 1
        n = 1 - m
        customers[m] += 1
        events += 1
        if levels[m] > 0:
            target = m
        elif levels[n] >= cut[n]:
            target = n
            sent[n] += 1
        else:
            target = -1
            lost[m] += 1
        if target >= 0:
            levels[target] -= 1
            # buy-as-sold: position = level + pending drops to r
            if levels[target] + len(pending[target]) == r[target]:
                pending[target].append(clock + tau)
                orders[target] += 1
        if not measuring:
            if events == warmup:
                measuring = True
                customers, lost, orders, sent = [0, 0], [0, 0], [0, 0], [0, 0]
        elif events == next_edge:
            for s in range(2):
                occ[s][batch] = rows[s]
                rows[s] = [0.0] * len(rows[s])
            batch += 1
            if batch < batches:
                next_edge = warmup + edges[batch]
    return occ, customers, lost, orders, sent


def simulate_transshipment(scenario, config: SimConfig, workers: int = 1) -> TransshipSimResult:
    """Jointly simulate two buy-as-sold stores with instantaneous transshipment.

    A customer finding their store empty is served by the other store when that
    store's level is at least its cutoff; otherwise the sale is lost. Event
    counts are customers at either store.
    """
    from .transship import BetaPair

    shares = _split(config.measured_events, config.replications)

    def run(i):
        return _run_pair(scenario, config.warmup, shares[i], config.batches, replication_rng(config.seed, i))

    reps = _map(run, range(config.replications), workers)
    results = []
    for s in range(2):
        occ = np.concatenate([rep[0][s] for rep in reps])
        empirical, half, fractions = _summarise(occ, 0)
        results.append(
            SimResult(
                empirical=empirical,
                half_widths=half,
                demand_events=sum(rep[1][s] for rep in reps),
                lost_sales=sum(rep[2][s] for rep in reps),
                orders_placed=sum(rep[3][s] for rep in reps),
                max_pending=0,
                transshipments_sent=sum(rep[4][s] for rep in reps),
                batch_fractions=fractions,
            )
        )
    beta = BetaPair(results[0].empirical[0], results[1].empirical[0])
    return TransshipSimResult(results[0], results[1], beta)
