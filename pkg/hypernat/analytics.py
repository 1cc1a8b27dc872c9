"""
Availability analysis of the partitioned external space, and run metrics.

Availability: X flows land uniformly on N NICs, each owning floor(F/N)
external endpoints. A NIC overflows when more flows hash to it than it has
endpoints. We evaluate the Markov per-NIC bound X/F, the any-NIC bound
1 - (1 - X/F)^N with its linear form XN/F, the exact binomial per-NIC tail,
and a Monte Carlo estimate of the any-NIC event with a Wilson interval.

Metrics: throughput over a measurement window, RTT percentiles and CDF
tables, drop and utilization summaries, merging of several runs.
"""

import csv
import math
import os
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.stats import binom

from hypernat.errors import EmptyInput
from hypernat.state import counter_reducer

PERCENTILES: Dict[str, float] = {
    "p50": 50.0,
    "p90": 90.0,
    "p98.6": 98.6,
    "p99": 99.0,
    "p99.9": 99.9,
}

MC_CHUNK = 100_000


@dataclass(frozen=True)
class AvailabilityParams:
    """X simultaneous flows, external space of size F, N NICs."""

    X: int
    F: int
    N: int

    def __post_init__(self):
        if self.X < 0:
            raise ValueError(f"X must be >= 0, got {self.X}")
        if not self.F >= self.N >= 1:
            raise ValueError(f"need F >= N >= 1, got F={self.F}, N={self.N}")

    @property
    def capacity(self) -> int:
        """Endpoints per NIC; overflow is a NIC receiving more flows than this."""
        return self.F // self.N

    @property
    def expected_per_nic(self) -> float:
        return self.X / self.N


def markov_per_nic_bound(p: AvailabilityParams) -> float:
    """Pr[x > F/N] <= E(x) / (F/N) = X/F, capped at 1."""
    return min(1.0, p.X / p.F)


def any_nic_bound(p: AvailabilityParams) -> Tuple[float, float]:
    """
    Probability that some NIC overflows, treating NICs as independent with the
    Markov per-NIC probability.

    Returns:
        ``(exact, linear)`` where exact is ``1 - (1 - X/F)^N`` and linear is
        ``min(1, XN/F)``.
    """
    q = p.X / p.F
    if q > 1:
        raise ValueError(f"X/F must not exceed 1, got {q}")
    exact = 1.0 if q == 1 else -math.expm1(p.N * math.log1p(-q))
    return exact, min(1.0, p.X * p.N / p.F)


def per_nic_overflow_exact(p: AvailabilityParams) -> float:
    """Pr[x > floor(F/N)] for x ~ Binomial(X, 1/N)."""
    if p.N == 1:
        return 1.0 if p.X > p.capacity else 0.0
    return float(binom.sf(p.capacity, p.X, 1.0 / p.N))


def wilson_interval(successes: int, total: int, z: float = 1.96) -> Tuple[float, float]:
    """Wilson score interval for a Bernoulli proportion."""
    if total <= 0:
        return (0.0, 1.0)
    phat = successes / total
    z2 = z * z
    denom = 1.0 + z2 / total
    center = (phat + z2 / (2.0 * total)) / denom
    margin = z * math.sqrt(phat * (1.0 - phat) / total + z2 / (4.0 * total * total)) / denom
    return (max(0.0, center - margin), min(1.0, center + margin))


def mc_overflow(p: AvailabilityParams, trials: int, seed: int = 0) -> Tuple[float, float]:
    """
    Monte Carlo frequency of "some NIC receives more than floor(F/N) flows".

    Trials run in chunks; chunk ``k`` draws from a generator seeded with
    ``(seed, k)``, so the result depends only on ``seed`` and ``trials``.

    Returns:
        ``(estimate, ci95)`` with ci95 the half-width of the Wilson interval.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")

    if p.X <= p.capacity:
        hits = 0
    elif p.N == 1:
        hits = trials
    else:
        hits = 0
        probs = np.full(p.N, 1.0 / p.N)
        for chunk_index, start in enumerate(range(0, trials, MC_CHUNK)):
            size = min(MC_CHUNK, trials - start)
            rng = np.random.default_rng([seed, chunk_index])
            counts = rng.multinomial(p.X, probs, size=size)
            hits += int(np.count_nonzero((counts > p.capacity).any(axis=1)))

    lo, hi = wilson_interval(hits, trials)
    return hits / trials, (hi - lo) / 2


@dataclass(frozen=True)
class AvailabilityReport:
    params: AvailabilityParams
    markov_per_nic_bound: float
    per_nic_exact: float
    any_nic_bound_exact: float
    any_nic_bound_linear: float
    mc_estimate: Optional[float]
    mc_ci95: Optional[float]
    n_trials: int
    seed: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "X": self.params.X,
            "F": self.params.F,
            "N": self.params.N,
            "capacity_per_nic": self.params.capacity,
            "markov_per_nic_bound": self.markov_per_nic_bound,
            "per_nic_exact": self.per_nic_exact,
            "any_nic_bound_exact": self.any_nic_bound_exact,
            "any_nic_bound_linear": self.any_nic_bound_linear,
            "mc_estimate": self.mc_estimate,
            "mc_ci95": self.mc_ci95,
            "n_trials": self.n_trials,
            "seed": self.seed,
        }


def availability_report(p: AvailabilityParams, trials: int = 0, seed: int = 0) -> AvailabilityReport:
    """All bounds for ``p``; the Monte Carlo part is skipped when ``trials`` is 0."""
    exact, linear = any_nic_bound(p)
    estimate, ci95 = mc_overflow(p, trials, seed) if trials else (None, None)
    return AvailabilityReport(
        params=p,
        markov_per_nic_bound=markov_per_nic_bound(p),
        per_nic_exact=per_nic_overflow_exact(p),
        any_nic_bound_exact=exact,
        any_nic_bound_linear=linear,
        mc_estimate=estimate,
        mc_ci95=ci95,
        n_trials=trials,
        seed=seed,
    )


def availability_sweep(
    F: int,
    x_over_f: Iterable[float],
    nics: Iterable[int],
    trials: int,
    seed: int = 0,
) -> List[AvailabilityReport]:
    """One report per (X/F, N) cell, X rounded to the nearest flow count."""
    nics = list(nics)
    return [
        availability_report(AvailabilityParams(round(ratio * F), F, n), trials, seed)
        for ratio in x_over_f
        for n in nics
    ]


def write_sweep_csv(path: Union[str, os.PathLike], reports: Iterable[AvailabilityReport]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["X", "F", "N", "exact", "linear", "mc", "ci"])
        for r in reports:
            writer.writerow(
                [r.params.X, r.params.F, r.params.N, r.any_nic_bound_exact, r.any_nic_bound_linear, r.mc_estimate, r.mc_ci95]
            )


def rtt_percentiles(samples_us: Sequence[float]) -> Dict[str, float]:
    if len(samples_us) == 0:
        return {}
    values = np.percentile(np.asarray(samples_us, dtype=float), list(PERCENTILES.values()))
    return {name: float(v) for name, v in zip(PERCENTILES, values)}


def cdf_table(samples_us: Sequence[float], max_points: int = 1000) -> List[Tuple[float, float]]:
    """``(rtt_us, cdf)`` pairs at distinct RTT values, thinned to ``max_points`` rows."""
    if len(samples_us) == 0:
        return []
    values, counts = np.unique(np.asarray(samples_us, dtype=float), return_counts=True)
    cdf = np.cumsum(counts) / counts.sum()
    if len(values) > max_points:
        keep = np.unique(np.linspace(0, len(values) - 1, max_points).round().astype(int))
        values, cdf = values[keep], cdf[keep]
    return list(zip(values.tolist(), cdf.tolist()))


def write_cdf_csv(path: Union[str, os.PathLike], samples_us: Sequence[float], max_points: int = 1000) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["rtt_us", "cdf"])
        writer.writerows(cdf_table(samples_us, max_points))


def tail_fraction(samples_us: Sequence[float], threshold_us: float) -> float:
    if len(samples_us) == 0:
        return 0.0
    return float(np.count_nonzero(np.asarray(samples_us) > threshold_us)) / len(samples_us)


@dataclass
class RunMetrics:
    """Throughput, RTT distribution, drops and element utilization of one run (or a merge)."""

    throughput_pps: float
    window_start_ns: int
    window_end_ns: int
    translations_in_window: int
    rtt_samples_us: np.ndarray
    percentiles: Dict[str, float]
    drops: Dict[str, int] = field(default_factory=dict)
    utilization: Dict[str, float] = field(default_factory=dict)
    packets_sent: int = 0
    packets_returned: int = 0
    packets_dropped: int = 0
    packets_in_flight: int = 0
    n_flows: int = 0
    failed_flows: int = 0
    runs: int = 1

    def to_dict(self) -> Dict[str, Any]:
        return {
            "throughput_pps": self.throughput_pps,
            "window_us": [self.window_start_ns / 1000, self.window_end_ns / 1000],
            "translations_in_window": self.translations_in_window,
            "rtt_percentiles_us": self.percentiles,
            "rtt_cdf": cdf_table(self.rtt_samples_us, max_points=100),
            "drops": self.drops,
            "utilization": self.utilization,
            "packets": {
                "sent": self.packets_sent,
                "returned": self.packets_returned,
                "dropped": self.packets_dropped,
                "in_flight": self.packets_in_flight,
            },
            "flows": {"total": self.n_flows, "failed": self.failed_flows},
        }


def window_throughput(translations: int, start_ns: int, end_ns: int) -> float:
    if end_ns <= start_ns:
        return 0.0
    return translations * 1e9 / (end_ns - start_ns)


def recount_throughput(event_rows: Iterable[Sequence[Any]], start_ns: int, end_ns: int) -> float:
    """Throughput straight from event-log rows ``(pkt_seq, flow_id, event, kind, t_ns)``."""
    translations = sum(
        1
        for _, _, event, _, t_ns in event_rows
        if event in ("translated_out", "translated_in") and start_ns <= t_ns <= end_ns
    )
    return window_throughput(translations, start_ns, end_ns)


def aggregate(runs: Sequence[RunMetrics]) -> RunMetrics:
    """
    Merge runs into one summary. Throughput is recomputed over the combined
    window from the summed translation counts; percentiles come from the
    pooled samples.

    Raises:
        EmptyInput: If ``runs`` is empty.
    """
    if not runs:
        raise EmptyInput("nothing to aggregate")
    start = min(r.window_start_ns for r in runs)
    end = max(r.window_end_ns for r in runs)
    translations = sum(r.translations_in_window for r in runs)
    samples = np.concatenate([np.asarray(r.rtt_samples_us, dtype=float) for r in runs])
    drops: Optional[dict] = None
    for r in runs:
        drops = counter_reducer(drops, r.drops)
    keys = dict.fromkeys(k for r in runs for k in r.utilization)
    utilization = {
        k: float(np.mean([r.utilization[k] for r in runs if k in r.utilization])) for k in keys
    }
    return RunMetrics(
        throughput_pps=window_throughput(translations, start, end),
        window_start_ns=start,
        window_end_ns=end,
        translations_in_window=translations,
        rtt_samples_us=samples,
        percentiles=rtt_percentiles(samples),
        drops=drops or {},
        utilization=utilization,
        packets_sent=sum(r.packets_sent for r in runs),
        packets_returned=sum(r.packets_returned for r in runs),
        packets_dropped=sum(r.packets_dropped for r in runs),
        packets_in_flight=sum(r.packets_in_flight for r in runs),
        n_flows=sum(r.n_flows for r in runs),
        failed_flows=sum(r.failed_flows for r in runs),
        runs=sum(r.runs for r in runs),
    )


def served_failure_rate(metrics: RunMetrics) -> float:
    """Fraction of connections the gateway could not serve for lack of external endpoints."""
    if metrics.n_flows == 0:
        return 0.0
    return metrics.failed_flows / metrics.n_flows
