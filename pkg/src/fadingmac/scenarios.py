"""Experiment harnesses, one per reproduced result.

Each ``exp_*`` function returns an :class:`ExperimentResult` holding one
or more tables, metadata describing the constructed geometry, and the
qualitative checks the experiment is expected to reproduce.  Replicated
simulation runs fan out over a process pool when ``workers > 1``.
"""

from __future__ import annotations

import hashlib
import math
import random
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import analytic
from .geometry import CaptureParams, ca_blocks, capture_line, csma_blocks, region_table
from .macsim import (
    Connection,
    DcfConfig,
    FloodSource,
    RunMetrics,
    Scenario,
    one_hop_delay,
    run,
    single_link,
)
from .propagation import (
    PropagationParams,
    distance_for_delivery_ratio,
    link_delivery_ratio,
    mean_received_power_dbm,
    sample_received_power_dbm,
)

__all__ = [
    "Scenario",
    "Connection",
    "FloodSource",
    "Table",
    "Check",
    "ExperimentResult",
    "derive_seed",
    "summarize",
    "exp_power_trace",
    "exp_delivery_vs_distance",
    "exp_packet_delivery_curves",
    "exp_backoff_curve",
    "exp_delay",
    "exp_capacity",
    "exp_unfairness",
    "exp_hop_order",
    "exp_flooding",
    "exp_capture_geometry",
    "exp_validate",
    "unfairness_geometry",
]

Z95 = 1.959963984540054


@dataclass
class Table:
    columns: list
    rows: list = field(default_factory=list)

    @classmethod
    def from_dicts(cls, dicts, columns=None):
        dicts = list(dicts)
        if columns is None:
            columns = list(dicts[0]) if dicts else []
        return cls(list(columns), [tuple(d[c] for c in columns) for d in dicts])

    def column(self, name):
        k = self.columns.index(name)
        return [r[k] for r in self.rows]

    def dicts(self):
        return [dict(zip(self.columns, r)) for r in self.rows]


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class ExperimentResult:
    name: str
    tables: dict
    metadata: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    seeds: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def derive_seed(base_seed: int, *key) -> int:
    """Counter-style seed: a hash of the base seed and a run key.

    Runs are keyed by experiment, grid value and replication index, so
    adding replications or grid points never changes existing seeds.
    """
    text = "/".join(str(k) for k in (base_seed, *key))
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big")


def summarize(values):
    """(mean, 95% normal-approximation half-width or None)."""
    values = list(values)
    mean = statistics.fmean(values)
    if len(values) < 2:
        return mean, None
    return mean, Z95 * statistics.stdev(values) / math.sqrt(len(values))


def _run_job(job):
    scenario, config, seed = job
    return run(scenario, config, seed)


def _fan_out(jobs, workers):
    if workers and workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_job, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    return [_run_job(j) for j in jobs]


def _throughput_bps(m: RunMetrics, k: int = 0) -> float:
    cm = m.connections[k]
    return cm.delivered_after(m.warmup_s) * cm.payload_bytes * 8 / (m.duration_s - m.warmup_s)


def _fmt_hw(hw):
    return "" if hw is None else hw


# -- propagation -------------------------------------------------------------


def exp_power_trace(
    d_m: float = 220.0,
    duration_s: float = 10.0,
    seed: int = 0,
    propagation: PropagationParams = PropagationParams(),
    packet_interval_s: float = 0.01,
) -> ExperimentResult:
    rng = random.Random(derive_seed(seed, "power_trace", d_m))
    n = int(round(duration_s / packet_interval_s))
    rows = [
        (k * packet_interval_s, sample_received_power_dbm(propagation, d_m, rng), propagation.p_th_dbm)
        for k in range(n)
    ]
    table = Table(["time_s", "power_dbm", "threshold_dbm"], rows)
    powers = table.column("power_dbm")
    above = sum(p >= propagation.p_th_dbm for p in powers) / n
    p = link_delivery_ratio(propagation, d_m)
    mean = mean_received_power_dbm(propagation, d_m)
    checks = []
    if propagation.sigma_db > 0:
        checks.append(Check(
            "trace mean near mean received power",
            abs(statistics.fmean(powers) - mean) <= 4 * propagation.sigma_db / math.sqrt(n),
            f"trace mean {statistics.fmean(powers):.3f} dBm vs {mean:.3f} dBm",
        ))
        checks.append(Check(
            "fraction above threshold matches link delivery ratio",
            abs(above - p) <= 3 * math.sqrt(p * (1 - p) / n) + 1e-12,
            f"{above:.4f} vs {p:.4f}",
        ))
    return ExperimentResult(
        "power_trace", {"power_trace": table},
        {"distance_m": d_m, "mean_power_dbm": mean, "samples": n, "fraction_above": above},
        checks,
    )


def exp_delivery_vs_distance(
    grid=tuple(range(10, 401, 10)),
    n_samples: int = 10_000,
    seed: int = 0,
    propagation: PropagationParams = PropagationParams(),
) -> ExperimentResult:
    rows = []
    worst = 0.0
    for d in grid:
        d = float(d)
        rng = random.Random(derive_seed(seed, "delivery_vs_distance", d))
        hits = sum(
            sample_received_power_dbm(propagation, d, rng) >= propagation.p_th_dbm
            for _ in range(n_samples)
        )
        p = link_delivery_ratio(propagation, d)
        mc = hits / n_samples
        tol = 3 * math.sqrt(p * (1 - p) / n_samples)
        worst = max(worst, abs(mc - p) - tol)
        two_ray = 1.0 if d <= propagation.ideal_range_m else 0.0
        rows.append((d, p, mc, two_ray))
    table = Table(["distance_m", "analytic_p", "montecarlo_p", "two_ray_p"], rows)
    checks = [Check(
        "Monte Carlo within 3-sigma of analytic at every distance",
        worst <= 0.0,
        f"largest excess over tolerance {worst:.5f}",
    )]
    return ExperimentResult("delivery_vs_distance", {"delivery_vs_distance": table},
                            {"n_samples": n_samples}, checks)


# -- analytic curves -----------------------------------------------------------


def _crossover(grid_p, limits):
    diffs = [(float(p), analytic.packet_delivery(float(p), limits) - float(p)) for p in grid_p]
    for (p0, a), (p1, b) in zip(diffs, diffs[1:]):
        if a < 0 <= b:
            return p0, p1
    return None


def exp_packet_delivery_curves(grid=None) -> ExperimentResult:
    if grid is None:
        grid = np.linspace(0.0, 1.0, 101)
    rows = analytic.packet_delivery_table(grid)
    table = Table.from_dicts(rows)
    long_limits = analytic.RetryLimits(7, 4, rts_cts=True, long_packet=True)
    fine = np.linspace(0.0, 1.0, 1001)
    cross = _crossover(fine, long_limits)
    interior = [r for r in rows if 0.0 < r["p"] < 1.0]
    below_ok = all(
        r["long_rtscts_oracle"] < r["p"] for r in interior if cross and r["p"] < cross[0]
    )
    above_ok = all(
        r["long_rtscts_oracle"] > r["p"] for r in interior if cross and r["p"] > cross[1]
    )
    checks = [
        Check(
            "crossover of RTS/CTS delivery and link ratio within [0.5, 0.7]",
            cross is not None and 0.5 <= cross[0] and cross[1] <= 0.7 and below_ok and above_ok,
            f"sign change in {cross}",
        ),
        Check(
            "short and long RTS/CTS delivery almost identical",
            max(abs(r["short_rtscts"] - r["long_rtscts_oracle"]) for r in rows) <= 0.05,
            f"max gap {max(abs(r['short_rtscts'] - r['long_rtscts_oracle']) for r in rows):.4f}",
        ),
        Check(
            "no-RTS delivery dominates RTS/CTS delivery",
            all(r["no_rts"] >= r["long_rtscts_oracle"] for r in rows),
        ),
        Check(
            "all rows equal 1 at p = 1",
            all(
                math.isclose(v, 1.0, abs_tol=1e-12)
                for r in rows if r["p"] == 1.0 for k, v in r.items()
            ),
        ),
    ]
    return ExperimentResult(
        "packet_delivery", {"packet_delivery": table},
        {"long_form_max_abs_discrepancy": analytic.long_form_discrepancy(), "crossover_bracket": cross},
        checks,
    )


def exp_backoff_curve(grid=None, bp: analytic.BackoffParams = analytic.BackoffParams(),
                      lrl: int = 4) -> ExperimentResult:
    if grid is None:
        grid = np.linspace(0.0, 1.0, 101)
    rows = []
    for p in grid:
        p = float(p)
        rows.append({
            "p": p,
            "expected_backoff_slots": analytic.expected_backoff_slots(p, bp),
            "markov_backoff_slots": analytic.expected_backoff_markov(p, bp),
            "markov_with_drop_reset_slots": analytic.expected_backoff_markov(p, bp, reset_after=lrl),
        })
    table = Table.from_dicts(rows)
    eq = table.column("expected_backoff_slots")
    checks = [
        Check("closed form equals Markov chain",
              all(math.isclose(r["expected_backoff_slots"], r["markov_backoff_slots"],
                               rel_tol=1e-9) for r in rows)),
        Check("non-increasing in p", all(a >= b - 1e-12 for a, b in zip(eq, eq[1:]))),
    ]
    return ExperimentResult("backoff_curve", {"backoff_curve": table}, {}, checks)


# -- single-link simulation ----------------------------------------------------


def exp_delay(
    distances=(150.0, 200.0, 220.0, 240.0),
    config: DcfConfig = DcfConfig(),
    propagation: PropagationParams = PropagationParams(),
    replications: int = 10,
    base_seed: int = 0,
    duration_s: float = 60.0,
    rate_pps: float = 10.0,
    packet_bytes: int = 500,
    workers: int = 1,
) -> ExperimentResult:
    jobs, keys = [], []
    for d in distances:
        sc = single_link(d, propagation, packet_bytes, rate_pps, duration_s)
        for r in range(replications):
            seed = derive_seed(base_seed, "delay", d, r)
            jobs.append((sc, config, seed))
            keys.append((d, r, seed))
    results = _fan_out(jobs, workers)
    raw, by_d = [], {}
    for (d, r, seed), m in zip(keys, results):
        st = one_hop_delay(m)
        mean = st.mean_s if st else math.nan
        raw.append((d, r, seed, mean, st.n if st else 0))
        by_d.setdefault(d, []).append(mean)
    rows = []
    for d in distances:
        vals = [v for v in by_d[d] if not math.isnan(v)]
        mean, hw = summarize(vals) if vals else (math.nan, None)
        rows.append((d, link_delivery_ratio(propagation, d), mean, _fmt_hw(hw), len(vals)))
    means = [r[2] for r in rows]
    checks = [Check("mean delay rises with distance",
                    all(a < b for a, b in zip(means, means[1:])),
                    ", ".join(f"{d:g} m: {m * 1e3:.3f} ms" for d, m in zip(distances, means)))]
    return ExperimentResult(
        "delay",
        {
            "delay": Table(["distance_m", "link_p", "mean_delay_s", "ci95_halfwidth_s", "replications"], rows),
            "delay_raw": Table(["distance_m", "replication", "seed", "mean_delay_s", "packets"], raw),
        },
        {"rate_pps": rate_pps, "packet_bytes": packet_bytes, "duration_s": duration_s},
        checks,
        [k[2] for k in keys],
    )


def exp_capacity(
    distances=tuple(range(50, 241, 10)),
    config: DcfConfig = DcfConfig(),
    propagation: PropagationParams = PropagationParams(),
    replications: int = 10,
    base_seed: int = 0,
    duration_s: float = 60.0,
    packet_bytes: int = 500,
    workers: int = 1,
) -> ExperimentResult:
    jobs, keys = [], []
    for d in distances:
        for rts in (False, True):
            sc = single_link(d, propagation, packet_bytes, None, duration_s)
            cfg = replace(config, rts_cts_enabled=rts)
            for r in range(replications):
                seed = derive_seed(base_seed, "capacity", d, r)
                jobs.append((sc, cfg, seed))
                keys.append((float(d), rts, r, seed))
    results = _fan_out(jobs, workers)
    raw, by = [], {}
    for (d, rts, r, seed), m in zip(keys, results):
        bps = _throughput_bps(m)
        raw.append((d, int(rts), r, seed, bps))
        by.setdefault((d, rts), []).append(bps)
    rows, dominance = [], []
    for d in distances:
        d = float(d)
        m0, h0 = summarize(by[(d, False)])
        m1, h1 = summarize(by[(d, True)])
        rows.append((d, link_delivery_ratio(propagation, d), m0, _fmt_hw(h0), m1, _fmt_hw(h1)))
        # "within replication confidence intervals": the no-RTS CI reaches the RTS CI
        dominance.append((d, m0 + (h0 or 0.0) >= m1 - (h1 or 0.0)))
    means = [r[2] for r in rows]
    past150 = [m for d, m in zip(distances, means) if d >= 150]
    checks = [
        Check("no-RTS capacity >= RTS capacity at every distance",
              all(ok for _, ok in dominance),
              "violations: " + str([d for d, ok in dominance if not ok])),
        Check("no-RTS capacity decreases past 150 m",
              all(a > b for a, b in zip(past150, past150[1:]))),
    ]
    return ExperimentResult(
        "capacity",
        {
            "capacity": Table(["distance_m", "link_p", "no_rts_bps", "no_rts_ci95", "rts_bps", "rts_ci95"], rows),
            "capacity_raw": Table(["distance_m", "rts_cts", "replication", "seed", "throughput_bps"], raw),
        },
        {"packet_bytes": packet_bytes, "duration_s": duration_s},
        checks,
        [k[3] for k in keys],
    )


# -- contention experiments ----------------------------------------------------


def unfairness_geometry(d1: float, d2: float, source_sep_m: float,
                        propagation: PropagationParams, config: DcfConfig):
    """Two single-hop links on a line: R1 - S1 - S2 - R2.

    Sources sit ``source_sep_m`` apart; receivers are placed outward so
    they are beyond reception range of each other.
    """
    nodes = ((0, 0.0, 0.0), (1, -float(d1), 0.0), (2, float(source_sep_m), 0.0),
             (3, float(source_sep_m + d2), 0.0))
    cs_radius = config.cs_range_factor * propagation.ideal_range_m
    if config.cs_threshold_dbm is not None:
        cs_radius = propagation.d0_m * 10 ** (
            (propagation.p_d0_dbm - config.cs_threshold_dbm) / (10 * propagation.beta))
    rr = d1 + d2 + source_sep_m
    if source_sep_m > propagation.ideal_range_m or source_sep_m > cs_radius:
        raise ValueError("sources must be within range of each other")
    if rr <= propagation.ideal_range_m:
        raise ValueError(f"receivers {rr} m apart are within reception range")
    return nodes, {"source_separation_m": source_sep_m, "receiver_separation_m": rr,
                   "S1": nodes[0][1:], "R1": nodes[1][1:], "S2": nodes[2][1:], "R2": nodes[3][1:]}


def exp_unfairness(
    fixed_d: float = 150.0,
    varied=(150.0, 180.0, 200.0, 220.0),
    packet_bytes: int = 500,
    rts_cts: bool = False,
    backoff_enabled: bool = True,
    config: DcfConfig = DcfConfig(),
    propagation: PropagationParams = PropagationParams(),
    replications: int = 10,
    base_seed: int = 0,
    duration_s: float = 60.0,
    source_sep_m: float = 20.0,
    workers: int = 1,
) -> ExperimentResult:
    cfg = replace(config, rts_cts_enabled=rts_cts, backoff_enabled=backoff_enabled)
    conns = (Connection(0, 1, packet_bytes), Connection(2, 3, packet_bytes))
    jobs, keys, geometry = [], [], {}
    for d2 in varied:
        nodes, geo = unfairness_geometry(fixed_d, d2, source_sep_m, propagation, cfg)
        geometry[float(d2)] = geo
        variants = {
            "joint": conns,
            "solo1": conns[:1],
            "solo2": conns[1:],
        }
        for r in range(replications):
            seed = derive_seed(base_seed, "unfairness", packet_bytes, rts_cts, backoff_enabled, d2, r)
            for label, cs in variants.items():
                sc = Scenario(nodes=nodes, connections=cs, propagation=propagation,
                              duration_s=duration_s)
                jobs.append((sc, cfg, seed))
                keys.append((float(d2), r, seed, label))
    results = dict(zip(((k[0], k[1], k[3]) for k in keys), _fan_out(jobs, workers)))
    raw, norm, thr, clamped = [], {}, {}, 0
    for d2 in varied:
        d2 = float(d2)
        for r in range(replications):
            joint = results[(d2, r, "joint")]
            seed = derive_seed(base_seed, "unfairness", packet_bytes, rts_cts, backoff_enabled, d2, r)
            for k, solo_label in ((0, "solo1"), (1, "solo2")):
                t_joint = _throughput_bps(joint, k)
                t_solo = _throughput_bps(results[(d2, r, solo_label)], 0)
                ratio = t_joint / t_solo if t_solo > 0 else 0.0
                if ratio > 1.0:
                    clamped += 1
                    ratio = 1.0
                raw.append((d2, r, seed, k + 1, t_joint, t_solo, ratio))
                norm.setdefault((d2, k), []).append(ratio)
                thr.setdefault((d2, k), []).append(t_joint)
    rows = []
    for d2 in varied:
        d2 = float(d2)
        for k in (0, 1):
            tm, th = summarize(thr[(d2, k)])
            nm, nh = summarize(norm[(d2, k)])
            rows.append((d2, k + 1, tm, _fmt_hw(th), nm, _fmt_hw(nh)))
    summary = Table(["varied_distance_m", "connection", "throughput_bps", "throughput_ci95",
                     "normalized", "normalized_ci95"], rows)
    share = {(r[0], r[1]): r[4] for r in rows}
    gaps = {float(d): share[(float(d), 1)] - share[(float(d), 2)] for d in varied}
    checks = []
    tol = 0.10 if backoff_enabled else 0.15
    if float(fixed_d) in gaps:
        a, b = share[(float(fixed_d), 1)], share[(float(fixed_d), 2)]
        checks.append(Check(
            f"equal distances share almost equally (within {tol:.0%})",
            abs(a - b) <= tol * max(a, b), f"{a:.4f} vs {b:.4f}"))
    if backoff_enabled:
        dom = [float(d) for d in varied if float(d) > float(fixed_d)]
        g = [gaps[d] for d in dom]
        checks.append(Check(
            "strong connection dominates and the gap widens",
            bool(g) and all(x > 0 for x in g) and all(x < y for x, y in zip(g, g[1:])),
            ", ".join(f"{d:g} m: {x:+.4f}" for d, x in zip(dom, g))))
    else:
        worst = max(abs(share[(float(d), 1)] - share[(float(d), 2)])
                    / max(share[(float(d), 1)], share[(float(d), 2)]) for d in varied)
        checks.append(Check("backoff disabled: parity within 15% at every distance",
                            worst <= 0.15, f"worst relative gap {worst:.4f}"))
    return ExperimentResult(
        "unfairness",
        {
            "unfairness": summary,
            "unfairness_raw": Table(["varied_distance_m", "replication", "seed", "connection",
                                     "throughput_bps", "solo_throughput_bps", "normalized"], raw),
        },
        {"fixed_distance_m": fixed_d, "packet_bytes": packet_bytes, "rts_cts": rts_cts,
         "backoff_enabled": backoff_enabled, "geometry": geometry,
         "normalized_clamped": clamped, "gaps": gaps},
        checks,
        sorted({k[2] for k in keys}),
    )


HOP_ORDER_CASES = (("strong", "strong"), ("strong", "weak"), ("weak", "strong"), ("weak", "weak"))


def exp_hop_order(
    strong_m: float = 100.0,
    weak_m: float = 220.0,
    config: DcfConfig = DcfConfig(),
    propagation: PropagationParams = PropagationParams(),
    packet_bytes: int = 500,
    replications: int = 10,
    base_seed: int = 0,
    duration_s: float = 60.0,
    workers: int = 1,
) -> ExperimentResult:
    dist = {"strong": float(strong_m), "weak": float(weak_m)}
    jobs, keys = [], []
    for first, second in HOP_ORDER_CASES:
        d1, d2 = dist[first], dist[second]
        nodes = ((0, 0.0, 0.0), (1, d1, 0.0), (2, d1 + d2, 0.0))
        sc = Scenario(nodes=nodes,
                      connections=(Connection(0, 2, packet_bytes, path=(0, 1, 2)),),
                      propagation=propagation, duration_s=duration_s)
        for r in range(replications):
            seed = derive_seed(base_seed, "hop_order", first, second, r)
            jobs.append((sc, config, seed))
            keys.append((f"{first}-{second}", r, seed))
    results = _fan_out(jobs, workers)
    raw, by = [], {}
    for (case, r, seed), m in zip(keys, results):
        bps = _throughput_bps(m)
        raw.append((case, r, seed, bps))
        by.setdefault(case, []).append(bps)
    rows, ci = [], {}
    for first, second in HOP_ORDER_CASES:
        case = f"{first}-{second}"
        mean, hw = summarize(by[case])
        ci[case] = (mean - (hw or 0.0), mean, mean + (hw or 0.0))
        rows.append((case, dist[first], dist[second], mean, _fmt_hw(hw)))
    ss, sw, ws, ww = (ci[f"{a}-{b}"] for a, b in HOP_ORDER_CASES)
    checks = [
        Check("strong-strong is the best case", all(ss[1] >= c[1] for c in (sw, ws, ww))),
        Check("weak->strong beats strong->weak (disjoint CIs)", ws[0] > sw[2],
              f"weak-strong {ws}, strong-weak {sw}"),
        Check("strong->weak worse than weak->weak (disjoint CIs)", sw[2] < ww[0],
              f"strong-weak {sw}, weak-weak {ww}"),
    ]
    return ExperimentResult(
        "hop_order",
        {
            "hop_order": Table(["case", "first_hop_m", "second_hop_m", "throughput_bps", "ci95"], rows),
            "hop_order_raw": Table(["case", "replication", "seed", "throughput_bps"], raw),
        },
        {"strong_m": strong_m, "weak_m": weak_m, "packet_bytes": packet_bytes},
        checks,
        [k[2] for k in keys],
    )


def random_topology(n: int, area_m: float, seed: int):
    rng = random.Random(seed)
    return tuple((i, rng.uniform(0, area_m), rng.uniform(0, area_m)) for i in range(n))


def exp_flooding(
    node_counts=(25, 50, 100, 150, 200),
    drop_probs=(0.0, 0.1, 0.2, 0.3, 0.4, 0.5),
    area_m: float = 1000.0,
    config: DcfConfig = DcfConfig(),
    propagation: PropagationParams = PropagationParams(),
    replications: int = 10,
    base_seed: int = 0,
    packet_bytes: int = 64,
    fading: bool = False,
    duration_s: float = 5.0,
    workers: int = 1,
) -> ExperimentResult:
    """Blind flooding coverage over random deployments.

    The deployment for a (node count, replication) pair is shared by
    every drop probability so the curves differ only in the loss rate.
    """
    jobs, keys = [], []
    for n in node_counts:
        for r in range(replications):
            nodes = random_topology(n, area_m, derive_seed(base_seed, "flooding_topology", n, r))
            for q in drop_probs:
                sc = Scenario(nodes=nodes, floods=(FloodSource(0, 0.0, packet_bytes),),
                              propagation=propagation,
                              bernoulli_drop=None if fading else float(q),
                              duration_s=duration_s)
                seed = derive_seed(base_seed, "flooding", n, r)
                jobs.append((sc, config, seed))
                keys.append((n, float(q), r, seed))
    results = _fan_out(jobs, workers)
    raw, by = [], {}
    for (n, q, r, seed), m in zip(keys, results):
        raw.append((n, q, r, seed, m.coverage))
        by.setdefault((n, q), []).append(m.coverage)
    rows, cov = [], {}
    for n in node_counts:
        for q in drop_probs:
            mean, hw = summarize(by[(n, float(q))])
            cov[(n, float(q))] = mean
            rows.append((n, float(q), mean, _fmt_hw(hw)))
    checks = []
    if not fading:
        mono = [
            n for n in node_counts
            if not all(cov[(n, float(a))] >= cov[(n, float(b))]
                       for a, b in zip(drop_probs, drop_probs[1:]))
        ]
        checks.append(Check("coverage non-increasing in drop probability",
                            not mono, f"violating node counts: {mono}"))
        if 0.0 in drop_probs and 0.3 in drop_probs and len(node_counts) >= 2:
            lo, hi = min(node_counts), max(node_counts)
            loss = {n: (cov[(n, 0.0)] - cov[(n, 0.3)]) / cov[(n, 0.0)] for n in (lo, hi)}
            checks.append(Check("sparse networks lose more coverage at drop 0.3",
                                loss[lo] > loss[hi],
                                f"n={lo}: {loss[lo]:.4f}, n={hi}: {loss[hi]:.4f}"))
    return ExperimentResult(
        "flooding",
        {
            "flooding": Table(["nodes", "drop_p", "coverage", "ci95"], rows),
            "flooding_raw": Table(["nodes", "drop_p", "replication", "seed", "coverage"], raw),
        },
        {"area_m": area_m, "channel": "fading" if fading else "bernoulli",
         "packet_bytes": packet_bytes},
        checks,
        sorted({k[3] for k in keys}),
    )


# -- geometry ------------------------------------------------------------------


def exp_capture_geometry(params: CaptureParams = CaptureParams(), grid=None) -> ExperimentResult:
    if grid is None:
        grid = [float(d) for d in range(10, 251, 10)]
    table = Table.from_dicts(region_table(params, grid))
    dense = np.linspace(1.0, params.tx_range_m, 250)
    ir = np.linspace(0.0, 2 * params.cs_range_m, 400)
    superset = all(
        csma_blocks(params, s, i, case)
        for s in dense for i in ir if ca_blocks(params, i) for case in ("average", "worst")
    )
    complete = all(
        csma_blocks(params, s, i, "average")
        for s in dense for i in ir if i < capture_line(params, s)
    )
    worst_gap = [s for s in dense if capture_line(params, s) > params.cs_range_m - s]
    checks = [
        Check("CA-blocked implies CSMA-blocked", superset),
        Check("average-case CSMA blocks every collision", complete),
        Check("worst-case CSMA misses some collisions", bool(worst_gap),
              f"first counterexample d_sr={worst_gap[0]:.1f} m" if worst_gap else ""),
    ]
    return ExperimentResult("capture_geometry", {"capture_geometry": table},
                            {"cs_range_m": params.cs_range_m}, checks)


# -- validation suite ------------------------------------------------------------


def exp_validate(
    config: DcfConfig = DcfConfig(),
    propagation: PropagationParams = PropagationParams(),
    base_seed: int = 0,
    packets: int = 10_000,
    link_ratios=(0.5, 0.66, 0.8, 0.95),
    workers: int = 1,
) -> ExperimentResult:
    """Closed forms vs the retry oracle, and simulated vs analytic delivery."""
    grid = np.linspace(0.0, 1.0, 101)
    lim_short = analytic.RetryLimits(7, 4, rts_cts=True, long_packet=False)
    lim_none = analytic.RetryLimits(7, 4, rts_cts=False)
    lim_long = analytic.RetryLimits(7, 4, rts_cts=True, long_packet=True)
    oracle_rows = []
    for p in grid:
        p = float(p)
        oracle_rows.append((
            p,
            analytic.packet_delivery_short_rtscts(p, 7), analytic.retry_process_oracle(p, lim_short),
            analytic.packet_delivery_no_rts(p, 4), analytic.retry_process_oracle(p, lim_none),
            analytic.packet_delivery_long_rtscts(p, lim_long), analytic.retry_process_oracle(p, lim_long),
        ))
    short_err = max(abs(r[1] - r[2]) for r in oracle_rows)
    none_err = max(abs(r[3] - r[4]) for r in oracle_rows)
    long_err = max(abs(r[5] - r[6]) for r in oracle_rows)

    jobs, keys = [], []
    for p in link_ratios:
        d = distance_for_delivery_ratio(propagation, p)
        for rts in (False, True):
            sc = Scenario(nodes=((0, 0.0, 0.0), (1, d, 0.0)),
                          connections=(Connection(0, 1, 500, max_packets=packets),),
                          propagation=propagation, duration_s=1e6)
            seed = derive_seed(base_seed, "validate", p, rts)
            jobs.append((sc, replace(config, rts_cts_enabled=rts), seed))
            keys.append((p, rts, d, seed))
    sims = _fan_out(jobs, workers)
    mc_rows, mc_ok = [], True
    for (p, rts, d, seed), m in zip(keys, sims):
        cm = m.connections[0]
        n = cm.mac_acked + cm.mac_failed
        sim = cm.mac_acked / n
        expect = analytic.packet_delivery(p, lim_long if rts else lim_none)
        tol = 3 * math.sqrt(expect * (1 - expect) / n)
        ok = abs(sim - expect) <= tol
        mc_ok &= ok
        mc_rows.append((p, int(rts), d, n, sim, expect, tol, int(ok)))
    checks = [
        Check("short-packet RTS/CTS closed form equals oracle (1e-12)", short_err <= 1e-12,
              f"max error {short_err:.3e}"),
        Check("no-RTS closed form equals oracle (1e-12)", none_err <= 1e-12,
              f"max error {none_err:.3e}"),
        Check("long-packet closed form compared with oracle",
              True, f"max |closed form - oracle| = {long_err:.6f}; oracle adopted"
              if long_err > 1e-12 else "agreement"),
        Check("simulated MAC delivery within 3-sigma of analytic", mc_ok),
    ]
    return ExperimentResult(
        "validate",
        {
            "validate_oracle": Table(["p", "short_closed", "short_oracle", "no_rts_closed",
                                      "no_rts_oracle", "long_closed", "long_oracle"], oracle_rows),
            "validate_montecarlo": Table(["p", "rts_cts", "distance_m", "packets", "simulated",
                                          "analytic", "tolerance", "ok"], mc_rows),
        },
        {"long_form_max_abs_discrepancy": long_err},
        checks,
        [k[3] for k in keys],
    )
