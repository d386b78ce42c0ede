"""Closed-form 802.11 retry and backoff models under independent losses.

Every attempt is an independent draw at a fixed link ratio ``p``.  With
RTS/CTS an attempt needs RTS, CTS, DATA and ACK to get through; without
it only DATA and ACK.  The exact retry process is available through
:func:`retry_process_oracle` and is what :func:`packet_delivery` uses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

ENUMERATION_BOUND = 16


@dataclass(frozen=True)
class RetryLimits:
    srl: int = 7
    lrl: int = 4
    rts_cts: bool = True
    long_packet: bool = True

    def __post_init__(self) -> None:
        if self.srl < 1:
            raise ValueError(f"srl must be >= 1, got {self.srl}")
        if self.lrl < 1:
            raise ValueError(f"lrl must be >= 1, got {self.lrl}")


@dataclass(frozen=True)
class BackoffParams:
    cw_min_slots: int = 31
    cw_max_slots: int = 1023

    def __post_init__(self) -> None:
        for name in ("cw_min_slots", "cw_max_slots"):
            v = getattr(self, name)
            if v < 1 or (v + 1) & v:
                raise ValueError(f"{name} must be of the form 2^k - 1, got {v}")
        if self.cw_min_slots > self.cw_max_slots:
            raise ValueError("cw_min_slots must not exceed cw_max_slots")

    def ladder(self) -> list[int]:
        """Contention windows from minimum to cap, e.g. [31, 63, ..., 1023]."""
        cws = [self.cw_min_slots]
        while cws[-1] < self.cw_max_slots:
            cws.append(min(2 * cws[-1] + 1, self.cw_max_slots))
        return cws


@dataclass(frozen=True)
class AttemptProbabilities:
    p_s: float
    p_f: float
    p_sf: float
    p_lf: float


class _Never:
    """Sentinel for an expectation that diverges (event never happens)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "NEVER"

    def __str__(self) -> str:
        return "never"

    def __reduce__(self):
        return (_Never, ())


NEVER = _Never()


def _check_p(p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"link ratio must lie in [0, 1], got {p!r}")


def attempt_probs(p: float, rts_cts: bool) -> AttemptProbabilities:
    """Per-attempt outcome probabilities.

    Short failures are losses of RTS or CTS; long failures are losses of
    DATA or ACK after a completed handshake.  Without RTS/CTS every
    failure is long.
    """
    _check_p(p)
    p2 = p * p
    if rts_cts:
        p_sf = 1.0 - p2
        p_lf = p2 * (1.0 - p2)
        p_s = p2 * p2
    else:
        p_sf = 0.0
        p_lf = 1.0 - p2
        p_s = p2
    return AttemptProbabilities(p_s=p_s, p_f=p_sf + p_lf, p_sf=p_sf, p_lf=p_lf)


def packet_delivery_short_rtscts(p: float, srl: int = 7) -> float:
    _check_p(p)
    return 1.0 - (1.0 - p**4) ** srl


def packet_delivery_no_rts(p: float, lrl: int = 4) -> float:
    _check_p(p)
    return 1.0 - (1.0 - p * p) ** lrl


def packet_delivery_long_rtscts(p: float, limits: RetryLimits = RetryLimits()) -> float:
    """Closed form for long packets with RTS/CTS and limits (7, 4).

    Every attempt term sits inside the leading ``p_s`` factor.  Its
    late-attempt terms do not match the exact retry process (see
    :func:`long_form_discrepancy`), so prefer :func:`packet_delivery`.
    """
    _check_p(p)
    if (limits.srl, limits.lrl) != (7, 4):
        raise ValueError(
            "closed form only covers srl=7, lrl=4; use retry_process_oracle"
        )
    a = attempt_probs(p, rts_cts=True)
    ps, pf, psf, plf = a.p_s, a.p_f, a.p_sf, a.p_lf
    first_four = 1 + pf + pf**2 + pf**3
    fifth = pf**4 - plf**4
    sixth = 4 * psf**2 * plf**3 + (pf**4 - plf**4 - 4 * psf * plf**3) * pf
    seventh = 16 * psf**3 * plf**3 + (4 * psf**3 * plf + psf**4) * pf**2
    return ps * (first_four + fifth + sixth + seventh)


def _enumerate(p: float, limits: RetryLimits) -> tuple[float, float]:
    """Walk the retry tree; returns (P(success), P(drop))."""
    if limits.srl > ENUMERATION_BOUND or limits.lrl > ENUMERATION_BOUND:
        raise ValueError(
            f"retry limits above the enumeration bound ({ENUMERATION_BOUND})"
        )
    a = attempt_probs(p, limits.rts_cts)
    if not limits.rts_cts:
        # every failure is a DATA/ACK loss counted against the long limit
        branches = ((a.p_lf, 0, 1),)
        short_cap, long_cap = math.inf, limits.lrl
    elif limits.long_packet:
        branches = ((a.p_sf, 1, 0), (a.p_lf, 1, 1))
        short_cap, long_cap = limits.srl, limits.lrl
    else:
        branches = ((a.p_sf, 1, 0), (a.p_lf, 1, 0))
        short_cap, long_cap = limits.srl, math.inf

    @lru_cache(maxsize=None)
    def walk(short: int, long: int) -> tuple[float, float]:
        if short >= short_cap or long >= long_cap:
            return 0.0, 1.0
        ok, dropped = a.p_s, 0.0
        for prob, ds, dl in branches:
            if prob == 0.0:
                continue
            s, d = walk(short + ds, long + dl)
            ok += prob * s
            dropped += prob * d
        return ok, dropped

    return walk(0, 0)


def retry_process_oracle(p: float, limits: RetryLimits = RetryLimits()) -> float:
    """Exact delivery probability of the 802.11 retry process.

    Enumerates attempt outcomes (short failure, long failure, success).
    A short failure bumps the short counter, a long failure bumps both;
    the packet is dropped as soon as either counter reaches its limit.
    Without RTS/CTS only the long limit applies.
    """
    _check_p(p)
    return _enumerate(p, limits)[0]


def retry_process_leaf_mass(p: float, limits: RetryLimits = RetryLimits()) -> float:
    """Total probability over success and drop leaves (should be 1)."""
    _check_p(p)
    ok, dropped = _enumerate(p, limits)
    return ok + dropped


def packet_delivery(p: float, limits: RetryLimits = RetryLimits()) -> float:
    """MAC packet delivery ratio for any limits; backed by the oracle."""
    return retry_process_oracle(p, limits)


def long_form_discrepancy(n_points: int = 101) -> float:
    """Largest |closed form - oracle| for long packets on a uniform p grid."""
    limits = RetryLimits(7, 4, rts_cts=True, long_packet=True)
    return max(
        abs(packet_delivery_long_rtscts(p, limits) - retry_process_oracle(p, limits))
        for p in np.linspace(0.0, 1.0, n_points)
    )


def expected_backoff_slots(p: float, bp: BackoffParams = BackoffParams()) -> float:
    """Mean backoff draw (slots) in the long run of a lossy link.

    The window resets on success (probability ``p**2``), doubles on
    failure, and saturates at the cap; a draw on window ``cw`` averages
    ``cw / 2``.
    """
    _check_p(p)
    ladder = bp.ladder()
    s = p * p
    q = 1.0 - s
    below_cap = ladder[:-1]
    head = (s / 2.0) * sum(cw * q**k for cw, k in zip(below_cap, range(len(below_cap))))
    tail = (ladder[-1] / 2.0) * (1.0 - s * sum(q**k for k in range(len(below_cap))))
    return head + tail


def backoff_stationary_distribution(
    p: float, bp: BackoffParams = BackoffParams(), reset_after: int | None = None
) -> np.ndarray:
    """Stationary law of the window stage seen by successive backoff draws.

    Solved as a linear system over the Markov chain of window stages.
    ``reset_after`` optionally models a retry limit: after that many
    consecutive failures the window resets as a drop does.
    """
    _check_p(p)
    n = len(bp.ladder())
    if reset_after is not None:
        n = min(n, reset_after)
    s = p * p
    P = np.zeros((n, n))
    for k in range(n):
        P[k, 0] += s
        nxt = k + 1
        if reset_after is not None and nxt >= reset_after:
            P[k, 0] += 1.0 - s
        else:
            P[k, min(nxt, n - 1)] += 1.0 - s
    # pi (P - I) = 0 with sum(pi) = 1
    A = np.vstack([(P - np.eye(n)).T, np.ones(n)])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(A, b, rcond=None)
    return pi


def expected_backoff_markov(
    p: float, bp: BackoffParams = BackoffParams(), reset_after: int | None = None
) -> float:
    pi = backoff_stationary_distribution(p, bp, reset_after)
    ladder = np.array(bp.ladder()[: len(pi)], dtype=float)
    return float(pi @ (ladder / 2.0))


def expected_packets_per_route_error(
    p: float, limits: RetryLimits = RetryLimits(rts_cts=False)
):
    """Mean number of packets sent per retry-limit drop, or ``NEVER``."""
    _check_p(p)
    if p == 0.0:
        raise ValueError("link ratio must be > 0")
    fail = 1.0 - packet_delivery(p, limits)
    if fail <= 0.0:
        return NEVER
    return 1.0 / fail


def packet_delivery_table(grid) -> list[dict]:
    """Rows of (p, link, short, long closed form, long oracle, no-RTS)."""
    rows = []
    long_limits = RetryLimits(7, 4, rts_cts=True, long_packet=True)
    for p in grid:
        p = float(p)
        rows.append(
            {
                "p": p,
                "link": p,
                "short_rtscts": packet_delivery_short_rtscts(p, 7),
                "long_rtscts_closed": packet_delivery_long_rtscts(p, long_limits),
                "long_rtscts_oracle": retry_process_oracle(p, long_limits),
                "no_rts": packet_delivery_no_rts(p, 4),
            }
        )
    return rows


def backoff_table(grid, bp: BackoffParams = BackoffParams()) -> list[dict]:
    return [
        {
            "p": float(p),
            "expected_backoff_slots": expected_backoff_slots(float(p), bp),
            "markov_backoff_slots": expected_backoff_markov(float(p), bp),
        }
        for p in grid
    ]
