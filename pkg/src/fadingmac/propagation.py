"""Log-distance path loss with log-normal slow fading.

Received power in dBm is ``p_d0_dbm - 10*beta*log10(d/d0) + X`` with
``X ~ N(0, sigma_db**2)`` drawn once per packet.  A transmission is
decoded when the drawn power reaches the receiver sensitivity
``p_th_dbm``, so the single-transmission delivery ratio at distance ``d``
is a Gaussian upper tail.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from statistics import NormalDist

_STD_NORMAL = NormalDist()

# |mean - threshold| below this is treated as exactly on the threshold
_MARGIN_EPS_DB = 1e-9


def normal_sf(x: float) -> float:
    """Standard normal upper tail Q(x) = P(Z >= x)."""
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def normal_isf(q: float) -> float:
    """Inverse of :func:`normal_sf` on the open interval (0, 1)."""
    if not 0.0 < q < 1.0:
        raise ValueError(f"tail probability must lie in (0, 1), got {q!r}")
    return -_STD_NORMAL.inv_cdf(q)


@dataclass(frozen=True)
class PropagationParams:
    """Channel parameters.

    ``p_d0_dbm`` is derived when omitted so that the mean received power
    at ``ideal_range_m`` equals ``p_th_dbm``.
    """

    beta: float = 3.0
    sigma_db: float = 4.0
    d0_m: float = 1.0
    ideal_range_m: float = 250.0
    p_th_dbm: float = -64.0
    p_d0_dbm: float | None = field(default=None)

    def __post_init__(self) -> None:
        if not self.beta > 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")
        if not self.sigma_db >= 0:
            raise ValueError(f"sigma_db must be >= 0, got {self.sigma_db}")
        if not self.d0_m > 0:
            raise ValueError(f"d0_m must be > 0, got {self.d0_m}")
        if not self.ideal_range_m > self.d0_m:
            raise ValueError(
                f"ideal_range_m ({self.ideal_range_m}) must exceed d0_m ({self.d0_m})"
            )
        calibrated = self.p_th_dbm + 10.0 * self.beta * math.log10(
            self.ideal_range_m / self.d0_m
        )
        if self.p_d0_dbm is None:
            object.__setattr__(self, "p_d0_dbm", calibrated)
        elif abs(self.p_d0_dbm - calibrated) > 1e-9:
            raise ValueError(
                "p_d0_dbm inconsistent with ideal_range_m: mean power at "
                f"{self.ideal_range_m} m would be "
                f"{self.p_th_dbm + self.p_d0_dbm - calibrated:.6f} dBm, "
                f"not p_th_dbm={self.p_th_dbm}"
            )


def _check_distance(params: PropagationParams, d_m: float) -> None:
    if not d_m >= params.d0_m:
        raise ValueError(
            f"distance {d_m} m is below the reference distance {params.d0_m} m"
        )


def mean_received_power_dbm(params: PropagationParams, d_m: float) -> float:
    _check_distance(params, d_m)
    return params.p_d0_dbm - 10.0 * params.beta * math.log10(d_m / params.d0_m)


def sample_received_power_dbm(
    params: PropagationParams, d_m: float, rng: random.Random
) -> float:
    """One slow-fading power draw (dBm) for a single packet."""
    mean = mean_received_power_dbm(params, d_m)
    if params.sigma_db == 0:
        return mean
    return mean + rng.gauss(0.0, params.sigma_db)


def _margin_db(params: PropagationParams, d_m: float) -> float:
    margin = mean_received_power_dbm(params, d_m) - params.p_th_dbm
    return 0.0 if abs(margin) <= _MARGIN_EPS_DB else margin


def link_delivery_ratio(params: PropagationParams, d_m: float) -> float:
    """Probability that one transmission over ``d_m`` meters is received.

    With ``sigma_db == 0`` this is the ideal disc model: 1 inside the
    ideal range (boundary included), 0 outside.
    """
    margin = _margin_db(params, d_m)
    if params.sigma_db == 0:
        return 1.0 if margin >= 0 else 0.0
    return normal_sf(-margin / params.sigma_db)


def distance_for_delivery_ratio(params: PropagationParams, p: float) -> float:
    """Distance at which :func:`link_delivery_ratio` equals ``p``."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"delivery ratio must lie strictly in (0, 1), got {p!r}")
    if params.sigma_db == 0:
        raise ValueError("inverse is undefined without fading (sigma_db == 0)")
    # p = Q(-margin/sigma)  =>  margin = -sigma * Q^-1(p)
    margin = -params.sigma_db * normal_isf(p)
    mean = params.p_th_dbm + margin
    return params.d0_m * 10.0 ** ((params.p_d0_dbm - mean) / (10.0 * params.beta))
