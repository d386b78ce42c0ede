"""Single-interferer capture geometry: collision avoidance vs carrier sense.

A sender S talks to a receiver R at distance ``d_sr``; an interferer I
sits ``d_ir`` from R.  Under ideal power-law decay ``1/r**n`` the frame
survives when ``(d_ir/d_sr)**n >= capture_threshold``.  RTS/CTS can only
silence interferers that decode the CTS (``d_ir <= tx_range``); carrier
sense silences interferers whose distance to S is within the sensing
radius.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

Case = Literal["average", "worst"]


@dataclass(frozen=True)
class CaptureParams:
    capture_threshold: float = 10.0
    n: float = 4.0
    tx_range_m: float = 250.0
    cs_range_factor: float = 2.2

    def __post_init__(self) -> None:
        if not self.capture_threshold >= 1:
            raise ValueError("capture_threshold must be >= 1")
        if not self.n > 0:
            raise ValueError("path-loss exponent n must be > 0")
        if not self.tx_range_m > 0:
            raise ValueError("tx_range_m must be > 0")
        if not self.cs_range_factor >= 1:
            raise ValueError("cs_range_factor must be >= 1")

    @property
    def cs_range_m(self) -> float:
        return self.cs_range_factor * self.tx_range_m


def capture_line(params: CaptureParams, d_sr_m: float) -> float:
    """Interferer-receiver distance at which signal/interference hits capture."""
    if not d_sr_m > 0:
        raise ValueError("d_sr_m must be > 0")
    return d_sr_m * params.capture_threshold ** (1.0 / params.n)


def causes_collision(params: CaptureParams, d_sr_m: float, d_ir_m: float) -> bool:
    return d_ir_m < capture_line(params, d_sr_m)


def ca_blocks(params: CaptureParams, d_ir_m: float) -> bool:
    """Whether the interferer is in reception range of R and hears its CTS."""
    return d_ir_m <= params.tx_range_m


def csma_blocks(
    params: CaptureParams, d_sr_m: float, d_ir_m: float, case: Case = "average"
) -> bool:
    """Whether the interferer is silenced by carrier sense of S's signal.

    ``average`` takes the interferer-sender distance equal to ``d_ir``;
    ``worst`` puts I on the far side of R, at ``d_sr + d_ir`` from S.
    """
    if case == "average":
        d_is = d_ir_m
    elif case == "worst":
        d_is = d_sr_m + d_ir_m
    else:
        raise ValueError(f"unknown case {case!r}; expected 'average' or 'worst'")
    return d_is <= params.cs_range_m


def region_table(params: CaptureParams, d_sr_grid) -> list[dict]:
    """Boundary lines per sender-receiver distance.

    Each ``*_bound`` column is the largest interferer-receiver distance
    the mechanism still blocks.
    """
    grid = list(d_sr_grid)
    if not grid:
        raise ValueError("d_sr grid must not be empty")
    rows = []
    for d_sr in grid:
        if not d_sr > 0:
            raise ValueError(f"grid distances must be > 0, got {d_sr}")
        rows.append(
            {
                "d_sr": float(d_sr),
                "capture_line": capture_line(params, d_sr),
                "ca_bound": params.tx_range_m,
                "csma_avg_bound": params.cs_range_m,
                "csma_worst_bound": params.cs_range_m - d_sr,
            }
        )
    return rows
