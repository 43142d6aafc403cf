"""Default numerical settings; the single source every report echoes."""

import os
from dataclasses import asdict, dataclass


@dataclass(frozen=True)
class Defaults:
    tol: float = 1e-8
    dt: float = 1e-3
    resolution: int = 200
    seed: int = 42
    period_tol: float = 1e-5
    chain_tol: float = 1e-7
    rank_drop_tol: float = 1e-9
    bound_slack: float = 0.02
    zero_function: float = 1e-14

    def as_dict(self) -> dict:
        return asdict(self)


DEFAULTS = Defaults()


def max_workers() -> int:
    """Worker cap from VFSPEC_THREADS (default 1: sequential)."""
    try:
        return max(1, int(os.environ.get("VFSPEC_THREADS", "1")))
    except ValueError:
        return 1
