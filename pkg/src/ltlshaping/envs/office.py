"""Office world: fetch coffee and mail, deliver both to the office, avoid decorations."""

from __future__ import annotations

from .base import EnvError
from .grid import DEFAULT_NOISE, flag_grid

OFFICE_AP = ("c", "m", "o", "d")
OFFICE_FORMULA = "!d U ((c & (!d U (m & (!d U o)))) | (m & (!d U (c & (!d U o)))))"
OFFICE_HORIZON = 200

_VARIANTS = {
    "deterministic": ("office", 0.0),
    "noisy": ("office", DEFAULT_NOISE),
    "infeasible": ("office_infeasible", 0.0),
}


def office_world(variant: str = "deterministic", noise: float | None = None, horizon: int = OFFICE_HORIZON, seed=None):
    """12x9 office grid.  The infeasible variant walls the office in."""
    try:
        name, default_noise = _VARIANTS[variant]
    except KeyError:
        raise EnvError(f"unknown office variant {variant!r}; choose from {sorted(_VARIANTS)}") from None
    return flag_grid(name, noise=default_noise if noise is None else noise, horizon=horizon, ap=OFFICE_AP, seed=seed)
