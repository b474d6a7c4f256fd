from .base import EnvError, LabeledEnv, SubgoalRewarder
from .grid import (
    DEFAULT_NOISE,
    FlagGridEnv,
    GridMap,
    bfs_distance,
    example3_constraints,
    flag_grid,
    load_map,
    parse_map,
    verify_map,
)
from .office import OFFICE_AP, OFFICE_FORMULA, office_world
from .taxi import TAXI_AP, TAXI_FORMULA, TaxiEnv, taxi_world

EXAMPLE_AP = ("o", "b", "y")
EXAMPLE_FORMULA = "(!y) U ((o & ((!y) U b)) | (b & ((!y) U o)))"
EXAMPLE_HORIZON = 25


def example_grid(variant: str = "deterministic", noise: float | None = None, seed=None) -> FlagGridEnv:
    """The orange/blue/yellow flag grid; variants ``no_orange`` and ``no_blue`` drop flags."""
    names = {
        "deterministic": "example3",
        "noisy": "example3",
        "infeasible": "example3_no_orange",
        "no_orange": "example3_no_orange",
        "no_blue": "example3_no_blue",
    }
    if variant not in names:
        raise EnvError(f"unknown example-grid variant {variant!r}; choose from {sorted(names)}")
    if noise is None:
        noise = DEFAULT_NOISE if variant == "noisy" else 0.0
    return flag_grid(names[variant], noise=noise, horizon=EXAMPLE_HORIZON, ap=EXAMPLE_AP, seed=seed)


def make_env(name: str, variant: str = "deterministic", noise: float | None = None, horizon: int | None = None, map_path=None, seed=None):
    """Build an environment by name: ``example``, ``office``, ``taxi`` or ``grid`` (needs ``map_path``)."""
    if name == "example":
        env = example_grid(variant, noise, seed)
    elif name == "office":
        env = office_world(variant, noise, seed=seed)
    elif name == "taxi":
        env = taxi_world(variant, noise, seed=seed)
    elif name == "grid":
        if map_path is None:
            raise EnvError("grid environment needs a map path")
        env = flag_grid(map_path, noise=noise or 0.0, seed=seed)
    else:
        raise EnvError(f"unknown environment {name!r}")
    if horizon is not None:
        env.horizon = int(horizon)
    return env


__all__ = [
    "DEFAULT_NOISE",
    "EXAMPLE_AP",
    "EXAMPLE_FORMULA",
    "EnvError",
    "FlagGridEnv",
    "GridMap",
    "LabeledEnv",
    "OFFICE_AP",
    "OFFICE_FORMULA",
    "SubgoalRewarder",
    "TAXI_AP",
    "TAXI_FORMULA",
    "TaxiEnv",
    "bfs_distance",
    "example3_constraints",
    "example_grid",
    "flag_grid",
    "load_map",
    "make_env",
    "office_world",
    "parse_map",
    "taxi_world",
    "verify_map",
]
