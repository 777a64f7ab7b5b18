"""Embedded scenarios for the three reference experiments.

All three share theta = (4, -8, 12):

- exp-a: time-invariant rank 2 and constant nullspace (1, 2, 0)/sqrt(5)
- exp-b1: rank and nullspace switch at t = 5, 10 and 15
- exp-b2: nullspace rotates at t = 1 and t = 2
"""

from pathlib import Path
from typing import Any, Callable, Optional

from dremlab.errors import ConfigError
from dremlab.models import ComponentSpec, RunConfig, ScenarioSpec, SignalKind, SignalPiece
from dremlab.signals import dump_scenario

THETA = [4.0, -8.0, 12.0]

THETA0_VARIANTS: dict[str, list[float]] = {
    "zero": [0.0, 0.0, 0.0],
    "offset": [0.0, 5.0, 0.0],
    "near": [0.0, -10.0, 14.0],
}

_COMMON = {"l": 100.0, "eps": 0.4, "eps_bar": 1e-10, "gamma0": 5.0, "gamma1": 1.0}

PRESET_PARAMETERS: dict[str, dict[str, Any]] = {
    "exp-a": {**_COMMON, "Gamma": 5.0},
    "exp-b1": {**_COMMON, "Gamma": 1.0},
    "exp-b2": {**_COMMON, "Gamma": 1.0},
}

Piece = tuple[float, SignalKind, float, float, float]  # start, kind, c, a, offset


def _component(pieces: list[Piece], horizon: float) -> ComponentSpec:
    """Build a component from left endpoints, clipped to the horizon."""
    kept = [p for i, p in enumerate(pieces) if i == 0 or p[0] < horizon]
    built = []
    for i, (start, kind, c, a, offset) in enumerate(kept):
        end = kept[i + 1][0] if i + 1 < len(kept) else horizon
        built.append(SignalPiece(interval=(start, end), kind=kind, c=c, a=a, offset=offset))
    return ComponentSpec(pieces=built)


def _scenario(
    name: str, description: str, horizon: float, components: list[list[Piece]]
) -> ScenarioSpec:
    return ScenarioSpec(
        name=name,
        description=description,
        n=3,
        theta_true=THETA,
        horizon=horizon,
        components=[_component(p, horizon) for p in components],
    )


def exp_a(horizon: float = 1.0) -> ScenarioSpec:
    """Constant rank-2 regressor with a fixed nullspace."""
    return _scenario(
        "exp-a",
        "time-invariant rank and nullspace",
        horizon,
        [
            [(0.0, SignalKind.EXP_COS, -2.0, 1.0, 0.0)],
            [(0.0, SignalKind.EXP_COS, 1.0, 1.0, 0.0)],
            [(0.0, SignalKind.EXP, 1.0, 1.0, 0.0)],
        ],
    )


def exp_b1(horizon: float = 20.0) -> ScenarioSpec:
    """Switching rank: rank 1 up to t = 5, full rank only while sin(50t) is active."""
    return _scenario(
        "exp-b1",
        "time-varying rank and nullspace",
        horizon,
        [
            [(0.0, SignalKind.SIN, 9.0, 1.0, 0.0)],
            [
                (0.0, SignalKind.SIN, 2.0, 1.0, 0.0),
                (5.0, SignalKind.CONSTANT, 4.0, 1.0, 0.0),
                (15.0, SignalKind.SIN, 2.0, 1.0, 0.0),
            ],
            [
                (0.0, SignalKind.SIN, 1.0, 1.0, 0.0),
                (10.0, SignalKind.SIN, 1.0, 50.0, 0.0),
                (15.0, SignalKind.SIN, 1.0, 1.0, 0.0),
            ],
        ],
    )


def exp_b2(horizon: float = 4.0) -> ScenarioSpec:
    """Rank-2 regressor whose nullspace rotates at t = 1 and t = 2."""
    return _scenario(
        "exp-b2",
        "rank 2 with switching nullspace basis",
        horizon,
        [
            [
                (0.0, SignalKind.EXP_COS, -2.0, 1.0, 0.0),
                (1.0, SignalKind.EXP, 1.0, 1.0, 0.0),
                (2.0, SignalKind.EXP_COS, 1.0, 1.0, 0.0),
            ],
            [
                (0.0, SignalKind.EXP_COS, 1.0, 1.0, 0.0),
                (1.0, SignalKind.EXP_COS, -2.0, 1.0, 0.0),
                (2.0, SignalKind.EXP_OFFSET, 1.0, 1.0, 0.1),
            ],
            [
                (0.0, SignalKind.EXP, 1.0, 1.0, 0.0),
                (1.0, SignalKind.EXP_COS, 1.0, 1.0, 0.0),
                (2.0, SignalKind.EXP_COS, -2.0, 1.0, 0.0),
            ],
        ],
    )


PRESETS: dict[str, Callable[..., ScenarioSpec]] = {
    "exp-a": exp_a,
    "exp-b1": exp_b1,
    "exp-b2": exp_b2,
}


def get_preset(name: str, horizon: Optional[float] = None) -> ScenarioSpec:
    """Look up a preset scenario by name.

    Raises:
        ConfigError: If no preset has that name
    """
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None
    return factory() if horizon is None else factory(horizon)


def preset_run_config(name: str, **overrides: Any) -> RunConfig:
    """RunConfig for a preset with its reference parameters.

    Keyword overrides replace any field; `horizon` shortens or extends the
    scenario.
    """
    scenario = get_preset(name, overrides.pop("horizon", None))
    params: dict[str, Any] = {**PRESET_PARAMETERS[name], **overrides}
    return RunConfig(scenario=scenario, **params)


def export_presets(directory: Path | str) -> list[Path]:
    """Write every preset as a scenario file named <preset>.yaml."""
    directory = Path(directory)
    return [
        dump_scenario(factory(), directory / f"{name}.yaml") for name, factory in PRESETS.items()
    ]
