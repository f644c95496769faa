"""Simulation configuration shared by pairing, Monte Carlo and the harness."""

from __future__ import annotations

from dataclasses import dataclass, field

from .analytic import ModelParams
from .exceptions import PreconditionError

EDGE_MODES = ("none", "guard_ring")
INTERFERER_MODES = ("paired", "tdd")


@dataclass(frozen=True)
class SimConfig:
    """Full parameterization of a simulation run.

    ``sim_radius`` bounds the region where candidates are sampled (``None``
    means the cell radius). ``interferers`` picks who radiates in the thinned
    mode: ``"paired"`` makes every paired node an interferer, ``"tdd"`` draws
    one transmitter per pair.
    """

    model: ModelParams = field(default_factory=lambda: ModelParams(lam=2.5e-5))
    replications: int = 3000
    sim_radius: float | None = None
    edge_mode: str = "none"
    interferers: str = "paired"
    master_seed: int = 20151

    def __post_init__(self):
        if self.replications < 1:
            raise PreconditionError("replications must be >= 1")
        if self.sim_radius is not None and not self.sim_radius >= self.model.R:
            raise PreconditionError(
                f"sim_radius ({self.sim_radius}) must be >= cell radius ({self.model.R})"
            )
        if self.edge_mode not in EDGE_MODES:
            raise PreconditionError(f"edge_mode must be one of {EDGE_MODES}")
        if self.interferers not in INTERFERER_MODES:
            raise PreconditionError(f"interferers must be one of {INTERFERER_MODES}")
        if not 0 <= self.master_seed < 2**64:
            raise PreconditionError("master_seed must be an unsigned 64-bit integer")

    @property
    def region_radius(self) -> float:
        return self.model.R if self.sim_radius is None else self.sim_radius
