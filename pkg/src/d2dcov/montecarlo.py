"""Monte Carlo coverage of the cellular user and calibration of ``k``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from ._parallel import map_replications
from .config import SimConfig
from .exceptions import CalibrationError, PreconditionError
from .pairing import draw_candidates, estimate_retention, pair_nodes, select_transmitters
from .pointprocess import Annulus, Purpose, RngStream, sample_cell_user, sample_fading

MODES = ("thinned", "lower_bound")


@dataclass(frozen=True)
class CoverageEstimate:
    gamma_db: float
    mean: float
    replications: int
    half_width_95: float

    @classmethod
    def from_count(cls, gamma_db: float, covered: int, replications: int) -> "CoverageEstimate":
        mean = covered / replications
        hw = 1.96 * math.sqrt(mean * (1.0 - mean) / replications)
        return cls(float(gamma_db), mean, replications, hw)


@dataclass(frozen=True)
class ReplicationSamples:
    """Per-replication received signal and interference sums (watts).

    ``interference_thinned`` sums over the nodes the pairing leaves active;
    ``interference_all`` sums over every in-region candidate. Both come from
    the same realization, so the two modes share random numbers.
    """

    signal: np.ndarray
    interference_thinned: np.ndarray
    interference_all: np.ndarray

    def __len__(self) -> int:
        return len(self.signal)

    def covered(self, gamma_linear: Sequence[float], mode: str = "thinned") -> np.ndarray:
        """Boolean (replications, len(gamma)) matrix of SIR >= gamma.

        Written as ``S >= gamma * I`` so that an empty interferer set
        counts as covered for every threshold.
        """
        if mode not in MODES:
            raise PreconditionError(f"mode must be one of {MODES}")
        interference = self.interference_thinned if mode == "thinned" else self.interference_all
        g = np.asarray(gamma_linear, dtype=float)
        return self.signal[:, None] >= g[None, :] * interference[:, None]


def _replicate(config: SimConfig, root: RngStream, rep: int) -> tuple[float, float, float]:
    m = config.model
    user = sample_cell_user(Annulus(m.R0, m.R), root.for_replication(rep, Purpose.CELL_USER))
    f_c = sample_fading(1, root.for_replication(rep, Purpose.FADING))[0]
    signal = m.p_c * f_c * user.r ** (-m.alpha)

    pattern, n_inside = draw_candidates(config, root, rep)
    if n_inside == 0:
        return signal, 0.0, 0.0
    power = m.p_i * pattern.fading[:n_inside] * pattern.radii[:n_inside] ** (-m.alpha)

    pairing = pair_nodes(pattern, m.mu)
    if config.interferers == "tdd":
        pairing = select_transmitters(pairing, root.for_replication(rep, Purpose.PAIRING))
        active = pairing.transmitters
    else:
        active = pairing.paired
    # guard-ring nodes may pair but never interfere
    active = np.sort(np.array([i for i in active if i < n_inside], dtype=np.intp))
    return signal, float(power[active].sum()), float(power.sum())


def run_replications(config: SimConfig, workers: int = 1, replications: int | None = None) -> ReplicationSamples:
    """Draw ``replications`` (default ``config.replications``) independent realizations.

    Replication ``i`` uses streams keyed by ``(master_seed, i, purpose)``,
    so the first ``n`` replications of a longer run are identical to a run
    of length ``n``, whatever the worker count.
    """
    n = config.replications if replications is None else replications
    if n < 1:
        raise PreconditionError("replications must be >= 1")
    rows = map_replications(_replicate, (config, RngStream(config.master_seed)), n, workers)
    arr = np.array(rows, dtype=float).reshape(n, 3)
    return ReplicationSamples(arr[:, 0], arr[:, 1], arr[:, 2])


def simulate_coverage(
    config: SimConfig,
    gamma_grid: Sequence[float],
    mode: str = "thinned",
    workers: int = 1,
    samples: ReplicationSamples | None = None,
) -> list[CoverageEstimate]:
    """Empirical P(SIR >= gamma) for each threshold in ``gamma_grid`` (dB).

    ``mode="lower_bound"`` lets every candidate transmit. Pass ``samples``
    to reuse realizations across modes and grids.
    """
    grid = list(gamma_grid)
    if not grid:
        raise PreconditionError("gamma_grid must be non-empty")
    if samples is None:
        samples = run_replications(config, workers)
    gamma_lin = [10.0 ** (g / 10.0) for g in grid]
    counts = samples.covered(gamma_lin, mode).sum(axis=0)
    return [CoverageEstimate.from_count(g, int(c), len(samples)) for g, c in zip(grid, counts)]


def retention_sse(k: float, lam: float, mu_grid: Sequence[float], empirical: Sequence[float]) -> float:
    mus = np.asarray(mu_grid, dtype=float)
    model = -np.expm1(-k * math.pi * lam * mus**2)
    return float(np.sum((np.asarray(empirical, dtype=float) - model) ** 2))


def fit_k(lam: float, mu_grid: Sequence[float], empirical: Sequence[float], k_max: float = 5.0) -> float:
    """Least-squares tuning factor on ``(0, k_max]`` for an empirical retention curve."""
    emp = np.asarray(empirical, dtype=float)
    if emp.size == 0 or np.all(np.isnan(emp)) or np.nanmax(emp) <= 0 or lam <= 0:
        raise CalibrationError("no positive retention values to fit")
    mus = np.asarray(mu_grid, dtype=float)
    ok = ~np.isnan(emp)
    res = minimize_scalar(
        retention_sse, bounds=(1e-9, k_max), args=(lam, mus[ok], emp[ok]),
        method="bounded", options={"xatol": 1e-12, "maxiter": 500},
    )
    return float(res.x)


def calibrate_k(config: SimConfig, mu_grid: Sequence[float], replications: int, workers: int = 1) -> float:
    """Fit ``k`` so the closed-form retention tracks simulated pairing on ``mu_grid``."""
    mus = [float(m) for m in mu_grid]
    if len(mus) < 3 or any(not (0 < m <= 50) for m in mus):
        raise PreconditionError("mu_grid needs >= 3 points in (0, 50] m")
    curve = estimate_retention(config, mus, replications, workers=workers)
    return fit_k(config.model.lam, mus, curve.empirical)


def _value(x) -> float:
    v = x.mean if isinstance(x, CoverageEstimate) else float(x)
    if not 0.0 <= v <= 1.0:
        raise PreconditionError(f"coverage values must lie in [0, 1], got {v}")
    return v


def coverage_gain(thinned, lower_bound) -> float:
    """Gain over the no-thinning bound in percentage points."""
    return 100.0 * (_value(thinned) - _value(lower_bound))


def coverage_gain_ratio(thinned, lower_bound) -> float:
    """Relative gain over the no-thinning bound, in percent."""
    t, lb = _value(thinned), _value(lower_bound)
    if lb == 0:
        return math.inf if t > 0 else 0.0
    return 100.0 * (t / lb - 1.0)

