"""Closed forms for cellular-user coverage under a thinned D2D interferer field.

Notation: ``lam`` is the candidate D2D density (1/m^2), ``k`` the retention
tuning factor, ``mu`` the pairing target distance (m), powers in watts and
``gamma`` the SIR threshold on a linear scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import integrate

from .exceptions import DivergenceError, PreconditionError, SpecializationError


@dataclass(frozen=True)
class ModelParams:
    lam: float
    k: float = 0.8
    mu: float = 50.0
    p_c: float = 0.1
    p_i: float = 2e-4
    alpha: float = 4.0
    R: float = 500.0
    R0: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        if not self.lam >= 0:
            raise PreconditionError(f"lam must be >= 0, got {self.lam}")
        if not self.k > 0:
            raise PreconditionError(f"k must be > 0, got {self.k}")
        if not self.mu >= 0:
            raise PreconditionError(f"mu must be >= 0, got {self.mu}")
        if not self.p_c > 0:
            raise PreconditionError(f"p_c must be > 0, got {self.p_c}")
        if not self.p_i >= 0:
            raise PreconditionError(f"p_i must be >= 0, got {self.p_i}")
        if not self.alpha > 2:
            raise DivergenceError(f"alpha must exceed 2, got {self.alpha}")
        if not (0 <= self.R0 < self.R):
            raise PreconditionError(f"need 0 <= R0 < R, got R0={self.R0}, R={self.R}")
        if not self.gamma > 0:
            raise PreconditionError(f"gamma must be > 0, got {self.gamma}")

    @property
    def retention(self) -> float:
        return retention_probability(self.k, self.lam, self.mu)


def retention_probability(k: float, lam: float, mu: float) -> float:
    """Probability that a candidate is retained as an active D2D node,
    ``1 - exp(-k pi lam mu^2)``."""
    if not (k > 0 and lam >= 0 and mu >= 0):
        raise PreconditionError(f"need k > 0, lam >= 0, mu >= 0 (got {k}, {lam}, {mu})")
    return -math.expm1(-k * math.pi * lam * mu * mu)


def sinc_constant(alpha: float) -> float:
    """``pi / (alpha sin(2 pi / alpha))``, the value of the integral of
    u / (1 + u^alpha) over (0, inf)."""
    if not alpha > 2:
        raise DivergenceError(f"integral diverges for alpha <= 2 (got {alpha})")
    return math.pi / (alpha * math.sin(2.0 * math.pi / alpha))


def sinc_constant_quad(alpha: float) -> float:
    """Same integral by adaptive quadrature; the closed form's cross-check."""
    if not alpha > 2:
        raise DivergenceError(f"integral diverges for alpha <= 2 (got {alpha})")
    head, _ = integrate.quad(lambda u: u / (1.0 + u**alpha), 0.0, 1.0, epsabs=0, epsrel=1e-13)
    # u -> 1/t maps (1, inf) onto (0, 1) with integrand t^(alpha-3) / (t^alpha + 1)
    tail, _ = integrate.quad(
        lambda t: t ** (alpha - 3.0) / (t**alpha + 1.0), 0.0, 1.0, epsabs=0, epsrel=1e-13, limit=200
    )
    return head + tail


def interference_laplace(s_c: float, params: ModelParams) -> float:
    """Laplace transform of the aggregate D2D interference at ``s_c``,
    with interferers integrated over the whole plane (R0 -> 0)."""
    if not s_c >= 0:
        raise PreconditionError(f"s_c must be >= 0, got {s_c}")
    a = params.alpha
    exponent = (
        2.0 * math.pi * params.lam * params.retention
        * (s_c * params.p_i) ** (2.0 / a) * sinc_constant(a)
    )
    return math.exp(-exponent)


def interference_laplace_quad(s_c: float, params: ModelParams, inner_radius: float | None = None) -> float:
    """Laplace transform by direct quadrature of the PGFL radial integral
    from ``inner_radius`` (default ``params.R0``) to infinity."""
    r0 = params.R0 if inner_radius is None else inner_radius
    sp = s_c * params.p_i
    if sp == 0 or params.lam == 0:
        return 1.0
    a = params.alpha
    # 1 - 1/(1 + sp x^-a) written to stay accurate at large x
    f = lambda x: x / (1.0 + x**a / sp)
    # split at the knee x = sp^(1/a) so quad sees both regimes
    knee = max(sp ** (1.0 / a), r0)
    lo, _ = integrate.quad(f, r0, knee, epsabs=0, epsrel=1e-12, limit=400)
    hi, _ = integrate.quad(f, knee, math.inf, epsabs=0, epsrel=1e-12, limit=400)
    val = lo + hi
    return math.exp(-2.0 * math.pi * params.lam * params.retention * val)


def _coverage_exponent(params: ModelParams, retention: float) -> float:
    """Coefficient c in exp(-c r_c^2) for the conditional coverage."""
    a = params.alpha
    return (
        2.0 * math.pi**2 * params.lam * retention / (a * math.sin(2.0 * math.pi / a))
        * (params.gamma * params.p_i / params.p_c) ** (2.0 / a)
    )


def coverage_general(params: ModelParams, retention: float | None = None) -> float:
    """Average coverage for general alpha, user radial weight 2r/R^2 on [R0, R].

    Uses the closed antiderivative ``(e^{-c R0^2} - e^{-c R^2}) / (c R^2)``;
    ``c = 0`` returns the limit ``1 - (R0/R)^2``. ``retention=1`` gives the
    no-thinning bound.
    """
    sinc_constant(params.alpha)
    c = _coverage_exponent(params, params.retention if retention is None else retention)
    R, R0 = params.R, params.R0
    if c == 0:
        return (R * R - R0 * R0) / (R * R)
    return -math.exp(-c * R0 * R0) * math.expm1(-c * (R * R - R0 * R0)) / (c * R * R)


def coverage_general_quad(params: ModelParams) -> float:
    """Coverage integral evaluated by adaptive quadrature over r_c."""
    sinc_constant(params.alpha)
    c = _coverage_exponent(params, params.retention)
    R = params.R
    val, _ = integrate.quad(
        lambda r: math.exp(-c * r * r) * 2.0 * r / (R * R),
        params.R0, R, epsabs=0, epsrel=1e-12, limit=200,
    )
    return val


def _mean_exp_decay(A: float) -> float:
    # (1 - e^-A) / A, -> 1 as A -> 0
    if A == 0:
        return 1.0
    return -math.expm1(-A) / A


def _alpha4_scale(params: ModelParams) -> float:
    if params.alpha != 4:
        raise SpecializationError(f"closed form holds for alpha = 4 only, got {params.alpha}")
    return (math.pi**2 * params.R**2 * params.lam / 2.0) * math.sqrt(
        params.gamma * params.p_i / params.p_c
    )


def coverage_alpha4(params: ModelParams) -> float:
    """Closed-form coverage for alpha = 4 with R0 treated as 0.

    ``A = (pi^2 R^2 lam / 2) sqrt(gamma p_i / p_c) p_ret`` and the result is
    ``(1 - e^-A) / A``.
    """
    return _mean_exp_decay(_alpha4_scale(params) * params.retention)


def coverage_lower_bound(params: ModelParams) -> float:
    """``coverage_alpha4`` with every candidate retained (no pairing criterion)."""
    return _mean_exp_decay(_alpha4_scale(params))
