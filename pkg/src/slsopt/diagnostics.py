"""Exact and Monte Carlo estimation of the statistical regularity constants.

All expectations are conditional on the current point and taken over the batch
draw. With singleton batches they are computed exactly as uniform averages
over the N components, which turns growth conditions, covariance bounds, and
the certified contraction coefficient into checkable numbers instead of
assumptions. var / cov are accumulated in centered form; the uncentered
identities then hold as genuine floating-point checks rather than by
construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .directions import DirectionState, propose_direction
from .errors import (
    DomainError,
    NumericDomainError,
    UndefinedEstimateError,
    UnsupportedProblemError,
)
from .problems import FiniteSumProblem, Vector, as_vector

__all__ = [
    "MomentReport",
    "TheoremConstants",
    "EtaReport",
    "LemmaBoundsReport",
    "exact_moments",
    "monte_carlo_moments",
    "estimate_c3",
    "estimate_rho",
    "estimate_wgc",
    "estimate_pl",
    "verify_lemma_bounds",
    "compute_eta",
    "check_interpolation",
    "negative_gradient_rule",
    "frozen_direction_rule",
]


@dataclass(frozen=True, eq=False)
class MomentReport:
    """First and second moments of the sampled gradient and a direction rule.

    var_g and cov_dg come from centered accumulation (var_g clamped at 0);
    E_dTg should reconstruct E_d . E_g + cov_dg up to roundoff.
    """

    x: Vector
    E_g: Vector
    E_norm_g_sq: float
    var_g: float
    E_d: Vector
    E_dTg: float
    cov_dg: float
    mode: str
    samples: int | None = None


def negative_gradient_rule(i: int, g: Vector) -> Vector:
    """The plain direction rule d = -g."""
    return -g


def frozen_direction_rule(state: DirectionState, x: Vector) -> Callable:
    """Direction rule applying a recipe with its memory frozen at x.

    The returned map is pure in (i, g): proposals read the state but never
    mutate it, so the expectation runs over the batch draw only.
    """

    def rule(i: int, g: Vector) -> Vector:
        return propose_direction(state, g, x)

    return rule


def _moments_from_samples(x, G: np.ndarray, D: np.ndarray, mode: str, samples=None) -> MomentReport:
    E_g = G.mean(axis=0)
    E_norm_g_sq = float(np.einsum("ij,ij->i", G, G).mean())
    Gc = G - E_g
    var_g = float(np.einsum("ij,ij->i", Gc, Gc).mean())
    E_d = D.mean(axis=0)
    E_dTg = float(np.einsum("ij,ij->i", D, G).mean())
    Dc = D - E_d
    cov_dg = float(np.einsum("ij,ij->i", Dc, Gc).mean())
    return MomentReport(
        x=x,
        E_g=E_g,
        E_norm_g_sq=E_norm_g_sq,
        var_g=max(var_g, 0.0),
        E_d=E_d,
        E_dTg=E_dTg,
        cov_dg=cov_dg,
        mode=mode,
        samples=samples,
    )


def exact_moments(problem: FiniteSumProblem, x, direction_rule: Callable) -> MomentReport:
    """Moments as exact uniform averages over the N singleton batches."""
    xv = as_vector(x, problem.n)
    G = problem.component_grads(xv)
    D = np.stack([np.asarray(direction_rule(i, G[i]), dtype=np.float64) for i in range(problem.N)])
    return _moments_from_samples(xv, G, D, mode="exact_singleton_enumeration")


def monte_carlo_moments(
    problem: FiniteSumProblem,
    x,
    direction_rule: Callable,
    samples: int,
    seed: int = 0,
    batch_size: int = 1,
) -> MomentReport:
    """Moment estimates from repeated uniform batch draws.

    For batch_size 1 the rule receives the drawn index; for larger batches it
    receives the index tuple. Exists for spot checks; enumeration is the
    reference.
    """
    if samples < 1:
        raise DomainError(f"samples must be >= 1, got {samples}")
    xv = as_vector(x, problem.n)
    rng = np.random.default_rng(seed)
    G = np.empty((samples, problem.n))
    D = np.empty((samples, problem.n))
    for s in range(samples):
        idx = rng.integers(0, problem.N, size=batch_size)
        indices = tuple(int(i) for i in idx)
        _, g = problem.batch_eval(indices, xv)
        key = indices[0] if batch_size == 1 else indices
        G[s] = g
        D[s] = np.asarray(direction_rule(key, g), dtype=np.float64)
    return _moments_from_samples(xv, G, D, mode="monte_carlo", samples=samples)


def estimate_c3(problem: FiniteSumProblem, x_samples, direction_rule: Callable) -> float:
    """Smallest anti-correlation coefficient covering all sampled points.

    Returns max over samples of max(0, -cov_dg) / var_g, skipping points with
    zero gradient variance; errors out if every sample is degenerate.
    """
    best = None
    for x in x_samples:
        m = exact_moments(problem, x, direction_rule)
        if m.var_g <= 0.0:
            continue
        ratio = max(0.0, -m.cov_dg) / m.var_g
        best = ratio if best is None else max(best, ratio)
    if best is None:
        raise UndefinedEstimateError("gradient variance vanished at every sample")
    return best


def _gradient_moments(problem, x):
    xv = as_vector(x, problem.n)
    G = problem.component_grads(xv)
    E_g = G.mean(axis=0)
    E_norm = float(np.einsum("ij,ij->i", G, G).mean())
    return E_g, E_norm


def estimate_rho(problem: FiniteSumProblem, x_samples, tol: float = 1e-10) -> float:
    """Sampled strong-growth ratio max E||g||^2 / ||grad f||^2; always >= 1."""
    best = None
    for x in x_samples:
        E_g, E_norm = _gradient_moments(problem, x)
        denom = float(E_g @ E_g)
        if math.sqrt(denom) <= tol:
            continue
        ratio = E_norm / denom
        best = ratio if best is None else max(best, ratio)
    if best is None:
        raise UndefinedEstimateError(
            "no sample had full gradient norm above the tolerance"
        )
    if best < 1.0 - 1e-9:
        raise NumericDomainError(
            f"growth ratio {best!r} < 1 contradicts the mean-square inequality"
        )
    return max(best, 1.0)


def _require_f_star(problem):
    if problem.known is None or problem.known.f_star is None:
        raise UnsupportedProblemError("this estimate needs a problem with known f_star")
    return problem.known.f_star


def estimate_wgc(problem: FiniteSumProblem, x_samples, L: float, tol: float = 1e-12) -> float:
    """Sampled weak-growth ratio max E||g||^2 / (2 L (f - f_star))."""
    if L <= 0:
        raise DomainError(f"L must be > 0, got {L}")
    f_star = _require_f_star(problem)
    best = None
    for x in x_samples:
        xv = as_vector(x, problem.n)
        f = float(problem.component_values(xv).mean())
        gap = f - f_star
        if gap <= tol:
            continue
        _, E_norm = _gradient_moments(problem, xv)
        ratio = E_norm / (2.0 * L * gap)
        best = ratio if best is None else max(best, ratio)
    if best is None:
        raise UndefinedEstimateError("no sample had a positive optimality gap")
    return best


def estimate_pl(problem: FiniteSumProblem, x_samples, tol: float = 1e-12) -> float:
    """Largest gradient-domination constant valid on the sample set.

    Returns min over samples of ||grad f||^2 / (2 (f - f_star)); points at the
    optimum are excluded (0/0).
    """
    f_star = _require_f_star(problem)
    best = None
    for x in x_samples:
        xv = as_vector(x, problem.n)
        f = float(problem.component_values(xv).mean())
        gap = f - f_star
        if gap <= tol:
            continue
        E_g, _ = _gradient_moments(problem, xv)
        ratio = float(E_g @ E_g) / (2.0 * gap)
        best = ratio if best is None else min(best, ratio)
    if best is None:
        raise UndefinedEstimateError("no sample had a positive optimality gap")
    return best


@dataclass(frozen=True)
class TheoremConstants:
    """Constants feeding the certified linear-rate bound.

    sigma = c2 - c3 (1 - 1/rho) is the effective expected-descent coefficient;
    the bound applies only when sigma > 0 (lemma_applicable).
    """

    c1: float
    c2: float
    c3: float
    rho: float
    mu: float
    L: float
    L_max: float
    gamma: float
    delta: float
    alpha_max: float

    def __post_init__(self):
        if self.rho < 1.0:
            raise DomainError(f"rho must be >= 1, got {self.rho}")
        for name in ("c1", "c2", "mu", "L", "L_max", "alpha_max"):
            if getattr(self, name) <= 0:
                raise DomainError(f"{name} must be > 0")
        if self.c3 < 0:
            raise DomainError(f"c3 must be >= 0, got {self.c3}")
        if not 0.0 < self.gamma < 1.0:
            raise DomainError(f"gamma must be in (0, 1), got {self.gamma}")
        if not 0.0 < self.delta < 1.0:
            raise DomainError(f"delta must be in (0, 1), got {self.delta}")

    @property
    def sigma(self) -> float:
        return self.c2 - self.c3 * (1.0 - 1.0 / self.rho)

    @property
    def lemma_applicable(self) -> bool:
        return self.c2 > self.c3 * (1.0 - 1.0 / self.rho)


@dataclass(frozen=True)
class EtaReport:
    """Contraction coefficient and whether the certified bound is in force."""

    eta: float
    rate: float  # eta * alpha_max
    hypothesis_ok: bool  # c2 > c3 (1 - 1/rho)
    certified: bool  # hypothesis_ok and 0 < eta < 1/alpha_max


def compute_eta(constants: TheoremConstants) -> EtaReport:
    """Evaluate the rate coefficient

    eta = (L_max c1^2 / (2 c2)) (1/gamma + 1/(delta (1 - gamma))) - 2 sigma mu

    and flag whether 0 < eta < 1/alpha_max, which certifies the geometric
    decay of the expected optimality gap at rate eta * alpha_max.
    """
    c = constants
    eta = (c.L_max * c.c1 * c.c1 / (2.0 * c.c2)) * (
        1.0 / c.gamma + 1.0 / (c.delta * (1.0 - c.gamma))
    ) - 2.0 * c.sigma * c.mu
    hypothesis_ok = c.lemma_applicable
    certified = hypothesis_ok and 0.0 < eta < 1.0 / c.alpha_max
    return EtaReport(
        eta=eta, rate=eta * c.alpha_max, hypothesis_ok=hypothesis_ok, certified=certified
    )


@dataclass(frozen=True)
class LemmaBoundsReport:
    norm_ok: bool
    descent_ok: bool
    norm_slack: float
    descent_slack: float


def verify_lemma_bounds(
    problem: FiniteSumProblem,
    x,
    direction_rule: Callable,
    constants: TheoremConstants,
) -> LemmaBoundsReport:
    """Check the expected-direction bounds at x with exact enumeration moments.

        ||E[d]|| <= c1 sqrt(rho) ||grad f||
        E[d] . grad f <= -sigma ||grad f||^2

    Requires sigma > 0; slacks are rhs - lhs, nonnegative when the bound holds.
    """
    if not constants.lemma_applicable:
        raise DomainError(
            "constants violate the hypothesis c2 > c3 (1 - 1/rho): "
            f"c2={constants.c2}, c3={constants.c3}, rho={constants.rho}"
        )
    m = exact_moments(problem, x, direction_rule)
    grad = m.E_g
    gnorm = float(np.linalg.norm(grad))
    norm_lhs = float(np.linalg.norm(m.E_d))
    norm_rhs = constants.c1 * math.sqrt(constants.rho) * gnorm
    descent_lhs = float(m.E_d @ grad)
    descent_rhs = -constants.sigma * (gnorm * gnorm)
    return LemmaBoundsReport(
        norm_ok=norm_lhs <= norm_rhs,
        descent_ok=descent_lhs <= descent_rhs,
        norm_slack=norm_rhs - norm_lhs,
        descent_slack=descent_rhs - descent_lhs,
    )


def check_interpolation(problem: FiniteSumProblem, x_star, tol: float) -> tuple[bool, int, float]:
    """Whether every component gradient vanishes at x_star, plus the worst one.

    Uses the per-component oracles, which are exact at a planted minimizer.
    """
    xv = as_vector(x_star, problem.n, "x_star")
    worst, worst_norm = 0, -1.0
    for i in range(problem.N):
        norm = float(np.linalg.norm(problem.component_grad(i, xv)))
        if norm > worst_norm:
            worst, worst_norm = i, norm
    return worst_norm <= tol, worst, worst_norm
