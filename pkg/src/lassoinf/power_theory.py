"""Theoretical power in the proportional regime d/n -> kappa.

The soft-threshold scalar recursion determines a threshold level alpha and a
noise level tau as functions of (kappa, sigma, lambda, coefficient prior);
the pair induces a bivariate Gaussian (F, G) whose transforms give the
limiting p-value laws of the re-centered test and the one- and two-sided
z-tests.

Penalty convention: ``lam`` here multiplies the l1 norm against the
un-normalized squared error 0.5*||y - Xb||^2 for designs with iid N(0, 1/n)
entries.  A penalty on this package's solver scale (which normalizes the
squared error by n) corresponds to lam = n * lam_solver.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import ConvergenceError, DataError, NoSolutionError
from .special import norm_cdf

__all__ = [
    "CoefPrior",
    "StateEvolutionSolution",
    "FGDistribution",
    "PowerEstimate",
    "soft_threshold",
    "soft_threshold_deriv",
    "state_evolution",
    "fg_distribution",
    "asymptotic_power",
]

_GH_NODES, _GH_WEIGHTS = np.polynomial.hermite_e.hermegauss(61)
_GH_WEIGHTS = _GH_WEIGHTS / math.sqrt(2.0 * math.pi)


def soft_threshold(x, omega):
    """sign(x) * (|x| - omega)_+ ."""
    x = np.asarray(x, dtype=np.float64)
    out = np.sign(x) * np.maximum(np.abs(x) - omega, 0.0)
    return float(out) if out.ndim == 0 else out


def soft_threshold_deriv(x, omega):
    """Derivative of the soft threshold in its first argument: 1{|x| > omega}."""
    x = np.asarray(x, dtype=np.float64)
    out = (np.abs(x) > omega).astype(np.float64)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class CoefPrior:
    """Coefficient prior: a finite point-mass mixture or a Gaussian."""

    atoms: Optional[Tuple[Tuple[float, float], ...]] = None  # (mass, location)
    gaussian: Optional[Tuple[float, float]] = None  # (mean, variance)

    def __post_init__(self):
        if (self.atoms is None) == (self.gaussian is None):
            raise DataError("specify exactly one of atoms or gaussian")
        if self.atoms is not None:
            masses = np.array([m for m, _ in self.atoms])
            if np.any(masses < 0) or abs(masses.sum() - 1.0) > 1e-12:
                raise DataError("atom masses must be nonnegative and sum to 1")
        else:
            if self.gaussian[1] < 0:
                raise DataError("gaussian variance must be nonnegative")

    @classmethod
    def point_masses(cls, pairs: Sequence[Tuple[float, float]]) -> "CoefPrior":
        return cls(atoms=tuple((float(m), float(a)) for m, a in pairs))

    @classmethod
    def point_mass(cls, location: float = 0.0) -> "CoefPrior":
        return cls.point_masses([(1.0, location)])

    @classmethod
    def sparse(cls, signal_mass: float, amplitude: float) -> "CoefPrior":
        """(1 - signal_mass) at zero, signal_mass at the amplitude."""
        return cls.point_masses([(1.0 - signal_mass, 0.0), (signal_mass, amplitude)])

    @classmethod
    def normal(cls, mean: float, variance: float) -> "CoefPrior":
        return cls(gaussian=(float(mean), float(variance)))

    def second_moment(self) -> float:
        if self.atoms is not None:
            return float(sum(m * a * a for m, a in self.atoms))
        mean, var = self.gaussian
        return mean * mean + var


def _phi(x):
    return math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def _atom_moments(a: float, tau: float, theta: float):
    """E[eta'(a + tau W; theta)] and E[(eta(a + tau W; theta) - a)^2] for
    scalar a and W ~ N(0,1), in closed form."""
    c1 = (theta - a) / tau
    c2 = (-theta - a) / tau
    F1, F2 = float(norm_cdf(c1)), float(norm_cdf(c2))
    f1, f2 = _phi(c1), _phi(c2)
    ep = (1.0 - F1) + F2
    m2 = (
        tau * tau * ((1.0 - F1) + c1 * f1)
        - 2.0 * tau * theta * f1
        + theta * theta * (1.0 - F1)
        + tau * tau * (F2 - c2 * f2)
        - 2.0 * tau * theta * f2
        + theta * theta * F2
        + a * a * (F1 - F2)
    )
    return ep, m2


def _prior_moments(prior: CoefPrior, tau: float, theta: float):
    """Expectations over both the prior and the Gaussian noise: closed form
    per atom, Gauss-Hermite (61 nodes) over a Gaussian prior."""
    if prior.atoms is not None:
        ep = m2 = 0.0
        for mass, a in prior.atoms:
            e, m = _atom_moments(a, tau, theta)
            ep += mass * e
            m2 += mass * m
        return ep, m2
    mean, var = prior.gaussian
    sd = math.sqrt(var)
    ep = m2 = 0.0
    for node, weight in zip(_GH_NODES, _GH_WEIGHTS):
        e, m = _atom_moments(mean + sd * node, tau, theta)
        ep += weight * e
        m2 += weight * m
    return ep, m2


@dataclass(frozen=True)
class StateEvolutionSolution:
    alpha: float
    tau: float
    residuals: Tuple[float, float]
    kappa: float
    sigma: float
    lam: float
    extra_roots: Tuple[float, ...] = field(default=())


def _tau_fixed_point(prior, kappa, sigma, theta, tol=1e-12, max_iter=10_000,
                     damping=0.5):
    tau_sq = sigma * sigma + kappa * prior.second_moment() + theta * theta
    for _ in range(max_iter):
        tau = math.sqrt(tau_sq)
        rhs = sigma * sigma + kappa * _prior_moments(prior, tau, theta)[1]
        new = (1.0 - damping) * tau_sq + damping * rhs
        if abs(new - tau_sq) < tol * max(1.0, new):
            return math.sqrt(new)
        tau_sq = new
    raise ConvergenceError("noise-level fixed point did not converge")


def state_evolution(
    kappa: float,
    sigma: float,
    lam: float,
    prior: CoefPrior,
    inner_tol: float = 1e-12,
) -> StateEvolutionSolution:
    """Solve the two-equation fixed point for (alpha, tau).

    Parametrized by the effective threshold theta = alpha * tau: an inner
    damped fixed-point iteration yields tau(theta), and the induced penalty
    lam(theta) = theta * (1 - kappa * E[eta']) is driven to the target by
    bisection on a geometrically expanded bracket.
    """
    if not 0.0 < kappa < 1.0:
        raise DataError("kappa must lie in (0, 1)")
    if sigma <= 0 or lam <= 0:
        raise DataError("sigma and lam must be positive")

    def lam_of(theta):
        tau = _tau_fixed_point(prior, kappa, sigma, theta, tol=inner_tol)
        ep = _prior_moments(prior, tau, theta)[0]
        return theta * (1.0 - kappa * ep), tau

    theta_lo = 1e-10 * max(lam, sigma)
    f_lo = lam_of(theta_lo)[0] - lam
    if f_lo >= 0.0:
        theta_lo = 1e-300
        f_lo = -lam
    theta_hi = max(lam, sigma)
    probes = [(theta_lo, f_lo)]
    for _ in range(60):
        f_hi = lam_of(theta_hi)[0] - lam
        probes.append((theta_hi, f_hi))
        if f_hi > 0.0:
            break
        theta_hi *= 2.0
    else:
        raise NoSolutionError("could not bracket the threshold root")

    sign_changes = [
        (probes[i][0], probes[i + 1][0])
        for i in range(len(probes) - 1)
        if probes[i][1] <= 0.0 < probes[i + 1][1]
    ]

    def bisect(a, b):
        for _ in range(200):
            mid = 0.5 * (a + b)
            if lam_of(mid)[0] - lam <= 0.0:
                a = mid
            else:
                b = mid
            if b - a <= 1e-15 * b:
                break
        return 0.5 * (a + b)

    theta_star = bisect(*sign_changes[0])
    extra = tuple(bisect(a, b) for a, b in sign_changes[1:])

    tau = _tau_fixed_point(prior, kappa, sigma, theta_star, tol=inner_tol)
    alpha = theta_star / tau
    ep, m2 = _prior_moments(prior, tau, theta_star)
    res1 = abs(lam - alpha * tau * (1.0 - kappa * ep))
    res2 = abs(tau * tau - sigma * sigma - kappa * m2)
    return StateEvolutionSolution(
        alpha=alpha,
        tau=tau,
        residuals=(res1, res2),
        kappa=kappa,
        sigma=sigma,
        lam=lam,
        extra_roots=extra,
    )


@dataclass(frozen=True)
class FGDistribution:
    """Limiting bivariate Gaussian of the z statistic (F) and the re-centering
    statistic (G); cov(F, G) = var(F) = 1."""

    mean_f: float
    mean_g: float
    var_g: float

    @property
    def var_f(self) -> float:
        return 1.0

    @property
    def cov(self) -> float:
        return 1.0


def fg_distribution(h: float, se: StateEvolutionSolution) -> FGDistribution:
    """Assemble the (F, G) law at coefficient value h from a state-evolution
    fixed point."""
    kappa, sigma, lam = se.kappa, se.sigma, se.lam
    root = math.sqrt(1.0 - kappa)
    mean_f = h * root / sigma
    mean_g = h * lam / (se.alpha * se.tau * sigma * root)
    var_g = lam * lam / (se.alpha**2 * sigma**2 * (1.0 - kappa))
    if var_g < 1.0 - 1e-9:
        warnings.warn(
            f"var(G) = {var_g:.6g} < 1 violates the correlation bound; "
            "the state-evolution solution may be unreliable",
            stacklevel=2,
        )
    return FGDistribution(mean_f=mean_f, mean_g=mean_g, var_g=var_g)


@dataclass(frozen=True)
class PowerEstimate:
    power: float
    stderr: float


_TESTS = ("recentered", "z_one", "z_two")


def asymptotic_power(
    test: str,
    alpha: float,
    fg: FGDistribution,
    mc_draws: int = 10**6,
    seed: int = 0,
) -> PowerEstimate:
    """Monte Carlo rejection probability of the limiting p-value law.

    Deterministic given the seed.  var(G) = 1 degenerates to G = F shifted by
    a constant, which is handled exactly.
    """
    if test not in _TESTS:
        raise DataError(f"unknown test {test!r}; expected one of {_TESTS}")
    rng = np.random.default_rng(seed)
    z1 = rng.standard_normal(mc_draws)
    f = fg.mean_f + z1
    if test == "z_one":
        p = 1.0 - norm_cdf(f)
    elif test == "z_two":
        sgn = np.where(f < 0, -1.0, 1.0)
        p = 1.0 - (norm_cdf(f) - norm_cdf(-f)) * sgn
    else:
        extra_sd = math.sqrt(max(fg.var_g - 1.0, 0.0))
        g = fg.mean_g + z1
        if extra_sd > 0.0:
            g = g + extra_sd * rng.standard_normal(mc_draws)
        sgn = np.where(g < 0, -1.0, 1.0)
        p = 1.0 - (norm_cdf(f) - norm_cdf(f - 2.0 * g)) * sgn
    power = float(np.mean(p <= alpha))
    stderr = math.sqrt(max(power * (1.0 - power), 1e-300) / mc_draws)
    return PowerEstimate(power=power, stderr=stderr)
