"""Residual envelopes and closed-form error-bound kernels.

For linear ODEs with hard initial conditions, the gap between the true
solution and the trained surrogate obeys

    |u(x) - u~(x)| <= integral_{x0}^{x} k(x - xi) |r(xi)| d xi,

with a kernel k determined by the operator: exp(-lam s) for first order,
(exp(-lam1 s) - exp(-lam2 s)) / (lam2 - lam1) for distinct positive decay
rates, s exp(-lam s) in the equal-rate limit, and plain s when both rates
vanish (e.g. the harmonic oscillator).  Replacing |r| by a piecewise
constant majorant (the "envelope") makes every integral elementary, so the
bound evaluates in closed form per subinterval.

The resulting bound, read as a standard deviation, is the pseudo-aleatoric
uncertainty attached to a deterministically trained network.  For Burgers,
where no such kernel exists, the accumulated absolute residual over time
serves as a heuristic stand-in.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError
from .problems import BurgersProblem, ODEProblem, residual_values

EQUAL_RATE_TOL = 1e-8

PROFILE_KINDS = (
    "first_order",
    "second_order_distinct",
    "second_order_equal_limit",
    "second_order_zero",
    "burgers_heuristic",
)


@dataclass
class ResidualEnvelope:
    """Piecewise-constant majorant of |residual| over a knot partition.

    ``epsilons[k]`` bounds |r| on ``[knots[k], knots[k+1]]``; it is the
    sampled maximum over ``oversample`` points scaled by ``safety_factor``.
    """

    knots: np.ndarray
    epsilons: np.ndarray
    oversample: int = 0
    safety_factor: float = 1.0

    def __post_init__(self):
        self.knots = np.asarray(self.knots, dtype=float)
        self.epsilons = np.asarray(self.epsilons, dtype=float)
        if self.knots.ndim != 1 or len(self.knots) < 2:
            raise ConfigurationError("envelope needs at least two knots")
        if np.any(np.diff(self.knots) <= 0):
            raise ConfigurationError("envelope knots must be strictly increasing")
        if len(self.epsilons) != len(self.knots) - 1:
            raise ConfigurationError("need one epsilon per subinterval")
        if np.any(self.epsilons < 0):
            raise ConfigurationError("envelope bounds must be nonnegative")

    @property
    def start(self) -> float:
        return float(self.knots[0])

    @property
    def end(self) -> float:
        return float(self.knots[-1])


def uniform_knots(problem, n_intervals: int = 40) -> np.ndarray:
    """Equispaced partition of [x0, test_end] (or the Burgers time window)."""
    if isinstance(problem, BurgersProblem):
        a, b = problem.test_time
    else:
        a, b = problem.x0, problem.test_domain[1]
    return np.linspace(a, b, int(n_intervals) + 1)


def envelope_from_function(residual_fn, knots, oversample=10, safety_factor=1.1) -> ResidualEnvelope:
    """Envelope of an arbitrary scalar residual function (testing hook)."""
    knots = np.asarray(knots, dtype=float)
    if int(oversample) < 1:
        raise ConfigurationError("oversample must be >= 1")
    eps = np.empty(len(knots) - 1)
    with np.errstate(divide="ignore"):  # singular sources hit inf at a pole
        for k in range(len(knots) - 1):
            xi = np.linspace(knots[k], knots[k + 1], int(oversample))
            eps[k] = safety_factor * np.max(np.abs(residual_fn(xi)))
    if np.any(np.isnan(eps)):
        raise ConfigurationError("residual samples contain NaN; model state is broken")
    # eps = inf is kept: a singular source makes |r| genuinely unbounded on
    # that subinterval, and the bound honestly diverges there
    return ResidualEnvelope(knots, eps, int(oversample), float(safety_factor))


def estimate_envelope(trained, knots=None, oversample=10, safety_factor=1.1) -> ResidualEnvelope:
    """Sampled residual envelope of a trained surrogate over its test domain."""
    problem = trained.problem
    if isinstance(problem, BurgersProblem):
        raise ConfigurationError("envelopes are defined for ODE problems only")
    if knots is None:
        knots = uniform_knots(problem)
    knots = np.asarray(knots, dtype=float)
    if int(oversample) < 2:
        raise ConfigurationError("oversample must be >= 2 for trained models")
    x0, x_end = problem.x0, problem.test_domain[1]
    if knots[0] > x0 + 1e-12 or knots[-1] < x_end - 1e-12:
        raise ConfigurationError(
            f"knots [{knots[0]}, {knots[-1]}] do not cover [{x0}, {x_end}]"
        )
    return envelope_from_function(
        lambda xs: residual_values(problem, trained.params, xs),
        knots,
        oversample,
        safety_factor,
    )


# ---------------------------------------------------------------------------
# closed-form kernels
# ---------------------------------------------------------------------------


def _segment_limits(envelope: ResidualEnvelope, x):
    """Clip each subinterval to [knots[k], min(knots[k+1], x)] per point.

    Subintervals entirely beyond x collapse to zero length, so one
    vectorized formula covers full, partial, and untouched segments.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < envelope.start - 1e-12) or np.any(x > envelope.end + 1e-12):
        raise DomainError(
            f"evaluation points outside envelope coverage [{envelope.start}, {envelope.end}]"
        )
    xs = x[:, None]
    lo = np.minimum(envelope.knots[None, :-1], xs)
    hi = np.minimum(envelope.knots[None, 1:], xs)
    return x, xs, lo, hi


def _accumulate(seg, epsilons):
    """Sum seg * eps per point, keeping zero-length segments at exactly zero.

    An infinite envelope bound (singular source) must not poison segments
    the integral never touches, so 0-weight segments contribute 0 even
    against eps = inf.
    """
    with np.errstate(invalid="ignore"):
        contrib = seg * epsilons[None, :]
    return np.where(seg > 0.0, contrib, 0.0).sum(axis=1)


def bound_first_order(envelope: ResidualEnvelope, lam: float, x):
    """Error bound for u' + lam u = f: integral of exp(-lam (x-xi)) * env."""
    if lam <= 0:
        raise ConfigurationError("first-order bound requires lam > 0")
    scalar = np.ndim(x) == 0
    x, xs, lo, hi = _segment_limits(envelope, np.atleast_1d(x))
    seg = (np.exp(-lam * (xs - hi)) - np.exp(-lam * (xs - lo))) / lam
    out = _accumulate(seg, envelope.epsilons)
    return float(out[0]) if scalar else out


def bound_second_order_distinct(envelope: ResidualEnvelope, lam1: float, lam2: float, x):
    """Error bound for distinct positive decay rates lam1 != lam2."""
    if lam1 <= 0 or lam2 <= 0:
        raise ConfigurationError("distinct-rate bound requires lam1, lam2 > 0")
    if abs(lam2 - lam1) <= EQUAL_RATE_TOL:
        raise ConfigurationError(
            "decay rates too close; use bound_second_order_equal_limit"
        )
    scalar = np.ndim(x) == 0
    x, xs, lo, hi = _segment_limits(envelope, np.atleast_1d(x))
    seg1 = (np.exp(-lam1 * (xs - hi)) - np.exp(-lam1 * (xs - lo))) / lam1
    seg2 = (np.exp(-lam2 * (xs - hi)) - np.exp(-lam2 * (xs - lo))) / lam2
    out = _accumulate((seg1 - seg2) / (lam2 - lam1), envelope.epsilons)
    return float(out[0]) if scalar else out


def bound_second_order_equal_limit(envelope: ResidualEnvelope, lam: float, x):
    """Equal-rate limit: integral of (x-xi) exp(-lam (x-xi)) * env.

    This is the lam2 -> lam1 limit of the distinct-rate bound; it covers
    complex-conjugate characteristic roots with positive real part, where
    |sin(w s)/w| <= s makes the limit kernel a valid majorant.
    """
    if lam <= 0:
        raise ConfigurationError("equal-limit bound requires lam > 0")
    scalar = np.ndim(x) == 0
    x, xs, lo, hi = _segment_limits(envelope, np.atleast_1d(x))

    def anti(s):
        return np.exp(-lam * s) * (s / lam + 1.0 / (lam * lam))

    seg = anti(xs - hi) - anti(xs - lo)
    out = _accumulate(seg, envelope.epsilons)
    return float(out[0]) if scalar else out


def bound_second_order_zero(envelope: ResidualEnvelope, x):
    """Zero-rate case (e.g. u'' + u = f): integral of (x-xi) * env."""
    scalar = np.ndim(x) == 0
    x, xs, lo, hi = _segment_limits(envelope, np.atleast_1d(x))
    seg = xs * (hi - lo) - 0.5 * (hi * hi - lo * lo)
    out = _accumulate(seg, envelope.epsilons)
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# pseudo-aleatoric profiles
# ---------------------------------------------------------------------------


@dataclass
class PseudoAleatoricProfile:
    """Pseudo-aleatoric standard deviation on an evaluation grid."""

    grid: np.ndarray
    sigma_p: np.ndarray
    kind: str

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.sigma_p = np.asarray(self.sigma_p, dtype=float)
        if self.kind not in PROFILE_KINDS:
            raise ConfigurationError(f"unknown profile kind {self.kind!r}")
        if np.any(self.sigma_p < 0):
            raise ConfigurationError("sigma_p must be nonnegative")


def ode_bound_kind(problem: ODEProblem):
    """(kind, rates) the bound kernel dispatch resolves to for a problem."""
    if problem.order == 1:
        return "first_order", (problem.lam,)
    lam1, lam2 = problem.real_parts()
    if abs(lam1) <= EQUAL_RATE_TOL and abs(lam2) <= EQUAL_RATE_TOL:
        return "second_order_zero", ()
    if abs(lam2 - lam1) <= EQUAL_RATE_TOL:
        if lam1 <= 0:
            raise ConfigurationError("error bounds need nonnegative decay rates")
        return "second_order_equal_limit", (0.5 * (lam1 + lam2),)
    if lam1 > 0 and lam2 > 0:
        return "second_order_distinct", (lam1, lam2)
    raise ConfigurationError(
        f"no bound kernel for decay rates ({lam1}, {lam2}); "
        "supported: both positive or both zero"
    )


def pseudo_sigma(problem: ODEProblem, envelope: ResidualEnvelope, x):
    """sigma_P(x) for a linear ODE: the closed-form error bound at x."""
    kind, rates = ode_bound_kind(problem)
    if kind == "first_order":
        return bound_first_order(envelope, rates[0], x)
    if kind == "second_order_zero":
        return bound_second_order_zero(envelope, x)
    if kind == "second_order_equal_limit":
        return bound_second_order_equal_limit(envelope, rates[0], x)
    return bound_second_order_distinct(envelope, rates[0], rates[1], x)


def burgers_pseudo_sigma(trained, x, t, n_time_samples: int = 64) -> float:
    """Accumulated-|residual| heuristic: (t - t0) * mean_i |r(x, t_i)|."""
    if n_time_samples < 1:
        raise ConfigurationError("n_time_samples must be >= 1")
    t = float(t)
    if t < 0:
        raise DomainError("Burgers pseudo sigma needs t >= 0")
    if t == 0.0:
        return 0.0
    taus = np.linspace(0.0, t, int(n_time_samples))
    pts = np.stack([np.full_like(taus, float(x)), taus], axis=1)
    r = residual_values(trained.problem, trained.params, pts)
    return float(t * np.mean(np.abs(r)))


def burgers_sigma_grid(trained, points, n_time_samples: int = 64) -> np.ndarray:
    """Vectorized accumulated-residual sigma for (x, t) rows of ``points``."""
    pts = np.asarray(points, dtype=float)
    n = int(n_time_samples)
    frac = np.linspace(0.0, 1.0, n)
    taus = pts[:, 1][:, None] * frac[None, :]
    flat = np.stack(
        [np.repeat(pts[:, 0], n), taus.ravel()], axis=1
    )
    r = residual_values(trained.problem, trained.params, flat).reshape(len(pts), n)
    return pts[:, 1] * np.mean(np.abs(r), axis=1)


def pseudo_profile(problem, trained, envelope, grid, n_time_samples: int = 64) -> PseudoAleatoricProfile:
    """sigma_P over an evaluation grid, dispatched on the problem kind."""
    grid = np.asarray(grid, dtype=float)
    if isinstance(problem, BurgersProblem):
        if grid.ndim != 2 or grid.shape[1] != 2:
            raise ConfigurationError("Burgers profiles need (x, t) grid rows")
        sig = burgers_sigma_grid(trained, grid, n_time_samples)
        return PseudoAleatoricProfile(grid, sig, "burgers_heuristic")
    if not isinstance(problem, ODEProblem):
        raise ConfigurationError(f"unsupported problem type {type(problem).__name__}")
    if envelope is None:
        raise ConfigurationError("ODE profiles need a residual envelope")
    kind, _ = ode_bound_kind(problem)
    sig = pseudo_sigma(problem, envelope, grid)
    return PseudoAleatoricProfile(grid, np.asarray(sig, dtype=float), kind)


def profile_to_csv(profile: PseudoAleatoricProfile, path):
    """Write (x, sigma_P) columns; (x, t, sigma_P) for space-time grids."""
    with open(path, "w") as fh:
        if profile.grid.ndim == 2:
            fh.write("x,t,sigma_P\n")
            for (x, t), s in zip(profile.grid, profile.sigma_p):
                fh.write(f"{x:.17g},{t:.17g},{s:.17g}\n")
        else:
            fh.write("x,sigma_P\n")
            for x, s in zip(profile.grid, profile.sigma_p):
                fh.write(f"{x:.17g},{s:.17g}\n")
