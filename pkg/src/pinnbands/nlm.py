"""Bayesian linear regression on the trained feature basis (neural linear model).

The deterministic network's last hidden layer defines a feature map; a
Gaussian linear head on those features admits an exact posterior.  The
likelihood is heteroscedastic: each simulated observation (the trained
network's own output at a collocation point) carries the pseudo-aleatoric
variance at that point, so the head is constrained tightly where the error
bound is tight and left to the prior where it is loose.

The hard-IC transform is applied outside the linear head: the head is fit
on raw network outputs, and predictions push the head mean through the
transform, scaling epistemic spread by the transform mask.  Every posterior
sample therefore satisfies the initial conditions exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .bands import PredictiveBand
from .bounds import ResidualEnvelope, pseudo_sigma
from .errors import ConditioningError, ConfigurationError, ShapeError
from .network import forward_values, hidden_features
from .problems import surrogate_values, transform_offset_scale

VAR_FLOOR = 1e-10


@dataclass
class FeatureMatrix:
    """Last-hidden-layer activations plus a constant bias column, one row
    per collocation point."""

    points: np.ndarray
    matrix: np.ndarray

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        self.matrix = np.asarray(self.matrix, dtype=float)
        if self.matrix.shape[0] != self.points.shape[0]:
            raise ShapeError("one feature row per point required")
        if not np.all(np.isfinite(self.matrix)):
            raise ShapeError("non-finite feature entries")


@dataclass
class SimulatedDataset:
    """Targets are the deterministic network's raw outputs; variances are the
    floored squared pseudo-aleatoric sigmas at the same points."""

    points: np.ndarray
    targets: np.ndarray
    variances: np.ndarray

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        self.targets = np.asarray(self.targets, dtype=float)
        self.variances = np.asarray(self.variances, dtype=float)
        if not (len(self.points) == len(self.targets) == len(self.variances)):
            raise ShapeError("dataset arrays must have equal length")
        if np.any(self.variances <= 0):
            raise ConfigurationError("dataset variances must be positive (floor them)")


@dataclass
class NLMPosterior:
    mean: np.ndarray
    covariance: np.ndarray
    prior_sigma: float


@dataclass
class PriorEvalGrid:
    """Everything prior selection needs on the evaluation grid."""

    points: np.ndarray
    features: np.ndarray
    u_mse: np.ndarray
    sigma_p: np.ndarray
    offset: np.ndarray
    scale: np.ndarray


@dataclass
class PriorSearchResult:
    sigma: float
    feasible: bool
    n_violations: int
    objective: float
    posterior: NLMPosterior


def extract_features(trained, x) -> np.ndarray:
    """Feature vector at one point: last hidden activations plus bias 1."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    hidden = hidden_features(trained.params, x[None, :])
    return np.concatenate([hidden[0], [1.0]])


def feature_matrix(trained, points) -> FeatureMatrix:
    pts = np.asarray(points, dtype=float)
    X = pts[:, None] if pts.ndim == 1 else pts
    hidden = hidden_features(trained.params, X)
    mat = np.concatenate([hidden, np.ones((len(X), 1))], axis=1)
    return FeatureMatrix(pts, mat)


def build_simulated_dataset(
    trained, envelope: ResidualEnvelope, points=None, var_floor: float = VAR_FLOOR
) -> SimulatedDataset:
    """Simulated observations at the collocation points of ``trained``.

    sigma_P vanishes at x0, so variances are floored to keep the noise
    matrix invertible; the transform pins the prediction there regardless.
    Points with an infinite bound (singular sources) carry zero information
    and are dropped.
    """
    from .training import training_grid

    if points is None:
        points = training_grid(trained)
    pts = np.asarray(points, dtype=float)
    targets = forward_values(trained.params, pts[:, None])
    sig = np.asarray(pseudo_sigma(trained.problem, envelope, pts), dtype=float)
    variances = np.maximum(sig * sig, var_floor)
    keep = np.isfinite(variances)
    if not np.any(keep):
        raise ConfigurationError("no collocation point has a finite error bound")
    return SimulatedDataset(pts[keep], targets[keep], variances[keep])


def nlm_fit(features: FeatureMatrix, data: SimulatedDataset, prior_sigma: float) -> NLMPosterior:
    """Exact posterior of the linear head under the heteroscedastic likelihood.

    Solves (Phi^T S^-1 Phi + sigma^-2 I) via Cholesky; never forms an
    explicit inverse of the noise matrix.
    """
    if prior_sigma <= 0:
        raise ConfigurationError("prior_sigma must be positive")
    phi = features.matrix
    if phi.shape[0] != len(data.targets):
        raise ShapeError("feature rows and dataset length differ")
    weighted = phi / data.variances[:, None]
    a = phi.T @ weighted
    a[np.diag_indices_from(a)] += 1.0 / (prior_sigma * prior_sigma)
    try:
        chol = cho_factor(a, lower=True)
    except np.linalg.LinAlgError as exc:
        raise ConditioningError(
            "posterior precision matrix is not numerically SPD",
            diagnostics={
                "feature_dim": phi.shape[1],
                "n_points": phi.shape[0],
                "min_variance": float(np.min(data.variances)),
                "prior_sigma": float(prior_sigma),
            },
        ) from exc
    cov = cho_solve(chol, np.eye(a.shape[0]))
    cov = 0.5 * (cov + cov.T)
    mean = cho_solve(chol, weighted.T @ data.targets)
    return NLMPosterior(mean, cov, float(prior_sigma))


def nlm_predict(posterior: NLMPosterior, feature_vector, sigma_p_at_x: float):
    """Raw-head predictive mean and variance at one point (pre-transform)."""
    phi = np.asarray(feature_vector, dtype=float)
    if phi.shape != posterior.mean.shape:
        raise ShapeError("feature vector does not match posterior dimension")
    mean = float(phi @ posterior.mean)
    var = float(sigma_p_at_x) ** 2 + float(phi @ posterior.covariance @ phi)
    return mean, var


def _grid_moments(posterior: NLMPosterior, features: np.ndarray):
    mean_raw = features @ posterior.mean
    epi_raw = np.einsum("ij,jk,ik->i", features, posterior.covariance, features)
    return mean_raw, np.maximum(epi_raw, 0.0)


def default_candidate_sigmas() -> np.ndarray:
    """100 equally spaced prior standard deviations in [0.1, 1]."""
    return np.linspace(0.1, 1.0, 100)


def make_prior_eval_grid(trained, envelope: ResidualEnvelope, n_points: int = 200) -> PriorEvalGrid:
    problem = trained.problem
    pts = np.linspace(problem.x0, problem.test_domain[1], int(n_points))
    offset, scale = transform_offset_scale(problem, pts)
    return PriorEvalGrid(
        points=pts,
        features=feature_matrix(trained, pts).matrix,
        u_mse=surrogate_values(problem, trained.params, pts),
        sigma_p=np.asarray(pseudo_sigma(problem, envelope, pts), dtype=float),
        offset=offset,
        scale=scale,
    )


def optimize_prior(
    features: FeatureMatrix,
    data: SimulatedDataset,
    eval_grid: PriorEvalGrid,
    candidate_sigmas=None,
) -> PriorSearchResult:
    """Grid-search the prior scale.

    A candidate is feasible when the 3-sigma predictive tube covers the
    error bound at every evaluation point:

        |mean(x) - u_mse(x)| <= 3 sd(x) - sigma_P(x).

    Among feasible candidates the winner minimizes
    ||mean - u_mse|| + ||sd - sigma_P|| (Euclidean over the grid); if none
    is feasible the least-violating candidate is returned, flagged.
    """
    if candidate_sigmas is None:
        candidate_sigmas = default_candidate_sigmas()
    candidates = np.asarray(candidate_sigmas, dtype=float)
    if candidates.size == 0:
        raise ConfigurationError("candidate_sigmas must be nonempty")

    finite = np.isfinite(eval_grid.sigma_p)  # infinite bound covers trivially
    best = None
    for sigma in candidates:
        posterior = nlm_fit(features, data, float(sigma))
        mean_raw, epi_raw = _grid_moments(posterior, eval_grid.features)
        mean = eval_grid.offset + eval_grid.scale * mean_raw
        sd = np.sqrt(eval_grid.sigma_p**2 + eval_grid.scale**2 * epi_raw)
        gap = (
            np.abs(mean[finite] - eval_grid.u_mse[finite])
            - (3.0 * sd[finite] - eval_grid.sigma_p[finite])
        )
        n_viol = int(np.sum(gap > 0))
        objective = float(
            np.linalg.norm(mean[finite] - eval_grid.u_mse[finite])
            + np.linalg.norm(sd[finite] - eval_grid.sigma_p[finite])
        )
        cand = PriorSearchResult(float(sigma), n_viol == 0, n_viol, objective, posterior)
        if best is None:
            best = cand
        elif cand.feasible and not best.feasible:
            best = cand
        elif cand.feasible == best.feasible:
            key = (cand.objective if cand.feasible else (cand.n_violations, cand.objective))
            best_key = (best.objective if best.feasible else (best.n_violations, best.objective))
            if key < best_key:
                best = cand
    return best


def nlm_band(trained, posterior: NLMPosterior, envelope: ResidualEnvelope, grid) -> PredictiveBand:
    """Predictive band on ``grid`` with the transform applied.

    Mean and epistemic spread go through the hard-IC transform (the mask
    multiplies the head); sigma_P is added untransformed since it already
    bounds the transformed error.
    """
    grid = np.asarray(grid, dtype=float)
    problem = trained.problem
    phi = feature_matrix(trained, grid).matrix
    mean_raw, epi_raw = _grid_moments(posterior, phi)
    offset, scale = transform_offset_scale(problem, grid)
    sig = np.asarray(pseudo_sigma(problem, envelope, grid), dtype=float)
    epi = scale**2 * epi_raw
    sigma_p2 = sig * sig
    return PredictiveBand(
        grid=grid,
        mean=offset + scale * mean_raw,
        epistemic_var=epi,
        sigma_p2=sigma_p2,
        total_var=epi + sigma_p2,
    )


def export_posterior_json(posterior: NLMPosterior, path, flags: Optional[dict] = None):
    """JSON record: prior sigma, head mean, covariance upper triangle, flags."""
    dim = posterior.mean.shape[0]
    iu = np.triu_indices(dim)
    record = {
        "prior_sigma": posterior.prior_sigma,
        "dim": int(dim),
        "mean": posterior.mean.tolist(),
        "covariance_upper_triangle": posterior.covariance[iu].tolist(),
        "flags": flags or {},
    }
    with open(path, "w") as fh:
        json.dump(record, fh, indent=2, sort_keys=True)
