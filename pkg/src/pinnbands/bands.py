"""Predictive uncertainty bands shared by the NLM and VI back ends."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError


@dataclass
class PredictiveBand:
    """Per-grid-point predictive moments.

    ``total_var = epistemic_var + sigma_p2`` pointwise; ``sigma_p2`` is zero
    for methods that carry no pseudo-aleatoric term.
    """

    grid: np.ndarray
    mean: np.ndarray
    epistemic_var: np.ndarray
    sigma_p2: np.ndarray
    total_var: np.ndarray

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        n = self.grid.shape[0]
        for name in ("mean", "epistemic_var", "sigma_p2", "total_var"):
            arr = np.asarray(getattr(self, name), dtype=float)
            setattr(self, name, arr)
            if arr.shape != (n,):
                raise ShapeError(f"band field {name} has shape {arr.shape}, expected ({n},)")
        if np.any(self.epistemic_var < 0) or np.any(self.sigma_p2 < 0):
            raise ShapeError("variances must be nonnegative")
        if not np.allclose(self.total_var, self.epistemic_var + self.sigma_p2, rtol=0, atol=1e-12):
            raise ShapeError("total_var must equal epistemic_var + sigma_p2")

    @property
    def sd_total(self) -> np.ndarray:
        return np.sqrt(self.total_var)


def band_to_csv(band: PredictiveBand, path):
    """CSV export with columns x[,t], mean, epistemic_var, sigma_P2, total_var."""
    two_d = band.grid.ndim == 2
    with open(path, "w") as fh:
        fh.write(("x,t" if two_d else "x") + ",mean,epistemic_var,sigma_P2,total_var\n")
        for i in range(len(band.mean)):
            coords = (
                f"{band.grid[i, 0]:.17g},{band.grid[i, 1]:.17g}"
                if two_d
                else f"{band.grid[i]:.17g}"
            )
            fh.write(
                f"{coords},{band.mean[i]:.17g},{band.epistemic_var[i]:.17g},"
                f"{band.sigma_p2[i]:.17g},{band.total_var[i]:.17g}\n"
            )
