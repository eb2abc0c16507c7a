"""scikit-learn style transformers over the path, family and dyadic machinery.

Rows of ``X`` are either paths (values at decreasing scales) or sampled
functions (values at the nodes of a uniform grid).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .dyadic import cz_decompose
from .grids import SampledFunction, ScaleGrid, SpaceGrid
from .kernels import build_family
from .pathstats import BlockSequence, family_statistics

STATISTICS = ("v_rho", "osc", "n_lambda", "maximal", "s2", "nd_lambda")


def _blocks(blocks):
    if blocks is None or isinstance(blocks, BlockSequence):
        return blocks
    if isinstance(blocks, (int, np.integer)):
        return BlockSequence.reciprocals(int(blocks))
    return BlockSequence(blocks)


class PathStatistics(BaseEstimator, TransformerMixin):
    """Per-path statistics; each row of ``X`` is one path sampled at ``scales``.

    Parameters
    ----------
    scales : array-like or ScaleGrid, optional
        Decreasing scales matching the columns of ``X``. Defaults to ``M, ..., 1``.
    rho : float
        Variation exponent, ``rho >= 1``.
    lam : float
        Jump threshold.
    blocks : array-like, int or None
        Block boundaries for the oscillation; an int ``n`` means ``1/i, i <= n``.
    """

    def __init__(self, scales=None, rho=2.0, lam=0.5, blocks=None):
        self.scales = scales
        self.rho = rho
        self.lam = lam
        self.blocks = blocks

    def fit(self, X, y=None):
        X = check_array(X, ensure_min_features=1)
        m = X.shape[1]
        if self.scales is None:
            grid = ScaleGrid(np.arange(m, 0, -1, dtype=float))
        else:
            grid = self.scales if isinstance(self.scales, ScaleGrid) else ScaleGrid(self.scales)
        if len(grid) != m:
            raise ValueError(f"X has {m} columns but {len(grid)} scales were given")
        if not self.rho >= 1:
            raise ValueError(f"rho must be >= 1, got {self.rho}")
        if not self.lam > 0:
            raise ValueError(f"lam must be positive, got {self.lam}")
        self.scale_grid_ = grid
        self.blocks_ = _blocks(self.blocks)
        self.n_features_in_ = m
        return self

    def transform(self, X):
        check_is_fitted(self, "scale_grid_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        stats = family_statistics(self.scale_grid_, X.T, self.rho, self.lam, self.blocks_)
        return np.column_stack([np.asarray(stats[k], dtype=float) for k in STATISTICS])

    def get_feature_names_out(self, input_features=None):
        return np.array(STATISTICS, dtype=object)


class FamilyStatistic(BaseEstimator, TransformerMixin):
    """One statistic of ``t -> phi_t * f`` at every node of an evaluation grid.

    Each row of ``X`` is a function sampled on ``SpaceGrid(x_min, x_max, h)``;
    the output row holds the chosen statistic at the nodes of ``eval_grid``
    (the input grid by default).
    """

    def __init__(self, statistic="v_rho", kernel="gauss", x_min=-12.0, x_max=12.0, h=0.005,
                 t_min=2.0 ** -10, t_max=2.0 ** 10, scales_per_octave=64, eval_grid=None,
                 rho=2.0, lam=0.5, blocks=200, method="auto"):
        self.statistic = statistic
        self.kernel = kernel
        self.x_min = x_min
        self.x_max = x_max
        self.h = h
        self.t_min = t_min
        self.t_max = t_max
        self.scales_per_octave = scales_per_octave
        self.eval_grid = eval_grid
        self.rho = rho
        self.lam = lam
        self.blocks = blocks
        self.method = method

    def fit(self, X, y=None):
        if self.statistic not in STATISTICS:
            raise ValueError(f"statistic must be one of {STATISTICS}, got {self.statistic!r}")
        self.grid_ = SpaceGrid(self.x_min, self.x_max, self.h)
        X = check_array(X)
        if X.shape[1] != self.grid_.n_nodes:
            raise ValueError(f"rows must have {self.grid_.n_nodes} values, got {X.shape[1]}")
        self.blocks_ = _blocks(self.blocks)
        scales = ScaleGrid.geometric(self.t_min, self.t_max, self.scales_per_octave)
        if self.blocks_ is not None and self.statistic == "osc":
            scales = scales.union(self.blocks_.boundaries)
        self.scale_grid_ = scales
        self.eval_grid_ = self.eval_grid or self.grid_
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "grid_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        out = np.empty((X.shape[0], self.eval_grid_.n_nodes))
        for i, row in enumerate(X):
            fam = build_family(SampledFunction(self.grid_, row), self.kernel, self.scale_grid_,
                               self.eval_grid_, method=self.method)
            stats = family_statistics(self.scale_grid_, fam.values, self.rho, self.lam, self.blocks_)
            out[i] = stats[self.statistic]
        return out


class CZDecomposer(BaseEstimator, TransformerMixin):
    """Calderon-Zygmund decomposition at height ``alpha``; ``transform`` returns the good parts.

    Rows of ``X`` are sampled on ``SpaceGrid(x_min, x_max, h)`` with ``h`` a
    power of two and ``x_min`` a multiple of ``h``.
    """

    def __init__(self, alpha=1.0, x_min=-8.0, x_max=8.0, h=2.0 ** -4):
        self.alpha = alpha
        self.x_min = x_min
        self.x_max = x_max
        self.h = h

    def fit(self, X, y=None):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        self.grid_ = SpaceGrid(self.x_min, self.x_max, self.h)
        X = check_array(X)
        if X.shape[1] != self.grid_.n_nodes:
            raise ValueError(f"rows must have {self.grid_.n_nodes} values, got {X.shape[1]}")
        self.n_features_in_ = X.shape[1]
        return self

    def decompose(self, X):
        """Full decompositions, one per row."""
        check_is_fitted(self, "grid_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        return [cz_decompose(SampledFunction(self.grid_, row), self.alpha) for row in X]

    def transform(self, X):
        return np.vstack([d.good.values for d in self.decompose(X)])
