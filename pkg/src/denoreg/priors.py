"""Deriving denoisers from quadratic priors and inspecting their filters.

A prior rho(x) = (weight/2) ||B x||^2 is 2-homogeneous, so the map
f(x) = x - grad rho(x) = x - weight B^T B x is a valid denoising engine
whenever weight ||B^T B|| <= 1, and satisfies the roundtrip identity
(1/2) x^T (x - f(x)) = rho(x) exactly. For desk-scale problems the
implied filter matrix W = I - weight B^T B can be materialized and its
structure (symmetry, row sums, eigenvalue range) checked directly.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

# Dense filter materialization is meant for desk-scale inspection only.
MAX_DENSE_SIZE = 4096


@dataclass(frozen=True)
class QuadraticPrior:
    """rho(x) = (weight/2) ||B x||^2 for a matrix-free linear B."""

    forward: Callable[[np.ndarray], np.ndarray]
    adjoint: Callable[[np.ndarray], np.ndarray]
    weight: float
    name: str = "quadratic"

    def __post_init__(self):
        if self.weight < 0:
            raise ValueError(f"weight must be nonnegative, got {self.weight}")

    def rho(self, x: np.ndarray) -> float:
        bx = self.forward(np.asarray(x, dtype=np.float64))
        return 0.5 * self.weight * float(np.vdot(bx, bx))

    def gradient(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return self.weight * self.adjoint(self.forward(x))


def difference_prior_1d(weight: float) -> QuadraticPrior:
    """Periodic forward differences on 1D signals."""

    def forward(x):
        return np.roll(x, -1) - x

    def adjoint(g):
        return np.roll(g, 1) - g

    return QuadraticPrior(forward, adjoint, weight, name="difference_1d")


def difference_prior_2d(weight: float) -> QuadraticPrior:
    """Stacked periodic horizontal and vertical differences on images."""

    def forward(x):
        return np.stack([np.roll(x, -1, axis=0) - x, np.roll(x, -1, axis=1) - x])

    def adjoint(g):
        return (np.roll(g[0], 1, axis=0) - g[0]) + (np.roll(g[1], 1, axis=1) - g[1])

    return QuadraticPrior(forward, adjoint, weight, name="difference_2d")


def identity_prior(weight: float) -> QuadraticPrior:
    """B = I; useful as a counterexample (its filter is not row-stochastic)."""
    return QuadraticPrior(lambda x: np.array(x, dtype=np.float64), lambda g: g, weight, name="identity")


def gram_norm_bound(prior: QuadraticPrior, shape, iters: int = 200, seed: int = 0) -> float:
    """Power-iteration estimate of ||B^T B|| on the given domain shape."""
    rng = np.random.Generator(np.random.PCG64(seed))
    v = rng.standard_normal(shape)
    v /= np.linalg.norm(v)
    value = 0.0
    for _ in range(iters):
        w = prior.adjoint(prior.forward(v))
        value = float(np.linalg.norm(w))
        if value == 0.0:
            return 0.0
        v = w / value
    return value


@dataclass(frozen=True)
class InducedDenoiser:
    """Engine f(x) = x - weight B^T B x derived from a quadratic prior.

    Smoothing strength is set by the prior weight; sigma_f is a nominal
    label kept for engine-interface compatibility.
    """

    prior: QuadraticPrior
    sigma_f: float = 1.0
    name: str = field(default="induced", init=False)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return x - self.prior.gradient(x)


def induced_denoiser(prior: QuadraticPrior, shape) -> InducedDenoiser:
    """Derive the engine, guarding passivity: weight ||B^T B|| <= 1.

    The spectral bound is estimated by power iteration on the given
    domain shape.
    """
    bound = gram_norm_bound(prior, shape)
    if prior.weight * bound > 1.0 + 1e-9:
        raise ValueError(
            f"prior weight {prior.weight} violates passivity: "
            f"weight * ||B^T B|| = {prior.weight * bound:.6g} > 1 "
            f"(spectral bound {bound:.6g})"
        )
    return InducedDenoiser(prior)


@dataclass(frozen=True)
class DenseFilterMatrix:
    """Materialized filter W = I - weight B^T B for a desk-scale domain."""

    matrix: np.ndarray
    shape: tuple

    @property
    def symmetry_deviation(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.T)))


def kernelize(prior: QuadraticPrior, shape) -> DenseFilterMatrix:
    """Build the dense filter by applying x - grad rho(x) to basis vectors."""
    shape = tuple(np.atleast_1d(shape))
    n = int(np.prod(shape))
    if n > MAX_DENSE_SIZE:
        raise ValueError(f"dense filter limited to {MAX_DENSE_SIZE} unknowns, got {n}")
    w = np.empty((n, n))
    basis = np.zeros(shape)
    flat = basis.reshape(-1)
    for j in range(n):
        flat[j] = 1.0
        w[:, j] = (basis - prior.gradient(basis)).reshape(-1)
        flat[j] = 0.0
    return DenseFilterMatrix(matrix=w, shape=shape)


@dataclass(frozen=True)
class RowStochasticReport:
    row_stochastic: bool
    max_row_sum_deviation: float
    nonnegative: bool


def row_stochastic_check(filter_matrix: DenseFilterMatrix, tol: float = 1e-10) -> RowStochasticReport:
    """Check that every row sums to 1; nonnegativity is reported, not required."""
    w = filter_matrix.matrix
    deviation = float(np.max(np.abs(w.sum(axis=1) - 1.0)))
    return RowStochasticReport(
        row_stochastic=deviation <= tol,
        max_row_sum_deviation=deviation,
        nonnegative=bool(np.all(w >= 0)),
    )


def directional_consistency(prior: QuadraticPrior, x: np.ndarray) -> float:
    """Relative gap ||f(x) - W x|| / ||x|| between the engine and its filter."""
    x = np.asarray(x, dtype=np.float64)
    engine_out = x - prior.gradient(x)
    filter_out = (kernelize(prior, x.shape).matrix @ x.reshape(-1)).reshape(x.shape)
    return float(np.linalg.norm(engine_out - filter_out)) / float(np.linalg.norm(x))
