import os
from dataclasses import dataclass

import numpy as np
import pytest

from denoreg.image import load_image

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")


def rng(seed):
    return np.random.Generator(np.random.PCG64(seed))


@pytest.fixture(scope="session")
def camera():
    return load_image(os.path.join(DATA_DIR, "camera_256.png"))


@pytest.fixture(scope="session")
def crop64(camera):
    return camera[96:160, 96:160].copy()


@pytest.fixture(scope="session")
def crop16(camera):
    return camera[120:136, 120:136].copy()


# --- engine test doubles -------------------------------------------------


@dataclass(frozen=True)
class ZeroEngine:
    sigma_f: float = 1.0
    name: str = "zero"

    def __call__(self, x):
        return np.zeros_like(np.asarray(x, dtype=np.float64))


@dataclass(frozen=True)
class IdentityEngine:
    sigma_f: float = 1.0
    name: str = "identity"

    def __call__(self, x):
        return np.array(x, dtype=np.float64)


@dataclass(frozen=True)
class ScaledEngine:
    gain: float = 0.5
    sigma_f: float = 1.0
    name: str = "scaled"

    def __call__(self, x):
        return self.gain * np.asarray(x, dtype=np.float64)


@dataclass(frozen=True)
class MatrixEngine:
    """Dense linear engine W acting on flattened images."""

    matrix: np.ndarray
    sigma_f: float = 1.0
    name: str = "matrix"

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        return (self.matrix @ x.reshape(-1)).reshape(x.shape)


@dataclass(frozen=True)
class ConstantEngine:
    value: float = 7.0
    sigma_f: float = 1.0
    name: str = "constant"

    def __call__(self, x):
        return np.full_like(np.asarray(x, dtype=np.float64), self.value)


def symmetric_matrix_engine(n, eigenvalues, seed=0):
    """W = Q diag(eigenvalues) Q^T for a seeded random orthogonal Q."""
    q, _ = np.linalg.qr(rng(seed).standard_normal((n, n)))
    w = q @ np.diag(np.asarray(eigenvalues, dtype=np.float64)) @ q.T
    return MatrixEngine(w)


def materialize(op, shape):
    """Dense matrix of a linear operator given by a callable on images."""
    n = int(np.prod(shape))
    out = np.empty((n, n))
    basis = np.zeros(shape)
    flat = basis.reshape(-1)
    for j in range(n):
        flat[j] = 1.0
        out[:, j] = np.asarray(op(basis)).reshape(-1)
        flat[j] = 0.0
    return out
