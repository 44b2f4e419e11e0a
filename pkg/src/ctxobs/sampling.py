"""Random operators, projections and densities for tests, demos and the acceptance suite."""
from __future__ import annotations

import numpy as np

from .context import random_unitary
from .linalg import Subspace
from .plattice import Projection


def random_hermitian(n: int, rng: np.random.Generator, degenerate: bool = False) -> np.ndarray:
    """A random Hermitian matrix.

    With ``degenerate=True`` the spectrum is drawn from a few small integers,
    so repeated eigenvalues are common.
    """
    if degenerate:
        values = rng.integers(-2, 3, size=n).astype(float)
        u = random_unitary(n, rng)
        a = (u * values) @ u.conj().T
    else:
        z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        a = z + z.conj().T
    return (a + a.conj().T) / 2


def random_projection(n: int, rng: np.random.Generator, rank: int | None = None) -> Projection:
    if rank is None:
        rank = int(rng.integers(0, n + 1))
    u = random_unitary(n, rng)
    return Projection(Subspace(u[:, :rank], n))


def random_density(n: int, rng: np.random.Generator) -> np.ndarray:
    """A random full-rank density matrix."""
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    rho = z @ z.conj().T
    return rho / np.trace(rho).real


def random_unit_vector(n: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return z / np.linalg.norm(z)
