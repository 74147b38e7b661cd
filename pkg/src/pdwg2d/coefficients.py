"""Problem coefficients and smooth scalar fields.

All callables are vectorized over point arrays of shape ``(..., 2)``:
``a`` returns ``(..., 2, 2)``, ``div_a`` and ``b`` return ``(..., 2)``,
``div_b`` returns ``(...)``.  ``div_a`` is the row-wise divergence of the
diffusion tensor, needed to apply the second-order operator to smooth
functions without numerical differentiation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass
class ScalarField:
    """A scalar function with analytic gradient and Hessian."""

    value: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]  # (..., 2)
    hess: Callable[[np.ndarray], np.ndarray]  # (..., 2, 2)


@dataclass
class Coefficients:
    """Diffusion tensor, convection field and stabilizer weight."""

    a: Callable[[np.ndarray], np.ndarray]
    div_a: Callable[[np.ndarray], np.ndarray]
    b: Callable[[np.ndarray], np.ndarray]
    div_b: Callable[[np.ndarray], np.ndarray]
    gamma: float = 0.0

    def apply_diffusion(self, field: ScalarField, pts: np.ndarray) -> np.ndarray:
        """div(a grad u) = a : hess(u) + div_a . grad(u) at ``pts``."""
        H = field.hess(pts)
        return np.einsum("...ij,...ij->...", self.a(pts), H) + np.einsum(
            "...i,...i->...", self.div_a(pts), field.grad(pts)
        )

    def a_frobenius_sup(self, pts: np.ndarray) -> float:
        """sup over ``pts`` of the Frobenius norm of the diffusion tensor."""
        A = self.a(pts)
        return float(np.sqrt(np.einsum("...ij,...ij->...", A, A)).max())


def isotropic_constant(alpha: float, b=(0.0, 0.0), gamma: float = 0.0) -> Coefficients:
    """Constant diffusion ``alpha * I`` and constant convection ``b``."""
    bvec = np.asarray(b, dtype=float)

    def a(pts):
        out = np.zeros(pts.shape[:-1] + (2, 2))
        out[..., 0, 0] = alpha
        out[..., 1, 1] = alpha
        return out

    def div_a(pts):
        return np.zeros_like(pts)

    def bfun(pts):
        return np.broadcast_to(bvec, pts.shape).copy()

    def div_b(pts):
        return np.zeros(pts.shape[:-1])

    return Coefficients(a=a, div_a=div_a, b=bfun, div_b=div_b, gamma=gamma)
