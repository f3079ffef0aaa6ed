"""Scalarized design objective, its convexified augmentation, the four-block
multilinear relaxation, per-block linear restrictions, and the convexity
constants that make the relaxation tight.

The quartic objective is

    f(c) = (1 - beta) * (c^H M0 c * c^H M2 c - |c^H M1 c|^2) + beta * c^H M0 c,

augmented with mu1 (c^H c)^2 + mu2 (c^H c), which is constant on the unit
sphere but, for large enough mu1/mu2, makes the polynomial convex so that the
best of the four relaxed blocks dominates the multilinear value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from itertools import permutations

import numpy as np

from .model import ModelMatrices, as_array

__all__ = [
    "ScalarizationParams",
    "BlockSet",
    "BlockRestriction",
    "scalarized_objective",
    "augmented_objective",
    "multilinear_form",
    "block_restriction",
    "mu1_bound",
    "mu2_bound",
    "dense_phi",
]

# The 12 ordered pairs (i, j), i != j, from {0,1,2,3}; the complementary pair
# is read off inside the collapsed permutation sums.
_ORDERED_PAIRS = [(i, j) for i in range(4) for j in range(4) if i != j]
_COMPLEMENT = {
    (i, j): tuple(k for k in range(4) if k not in (i, j)) for i, j in _ORDERED_PAIRS
}


@dataclass(frozen=True)
class ScalarizationParams:
    """Trade-off weight, similarity radius, and convexification constants.

    mu1/mu2 left as None mean "use the certified bounds for these kernels";
    resolve() fills them in for a concrete set of model matrices.
    """

    beta: float
    zeta: float
    mu1: float | None = None
    mu2: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must lie in [0, 1]")
        if not 0.0 <= self.zeta <= 2.0:
            raise ValueError("zeta must lie in [0, 2]")
        for name in ("mu1", "mu2"):
            value = getattr(self, name)
            if value is not None and value < 0.0:
                raise ValueError(f"{name} must be nonnegative")

    def resolve(self, mats: ModelMatrices) -> "ScalarizationParams":
        """Return a copy with concrete mu1/mu2 values."""
        mu1 = self.mu1 if self.mu1 is not None else mu1_bound(self.beta, mats)
        mu2 = self.mu2 if self.mu2 is not None else mu2_bound(self.beta, mats)
        return replace(self, mu1=mu1, mu2=mu2)


@dataclass(frozen=True)
class BlockSet:
    """Four code blocks of the relaxed problem."""

    c1: np.ndarray
    c2: np.ndarray
    c3: np.ndarray
    c4: np.ndarray

    def __post_init__(self):
        for name in ("c1", "c2", "c3", "c4"):
            arr = as_array(getattr(self, name)).copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @classmethod
    def repeat(cls, code) -> "BlockSet":
        c = as_array(code)
        return cls(c, c.copy(), c.copy(), c.copy())

    def arrays(self) -> list[np.ndarray]:
        return [self.c1, self.c2, self.c3, self.c4]

    def feasibility_violation(self, c0, zeta: float) -> float:
        """Worst violation of the unit-energy and similarity constraints."""
        ref = as_array(c0)
        worst = 0.0
        for blk in self.arrays():
            worst = max(worst, abs(float(np.real(np.vdot(blk, blk))) - 1.0))
            worst = max(worst, (2.0 - zeta) - 2.0 * float(np.real(np.vdot(ref, blk))))
        return worst


@dataclass(frozen=True)
class BlockRestriction:
    """Affine restriction of the multilinear form to one free block:
    value(c) = Re{d_vec^H c} + d_scalar."""

    d_vec: np.ndarray
    d_scalar: float


def _real(value: complex, rel_tol: float = 1e-9) -> float:
    scale = max(abs(value), 1e-300)
    if abs(value.imag) > rel_tol * scale:
        raise ValueError(f"expected a real value, imaginary residual {value.imag:g}")
    return value.real


def scalarized_objective(code, beta: float, mats: ModelMatrices) -> float:
    """Weighted combination of the Doppler-curvature quartic and the SINR
    quadratic (both unnormalized quadratic forms of the code)."""
    c = as_array(code)
    q0 = complex(np.vdot(c, mats.m0 @ c))
    q1 = complex(np.vdot(c, mats.m1 @ c))
    q2 = complex(np.vdot(c, mats.m2 @ c))
    return _real((1.0 - beta) * (q0 * q2 - abs(q1) ** 2) + beta * q0)


def augmented_objective(code, params: ScalarizationParams, mats: ModelMatrices) -> float:
    """scalarized_objective plus mu1 (c^H c)^2 + mu2 (c^H c)."""
    if params.mu1 is None or params.mu2 is None:
        params = params.resolve(mats)
    c = as_array(code)
    energy = float(np.real(np.vdot(c, c)))
    return (scalarized_objective(c, params.beta, mats)
            + params.mu1 * energy * energy + params.mu2 * energy)


def _grams(blocks: list[np.ndarray], mats: ModelMatrices):
    """Stacked Gram matrices G_X[i, j] = blocks[i]^H X blocks[j] needed by the
    multilinear form: X in {I, M0, M1, M2}."""
    u = np.stack(blocks, axis=1)
    uh = u.conj().T
    return {
        "i": uh @ u,
        "m0": uh @ (mats.m0 @ u),
        "m1": uh @ (mats.m1 @ u),
        "m2": uh @ (mats.m2 @ u),
    }


def _quartic_sum(ga: np.ndarray, gb: np.ndarray) -> complex:
    """Sum of ga[p1, p2] * gb[p3, p4] over all 24 orderings of distinct
    (p1, p2, p3, p4), collapsed to the 12 ordered pairs with the two
    complementary orderings folded in."""
    total = 0.0 + 0.0j
    for (i, j) in _ORDERED_PAIRS:
        k, l = _COMPLEMENT[(i, j)]
        total += ga[i, j] * (gb[k, l] + gb[l, k])
    return total


def multilinear_form(blocks: BlockSet, params: ScalarizationParams,
                     mats: ModelMatrices) -> float:
    """Evaluate the four-block multilinear relaxation of the augmented
    objective.

    Three quartic kernels are averaged over the 24 block orderings (weights
    mu1, (1-beta), -(1-beta) on the identity, M0/M2, and M1/M1^H pairs) and
    two quadratic kernels over the 12 ordered block pairs (weights mu2 and
    beta on the identity and M0). Collapsing the permutation sums by the
    complementary-pair structure leaves 12 terms per kernel; the literal
    permutation loop is kept in the test suite as the oracle.
    """
    if params.mu1 is None or params.mu2 is None:
        params = params.resolve(mats)
    arrays = blocks.arrays()
    g = _grams(arrays, mats)
    g1h = g["m1"].conj().T
    one_m_beta = 1.0 - params.beta
    quartic = (params.mu1 * _quartic_sum(g["i"], g["i"])
               + one_m_beta * _quartic_sum(g["m0"], g["m2"])
               - one_m_beta * _quartic_sum(g["m1"], g1h))
    quad_kernel = params.mu2 * g["i"] + params.beta * g["m0"]
    quadratic = quad_kernel.sum() - np.trace(quad_kernel)
    return _real(quartic / 24.0 + quadratic / 12.0)


def _restriction_parts(arrays, matvecs, free: int, params: ScalarizationParams):
    """d-vector and scalar offset of the multilinear form as an affine
    function of block ``free``, the other blocks held fixed.

    ``matvecs`` maps kernel name -> list of kernel @ block products for all
    four blocks; only the entries of the fixed blocks are read.
    """
    others = [q for q in range(4) if q != free]
    mu1, mu2, beta = params.mu1, params.mu2, params.beta
    one_m_beta = 1.0 - beta
    m0u, m1u, m1hu, m2u = (matvecs[k] for k in ("m0", "m1", "m1h", "m2"))

    d = np.zeros_like(arrays[0])
    for i in others:
        j, k = (q for q in others if q != i)
        w_i = complex(np.vdot(arrays[j], arrays[k]))
        w_i = w_i + np.conj(w_i)
        w_m0 = complex(np.vdot(arrays[j], m0u[k])) + complex(np.vdot(arrays[k], m0u[j]))
        w_m2 = complex(np.vdot(arrays[j], m2u[k])) + complex(np.vdot(arrays[k], m2u[j]))
        w_m1 = complex(np.vdot(arrays[j], m1u[k])) + complex(np.vdot(arrays[k], m1u[j]))
        d += 2.0 * mu1 * w_i * arrays[i]
        d += one_m_beta * (w_m2 * m0u[i] + w_m0 * m2u[i])
        d -= one_m_beta * (w_m1 * m1hu[i] + np.conj(w_m1) * m1u[i])
    d /= 12.0
    for i in others:
        d += (mu2 * arrays[i] + beta * m0u[i]) / 6.0

    scalar = 0.0 + 0.0j
    for i in others:
        for j in others:
            if i == j:
                continue
            scalar += mu2 * complex(np.vdot(arrays[i], arrays[j]))
            scalar += beta * complex(np.vdot(arrays[i], m0u[j]))
    return d, _real(scalar / 12.0, rel_tol=1e-8)


def block_restriction(blocks: BlockSet, p: int, params: ScalarizationParams,
                      mats: ModelMatrices) -> BlockRestriction:
    """Affine model of the multilinear form in block p (1-based index)."""
    if p not in (1, 2, 3, 4):
        raise ValueError("block index must be 1, 2, 3, or 4")
    if params.mu1 is None or params.mu2 is None:
        params = params.resolve(mats)
    arrays = blocks.arrays()
    m1h = mats.m1.conj().T
    matvecs = {
        "m0": [mats.m0 @ u for u in arrays],
        "m1": [mats.m1 @ u for u in arrays],
        "m1h": [m1h @ u for u in arrays],
        "m2": [mats.m2 @ u for u in arrays],
    }
    d, scalar = _restriction_parts(arrays, matvecs, p - 1, params)
    return BlockRestriction(d_vec=d, d_scalar=scalar)


def _stacked_m1(m1: np.ndarray):
    """The four 2m x 2m block placements of M1 entering the curvature bound."""
    m = m1.shape[0]
    z = np.zeros_like(m1)
    return (
        np.block([[m1, z], [z, m1]]),
        np.block([[m1, z], [z, z]]),
        np.block([[z, z], [z, m1]]),
        np.block([[z, m1], [m1, z]]),
    )


_STACK_WEIGHTS = (1.0, -1.0, -1.0, 1.0)


def dense_phi(mats: ModelMatrices) -> np.ndarray:
    """Explicit curvature-bound matrix; quadratic in memory (4m^2 x 4m^2),
    intended only for validating the low-rank eigenvalue route at small m."""
    lam = float(np.linalg.eigvalsh(mats.m0).max() * np.linalg.eigvalsh(mats.m2).max())
    vecs = [x.flatten(order="F") for x in _stacked_m1(mats.m1)]
    phi = lam * np.eye(vecs[0].size, dtype=complex)
    for w, v in zip(_STACK_WEIGHTS, vecs):
        phi += w * np.outer(v, v.conj())
    return phi


def mu1_bound(beta: float, mats: ModelMatrices) -> float:
    """Quartic convexification constant 2 (1 - beta) lambda_max(Phi).

    Phi is a scaled identity plus a rank-4 signed sum of outer products, so
    its extreme eigenvalue is the identity level plus the largest
    eigenvalue (clamped at zero) of the 4x4 matrix W G, with G the Gram
    matrix of the four stacked-M1 vectorizations and W their signs. The
    4m^2-dimensional matrix is never formed.
    """
    if beta >= 1.0:
        return 0.0
    lam = float(np.linalg.eigvalsh(mats.m0).max() * np.linalg.eigvalsh(mats.m2).max())
    v = np.stack([x.flatten(order="F") for x in _stacked_m1(mats.m1)], axis=1)
    gram = v.conj().T @ v
    eigs = np.linalg.eigvals(np.diag(_STACK_WEIGHTS) @ gram)
    if np.abs(eigs.imag).max() > 1e-8 * max(np.abs(eigs).max(), 1e-300):
        raise ValueError("low-rank eigenproblem returned non-real spectrum")
    lam_phi = lam + max(0.0, float(eigs.real.max()))
    return 2.0 * (1.0 - beta) * lam_phi


def mu2_bound(beta: float, mats: ModelMatrices) -> float:
    """Quadratic convexification constant max{0, -lambda_min(beta M0)}.

    M0 is positive semidefinite by construction (elementwise product of a
    positive-definite inverse covariance with a rank-one steering outer
    product), so the bound is zero up to eigensolver roundoff.
    """
    if beta <= 0.0:
        return 0.0
    eigs = np.linalg.eigvalsh(mats.m0)
    lam_min = float(eigs.min())
    if lam_min >= -1e-12 * max(float(eigs.max()), 1e-300):
        return 0.0
    return -beta * lam_min


def multilinear_form_reference(blocks: BlockSet, params: ScalarizationParams,
                               mats: ModelMatrices) -> float:
    """Literal 24-permutation evaluation of the multilinear form.

    Kept as the independent oracle for the collapsed implementation; used by
    the validation battery and the test suite, not by the solver.
    """
    if params.mu1 is None or params.mu2 is None:
        params = params.resolve(mats)
    arrays = blocks.arrays()
    m1h = mats.m1.conj().T
    one_m_beta = 1.0 - params.beta
    quartic = 0.0 + 0.0j
    for p1, p2, p3, p4 in permutations(range(4)):
        u1, u2, u3, u4 = arrays[p1], arrays[p2], arrays[p3], arrays[p4]
        quartic += params.mu1 * np.vdot(u1, u2) * np.vdot(u3, u4)
        quartic += one_m_beta * np.vdot(u1, mats.m0 @ u2) * np.vdot(u3, mats.m2 @ u4)
        quartic -= one_m_beta * np.vdot(u1, mats.m1 @ u2) * np.vdot(u3, m1h @ u4)
    quadratic = 0.0 + 0.0j
    for p1, p2 in permutations(range(4), 2):
        quadratic += params.mu2 * np.vdot(arrays[p1], arrays[p2])
        quadratic += params.beta * np.vdot(arrays[p1], mats.m0 @ arrays[p2])
    return _real(quartic / 24.0 + quadratic / 12.0, rel_tol=1e-8)
