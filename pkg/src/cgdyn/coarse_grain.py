"""Coarse-graining of n qubits into one effective qubit.

The map averages single-qubit marginals with a probability weight per site:

    C(rho) = sum_k p_k Tr_{all but k}(rho)

which is the same as first swapping site k to the front and tracing the
rest. It is completely positive and trace preserving for every weight
vector, and linear in rho by construction. The weights are the knob that
makes the induced effective dynamics linear or not.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import qcore


@dataclass(frozen=True)
class CoarseGraining:
    """A site count n >= 2 together with weights p_k >= 0 summing to one.

    Zero entries are allowed here; consumers that cannot tolerate them
    (pure-state assignment) check at their own boundary.
    """

    n: int
    probs: np.ndarray = field(repr=False)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"coarse graining needs n >= 2 sites, got {self.n}")
        p = np.asarray(self.probs, dtype=float)
        if p.shape != (self.n,):
            raise ValueError(f"expected {self.n} weights, got shape {p.shape}")
        if (p < 0).any():
            raise ValueError("weights must be nonnegative")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {p.sum()}, expected 1 within 1e-12")
        p = p.copy()
        p.flags.writeable = False
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "probs", p)

    @property
    def is_uniform(self):
        return bool(np.allclose(self.probs, 1.0 / self.n, rtol=0.0, atol=1e-15))


def non_preferential(n):
    """Uniform weights 1/n over all sites."""
    return CoarseGraining(n, np.full(n, 1.0 / n))


def preferential(n, p1):
    """Weight p1 on site 1, the remainder spread evenly over sites 2..n.

    p1 must lie in (0, 1]; p1 = 1 puts everything on the first site.
    """
    if not 0.0 < p1 <= 1.0:
        raise ValueError(f"p1 must lie in (0, 1], got {p1}")
    probs = np.full(n, (1.0 - p1) / (n - 1))
    probs[0] = p1
    return CoarseGraining(n, probs)


def custom(probs):
    """Arbitrary weight vector; zeros allowed."""
    probs = np.asarray(probs, dtype=float)
    if probs.ndim != 1:
        raise ValueError("custom weights must be a flat vector")
    return CoarseGraining(probs.shape[0], probs)


def make_distribution(kind, n, p1=None, probs=None):
    """Dispatch helper for config-driven construction.

    kind in {"non-preferential", "preferential", "custom"}.
    """
    kind = str(kind).lower().replace("_", "-")
    if kind == "non-preferential":
        return non_preferential(n)
    if kind == "preferential":
        if p1 is None:
            raise ValueError("preferential distribution requires p1")
        return preferential(n, p1)
    if kind == "custom":
        if probs is None:
            raise ValueError("custom distribution requires a weight vector")
        cg = custom(probs)
        if cg.n != n:
            raise ValueError(f"custom weights have length {cg.n}, expected n={n}")
        return cg
    raise ValueError(f"unknown distribution kind {kind!r}")


def swap_permutation(n, k):
    """Permutation matrix exchanging tensor slots 1 and k (1-based).

    k = 1 returns the identity. Retained mainly so tests can check the
    marginal shortcut in apply_cg against the defining expression.
    """
    if not 1 <= k <= n:
        raise ValueError(f"slot index k={k} outside 1..{n}")
    dim = 2 ** n
    perm = np.zeros((dim, dim))
    # bit positions count from the left: qubit 1 is the most significant bit
    b1 = n - 1
    bk = n - k
    for i in range(dim):
        v1 = (i >> b1) & 1
        vk = (i >> bk) & 1
        j = i & ~(1 << b1) & ~(1 << bk)
        j |= vk << b1
        j |= v1 << bk
        perm[j, i] = 1.0
    return perm


def apply_cg(rho, cg):
    """The coarse-graining map: weighted average of single-site marginals."""
    rho = np.asarray(rho, dtype=complex)
    dim = 2 ** cg.n
    if rho.shape != (dim, dim):
        raise ValueError(f"state shape {rho.shape} does not match n={cg.n} qubits")
    out = np.zeros((2, 2), dtype=complex)
    for k in range(cg.n):
        p = cg.probs[k]
        if p == 0.0:
            continue  # zero-weight sites contribute nothing; skip the trace
        out += p * qcore.partial_trace(rho, [k + 1], cg.n)
    return out


def fuzzy_operator(axis, cg):
    """G^axis = sum_k p_k sigma^axis on site k.

    Satisfies Tr[sigma^axis C(rho)] = Tr[G^axis rho]; the identity axis is
    rejected because it is not an observable of the effective qubit.
    """
    if axis not in qcore.AXES:
        raise ValueError(f"fuzzy operator axis must be one of 'x','y','z', got {axis!r}")
    sigma = qcore.pauli(axis)
    dim = 2 ** cg.n
    out = np.zeros((dim, dim), dtype=complex)
    for k in range(cg.n):
        if cg.probs[k] == 0.0:
            continue
        out += cg.probs[k] * qcore.embed(sigma, k + 1, cg.n)
    return out
