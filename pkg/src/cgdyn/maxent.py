"""Maximum-entropy assignment: one effective qubit back to n sites.

Among all n-qubit states whose fuzzy-operator expectations reproduce a
given effective state, the entropy maximizer is a product of collinear
factors whose Bloch radii follow a tanh profile in the site weights:

    rho_k = (I + tanh(p_k lambda) nhat . sigma) / 2,
    sum_k p_k tanh(p_k lambda) = r_ef.

lambda is found by bracketed bisection; the map F(lambda) is strictly
increasing with F(0) = 0 and F(inf) = 1, so the root is unique. Newton
is deliberately avoided: for very small p_k the derivative underflows
and the iteration stalls, while bisection converges unconditionally.

Composing coarse-graining after assignment is the identity on effective
states; assignment after coarse-graining is not (information loss).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import qcore
from .coarse_grain import CoarseGraining

# Effective radius beyond which the input is treated as pure and the
# finite-lambda solve is bypassed (lambda diverges there).
PURE_RADIUS = 1.0 - 1e-9

_BISECT_ITERS = 200
_DIRECTION_Z = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class LagrangeSolution:
    """Root of the radius constraint for one (r_ef, cg) pair.

    lam is math.inf for pure inputs; per_particle_r holds tanh(p_k lam)
    (ones on positively weighted sites in the pure case, zeros on
    zero-weight sites always).
    """

    lam: float
    direction: np.ndarray
    per_particle_r: np.ndarray

    @property
    def is_pure(self):
        return math.isinf(self.lam)


@dataclass(frozen=True)
class AssignedState:
    """Product state rho_1 x ... x rho_n stored as its 2x2 factors."""

    factors: tuple
    cg: CoarseGraining
    solution: LagrangeSolution

    def to_matrix(self):
        return qcore.kron(self.factors)


def _radius_sum(lam, probs):
    return float(np.dot(probs, np.tanh(probs * lam)))


def solve_lambda(r_ef, cg, direction=None):
    """Solve sum_k p_k tanh(p_k lambda) = r_ef for lambda >= 0.

    r_ef is the Bloch radius of the effective state, in [0, 1]. The
    bracket is grown geometrically from [0, 1] and then bisected to
    machine precision (at most 200 iterations).
    """
    if direction is None:
        direction = _DIRECTION_Z
    direction = np.asarray(direction, dtype=float)
    if direction.shape != (3,):
        raise ValueError("direction must be a 3-vector")
    dnorm = float(np.linalg.norm(direction))
    if dnorm < 1e-15:
        raise ValueError("direction must be nonzero")
    direction = direction / dnorm

    r_ef = float(r_ef)
    if not 0.0 <= r_ef <= 1.0 + 1e-12:
        raise ValueError(f"effective radius must lie in [0, 1], got {r_ef}")
    probs = cg.probs

    if r_ef >= PURE_RADIUS:
        per = np.where(probs > 0.0, 1.0, 0.0)
        return LagrangeSolution(math.inf, direction, per)
    if r_ef == 0.0:
        return LagrangeSolution(0.0, direction, np.zeros(cg.n))

    lo, hi = 0.0, 1.0
    while _radius_sum(hi, probs) < r_ef:
        hi *= 2.0
        if hi > 1e18:
            raise ValueError(f"radius constraint {r_ef} not reachable; bracket blew up")
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break  # interval collapsed to adjacent floats
        if _radius_sum(mid, probs) < r_ef:
            lo = mid
        else:
            hi = mid
    lam = 0.5 * (lo + hi)
    return LagrangeSolution(lam, direction, np.tanh(probs * lam))


def assign(rho_eff, cg):
    """Maxent product state reproducing rho_eff under the given weights.

    Uniform weights give n identical copies of rho_eff. A pure input
    requires every weight positive (a zero-weight site would be
    unconstrained) and yields n copies of the pure state.
    """
    rho_eff = qcore.assert_density_matrix(rho_eff, name="effective state")
    if rho_eff.shape != (2, 2):
        raise ValueError("effective state must be a single qubit")
    r = qcore.bloch_from_density(rho_eff)
    r_ef = float(np.linalg.norm(r))
    if r_ef > 1.0 + 1e-12:
        raise ValueError(f"effective state has Bloch radius {r_ef} > 1")
    r_ef = min(r_ef, 1.0)

    if r_ef < 1e-15:
        sol = LagrangeSolution(0.0, _DIRECTION_Z, np.zeros(cg.n))
        factors = tuple(qcore.IDENTITY_2 / 2.0 for _ in range(cg.n))
        return AssignedState(factors, cg, sol)

    direction = r / r_ef
    sol = solve_lambda(r_ef, cg, direction=direction)
    if sol.is_pure and (cg.probs <= 0.0).any():
        raise ValueError(
            "pure effective state with a zero-weight site: the assignment "
            "is not defined (that factor is unconstrained)"
        )
    factors = tuple(
        qcore.density_from_bloch(sol.per_particle_r[k] * direction) for k in range(cg.n)
    )
    return AssignedState(factors, cg, sol)


def assign_extended(rho_joint, cg, dim_env):
    """Assignment tensored with the identity on an environment factor.

    rho_joint lives on (effective qubit) x (environment of dimension
    dim_env). The environment is traced out, the system register is
    assigned as usual, and the environment is replaced by the maximally
    mixed state. The output being a valid state for every joint input is
    the complete-positivity statement in testable form.
    """
    if int(dim_env) != dim_env or dim_env < 1:
        raise ValueError(f"environment dimension must be a positive integer, got {dim_env}")
    dim_env = int(dim_env)
    rho_joint = np.asarray(rho_joint, dtype=complex)
    if rho_joint.shape != (2 * dim_env, 2 * dim_env):
        raise ValueError(
            f"joint state shape {rho_joint.shape} does not match qubit x {dim_env} environment"
        )
    rho_eff = qcore.trace_out_second(rho_joint, 2, dim_env)
    assigned = assign(rho_eff, cg)
    env = np.eye(dim_env, dtype=complex) / dim_env
    return np.kron(assigned.to_matrix(), env)
