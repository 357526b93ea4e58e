"""Probes that classify an effective dynamics: linearity, memory, identities.

Every probe takes the dynamics as a closure `dyn(rho, t)` so that the same
machinery applies to pipeline trajectories, closed-form predictors, or any
user-supplied map. Random states are drawn Hilbert-Schmidt (mixed) from an
explicit seed, and each report stores the witness that achieved its
extremal value so a run can be replayed from the report alone.

Trace-norm distance is the canonical figure of merit throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import maxent, qcore
from .coarse_grain import CoarseGraining, apply_cg, fuzzy_operator, non_preferential, custom


@dataclass(frozen=True)
class LinearityReport:
    """Largest mixing violation found and the pair that produced it."""

    max_violation: float
    witness: dict
    samples: int
    seed: int

    def to_dict(self):
        return {
            "max_violation": self.max_violation,
            "witness": self.witness,
            "samples": self.samples,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class MarkovReport:
    """Semigroup gap over a (t, s) grid, plus optional rate-sign bookkeeping."""

    gap: float
    argmax_t: float
    argmax_s: float
    witness_bloch: list
    rate_sign_changes: tuple = field(default=())

    def to_dict(self):
        return {
            "gap": self.gap,
            "argmax_t": self.argmax_t,
            "argmax_s": self.argmax_s,
            "witness_bloch": self.witness_bloch,
            "rate_sign_changes": [list(iv) for iv in self.rate_sign_changes],
        }


@dataclass(frozen=True)
class EqualMarginalReport:
    """Whether a channel acts the same way on every site's marginal."""

    holds: bool
    max_deviation: float
    commutation_deviation: float
    induced_linear: list
    induced_shift: list
    samples: int
    seed: int
    tol: float

    def to_dict(self):
        return {
            "holds": self.holds,
            "max_deviation": self.max_deviation,
            "commutation_deviation": self.commutation_deviation,
            "induced_linear": self.induced_linear,
            "induced_shift": self.induced_shift,
            "samples": self.samples,
            "seed": self.seed,
            "tol": self.tol,
        }


def linearity_probe(dynamics, t, samples=100, seed=0):
    """Compare dyn(mixture) against the mixture of dyn outputs.

    Returns the worst trace-norm violation over `samples` random
    (rho_a, rho_b, weight) triples. Linear dynamics sit at solver noise;
    assignment-induced nonlinearity shows up at the 1e-1..1e-3 scale.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    worst = -1.0
    witness = None
    for _ in range(samples):
        rho_a = qcore.random_density(2, rng)
        rho_b = qcore.random_density(2, rng)
        w = float(rng.uniform(0.0, 1.0))
        mix = w * rho_a + (1.0 - w) * rho_b
        v = qcore.trace_norm(
            dynamics(mix, t) - w * dynamics(rho_a, t) - (1.0 - w) * dynamics(rho_b, t)
        )
        if v > worst:
            worst = v
            witness = {
                "bloch_a": [float(x) for x in qcore.bloch_from_density(rho_a)],
                "bloch_b": [float(x) for x in qcore.bloch_from_density(rho_b)],
                "weight": w,
                "t": float(t),
            }
    return LinearityReport(max_violation=worst, witness=witness, samples=samples, seed=seed)


def replay_linearity_witness(dynamics, witness):
    """Re-evaluate a stored witness; returns its violation."""
    rho_a = qcore.density_from_bloch(np.asarray(witness["bloch_a"]))
    rho_b = qcore.density_from_bloch(np.asarray(witness["bloch_b"]))
    w, t = witness["weight"], witness["t"]
    mix = w * rho_a + (1.0 - w) * rho_b
    return qcore.trace_norm(
        dynamics(mix, t) - w * dynamics(rho_a, t) - (1.0 - w) * dynamics(rho_b, t)
    )


def semigroup_gap(dynamics, t_grid, s_grid, probes=8, seed=0):
    """sup over (t, s, probe) of || dyn(rho, t+s) - dyn(dyn(rho, s), t) ||_1."""
    t_grid = np.atleast_1d(np.asarray(t_grid, dtype=float))
    s_grid = np.atleast_1d(np.asarray(s_grid, dtype=float))
    if isinstance(probes, (int, np.integer)):
        rng = np.random.default_rng(seed)
        probe_states = [qcore.random_density(2, rng) for _ in range(int(probes))]
    else:
        probe_states = [np.asarray(p, dtype=complex) for p in probes]
    if not probe_states:
        raise ValueError("need at least one probe state")

    gap, arg_t, arg_s, wit = -1.0, float("nan"), float("nan"), None
    for rho in probe_states:
        for s in s_grid:
            mid = dynamics(rho, s)
            for t in t_grid:
                g = qcore.trace_norm(dynamics(rho, t + s) - dynamics(mid, t))
                if g > gap:
                    gap, arg_t, arg_s = g, float(t), float(s)
                    wit = [float(x) for x in qcore.bloch_from_density(rho)]
    return MarkovReport(gap=gap, argmax_t=arg_t, argmax_s=arg_s, witness_bloch=wit)


def negative_rate_intervals(times, rates):
    """Contiguous grid intervals where the rate is negative."""
    times = np.asarray(times, dtype=float)
    rates = np.asarray(rates, dtype=float)
    if times.shape != rates.shape:
        raise ValueError("times and rates must align")
    intervals = []
    start = None
    for t, r in zip(times, rates):
        if r < 0.0 and start is None:
            start = t
        elif r >= 0.0 and start is not None:
            intervals.append((float(start), float(t)))
            start = None
    if start is not None:
        intervals.append((float(start), float(times[-1])))
    return tuple(intervals)


def _induced_map_from_products(channel, n):
    """Tomography of the single-site action on symmetric product inputs."""
    def out_bloch(r):
        rho = qcore.density_from_bloch(r)
        big = qcore.kron([rho] * n)
        return qcore.bloch_from_density(qcore.partial_trace(channel(big), [1], n))

    shift = out_bloch(np.zeros(3))
    cols = []
    for a in range(3):
        e = np.zeros(3)
        e[a] = 1.0
        cols.append(out_bloch(e) - shift)
    return np.column_stack(cols), shift


def _apply_affine(linear, shift, rho):
    r = linear @ qcore.bloch_from_density(rho) + shift
    return 0.5 * (
        qcore.IDENTITY_2 + r[0] * qcore.SIGMA_X + r[1] * qcore.SIGMA_Y + r[2] * qcore.SIGMA_Z
    )


def equal_marginal_check(channel, n, samples=20, seed=0, tol=1e-10):
    """Does the channel act on every site's marginal as one single-qubit map?

    The candidate map is reconstructed from the channel's action on
    symmetric products, then confronted with random joint inputs on every
    site. When the property holds, coarse graining commutes with the
    channel (checked explicitly against uniform and random weights), and
    the induced effective dynamics is linear.
    """
    if n < 2:
        raise ValueError("need at least two sites")
    linear, shift = _induced_map_from_products(channel, n)
    rng = np.random.default_rng(seed)

    worst = 0.0
    comm_worst = 0.0
    weights = rng.uniform(0.1, 1.0, size=n)
    cgs = [non_preferential(n), custom(weights / weights.sum())]
    for _ in range(samples):
        big = qcore.random_density(2 ** n, rng)
        out = channel(big)
        for k in range(1, n + 1):
            got = qcore.partial_trace(out, [k], n)
            want = _apply_affine(linear, shift, qcore.partial_trace(big, [k], n))
            worst = max(worst, qcore.trace_norm(got - want))
        for cg in cgs:
            comm = qcore.trace_norm(
                apply_cg(out, cg) - _apply_affine(linear, shift, apply_cg(big, cg))
            )
            comm_worst = max(comm_worst, comm)

    return EqualMarginalReport(
        holds=bool(worst <= tol),
        max_deviation=float(worst),
        commutation_deviation=float(comm_worst),
        induced_linear=[[float(x) for x in row] for row in linear],
        induced_shift=[float(x) for x in shift],
        samples=samples,
        seed=seed,
        tol=tol,
    )


def effective_commutator(cg, rho_eff):
    """C([Z x ... x Z, assigned state]) in closed form.

    For a product input the n-body commutator coarse-grains to
    sum_k p_k [rho_k, Z] prod_{j != k} z_j; the product of z-components is
    what shrinks exponentially with n and buries the odd expansion terms.
    """
    assigned = maxent.assign(rho_eff, cg)
    zvals = np.array([(f[0, 0] - f[1, 1]).real for f in assigned.factors])
    excl = qcore.exclusive_products(zvals)
    out = np.zeros((2, 2), dtype=complex)
    for k, (p, f) in enumerate(zip(cg.probs, assigned.factors)):
        if p == 0.0:
            continue
        out += p * excl[k] * (f @ qcore.SIGMA_Z - qcore.SIGMA_Z @ f)
    return out


def dyson_decay(cgs, rho_eff):
    """Trace norm of the coarse-grained interaction commutator per weighting.

    A transverse input (zero z-component) gives exactly zero for every
    entry; otherwise the norms shrink like |r_z|^(n-1) for uniform weights.
    """
    return np.array([qcore.trace_norm(effective_commutator(cg, rho_eff)) for cg in cgs])


def fuzzy_identity_check(rho, cg):
    """max over axes of |Tr[sigma C(rho)] - Tr[G rho]| (should be ~0 always)."""
    rho = np.asarray(rho, dtype=complex)
    eff = apply_cg(rho, cg)
    worst = 0.0
    for a in qcore.AXES:
        lhs = np.trace(qcore.pauli(a) @ eff)
        rhs = np.trace(fuzzy_operator(a, cg) @ rho)
        worst = max(worst, abs(lhs - rhs))
    return float(worst)
