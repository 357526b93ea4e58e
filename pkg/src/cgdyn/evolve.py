"""Effective dynamics: coarse-grain after unitary evolution after assignment.

The composite map

    Gamma_t = C o U(t) . U(t)^dag o A

is evaluated along one of three routes chosen per Hamiltonian and input:

* dense: assign, build the full 2^n state, conjugate by exp(-i H t) via a
  Hermitian eigendecomposition (computed once per time sweep),
* fast: exact closed-form marginals for product inputs. Available for the
  local-field model (with or without the all-to-all interaction term),
  the Ising chain at g = 0, and the second-qubit local rotation. These
  are identities for diagonal or locally factorizing Hamiltonians, not
  approximations, which is what admits site counts in the hundreds.
* statevector: pure symmetric inputs under the transverse-field chain
  keep 2^N amplitudes instead of 4^N matrix entries.

The effective trajectory is generally nonlinear in the input state
(through the assignment) and need not compose as a semigroup in t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import maxent, qcore
from .coarse_grain import CoarseGraining, apply_cg

DENSE_MAX_QUBITS = 12
STATEVECTOR_MAX_SPINS = 20
DENSE_ISING_MIXED_MAX = 8


# ---------------------------------------------------------------------------
# Hamiltonian specifications


@dataclass(frozen=True)
class Swap:
    """H = (omega/2) (XX + YY + ZZ); two qubits, swap gate at t = pi/(2 omega)."""

    omega: float = 1.0

    @property
    def n(self):
        return 2


@dataclass(frozen=True)
class Cnot:
    """H = -(omega/2)(Z x I + I x X - Z x X); cnot (up to phase) at t = pi/(2 omega)."""

    omega: float = 1.0

    @property
    def n(self):
        return 2


@dataclass(frozen=True)
class CnotInteraction:
    """The interaction term alone: H = (omega/2) Z x X. Period 2 pi at omega = 1."""

    omega: float = 1.0

    @property
    def n(self):
        return 2


@dataclass(frozen=True)
class FieldAllToAll:
    """Per-site z fields, optionally plus the n-body term Z x Z x ... x Z.

    omegas holds one frequency per site. mu/sigma/seed record how the
    frequencies were sampled when `sample_field` built the spec; they are
    metadata only and do not enter the dynamics.
    """

    omegas: tuple
    include_interaction: bool = False
    mu: Optional[float] = None
    sigma: Optional[float] = None
    seed: Optional[int] = None

    def __post_init__(self):
        w = tuple(float(x) for x in np.atleast_1d(np.asarray(self.omegas, dtype=float)))
        if len(w) < 2:
            raise ValueError("field model needs at least two sites")
        object.__setattr__(self, "omegas", w)

    @property
    def n(self):
        return len(self.omegas)

    @property
    def t_c(self):
        """Dephasing time scale 2 pi / (frequency spread)."""
        spread = self.sigma if self.sigma is not None else float(np.std(self.omegas))
        if spread <= 0.0:
            return math.inf
        return 2.0 * math.pi / spread


def sample_field(n, mu=1.5, sigma=0.2, seed=0, include_interaction=False):
    """Draw site frequencies from normal(mu, sigma) with a recorded seed."""
    if sigma < 0:
        raise ValueError("frequency spread must be nonnegative")
    rng = np.random.default_rng(seed)
    omegas = rng.normal(mu, sigma, size=n)
    return FieldAllToAll(
        omegas=tuple(omegas),
        include_interaction=include_interaction,
        mu=float(mu),
        sigma=float(sigma),
        seed=int(seed),
    )


@dataclass(frozen=True)
class IsingChain:
    """H = -J sum_bonds Z_a Z_b - g sum_j X_j.

    The closed chain wraps the bond sum literally (sigma_{N+1} = sigma_1),
    so the two-spin ring carries its single bond twice. Bond multiplicity
    is honored identically by the dense builder and the fast path.
    """

    n_spins: int
    J: float = 1.0
    g: float = 0.0
    boundary: str = "closed"

    def __post_init__(self):
        if int(self.n_spins) != self.n_spins or self.n_spins < 2:
            raise ValueError(f"chain needs at least two spins, got {self.n_spins}")
        if self.boundary not in ("closed", "open"):
            raise ValueError(f"boundary must be 'closed' or 'open', got {self.boundary!r}")
        object.__setattr__(self, "n_spins", int(self.n_spins))

    @property
    def n(self):
        return self.n_spins

    def bonds(self):
        """Ordered bond list (1-based site pairs), duplicates kept."""
        n = self.n_spins
        if self.boundary == "closed":
            return [(j, j % n + 1) for j in range(1, n + 1)]
        return [(j, j + 1) for j in range(1, n)]


@dataclass(frozen=True)
class LocalZSecond:
    """H = (omega/2) I x Z: nothing happens to qubit 1, qubit 2 precesses."""

    omega: float = 1.0

    @property
    def n(self):
        return 2


_SPEC_KINDS = (Swap, Cnot, CnotInteraction, FieldAllToAll, IsingChain, LocalZSecond)


def spec_to_dict(spec):
    """JSON-friendly description of a Hamiltonian spec (for run metadata)."""
    d = {"kind": type(spec).__name__}
    if isinstance(spec, (Swap, Cnot, CnotInteraction, LocalZSecond)):
        d["omega"] = spec.omega
    elif isinstance(spec, FieldAllToAll):
        d.update(
            n=spec.n,
            omegas=list(spec.omegas),
            include_interaction=spec.include_interaction,
            mu=spec.mu,
            sigma=spec.sigma,
            seed=spec.seed,
        )
    elif isinstance(spec, IsingChain):
        d.update(n_spins=spec.n_spins, J=spec.J, g=spec.g, boundary=spec.boundary)
    return d


# ---------------------------------------------------------------------------
# Hamiltonian construction


def build_hamiltonian(spec):
    """Dense Hermitian matrix for the spec; capped at 12 qubits."""
    n = spec.n
    if n > DENSE_MAX_QUBITS:
        raise ValueError(f"dense Hamiltonian capped at {DENSE_MAX_QUBITS} qubits, got {n}")
    if isinstance(spec, Swap):
        h = np.zeros((4, 4), dtype=complex)
        for a in qcore.AXES:
            s = qcore.pauli(a)
            h += np.kron(s, s)
        return 0.5 * spec.omega * h
    if isinstance(spec, Cnot):
        z, x, i2 = qcore.SIGMA_Z, qcore.SIGMA_X, qcore.IDENTITY_2
        return -0.5 * spec.omega * (np.kron(z, i2) + np.kron(i2, x) - np.kron(z, x))
    if isinstance(spec, CnotInteraction):
        return 0.5 * spec.omega * np.kron(qcore.SIGMA_Z, qcore.SIGMA_X)
    if isinstance(spec, FieldAllToAll):
        dim = 2 ** n
        h = np.zeros((dim, dim), dtype=complex)
        for k, w in enumerate(spec.omegas, start=1):
            h += w * qcore.embed(qcore.SIGMA_Z, k, n)
        if spec.include_interaction:
            h += qcore.kron([qcore.SIGMA_Z] * n)
        return h
    if isinstance(spec, IsingChain):
        dim = 2 ** n
        h = np.zeros((dim, dim), dtype=complex)
        for (a, b) in spec.bonds():
            h -= spec.J * (qcore.embed(qcore.SIGMA_Z, a, n) @ qcore.embed(qcore.SIGMA_Z, b, n))
        if spec.g != 0.0:
            for j in range(1, n + 1):
                h -= spec.g * qcore.embed(qcore.SIGMA_X, j, n)
        return h
    if isinstance(spec, LocalZSecond):
        return 0.5 * spec.omega * np.kron(qcore.IDENTITY_2, qcore.SIGMA_Z)
    raise TypeError(f"unknown Hamiltonian spec {type(spec).__name__}")


def _sparse_hamiltonian(spec):
    # only the transverse-field chain ever needs more than 12 qubits here
    from scipy import sparse

    n = spec.n
    i2 = sparse.identity(2, format="csr", dtype=complex)
    sz = sparse.csr_matrix(qcore.SIGMA_Z)
    sx = sparse.csr_matrix(qcore.SIGMA_X)

    def site(op, k):
        mats = [i2] * n
        mats[k - 1] = op
        out = mats[0]
        for m in mats[1:]:
            out = sparse.kron(out, m, format="csr")
        return out

    dim = 2 ** n
    h = sparse.csr_matrix((dim, dim), dtype=complex)
    for (a, b) in spec.bonds():
        h = h - spec.J * (site(sz, a) @ site(sz, b))
    if spec.g != 0.0:
        for j in range(1, n + 1):
            h = h - spec.g * site(sx, j)
    return h


# ---------------------------------------------------------------------------
# Fast product paths (exact closed forms)


def _factor_arrays(factors):
    pop0 = np.array([f[0, 0].real for f in factors])
    coh = np.array([f[0, 1] for f in factors], dtype=complex)
    zval = np.array([(f[0, 0] - f[1, 1]).real for f in factors])
    return pop0, coh, zval


def _fast_coherences(factors, spec, t):
    """Per-site (pop0, evolved coherence) under a fast-path spec."""
    pop0, coh, zval = _factor_arrays(factors)
    if isinstance(spec, FieldAllToAll):
        out = coh * np.exp(-2j * np.asarray(spec.omegas) * t)
        if spec.include_interaction:
            out = out * (np.cos(2 * t) - 1j * np.sin(2 * t) * qcore.exclusive_products(zval))
        return pop0, out
    if isinstance(spec, LocalZSecond):
        out = coh.copy()
        out[1] *= np.exp(-1j * spec.omega * t)
        return pop0, out
    if isinstance(spec, IsingChain):
        if spec.g != 0.0:
            raise ValueError("fast path for the chain requires g = 0")
        n = spec.n_spins
        mult = {}
        for (a, b) in spec.bonds():
            mult[(a, b)] = mult.get((a, b), 0) + 1
            mult[(b, a)] = mult.get((b, a), 0) + 1
        out = coh.copy()
        for j in range(1, n + 1):
            for m in range(1, n + 1):
                b = mult.get((j, m), 0)
                if b:
                    ang = 2.0 * spec.J * b * t
                    out[j - 1] *= np.cos(ang) + 1j * zval[m - 1] * np.sin(ang)
        return pop0, out
    raise ValueError(
        f"{type(spec).__name__} has no fast product path; supported: "
        "FieldAllToAll, IsingChain (g = 0), LocalZSecond"
    )


def evolve_product_fast(factors, spec, t):
    """Evolved single-qubit marginals of a product input, closed form.

    Exact for the supported specs (diagonal or locally factorizing
    Hamiltonians): populations are conserved, each site's coherence picks
    up a multiplicative factor involving its neighbors' z-components.
    """
    factors = [np.asarray(f, dtype=complex) for f in factors]
    if any(f.shape != (2, 2) for f in factors):
        raise ValueError("factors must be 2x2 matrices")
    if len(factors) != spec.n:
        raise ValueError(f"{len(factors)} factors for an n={spec.n} Hamiltonian")
    pop0, coh = _fast_coherences(factors, spec, t)
    out = []
    for k in range(len(factors)):
        out.append(
            np.array(
                [[pop0[k], coh[k]], [np.conj(coh[k]), 1.0 - pop0[k]]],
                dtype=complex,
            )
        )
    return out


# ---------------------------------------------------------------------------
# State-vector route for pure symmetric chain inputs


def _pure_site_vector(direction):
    theta = math.acos(min(1.0, max(-1.0, float(direction[2]))))
    phi = math.atan2(float(direction[1]), float(direction[0]))
    return np.array(
        [math.cos(theta / 2.0), math.sin(theta / 2.0) * complex(math.cos(phi), math.sin(phi))],
        dtype=complex,
    )


def _statevector_marginals(psi, n):
    """All single-site 2x2 marginals of an n-qubit pure state."""
    out = []
    for k in range(1, n + 1):
        a = psi.reshape(2 ** (k - 1), 2, 2 ** (n - k))
        m = np.einsum("aib,ajb->ij", a, a.conj())
        out.append(m)
    return out


def _effective_from_marginals(marginals, cg):
    out = np.zeros((2, 2), dtype=complex)
    for p, m in zip(cg.probs, marginals):
        if p:
            out += p * m
    return out


# ---------------------------------------------------------------------------
# Pipeline


def _route(spec, assigned, method):
    pure_input = assigned.solution.is_pure
    if method not in ("auto", "dense", "fast", "statevector"):
        raise ValueError(f"unknown method {method!r}")
    if method != "auto":
        return method
    if isinstance(spec, (FieldAllToAll, LocalZSecond)):
        return "fast"
    if isinstance(spec, IsingChain):
        if spec.g == 0.0:
            return "fast"
        return "statevector" if pure_input else "dense"
    return "dense"


def _check_route(spec, assigned, route):
    if route == "statevector":
        if not isinstance(spec, IsingChain):
            raise ValueError("statevector route is only defined for the spin chain")
        if not assigned.solution.is_pure:
            raise ValueError("statevector route requires a pure effective input")
        if spec.n > STATEVECTOR_MAX_SPINS:
            raise ValueError(f"statevector route capped at {STATEVECTOR_MAX_SPINS} spins")
    if route == "dense":
        if spec.n > DENSE_MAX_QUBITS:
            raise ValueError(f"dense route capped at {DENSE_MAX_QUBITS} qubits")
        if (
            isinstance(spec, IsingChain)
            and spec.g != 0.0
            and not assigned.solution.is_pure
            and spec.n > DENSE_ISING_MIXED_MAX
        ):
            raise ValueError(
                f"mixed effective inputs under the chain are capped at "
                f"{DENSE_ISING_MIXED_MAX} spins; use a pure input"
            )


@dataclass
class Trajectory:
    """Effective-state history: Bloch vector and purity per time point."""

    times: np.ndarray
    bloch: np.ndarray
    purity: np.ndarray
    metadata: dict

    def __len__(self):
        return len(self.times)


def gamma_t(rho_eff, cg, spec, t, method="auto"):
    """One step of the effective dynamics at time t."""
    traj = trajectory(rho_eff, cg, spec, [t], method=method)
    r = traj.bloch[0]
    # trajectory already policed the radius at the positivity floor
    return 0.5 * (
        qcore.IDENTITY_2 + r[0] * qcore.SIGMA_X + r[1] * qcore.SIGMA_Y + r[2] * qcore.SIGMA_Z
    )


def trajectory(rho_eff, cg, spec, times, method="auto"):
    """Effective trajectory over a time grid, one assignment for the sweep.

    The grid must be nonempty and strictly increasing. The heavy pieces
    (lambda solve, Hamiltonian eigendecomposition) are computed once.
    """
    if spec.n != cg.n:
        raise ValueError(f"Hamiltonian acts on {spec.n} sites but weights cover {cg.n}")
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("time grid must be a nonempty 1-d array")
    if times.size > 1 and not (np.diff(times) > 0).all():
        raise ValueError("time grid must be strictly increasing")

    assigned = maxent.assign(rho_eff, cg)
    route = _route(spec, assigned, method)
    _check_route(spec, assigned, route)

    bloch = np.empty((times.size, 3))
    if route == "dense":
        h = build_hamiltonian(spec)
        evals, evecs = qcore.eigensystem(h)
        rho0 = assigned.to_matrix()
        for i, t in enumerate(times):
            rho_t = qcore.propagate(evals, evecs, rho0, t)
            bloch[i] = qcore.bloch_from_density(apply_cg(rho_t, cg))
    elif route == "fast":
        probs = cg.probs
        for i, t in enumerate(times):
            pop0, coh = _fast_coherences(assigned.factors, spec, t)
            eff_pop0 = float(np.dot(probs, pop0))
            eff_coh = complex(np.dot(probs, coh))
            bloch[i] = [2 * eff_coh.real, -2 * eff_coh.imag, 2 * eff_pop0 - 1.0]
    else:  # statevector
        site = _pure_site_vector(assigned.solution.direction)
        psi0 = site
        for _ in range(spec.n - 1):
            psi0 = np.kron(psi0, site)
        if spec.n <= DENSE_MAX_QUBITS:
            h = build_hamiltonian(spec)
            evals, evecs = qcore.eigensystem(h)
            coeff = evecs.conj().T @ psi0
            for i, t in enumerate(times):
                psi_t = evecs @ (np.exp(-1j * evals * t) * coeff)
                eff = _effective_from_marginals(_statevector_marginals(psi_t, spec.n), cg)
                bloch[i] = qcore.bloch_from_density(eff)
        else:
            from scipy.sparse.linalg import expm_multiply

            h = _sparse_hamiltonian(spec)
            for i, t in enumerate(times):
                psi_t = expm_multiply(-1j * h * t, psi0)
                eff = _effective_from_marginals(_statevector_marginals(psi_t, spec.n), cg)
                bloch[i] = qcore.bloch_from_density(eff)

    radii_sq = np.sum(bloch * bloch, axis=1)
    # radius 1 + 2 eps corresponds to an eigenvalue of -eps, so this is
    # exactly the PSD_FLOOR policy expressed on the Bloch ball
    if (radii_sq > (1.0 - 2.0 * qcore.PSD_FLOOR) ** 2).any():
        worst = float(np.sqrt(radii_sq.max()))
        raise qcore.PositivityError(f"effective Bloch radius {worst} left the ball")
    purity = 0.5 * (1.0 + radii_sq)

    lam = assigned.solution.lam
    metadata = {
        "spec": spec_to_dict(spec),
        "distribution": {"n": cg.n, "probs": [float(p) for p in cg.probs]},
        "method": route,
        "lambda": ("inf" if math.isinf(lam) else float(lam)),
        "initial_bloch": [float(x) for x in qcore.bloch_from_density(np.asarray(rho_eff))],
    }
    if isinstance(spec, FieldAllToAll):
        metadata["t_c"] = ("inf" if math.isinf(spec.t_c) else float(spec.t_c))
    return Trajectory(times=times, bloch=bloch, purity=purity, metadata=metadata)
