"""Dense qubit algebra shared by every other module.

Conventions used throughout the package:

* qubit 1 is the leftmost tensor factor, i.e. the most significant bits
  of the computational-basis index,
* hbar = 1, so a Hamiltonian H generates U(t) = exp(-i H t),
* density matrices are plain complex numpy arrays; validation is explicit
  via `assert_density_matrix` rather than wrapped in a class.

Everything here is d = 2 (qubits). Local dimension is not a parameter.
"""

from __future__ import annotations

import numpy as np

# Pauli basis. Module-level constants, never mutated.
IDENTITY_2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)

# Closed axis enumeration; "i" is accepted where an identity slot makes sense.
PAULI = {"i": IDENTITY_2, "x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}
AXES = ("x", "y", "z")

# Validation tolerances. PSD_FLOOR is the most negative eigenvalue a state
# may show before it is treated as a hard numerical error, not noise.
HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_FLOOR = -1e-10


class PositivityError(ArithmeticError):
    """A computed state left the positive cone beyond PSD_FLOOR.

    Raised for numerical failures detected mid-computation, as opposed to
    ValueError which flags invalid caller input.
    """


def pauli(axis):
    """Return the 2x2 Pauli matrix for axis in {"i","x","y","z"}."""
    try:
        return PAULI[axis]
    except KeyError:
        raise ValueError(f"unknown Pauli axis {axis!r}; expected one of 'i','x','y','z'") from None


def kron(factors):
    """Kronecker product of a nonempty sequence of square matrices.

    Factor order matches the qubit-1-leftmost convention.
    """
    factors = list(factors)
    if not factors:
        raise ValueError("kron needs at least one factor")
    out = np.asarray(factors[0], dtype=complex)
    if out.ndim != 2 or out.shape[0] != out.shape[1]:
        raise ValueError("kron factors must be square matrices")
    for f in factors[1:]:
        f = np.asarray(f, dtype=complex)
        if f.ndim != 2 or f.shape[0] != f.shape[1]:
            raise ValueError("kron factors must be square matrices")
        out = np.kron(out, f)
    return out


def embed(op, k, n):
    """Place a single-qubit operator on slot k (1-based) of an n-qubit register."""
    if not 1 <= k <= n:
        raise ValueError(f"slot index k={k} outside 1..{n}")
    ops = [IDENTITY_2] * n
    ops[k - 1] = np.asarray(op, dtype=complex)
    return kron(ops)


def num_qubits(rho):
    """Number of qubits of a square matrix with power-of-two dimension."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("expected a square matrix")
    d = rho.shape[0]
    n = d.bit_length() - 1
    if d != 2 ** n:
        raise ValueError(f"dimension {d} is not a power of two")
    return n


def partial_trace(rho, keep, n=None):
    """Trace out every qubit not listed in `keep` (1-based indices).

    The retained slots keep their original relative order. Works on any
    square 2^n operator, not only states.
    """
    rho = np.asarray(rho, dtype=complex)
    if n is None:
        n = num_qubits(rho)
    elif rho.shape != (2 ** n, 2 ** n):
        raise ValueError(f"matrix shape {rho.shape} does not match n={n} qubits")
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise ValueError("keep set must be nonempty")
    if keep[0] < 1 or keep[-1] > n:
        raise ValueError(f"keep indices {keep} outside 1..{n}")
    t = rho.reshape((2,) * (2 * n))
    dropped = 0
    for q in range(n, 0, -1):
        if q in keep:
            continue
        half = t.ndim // 2
        t = np.trace(t, axis1=q - 1, axis2=q - 1 + half)
        dropped += 1
    d = 2 ** len(keep)
    return np.ascontiguousarray(t.reshape(d, d))


def trace_out_second(rho, dim_a, dim_b):
    """Partial trace over the second factor of a dim_a x dim_b bipartition."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (dim_a * dim_b, dim_a * dim_b):
        raise ValueError(f"matrix shape {rho.shape} does not match {dim_a}x{dim_b} bipartition")
    t = rho.reshape(dim_a, dim_b, dim_a, dim_b)
    return np.trace(t, axis1=1, axis2=3)


def bloch_from_density(rho):
    """Bloch vector (rx, ry, rz) of a single-qubit operator."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise ValueError("bloch_from_density expects a 2x2 matrix")
    return np.array([np.trace(PAULI[a] @ rho).real for a in AXES])


def density_from_bloch(r):
    """Single-qubit state (I + r . sigma)/2; requires |r| <= 1 (+tiny slack)."""
    r = np.asarray(r, dtype=float)
    if r.shape != (3,):
        raise ValueError("Bloch vector must have exactly three components")
    norm = float(np.linalg.norm(r))
    if norm > 1.0 + 1e-12:
        raise ValueError(f"Bloch vector norm {norm} exceeds 1")
    return 0.5 * (IDENTITY_2 + r[0] * SIGMA_X + r[1] * SIGMA_Y + r[2] * SIGMA_Z)


def purity(rho):
    rho = np.asarray(rho, dtype=complex)
    return float(np.trace(rho @ rho).real)


def trace_norm(a):
    """Schatten 1-norm: sum of singular values."""
    return float(np.linalg.svd(np.asarray(a, dtype=complex), compute_uv=False).sum())


def is_hermitian(m, tol=HERMITICITY_TOL):
    m = np.asarray(m)
    scale = max(1.0, float(np.abs(m).max())) if m.size else 1.0
    return bool(np.abs(m - m.conj().T).max() <= tol * scale)


def assert_density_matrix(rho, name="state"):
    """Validate trace one, Hermiticity and positivity (floor PSD_FLOOR).

    Hermiticity/trace failures are ValueError (bad input); an eigenvalue
    below the floor raises PositivityError (numerical failure).
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"{name} must be a square matrix")
    if not is_hermitian(rho):
        raise ValueError(f"{name} is not Hermitian within {HERMITICITY_TOL}")
    tr = np.trace(rho)
    if abs(tr - 1.0) > TRACE_TOL:
        raise ValueError(f"{name} has trace {tr}, expected 1 within {TRACE_TOL}")
    w = np.linalg.eigvalsh(rho)
    if w.min() < PSD_FLOOR:
        raise PositivityError(f"{name} has eigenvalue {w.min():.3e} below floor {PSD_FLOOR}")
    return rho


def eigensystem(h):
    """Eigendecomposition of a Hermitian matrix, validated once.

    Returns (evals, evecs) for reuse across a whole time sweep.
    """
    h = np.asarray(h, dtype=complex)
    if not is_hermitian(h):
        raise ValueError("Hamiltonian is not Hermitian within tolerance")
    return np.linalg.eigh(h)


def propagate(evals, evecs, rho, t):
    """U(t) rho U(t)^dag with U from a precomputed eigendecomposition."""
    phases = np.exp(-1j * evals * t)
    u = (evecs * phases) @ evecs.conj().T
    return u @ rho @ u.conj().T


def evolve_unitary(rho, h, t):
    """Conjugate rho by exp(-i h t); h must be Hermitian."""
    evals, evecs = eigensystem(h)
    return propagate(evals, evecs, np.asarray(rho, dtype=complex), t)


def exclusive_products(values):
    """prod of all entries except index j, for every j, without division.

    Division by the total would poison every slot as soon as one entry is
    zero; the prefix/suffix form keeps zeros local.
    """
    values = np.asarray(values)
    n = len(values)
    pre = np.ones(n, dtype=values.dtype if values.dtype.kind == "c" else float)
    suf = np.ones_like(pre)
    for j in range(1, n):
        pre[j] = pre[j - 1] * values[j - 1]
    for j in range(n - 2, -1, -1):
        suf[j] = suf[j + 1] * values[j + 1]
    return pre * suf


def random_density(dim, rng):
    """Hilbert-Schmidt random mixed state: A A^dag / Tr, A complex Gaussian."""
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    m = a @ a.conj().T
    return m / np.trace(m).real


def random_pure(dim, rng):
    """Haar-uniform pure state vector of the given dimension."""
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def random_pure_density(dim, rng):
    v = random_pure(dim, rng)
    return np.outer(v, v.conj())
