import math

import numpy as np
import pytest
import scipy.linalg

from cgdyn import evolve, maxent, qcore
from cgdyn.coarse_grain import apply_cg, custom, non_preferential, preferential


def _bloch(theta, phi=0.0):
    return np.array(
        [math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)]
    )


def test_hamiltonians_hermitian():
    specs = [
        evolve.Swap(omega=1.3),
        evolve.Cnot(omega=0.7),
        evolve.CnotInteraction(omega=1.0),
        evolve.LocalZSecond(omega=2.0),
        evolve.sample_field(3, seed=1),
        evolve.IsingChain(n_spins=3, J=1.0, g=0.4, boundary="closed"),
    ]
    for spec in specs:
        h = evolve.build_hamiltonian(spec)
        assert h.shape == (2 ** spec.n, 2 ** spec.n)
        assert qcore.is_hermitian(h)


def test_swap_gate_at_quarter_period():
    # exp(-i H pi/(2 omega)) is the exchange gate up to a global phase
    spec = evolve.Swap(omega=1.0)
    u = scipy.linalg.expm(-1j * evolve.build_hamiltonian(spec) * (math.pi / 2))
    swap = np.eye(4)[[0, 2, 1, 3]]
    assert abs(abs(np.trace(u @ swap.T)) - 4.0) < 1e-12


def test_cnot_gate_at_quarter_period():
    spec = evolve.Cnot(omega=1.0)
    u = scipy.linalg.expm(-1j * evolve.build_hamiltonian(spec) * (math.pi / 2))
    cnot = np.eye(4)[[0, 1, 3, 2]]
    assert abs(abs(np.trace(u @ cnot.T)) - 4.0) < 1e-12


def test_ising_bonds_boundary():
    closed = evolve.IsingChain(n_spins=4, J=1.0, g=0.0, boundary="closed")
    assert len(closed.bonds()) == 4
    open_ = evolve.IsingChain(n_spins=4, J=1.0, g=0.0, boundary="open")
    assert len(open_.bonds()) == 3
    # the two-site ring keeps its doubled bond on purpose
    two = evolve.IsingChain(n_spins=2, J=1.0, g=0.0, boundary="closed")
    assert two.bonds() == [(1, 2), (2, 1)]


def test_sample_field_deterministic():
    a = evolve.sample_field(5, seed=42)
    b = evolve.sample_field(5, seed=42)
    assert a.omegas == b.omegas
    assert evolve.sample_field(5, seed=43).omegas != a.omegas
    assert a.t_c == pytest.approx(2 * math.pi / 0.2)


def test_field_fast_vs_dense(rng):
    times = np.linspace(0.0, 3.0, 13)
    rho0 = qcore.density_from_bloch([0.5, -0.2, 0.4])
    for interaction in (False, True):
        spec = evolve.sample_field(4, seed=9, include_interaction=interaction)
        cg = preferential(4, 0.4)
        fast = evolve.trajectory(rho0, cg, spec, times, method="fast")
        dense = evolve.trajectory(rho0, cg, spec, times, method="dense")
        assert np.abs(fast.bloch - dense.bloch).max() < 1e-12


def test_ising_g0_fast_vs_dense():
    times = np.linspace(0.0, 2.5, 11)
    rho0 = qcore.density_from_bloch(0.8 * _bloch(1.1, 0.4))
    for n in (2, 3, 4, 5):
        spec = evolve.IsingChain(n_spins=n, J=0.9, g=0.0, boundary="closed")
        cg = non_preferential(n)
        fast = evolve.trajectory(rho0, cg, spec, times, method="fast")
        dense = evolve.trajectory(rho0, cg, spec, times, method="dense")
        assert np.abs(fast.bloch - dense.bloch).max() < 1e-12


def test_local_z_fast_vs_dense():
    times = np.linspace(0.0, 2 * math.pi, 9)
    rho0 = qcore.density_from_bloch([0.7, 0.1, 0.2])
    spec = evolve.LocalZSecond(omega=1.0)
    cg = non_preferential(2)
    fast = evolve.trajectory(rho0, cg, spec, times, method="fast")
    dense = evolve.trajectory(rho0, cg, spec, times, method="dense")
    assert np.abs(fast.bloch - dense.bloch).max() < 1e-12


def test_ising_statevector_vs_dense():
    # pure product input, transverse field on: two different integrators
    times = np.linspace(0.0, 1.8, 7)
    rho0 = qcore.density_from_bloch(_bloch(0.7, 0.2))
    spec = evolve.IsingChain(n_spins=4, J=1.0, g=0.5, boundary="closed")
    cg = non_preferential(4)
    sv = evolve.trajectory(rho0, cg, spec, times, method="statevector")
    dense = evolve.trajectory(rho0, cg, spec, times, method="dense")
    assert np.abs(sv.bloch - dense.bloch).max() < 1e-10


def test_ising_g0_n_independence():
    # the effective trajectory does not depend on the chain length
    times = np.linspace(0.0, 2.0, 9)
    rho0 = qcore.density_from_bloch(0.9 * _bloch(0.9))
    ref = None
    for n in (3, 4, 5, 6):
        spec = evolve.IsingChain(n_spins=n, J=1.0, g=0.0, boundary="closed")
        traj = evolve.trajectory(rho0, non_preferential(n), spec, times)
        if ref is None:
            ref = traj.bloch
        else:
            assert np.abs(traj.bloch - ref).max() < 1e-12


def test_ising_g0_p_independence(rng):
    # any strictly positive weighting gives the same effective state for a
    # pure input (mixed inputs assign different radii per site, so their
    # trajectories legitimately depend on the weights)
    times = np.linspace(0.0, 2.0, 7)
    rho0 = qcore.density_from_bloch(_bloch(1.3, 0.5))
    n = 3
    spec = evolve.IsingChain(n_spins=n, J=1.0, g=0.0, boundary="closed")
    ref = evolve.trajectory(rho0, non_preferential(n), spec, times, method="dense").bloch
    for _ in range(4):
        w = rng.uniform(0.1, 1.0, n)
        cg = custom(w / w.sum())
        got = evolve.trajectory(rho0, cg, spec, times, method="dense").bloch
        assert np.abs(got - ref).max() < 1e-10


def test_ising_g0_diagonal_population_conserved():
    # [rho]_00 is an invariant of the interaction-only chain
    theta = 1.05
    times = np.linspace(0.0, 3.0, 12)
    rho0 = qcore.density_from_bloch(_bloch(theta))
    spec = evolve.IsingChain(n_spins=4, J=1.0, g=0.0, boundary="closed")
    traj = evolve.trajectory(rho0, non_preferential(4), spec, times, method="dense")
    pop = 0.5 * (1.0 + traj.bloch[:, 2])
    assert np.abs(pop - math.cos(theta / 2) ** 2).max() < 1e-12


def test_ising_translation_symmetric_marginals():
    # closed chain + symmetric product input: every site marginal is equal
    spec = evolve.IsingChain(n_spins=4, J=1.0, g=0.5, boundary="closed")
    psi_site = np.array([math.cos(0.35), math.sin(0.35) * np.exp(0.2j)])
    rho0 = qcore.kron([np.outer(psi_site, psi_site.conj())] * 4)
    h = evolve.build_hamiltonian(spec)
    rho_t = qcore.evolve_unitary(rho0, h, 0.9)
    marginals = [qcore.partial_trace(rho_t, [k], 4) for k in range(1, 5)]
    for m in marginals[1:]:
        assert qcore.trace_norm(m - marginals[0]) < 1e-10


def test_gamma_t_matches_trajectory(rng):
    rho0 = qcore.random_density(2, rng)
    cg = preferential(2, 0.7)
    spec = evolve.Swap(omega=1.0)
    traj = evolve.trajectory(rho0, cg, spec, np.array([0.0, 0.4, 0.8]))
    g = evolve.gamma_t(rho0, cg, spec, 0.8)
    assert np.allclose(qcore.bloch_from_density(g), traj.bloch[2], atol=1e-13)


def test_trajectory_validation(rng):
    rho0 = qcore.random_density(2, rng)
    spec = evolve.Swap(omega=1.0)
    with pytest.raises(ValueError):
        evolve.trajectory(rho0, non_preferential(3), spec, [0.0, 1.0])
    cg = non_preferential(2)
    with pytest.raises(ValueError):
        evolve.trajectory(rho0, cg, spec, [])
    with pytest.raises(ValueError):
        evolve.trajectory(rho0, cg, spec, [0.0, 1.0, 0.5])


def test_trajectory_purity_column(rng):
    rho0 = qcore.random_density(2, rng)
    cg = preferential(2, 0.6)
    traj = evolve.trajectory(rho0, cg, evolve.Cnot(omega=1.0), np.linspace(0, 2, 9))
    want = 0.5 * (1.0 + np.sum(traj.bloch ** 2, axis=1))
    assert np.allclose(traj.purity, want, atol=1e-14)


def test_trajectory_metadata(rng):
    spec = evolve.sample_field(3, seed=5)
    traj = evolve.trajectory(
        qcore.density_from_bloch([0.3, 0.0, 0.0]), non_preferential(3), spec, [0.0, 1.0]
    )
    md = traj.metadata
    assert md["method"] == "fast"
    assert md["spec"]["kind"] == "FieldAllToAll"
    assert md["t_c"] == pytest.approx(spec.t_c)
    assert isinstance(md["lambda"], float)
    # pure input records the sentinel as a string
    traj2 = evolve.trajectory(
        qcore.density_from_bloch([0.0, 0.0, 1.0]), non_preferential(3), spec, [0.0]
    )
    assert traj2.metadata["lambda"] == "inf"


def test_route_caps():
    rho0 = qcore.density_from_bloch([0.5, 0.0, 0.0])
    big = evolve.IsingChain(n_spins=13, J=1.0, g=0.5, boundary="closed")
    with pytest.raises(ValueError):
        evolve.trajectory(rho0, non_preferential(13), big, [0.0], method="dense")
    # mixed input with a transverse field has no fast or statevector route
    mixed_big = evolve.IsingChain(n_spins=9, J=1.0, g=0.5, boundary="closed")
    with pytest.raises(ValueError):
        evolve.trajectory(rho0, non_preferential(9), mixed_big, [0.0])
    with pytest.raises(ValueError):
        evolve.trajectory(rho0, non_preferential(2), evolve.Swap(omega=1.0), [0.0], method="fast")


def test_statevector_route_requires_pure(rng):
    spec = evolve.IsingChain(n_spins=3, J=1.0, g=0.3, boundary="closed")
    with pytest.raises(ValueError):
        evolve.trajectory(
            qcore.density_from_bloch([0.5, 0.0, 0.0]),
            non_preferential(3),
            spec,
            [0.0, 1.0],
            method="statevector",
        )


def test_evolve_product_fast_matches_dense(rng):
    # arbitrary (non-collinear) product inputs through the factorized path
    spec = evolve.sample_field(3, seed=2, include_interaction=True)
    factors = [qcore.random_density(2, rng) for _ in range(3)]
    t = 1.3
    got = evolve.evolve_product_fast(factors, spec, t)
    rho_t = qcore.evolve_unitary(qcore.kron(factors), evolve.build_hamiltonian(spec), t)
    for k in range(3):
        want = qcore.partial_trace(rho_t, [k + 1], 3)
        assert qcore.trace_norm(np.asarray(got[k]) - want) < 1e-12
