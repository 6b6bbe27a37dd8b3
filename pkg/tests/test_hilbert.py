import numpy as np
import pytest
import scipy.linalg as sla

from kerrcat.errors import PhysicsError
from kerrcat.hilbert import (FockSpace, build_fock_operators, displacement_operator, tensor_embed,
                             wigner_function)
from kerrcat.spectrum import kcq_basis_states, metapotential_geometry


def test_ladder_superdiagonal_dim3():
    a = build_fock_operators(FockSpace(3)).annihilation
    assert np.allclose(np.diag(a, 1), [1, np.sqrt(2)], atol=0)
    assert np.count_nonzero(a) == 2


def test_parity_dim3():
    assert np.array_equal(build_fock_operators(3).parity, np.diag([1, -1, 1]).astype(complex))


def test_truncated_commutator():
    ops = build_fock_operators(4)
    a, ad = ops.annihilation, ops.creation
    comm = a @ ad - ad @ a
    assert np.allclose(comm, np.diag([1, 1, 1, -3]), atol=1e-14)


def test_ladder_and_parity_algebra_exact():
    ops = build_fock_operators(12)
    a, p = ops.annihilation, ops.parity
    for n in range(11):
        assert a[n, n + 1] == np.sqrt(n + 1)
    assert np.array_equal(p @ a + a @ p, np.zeros_like(a))
    assert np.array_equal(ops.number, np.diag(np.arange(12)).astype(complex))


def test_invalid_dimension():
    with pytest.raises(PhysicsError) as err:
        FockSpace(1)
    assert err.value.kind == "invalid-dimension"


def test_displacement_identity_at_zero():
    assert np.array_equal(displacement_operator(10, 0), np.eye(10))


def test_displacement_mean_photons():
    d = displacement_operator(30, 1.0)
    psi = d[:, 0]
    nbar = np.sum(np.arange(30) * np.abs(psi) ** 2)
    assert abs(nbar - 1.0) < 1e-6
    # independent oracle: scipy expm of the generator
    a = build_fock_operators(30).annihilation
    ref = sla.expm(a.conj().T - a)
    assert np.max(np.abs(ref - d)) < 1e-10


def test_displacement_inverse_and_unitary():
    beta = 0.7 + 0.3j
    d = displacement_operator(30, beta)
    assert np.linalg.norm(d @ displacement_operator(30, -beta) - np.eye(30), 2) < 1e-8
    assert np.linalg.norm(d.conj().T @ d - np.eye(30), 2) < 1e-8


def test_displacement_warns_outside_range():
    with pytest.warns(RuntimeWarning):
        displacement_operator(8, 2.0)


def test_tensor_identity_and_factor_order():
    assert np.array_equal(tensor_embed(np.eye(2), np.eye(3)), np.eye(6))
    a = build_fock_operators(3).annihilation
    b = build_fock_operators(2).annihilation
    lhs = tensor_embed(a, np.eye(2)) @ tensor_embed(np.eye(3), b)
    assert np.allclose(lhs, tensor_embed(a, b), atol=1e-15)
    # factor-A-major: index = iA * dimB + iB
    assert tensor_embed(a, np.eye(2))[0, 2] == a[0, 1]


def test_tensor_trace_and_associativity():
    rng = np.random.default_rng(1)
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    b = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    assert abs(np.trace(tensor_embed(a, b)) - np.trace(a) * np.trace(b)) < 1e-12
    # integer entries make the products exact, so ordering cannot matter
    ia, ib, ic = (rng.integers(-9, 9, size=s) for s in ((3, 3), (2, 2), (2, 2)))
    assert np.array_equal(tensor_embed(tensor_embed(ia, ib), ic), tensor_embed(ia, tensor_embed(ib, ic)))


def test_tensor_rejects_non_square():
    with pytest.raises(PhysicsError) as err:
        tensor_embed(np.ones((2, 3)), np.eye(2))
    assert err.value.kind == "invalid-shape"


def test_wigner_vacuum_and_one_photon():
    vac = np.zeros(6)
    vac[0] = 1
    one = np.zeros(6)
    one[1] = 1
    assert abs(wigner_function(vac, [0])[0] - 2 / np.pi) < 1e-12
    assert abs(wigner_function(one, [0])[0] + 2 / np.pi) < 1e-12


def test_wigner_coherent_state_gaussian():
    beta = 0.8 - 0.4j
    psi = displacement_operator(40, beta)[:, 0]
    pts = np.array([0, beta, beta + 0.5])
    w = wigner_function(psi, pts)
    ref = 2 / np.pi * np.exp(-2 * np.abs(pts - beta) ** 2)
    assert np.max(np.abs(w - ref)) < 1e-8


def test_wigner_rejects_bad_state():
    with pytest.raises(PhysicsError) as err:
        wigner_function(np.eye(3), [0])
    assert err.value.kind == "invalid-state"
    with pytest.raises(PhysicsError):
        wigner_function(np.ones((2, 3)), [0])


def test_wigner_cat_normalization(wp_spec, wp):
    psi = kcq_basis_states(wp_spec)["plusX"]
    alpha = metapotential_geometry(wp, stark=True).well_amplitude
    # 6 sigma beyond the wells (sigma = 1/2 for a coherent state)
    half = alpha + 3.0
    x = np.linspace(-half, half, 121)
    step = x[1] - x[0]
    xx, yy = np.meshgrid(x, x)
    grid = (xx + 1j * yy).ravel()
    w = wigner_function(psi, grid)
    assert abs(np.sum(w) * step ** 2 - 1) < 1e-3


def test_wigner_matches_displaced_parity_definition(wp_spec):
    psi = kcq_basis_states(wp_spec)["plusY"]
    dim, pad = len(psi), 140
    big = np.zeros((pad, pad), dtype=complex)
    big[:dim, :dim] = np.outer(psi, psi.conj())
    parity = build_fock_operators(pad).parity
    pts = [0, 0.3 + 0.2j, 2.5, -1.1 + 0.7j]
    w = wigner_function(psi, pts)
    for beta, val in zip(pts, w):
        d = displacement_operator(pad, beta)
        ref = 2 / np.pi * np.trace(d.conj().T @ big @ d @ parity)
        assert abs(val - ref.real) < 1e-9


def test_wigner_real_for_mixed_state():
    rng = np.random.default_rng(3)
    g = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    rho = g @ g.conj().T
    rho /= np.trace(rho)
    w = wigner_function(rho, rng.normal(size=20) + 1j * rng.normal(size=20))
    assert np.isrealobj(w) and np.all(np.isfinite(w))
