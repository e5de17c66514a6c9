import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gkp_kerr.fock_core import (
    FockOperator,
    HybridState,
    InvalidDimensionError,
    NumericError,
    OscillatorState,
    TruncationWarning,
    displacement,
    expm,
    grid_integral,
    identity,
    ladder_ops,
    quadratures,
    truncation_convergence,
    wigner,
    write_wigner_csv,
)
from gkp_kerr.gkp_code import build_code

from conftest import random_dm

small_complex = st.complex_numbers(max_magnitude=1.0, allow_nan=False, allow_infinity=False)


def test_ladder_small_dim():
    a, adag, n = ladder_ops(3)
    assert a.data[0, 1] == 1
    assert np.array_equal(np.diag(n.data).real, [0, 1, 2])
    assert np.allclose(adag.data @ a.data, n.data, atol=1e-15)


def test_ladder_commutator_interior_only():
    a, adag, _ = ladder_ops(8)
    comm = a.data @ adag.data - adag.data @ a.data
    assert np.allclose(comm[:7, :7], np.eye(7))
    assert not np.isclose(comm[7, 7], 1)


def test_ladder_rejects_tiny_dim():
    with pytest.raises(InvalidDimensionError):
        ladder_ops(1)


def test_quadrature_commutator_interior():
    q, p = quadratures(30)
    comm = q.data @ p.data - p.data @ q.data
    assert np.allclose(comm[:29, :29], 1j * np.eye(29))


def test_operator_flags_checked():
    with pytest.raises(NumericError):
        FockOperator(np.array([[0, 1], [0, 0]], dtype=complex), hermitian=True)
    with pytest.raises(InvalidDimensionError):
        FockOperator(np.zeros((2, 3)))


def test_displacement_zero_is_identity():
    assert np.array_equal(displacement(0, 12).data, identity(12).data)


def test_coherent_overlap():
    d = displacement(1.0, 40).data
    assert abs(abs(d[0, 0]) ** 2 - np.exp(-1.0)) < 1e-8


def test_displacement_inverse():
    alpha = 0.5 + 0.3j
    prod = displacement(alpha, 40).data @ displacement(-alpha, 40).data
    assert np.abs(prod[:30, :30] - np.eye(30)).max() < 1e-9


def test_displacement_shifts_quadratures():
    dim = 60
    alpha = 0.4 - 0.2j
    psi = OscillatorState(displacement(alpha, dim).data[:, 0])
    q, p = quadratures(dim)
    assert abs(psi.expect(q) - np.sqrt(2) * alpha.real) < 1e-10
    assert abs(psi.expect(p) - np.sqrt(2) * alpha.imag) < 1e-10


def test_displacement_warns_when_large():
    with pytest.warns(TruncationWarning):
        displacement(3.0, 20)


@settings(max_examples=25, deadline=None)
@given(small_complex, small_complex)
def test_displacement_composition(alpha, beta):
    # edge errors of the truncated exponentials spread inward with |alpha|,
    # so the trusted block for products is the lower half
    dim, m = 80, 40
    lhs = displacement(alpha, dim).data @ displacement(beta, dim).data
    phase = np.exp((alpha * np.conj(beta) - np.conj(alpha) * beta) / 2)
    rhs = phase * displacement(alpha + beta, dim).data
    assert np.abs(lhs - rhs)[:m, :m].max() < 1e-8


@settings(max_examples=20, deadline=None)
@given(small_complex, st.integers(0, 19))
def test_unitary_preserves_interior_norm(alpha, n):
    u = displacement(alpha, 50)
    psi = np.zeros(50, dtype=complex)
    psi[n] = 1
    assert abs(np.linalg.norm(u.data @ psi) - 1) < 1e-9


def test_expm_basics(rng):
    assert np.array_equal(expm(np.zeros((4, 4))).data, np.eye(4))
    _, _, n = ladder_ops(8)
    assert np.allclose(np.diag(expm(n, 1j * np.pi / 2).data), 1j ** np.arange(8), atol=1e-15)
    # GUE scaling keeps ||A|| of order one; exp(A) exp(-A) then loses no digits
    h = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
    h = (h + h.conj().T) / np.sqrt(4 * 16)
    assert np.abs(expm(h).data @ expm(h, -1).data - np.eye(16)).max() < 1e-10


def test_expm_rejects_nonfinite():
    with pytest.raises(NumericError):
        expm(np.array([[np.nan, 0], [0, 1]]))


def test_state_normalisation_and_validation():
    psi = OscillatorState.ket([1, 1j, 0])
    assert abs(np.linalg.norm(psi.data) - 1) < 1e-12
    psi.validate()
    bad = OscillatorState(np.array([[0.5, 0], [0, -0.5]], dtype=complex), weight=0.0)
    with pytest.raises(NumericError):
        bad.validate()


def test_state_is_immutable():
    psi = OscillatorState.fock(1, 4)
    with pytest.raises(ValueError):
        psi.data[0] = 1


def test_hybrid_partial_trace_and_projection():
    osc = OscillatorState.fock(2, 5)
    plus = np.array([1, 1]) / np.sqrt(2)
    h = HybridState.product(plus, osc)
    reduced = h.ptrace_ancilla()
    reduced.validate()
    assert abs(reduced.fidelity(osc) - 1) < 1e-12
    branch = h.project_ancilla([1, 0])
    assert abs(branch.trace() - 0.5) < 1e-12


def test_wigner_fock_values():
    w0, _ = wigner(OscillatorState.fock(0, 20), [0.0], [0.0])
    w1, _ = wigner(OscillatorState.fock(1, 20), [0.0], [0.0])
    assert abs(w0[0, 0] - 1 / np.pi) < 1e-6
    assert abs(w1[0, 0] + 1 / np.pi) < 1e-6


def test_wigner_matches_displaced_parity(rng):
    dim = 12
    rho = random_dm(rng, dim)
    alpha = 0.3 - 0.4j
    d = displacement(alpha, 60).data
    big = np.zeros((60, 60), dtype=complex)
    big[:dim, :dim] = rho
    par = np.diag((-1.0) ** np.arange(60))
    ref = np.trace(big @ d @ par @ d.conj().T).real / np.pi
    w, _ = wigner(OscillatorState(rho), [np.sqrt(2) * alpha.real], [np.sqrt(2) * alpha.imag])
    assert abs(w[0, 0] - ref) < 1e-10


def test_wigner_codeword_normalisation():
    code = build_code(0.25)
    grid = np.linspace(-12, 12, 481)
    w, _ = wigner(OscillatorState(code.zero), grid, grid)
    assert abs(grid_integral(w, grid, grid) - 1) < 1e-3


@pytest.mark.xfail(
    strict=True,
    reason="the j=+-2 spikes of |0_Delta> at q=+-7.09 fall outside [-7, 7]; about 4.8% of the weight is cut",
)
def test_wigner_codeword_normalisation_narrow_window():
    code = build_code(0.25)
    grid = np.linspace(-7, 7, 201)
    w, _ = wigner(OscillatorState(code.zero), grid, grid)
    assert abs(grid_integral(w, grid, grid) - 1) < 1e-3


@settings(max_examples=5, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_wigner_integral_is_trace(seed):
    rho = random_dm(np.random.default_rng(seed), 10) * 0.7
    grid = np.linspace(-7, 7, 201)
    w, _ = wigner(OscillatorState(rho, weight=0.7), grid, grid)
    assert np.isrealobj(w)
    assert abs(grid_integral(w, grid, grid) - 0.7) < 1e-3


def test_wigner_truncation_flag():
    _, meta = wigner(OscillatorState.fock(0, 4), [0.0, 7.0], [0.0])
    assert meta["truncation_warning"]


def test_wigner_csv_layout(tmp_path):
    q = np.array([-1.0, 0.0, 1.0])
    p = np.array([0.0, 2.0])
    w = np.arange(6, dtype=float).reshape(2, 3)
    path = tmp_path / "w.csv"
    write_wigner_csv(path, w, q, p, {"dim": 3})
    lines = path.read_text().splitlines()
    assert lines[0] == "q,p,w"
    assert lines[1].startswith("-1,0,")
    assert lines[4].startswith("-1,2,")
    assert json.loads((tmp_path / "w.csv.json").read_text()) == {"dim": 3}


def test_truncation_convergence_utility():
    res = truncation_convergence(lambda d: 1.0 / d, 100, tol=1e-2)
    assert res["converged"] and res["dim_hi"] == 120
    assert not truncation_convergence(lambda d: d, 10, tol=1.0)["converged"]
