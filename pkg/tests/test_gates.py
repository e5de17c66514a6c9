import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gkp_kerr.decoders import decode_perfect_ed, logical_fidelity
from gkp_kerr.fock_core import OscillatorState, TruncationWarning, expm, ladder_ops
from gkp_kerr.gates import (
    HADAMARD,
    MINUS_H,
    PLUS_H,
    SQRT_PI,
    T_GATE_COEFFS,
    LogicalTarget,
    cubic_gate,
    fourier_gate,
    hadamard_target,
    kerr_gate_time,
    kerr_hamiltonian,
    kerr_unitary,
    magic_target,
    operating_point,
    parity,
    qubit_state,
    sqrt_h_target,
    t_target,
)
from gkp_kerr.gkp_code import build_code, logical_state


def test_kerr_entries():
    u = np.diag(kerr_unitary(8).data)
    assert u[0] == 1
    assert abs(u[2] - 1j) < 1e-15
    assert kerr_unitary(8).is_diagonal


def test_kerr_from_hamiltonian():
    h = kerr_hamiltonian(40)
    u = expm(h, -1j * kerr_gate_time(-1.0))
    assert np.abs(u.data - kerr_unitary(40).data).max() < 1e-12


@pytest.mark.parametrize("delta", [0.36, 0.25])
def test_kerr_eigenphases(delta):
    code = build_code(delta)
    u = kerr_unitary(code.dim).data
    plus = logical_state(code, "+H").data
    minus = logical_state(code, "-H").data
    assert np.abs(u @ plus - plus).max() < 1e-9
    assert np.abs(u @ minus - 1j * minus).max() < 1e-9


def test_kerr_squared_refocuses():
    code = build_code(0.25)
    u2 = kerr_unitary(code.dim).data @ kerr_unitary(code.dim).data
    h = kerr_hamiltonian(code.dim)
    assert np.abs(u2 - expm(h, -2j * kerr_gate_time(-1.0)).data).max() < 1e-12
    plus = logical_state(code, "+H").data
    minus = logical_state(code, "-H").data
    # two gate times act as the logical Hadamard: phases +1 and -1
    assert np.abs(u2 @ plus - plus).max() < 1e-9
    assert np.abs(u2 @ minus + minus).max() < 1e-9


def test_fourier_basics():
    f = fourier_gate(12).data
    assert f[0, 0] == 1
    assert np.allclose(f @ f, parity(12).data, atol=1e-15)


def test_conjugation_identity():
    dim, m = 100, 90
    u = kerr_unitary(dim).data
    a = ladder_ops(dim)[0].data
    n = np.arange(dim)
    rhs = np.exp(1j * np.pi / 8) * a @ np.diag(np.exp(-1j * np.pi * n / 4)) @ u
    assert np.abs((u @ a - rhs)[:m, :m]).max() <= 1e-10


def test_kerr_commutes_with_envelope():
    code = build_code(0.25)
    u, e = kerr_unitary(code.dim).data, code.envelope.data
    assert np.array_equal(u @ e, e @ u)


def test_cubic_zero_is_identity():
    assert np.array_equal(cubic_gate(10, (0, 0, 0)).data, np.eye(10))


def test_cubic_is_unitary_and_diagonal_in_q():
    u = cubic_gate(40, (0.0, 0.0, 0.05))
    assert u.unitarity_defect() < 1e-10
    from gkp_kerr.fock_core import quadratures

    q = quadratures(40)[0].data
    assert np.abs(u.data @ q - q @ u.data).max() < 1e-10


def test_cubic_warns_on_truncation():
    with pytest.warns(TruncationWarning):
        cubic_gate(30, (0, 0, 5.0))


def test_t_gate_polynomial_on_lattice():
    c1, c2, c3 = T_GATE_COEFFS
    for k in range(-6, 7):
        x = SQRT_PI * k
        phi = (c1 * x + c2 * x**2 + c3 * x**3) % (2 * np.pi)
        expected = 0.0 if k % 2 == 0 else np.pi / 4
        assert min(abs(phi - expected), 2 * np.pi - abs(phi - expected)) < 1e-9


def test_sqrt_h_eigenphases():
    s = sqrt_h_target()
    assert np.abs(s(PLUS_H) - PLUS_H).max() < 1e-15
    assert np.abs(s(MINUS_H) - 1j * MINUS_H).max() < 1e-15


def test_sqrt_h_squares_to_hadamard():
    s2 = sqrt_h_target().matrix @ sqrt_h_target().matrix
    overlap = np.abs(np.sum(s2.conj() * HADAMARD, axis=0))
    assert np.abs(overlap - 1).max() < 1e-12


def test_targets_are_unitary():
    for t in (sqrt_h_target(), hadamard_target(), t_target()):
        assert np.abs(t.matrix.conj().T @ t.matrix - np.eye(2)).max() < 1e-12
    with pytest.raises(ValueError):
        LogicalTarget(np.ones((2, 2)), "bad")


def test_magic_target():
    ref = sqrt_h_target()(np.array([1, 1j]) / np.sqrt(2))
    assert np.array_equal(magic_target(), ref)
    assert abs(np.linalg.norm(magic_target()) - 1) < 1e-15


def test_hadamard_qubit_states():
    assert np.allclose(HADAMARD @ qubit_state("+H"), qubit_state("+H"))
    assert np.allclose(HADAMARD @ qubit_state("-H"), -qubit_state("-H"))


def test_operating_point():
    op = operating_point()
    assert op["gate_time"] == pytest.approx(6.25e-6, rel=1e-12)
    assert op["gamma"] == pytest.approx(1 - np.exp(-6.25 / 610), rel=1e-12)
    assert round(op["gamma"], 4) == 1.02e-2
    assert op["reference"] == {"gate_time": 6.3e-6, "gamma": 1.07e-2}


def _gate_action_defect(delta, coeffs):
    code = build_code(delta)
    psi = OscillatorState(code.codeword_matrix @ coeffs).normalized()
    before, _ = decode_perfect_ed(psi, code)
    after, _ = decode_perfect_ed(psi.evolve(kerr_unitary(code.dim)), code)
    w, v = np.linalg.eigh(before.matrix)
    return 1 - logical_fidelity(after, sqrt_h_target()(v[:, -1]))


unit_qubits = st.tuples(
    st.floats(0, np.pi, allow_nan=False), st.floats(0, 2 * np.pi, allow_nan=False)
).map(lambda tp: np.array([np.cos(tp[0] / 2), np.exp(1j * tp[1]) * np.sin(tp[0] / 2)]))


@settings(max_examples=20, deadline=None)
@given(unit_qubits)
def test_gate_action_matches_target(coeffs):
    assert _gate_action_defect(0.25, coeffs) <= 1e-8


@pytest.mark.xfail(
    strict=True,
    reason="at delta=0.36 the codewords overlap and have unequal norms, so the decoded "
    "gate action deviates from sqrt(H) by ~5e-6 even without loss",
)
def test_gate_action_matches_target_large_delta():
    worst = max(_gate_action_defect(0.36, qubit_state(lab)) for lab in ("0", "1", "+", "+i", "+H", "-H"))
    assert worst <= 1e-8
