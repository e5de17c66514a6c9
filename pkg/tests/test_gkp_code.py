import numpy as np
import pytest

from gkp_kerr.fock_core import TruncationWarning, identity, truncation_convergence
from gkp_kerr.gates import HADAMARD, cubic_gate, fourier_gate, kerr_hamiltonian, parity
from gkp_kerr.gkp_code import (
    DEFAULT_DIMS,
    LABELS,
    TruncationError,
    build_code,
    envelope_commutator_norm,
    logical_state,
    suggest_dim,
)

# |<0_D|Z_L|0_D> - 1| and the Fourier-vs-Hadamard defect, recorded per delta
Z_DEFECT = {0.36: 0.0966310114339961, 0.25: 0.047895973696893246, 0.15: 0.017517138690344547}
HADAMARD_DEFECT = {0.36: 7.1992457146841105e-06, 0.25: 1.45434775333797e-11, 0.15: 2.172706489107907e-13}


@pytest.fixture(scope="module")
def codes():
    return {d: build_code(d) for d in (0.36, 0.25, 0.15)}


def test_default_dims(codes):
    for d, code in codes.items():
        assert code.dim == DEFAULT_DIMS[d]


@pytest.mark.parametrize("delta", [0.36, 0.25, 0.15])
def test_codewords_normalised_and_real(codes, delta):
    code = codes[delta]
    for v in code.codewords:
        assert abs(np.linalg.norm(v) - 1) < 1e-10
        assert not np.any(v.imag)


def test_envelope_entries(codes):
    env = np.diag(codes[0.25].envelope.data).real
    assert codes[0.25].envelope.is_diagonal
    assert np.all(env > 0) and np.all(env <= 1) and env[0] == 1


def test_stabilizers_real_positive_monotone(codes):
    vals = []
    for d in (0.36, 0.25, 0.15):
        sq, sp = codes[d].stabilizer_expectations(0)
        for s in (sq, sp):
            assert abs(s.imag) < 1e-10 and s.real > 0
        vals.append(sq.real)
    assert vals[0] < vals[1] < vals[2] < 1


def test_stabilizers_are_unitary(codes):
    code = codes[0.25]
    assert code.stabilizer_q.unitarity_defect() < 1e-10
    assert code.logical_x.unitarity_defect() < 1e-10


def test_mean_photon_number(codes):
    assert abs(codes[0.25].mean_photon_number() - 7.5) < 0.75


@pytest.mark.parametrize("delta", [0.36, 0.25, 0.15])
def test_logical_z_fixture(codes, delta):
    code = codes[delta]
    z = np.vdot(code.zero, code.logical_z.data @ code.zero)
    assert abs(z.imag) < 1e-12
    assert abs(abs(z - 1) - Z_DEFECT[delta]) < 1e-9


def test_logical_z_improves_with_smaller_delta():
    assert Z_DEFECT[0.36] > Z_DEFECT[0.25] > Z_DEFECT[0.15]


def test_logical_x_maps_codewords(codes):
    code = codes[0.25]
    assert abs(np.vdot(code.one, code.logical_x.data @ code.zero)) > 0.9


def test_overlap_grows_with_delta(codes):
    assert abs(codes[0.36].overlap) > abs(codes[0.25].overlap)


@pytest.mark.parametrize("delta", [0.36, 0.25, 0.15])
def test_parity_invariance(codes, delta):
    code = codes[delta]
    par = parity(code.dim).data
    for v in code.codewords:
        assert np.abs(par @ v - v).max() < 1e-9


def test_hadamard_support(codes):
    code = codes[0.25]
    plus = logical_state(code, "+H").data
    minus = logical_state(code, "-H").data
    n = np.arange(code.dim)
    assert np.all(plus[n % 4 != 0] == 0)
    assert np.all(minus[n % 4 != 2] == 0)


@pytest.mark.parametrize("delta", [0.36, 0.25])
def test_fourier_eigenphases(codes, delta):
    code = codes[delta]
    f = fourier_gate(code.dim).data
    plus = logical_state(code, "+H").data
    minus = logical_state(code, "-H").data
    assert np.abs(f @ plus - plus).max() < 1e-9
    assert np.abs(f @ minus + minus).max() < 1e-9


def test_hadamard_states_are_fourier_eigenvectors_in_code_span(codes):
    code = codes[0.25]
    plus = logical_state(code, "+H").data
    b = code.lowdin_basis
    # +H lies in the code span to the accuracy of the code
    assert np.linalg.norm(plus - b @ (b.conj().T @ plus)) < 1e-5


@pytest.mark.parametrize("delta", [0.36, 0.25, 0.15])
def test_fourier_is_logical_hadamard(codes, delta):
    code = codes[delta]
    b = code.lowdin_basis
    m = b.conj().T @ fourier_gate(code.dim).data @ b
    phase = np.vdot(HADAMARD.ravel(), m.ravel())
    phase /= abs(phase)
    defect = np.abs(m - phase * HADAMARD).max()
    assert defect == pytest.approx(HADAMARD_DEFECT[delta], rel=1e-3, abs=1e-13)


def test_hadamard_defect_decreases():
    assert HADAMARD_DEFECT[0.36] > HADAMARD_DEFECT[0.25] > HADAMARD_DEFECT[0.15]


@pytest.mark.parametrize("label", LABELS + ("+Y", "-Y"))
def test_logical_states_normalised(codes, label):
    psi = logical_state(codes[0.25], label)
    assert abs(np.linalg.norm(psi.data) - 1) < 1e-10


def test_plus_y_is_codeword_superposition(codes):
    code = codes[0.25]
    psi = logical_state(code, "+Y").data
    ref = code.zero + 1j * code.one
    assert abs(abs(np.vdot(ref / np.linalg.norm(ref), psi)) - 1) < 1e-12


def test_unknown_label(codes):
    with pytest.raises(ValueError):
        logical_state(codes[0.25], "T")


def test_envelope_commutators(codes):
    code = codes[0.25]
    assert envelope_commutator_norm(code, kerr_hamiltonian(code.dim)) == 0.0
    assert envelope_commutator_norm(code, identity(code.dim)) == 0.0
    with pytest.warns(TruncationWarning):
        cubic = cubic_gate(code.dim)
    assert envelope_commutator_norm(code, cubic) > 1e-3


def test_truncation_error_suggests_dim():
    with pytest.raises(TruncationError) as info:
        build_code(0.25, dim=40)
    assert info.value.suggested_dim == suggest_dim(0.25)
    assert build_code(0.25, dim=info.value.suggested_dim).dim == info.value.suggested_dim


def test_rejects_bad_delta():
    with pytest.raises(ValueError):
        build_code(0.7)


@pytest.mark.parametrize("delta", [0.36, 0.25])
def test_diagnostics_converge_in_truncation(codes, delta):
    dim = codes[delta].dim

    def stab(d):
        return build_code(delta, d).stabilizer_expectations(0)[0].real

    def nbar(d):
        return build_code(delta, d).mean_photon_number()

    # the default dims guarantee a codeword tail below 1e-4
    assert truncation_convergence(stab, dim, 1e-4)["converged"]
    assert truncation_convergence(nbar, dim, 1e-3)["converged"]


def test_codeword_csv(tmp_path, codes):
    code = codes[0.36]
    path = tmp_path / "code.csv"
    code.to_csv(path)
    rows = path.read_text().splitlines()
    assert rows[0] == "n,re0,im0,re1,im1"
    assert len(rows) == code.dim + 1
    back = np.array([float(r.split(",")[1]) for r in rows[1:]])
    assert np.array_equal(back, code.zero.real)
