"""Fast invariant checks behind ``gkp-kerr validate``."""
from __future__ import annotations

import numpy as np

from ..decoders import build_sbs_basis, decode_sbs
from ..evolution import NoiseSpec, lindblad_evolve
from ..fock_core import OscillatorState, ladder_ops
from ..gates import kerr_gate_time, kerr_hamiltonian, kerr_unitary
from ..gkp_code import build_code, envelope_commutator_norm, logical_state
from ..sbs import SbsParams, build_sbs_round


def _kerr_conjugation(dim=100, margin=10):
    u = kerr_unitary(dim).data
    a = ladder_ops(dim)[0].data
    n = np.arange(dim)
    rhs = np.exp(1j * np.pi / 8) * a @ np.diag(np.exp(-1j * np.pi * n / 4)) @ u
    m = dim - margin
    return float(np.abs((u @ a - rhs)[:m, :m]).max()), 1e-10


def _kerr_eigenphases():
    code = build_code(0.25)
    u = kerr_unitary(code.dim).data
    plus = logical_state(code, "+H").data
    minus = logical_state(code, "-H").data
    return max(np.abs(u @ plus - plus).max(), np.abs(u @ minus - 1j * minus).max()), 1e-9


def _envelope_commutes():
    code = build_code(0.25)
    return envelope_commutator_norm(code, kerr_hamiltonian(code.dim)), 0.0


def _sbs_completeness():
    return max(build_sbs_round(SbsParams(d), build_code(d).dim).completeness_defect() for d in (0.36, 0.25)), 1e-8


def _basis_checks():
    code = build_code(0.36)
    b = build_sbs_basis(code)
    return max(b.orthonormality_defect(), b.completeness_defect(code.interior_margin)), 1e-8


def _decoder_trace():
    code = build_code(0.36)
    b = build_sbs_basis(code)
    rng = np.random.default_rng(0)
    g = rng.normal(size=(code.dim, code.dim)) + 1j * rng.normal(size=(code.dim, code.dim))
    rho = g @ g.conj().T
    rho /= np.trace(rho).real
    return abs(np.trace(decode_sbs(OscillatorState(rho), b).matrix).real - 1.0), 1e-10


def _lindblad_drift():
    code = build_code(0.36)
    noise = NoiseSpec.from_gamma(1e-2, kerr_gate_time(-1.0))
    res = lindblad_evolve(logical_state(code, "+i"), kerr_hamiltonian(code.dim), noise)
    return max(res.max_trace_drift, -min(res.min_eigenvalue, 0.0) - 1e-7 + 1e-8), 1e-8


CHECKS = {
    "kerr conjugation identity": _kerr_conjugation,
    "kerr eigenphases on Hadamard states": _kerr_eigenphases,
    "Kerr Hamiltonian commutes with envelope": _envelope_commutes,
    "round Kraus completeness": _sbs_completeness,
    "subsystem basis orthonormal and complete": _basis_checks,
    "trace-out decoder trace preserving": _decoder_trace,
    "master equation trace drift": _lindblad_drift,
}


def run_checks(verbose: bool = True) -> bool:
    ok = True
    for name, fn in CHECKS.items():
        value, tol = fn()
        passed = value <= tol
        ok &= passed
        if verbose:
            print(f"{'PASS' if passed else 'FAIL'} {name}: {value:.3e} (tol {tol:.0e})")
    return ok
