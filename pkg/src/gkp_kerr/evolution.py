"""Open-system oscillator dynamics: loss and dephasing during a gate.

The master equation

    d rho/dt = -i[H, rho] + kappa D[a] rho + kappa_phi D[n] rho

is integrated with fixed-step RK4 directly on D x D matrices. For a
Hamiltonian diagonal in the Fock basis (the Kerr case) the integration is
done in the interaction picture, where only the dissipators remain and the
jump operator picks up the phases exp(i (h_m - h_{m+1}) t).
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaln

from .fock_core import FockOperator, NumericError, OscillatorState, _check_dims

TRACE_DRIFT_TOL = 1e-8
NEGATIVITY_TOL = -1e-7
MIN_STEPS = 2000


class IntegratorError(NumericError):
    def __init__(self, message: str, diagnostics: dict):
        super().__init__(f"{message}: {diagnostics}")
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class NoiseSpec:
    """Loss rate, dephasing rate and evolution time (consistent units)."""

    kappa: float
    duration: float
    kappa_phi: float = 0.0

    def __post_init__(self):
        if self.kappa < 0 or self.kappa_phi < 0:
            raise ValueError("rates must be non-negative")
        if self.duration < 0:
            raise ValueError("duration must be non-negative")

    @property
    def gamma(self) -> float:
        return float(-np.expm1(-self.kappa * self.duration))

    @classmethod
    def from_gamma(cls, gamma: float, duration: float, kappa_phi: float = 0.0) -> "NoiseSpec":
        return cls(gamma_to_kappa(gamma, duration), duration, kappa_phi)


def gamma_to_kappa(gamma: float, duration: float) -> float:
    """Invert gamma = 1 - exp(-kappa t)."""
    if not 0 <= gamma < 1:
        raise ValueError(f"gamma must lie in [0, 1), got {gamma}")
    if duration <= 0:
        raise ValueError("duration must be positive")
    return float(-np.log1p(-gamma) / duration)


@dataclass(frozen=True, eq=False)
class EvolutionResult:
    state: OscillatorState
    steps: int
    max_trace_drift: float
    min_eigenvalue: float
    wall_time: float
    method: str
    samples: np.ndarray | None = field(default=None, repr=False)

    @property
    def diagnostics(self) -> dict:
        return {
            "method": self.method,
            "steps": self.steps,
            "max_trace_drift": self.max_trace_drift,
            "min_eigenvalue": self.min_eigenvalue,
            "wall_time": self.wall_time,
        }


def step_size(hamiltonian: FockOperator, noise: NoiseSpec) -> float:
    """Fixed RK4 step from a bound on the generator's spectral radius.

    In the interaction picture the fastest coherent rate is the largest
    adjacent level spacing rather than the norm of H.
    """
    d = hamiltonian.dim
    if hamiltonian.is_diagonal:
        h = np.real(np.diag(hamiltonian.data))
        coherent = float(np.abs(np.diff(h)).max()) if noise.kappa > 0 else 0.0
    else:
        coherent = float(np.linalg.norm(hamiltonian.data, 2))
    rate = coherent + noise.kappa * d + noise.kappa_phi * d**2
    h_step = noise.duration / MIN_STEPS
    if rate > 0:
        h_step = min(h_step, 0.05 / rate)
    return h_step


def _rk4(rhs, rho, t0, h, steps):
    drift = 0.0
    tr0 = np.trace(rho).real
    t = t0
    for _ in range(steps):
        k1 = rhs(t, rho)
        k2 = rhs(t + h / 2, rho + (h / 2) * k1)
        k3 = rhs(t + h / 2, rho + (h / 2) * k2)
        k4 = rhs(t + h, rho + h * k3)
        rho = rho + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
        drift = max(drift, abs(np.trace(rho).real - tr0))
    return rho, drift


def lindblad_evolve(rho0: OscillatorState, hamiltonian: FockOperator, noise: NoiseSpec) -> EvolutionResult:
    """Integrate the loss/dephasing master equation for ``noise.duration``.

    Raises
    ------
    IntegratorError
        If the trace drifts by more than 1e-8 or the result has an
        eigenvalue below -1e-7.
    """
    _check_dims(rho0.dim, hamiltonian.dim)
    if np.abs(hamiltonian.data - hamiltonian.data.conj().T).max() > 1e-12:
        raise ValueError("Hamiltonian must be Hermitian")
    start = time.perf_counter()
    d = rho0.dim
    rho = rho0.dm()
    n = np.arange(d, dtype=float)
    kappa, kphi, total = noise.kappa, noise.kappa_phi, noise.duration
    h_step = step_size(hamiltonian, noise)
    steps = int(math.ceil(total / h_step - 1e-9)) if total > 0 else 0
    h_step = total / steps if steps else 0.0
    # elementwise pieces shared by both pictures
    anti = 0.5 * kappa * (n[:, None] + n[None, :])
    deph = 0.5 * kphi * (n[:, None] - n[None, :]) ** 2
    damp = anti + deph
    sq = np.sqrt(n[1:])
    jump_amp = kappa * np.outer(sq, sq)

    diagonal = hamiltonian.is_diagonal
    if diagonal:
        hd = np.real(np.diag(hamiltonian.data))
        dh = hd[:-1] - hd[1:]

        def rhs(t, r):
            out = -damp * r
            if kappa:
                ph = np.exp(1j * dh * t)
                out[:-1, :-1] += jump_amp * np.outer(ph, ph.conj()) * r[1:, 1:]
            return out
    else:
        hm = np.array(hamiltonian.data)

        def rhs(t, r):
            out = -1j * (hm @ r - r @ hm) - damp * r
            if kappa:
                out[:-1, :-1] += jump_amp * r[1:, 1:]
            return out

    if steps:
        rho, drift = _rk4(rhs, rho, 0.0, h_step, steps)
    else:
        drift = 0.0
    if diagonal and total:
        u = np.exp(-1j * hd * total)
        rho = u[:, None] * rho * u.conj()[None, :]
    rho = 0.5 * (rho + rho.conj().T)
    min_eig = float(np.linalg.eigvalsh(rho).min())
    result = EvolutionResult(
        OscillatorState(rho, rho0.trace(), rho0.trace_tol),
        steps,
        float(drift),
        min_eig,
        time.perf_counter() - start,
        "rk4-interaction" if diagonal else "rk4",
    )
    if drift > TRACE_DRIFT_TOL or min_eig < NEGATIVITY_TOL:
        raise IntegratorError("integrator tolerance exceeded", result.diagnostics)
    return result


class _NoJumpPropagator:
    """exp(-i H_eff t) with H_eff = H - (i/2)(kappa n + kappa_phi n^2)."""

    def __init__(self, hamiltonian: FockOperator, noise: NoiseSpec):
        n = np.arange(hamiltonian.dim, dtype=float)
        decay = 0.5 * (noise.kappa * n + noise.kappa_phi * n**2)
        self.diagonal = hamiltonian.is_diagonal
        if self.diagonal:
            self.rates = -1j * np.diag(hamiltonian.data) - decay
        else:
            heff = np.array(hamiltonian.data) - 1j * np.diag(decay)
            w, v = np.linalg.eig(-1j * heff)
            self.rates, self.v, self.vinv = w, v, np.linalg.inv(v)

    def __call__(self, psi: np.ndarray, t: float) -> np.ndarray:
        if self.diagonal:
            return np.exp(self.rates * t) * psi
        return self.v @ (np.exp(self.rates * t) * (self.vinv @ psi))


def _trajectory(psi0, prop, noise, seed, idx):
    rng = np.random.default_rng([seed, idx])
    n = np.arange(psi0.size, dtype=float)
    sq = np.sqrt(n[1:])
    psi = psi0.copy()
    t_left = noise.duration
    jumps = 0
    while True:
        r = rng.random()
        end = prop(psi, t_left)
        if np.vdot(end, end).real >= r:
            psi = end
            break
        tj = brentq(lambda t: np.vdot(prop(psi, t), prop(psi, t)).real - r, 0.0, t_left, xtol=1e-13, rtol=1e-13)
        psi = prop(psi, tj)
        t_left -= tj
        w_loss = noise.kappa * float(np.sum(n * np.abs(psi) ** 2))
        w_deph = noise.kappa_phi * float(np.sum(n**2 * np.abs(psi) ** 2))
        if rng.random() * (w_loss + w_deph) < w_loss:
            new = np.zeros_like(psi)
            new[:-1] = sq * psi[1:]
        else:
            new = n * psi
        psi = new / np.linalg.norm(new)
        jumps += 1
    return psi / np.linalg.norm(psi), jumps


def _trajectory_chunk(args):
    psi0, hamiltonian, noise, seed, indices = args
    prop = _NoJumpPropagator(hamiltonian, noise)
    return [_trajectory(psi0, prop, noise, seed, i) for i in indices]


def trajectory_oracle(
    rho0: OscillatorState,
    hamiltonian: FockOperator,
    noise: NoiseSpec,
    n_traj: int,
    seed: int,
    workers: int = 1,
) -> EvolutionResult:
    """Quantum-jump unravelling of the same master equation.

    Trajectory ``i`` draws from ``default_rng([seed, i])``, so the result
    does not depend on ``workers``. The final kets are kept in ``samples``
    for standard-error estimates (see :func:`ratio_estimate`).
    """
    if n_traj < 1:
        raise ValueError("n_traj must be >= 1")
    if not rho0.is_pure:
        raise ValueError("trajectory oracle needs a pure initial state")
    _check_dims(rho0.dim, hamiltonian.dim)
    start = time.perf_counter()
    psi0 = rho0.data / np.linalg.norm(rho0.data)
    if workers > 1:
        chunks = [list(range(i, n_traj, workers)) for i in range(workers)]
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(_trajectory_chunk, [(psi0, hamiltonian, noise, seed, c) for c in chunks]))
        by_index = {}
        for c, part in zip(chunks, parts):
            by_index.update(zip(c, part))
        out = [by_index[i] for i in range(n_traj)]
    else:
        out = _trajectory_chunk((psi0, hamiltonian, noise, seed, range(n_traj)))
    kets = np.array([o[0] for o in out])
    jumps = sum(o[1] for o in out)
    rho = kets.T @ kets.conj() / n_traj
    return EvolutionResult(
        OscillatorState(rho),
        jumps,
        abs(np.trace(rho).real - 1.0),
        float(np.linalg.eigvalsh(rho).min()),
        time.perf_counter() - start,
        "quantum-jump",
        kets,
    )


def ratio_estimate(num: np.ndarray, den: np.ndarray) -> tuple[float, float]:
    """mean(num)/mean(den) with its delta-method standard error."""
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    m = num.size
    r = num.mean() / den.mean()
    resid = num - r * den
    se = np.sqrt(np.sum(resid**2) / (m - 1) / m) / den.mean() if m > 1 else np.inf
    return float(r), float(se)


def loss_kraus(gamma: float, dim: int) -> list[np.ndarray]:
    """Amplitude-damping Kraus operators for loss probability ``gamma``.

    A_k = sum_n sqrt(C(n, k)) (1 - gamma)^((n - k)/2) gamma^(k/2) |n-k><n|.
    """
    if not 0 <= gamma <= 1:
        raise ValueError("gamma must lie in [0, 1]")
    if gamma == 0:
        return [np.eye(dim, dtype=complex)]
    ops = []
    for k in range(dim):
        m = np.arange(k, dim)
        a_k = np.zeros((dim, dim), dtype=complex)
        if gamma == 1:
            a_k[0, k] = 1.0
        else:
            logc = gammaln(m + 1) - gammaln(k + 1) - gammaln(m - k + 1)
            a_k[m - k, m] = np.exp(0.5 * logc + 0.5 * (m - k) * np.log1p(-gamma) + 0.5 * k * np.log(gamma))
        ops.append(a_k)
    return ops


def apply_loss(rho: OscillatorState, gamma: float) -> OscillatorState:
    """Apply the exact amplitude-damping channel."""
    r = rho.dm()
    out = sum(k @ r @ k.conj().T for k in loss_kraus(gamma, rho.dim))
    return OscillatorState(out, rho.trace(), rho.trace_tol)
