"""Small-Big-small stabilization rounds as oscillator Kraus channels.

One round is a q-half followed by a p-half. Each half prepares the ancilla
in |+x>, applies trim / rotation / Big / rotation / trim conditional
displacements and measures the ancilla in the x basis (g = |+x>,
e = |-x>). Projecting the ancilla gives the half-round Kraus operators,
and a full round is K_jk = K^(p)_k K^(q)_j.

A g outcome also applies a logical Pauli to the code (the Big
displacement moves half a lattice period in each branch). The channel
records this byproduct as a Pauli frame instead of undoing it with a
displacement, which would distort the finite-energy envelope.
"""
from __future__ import annotations

import itertools
import json
import warnings
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from .evolution import apply_loss
from .fock_core import DEFAULT_INTERIOR_MARGIN, NumericError, OscillatorState, displacement
from .gates import PAULI_I, PAULI_X, PAULI_Y, PAULI_Z
from .gkp_code import LATTICE_LENGTH, GkpCode, build_code

AXES = ("x", "-x", "y", "-y")
DEFAULT_AXES = ("-x", "x")
OUTCOMES = ("g", "e")
PAULIS = {"I": PAULI_I, "X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z}
_SIGMA = {"x": PAULI_X, "-x": -PAULI_X, "y": PAULI_Y, "-y": -PAULI_Y}
_PLUS_X = np.array([1, 1], dtype=complex) / np.sqrt(2)
_MINUS_X = np.array([1, -1], dtype=complex) / np.sqrt(2)
MIN_FLAG_RATIO = 5.0


class CalibrationError(RuntimeError):
    pass


class PostselectionStarved(NumericError):
    pass


class NonConvergenceWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class SbsParams:
    """Round parameters in quadrature units.

    ``trim`` defaults to l sinh(Delta^2); each trim conditionally shifts the
    quadrature by trim / 2 between ancilla branches, the Big step by l.
    ``axes`` are the two ancilla rotation axes of each half-round.
    """

    delta: float
    big_length: float = LATTICE_LENGTH
    trim: float | None = None
    axes: tuple = DEFAULT_AXES
    p_eg: float = 0.0
    p_ge: float = 0.0
    ancilla_dephasing: float = 0.0

    def __post_init__(self):
        if self.trim is None:
            object.__setattr__(self, "trim", self.big_length * np.sinh(self.delta**2))
        if not self.trim > 0:
            raise ValueError("trim must be positive")
        if any(a not in AXES for a in self.axes) or len(self.axes) != 2:
            raise ValueError(f"axes must be two of {AXES}")
        object.__setattr__(self, "axes", tuple(self.axes))
        for p in (self.p_eg, self.p_ge):
            if not 0 <= p < 1:
                raise ValueError("confusion probabilities must lie in [0, 1)")
        if not 0 <= self.ancilla_dephasing <= 0.5:
            raise ValueError("ancilla dephasing probability must lie in [0, 0.5]")


@dataclass(frozen=True, eq=False)
class SbsChannel:
    """Outcome-resolved Kraus lists of one round.

    ``kraus[(j, k)]`` lists the operators for reported q-outcome ``j`` and
    p-outcome ``k``; an ideal round has a single operator per outcome.
    """

    params: SbsParams
    dim: int
    q_half: dict
    p_half: dict
    kraus: dict
    frame: np.ndarray
    frame_label: str
    interior_margin: int = DEFAULT_INTERIOR_MARGIN

    @property
    def k_gg(self) -> list:
        return self.kraus[("g", "g")]

    def single(self, j: str, k: str) -> np.ndarray:
        ops = self.kraus[(j, k)]
        if len(ops) != 1:
            raise ValueError("outcome has several Kraus operators")
        return ops[0]

    def completeness_defect(self) -> float:
        total = sum(k.conj().T @ k for ops in self.kraus.values() for k in ops)
        m = self.dim - self.interior_margin
        return float(np.abs(total[:m, :m] - np.eye(m)).max())

    def frame_after(self, n_rounds: int) -> np.ndarray:
        return np.linalg.matrix_power(self.frame, n_rounds)

    @property
    def frame_period(self) -> int:
        return 1 if self.frame_label == "I" else 2


@dataclass(frozen=True)
class SbsRecord:
    round: int
    outcome_model: str
    round_weight: float
    success_weight: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def write_records(path, records) -> None:
    Path(path).write_text("".join(r.to_json() + "\n" for r in records))


def read_records(path) -> list[SbsRecord]:
    return [SbsRecord(**json.loads(line)) for line in Path(path).read_text().splitlines() if line]


def _conditional_displacement(beta: complex, dim: int) -> np.ndarray:
    """exp[(beta a^dag - beta* a) sigma_z / 2] = D(beta/2) (+) D(-beta/2)."""
    d_plus = displacement(beta / 2, dim).data
    d_minus = d_plus.conj().T
    out = np.zeros((2 * dim, 2 * dim), dtype=complex)
    out[:dim, :dim] = d_plus
    out[dim:, dim:] = d_minus
    return out


def _rotation(axis: str, dim: int) -> np.ndarray:
    s = _SIGMA[axis]
    r = np.cos(np.pi / 4) * PAULI_I - 1j * np.sin(np.pi / 4) * s
    return np.kron(r, np.eye(dim))


def half_round_kraus(
    big: complex, trim: complex, axes: tuple, dim: int, ancilla_dephasing: float = 0.0
) -> dict:
    """Kraus lists {'g': [...], 'e': [...]} of one half-round.

    ``big`` and ``trim`` are complex displacement amplitudes (alpha units).
    With ancilla dephasing p, a Z error may strike after each of the two
    rotations; each pattern contributes its own operator.
    """
    cd_t = _conditional_displacement(trim, dim)
    cd_b = _conditional_displacement(big, dim)
    r1, r2 = _rotation(axes[0], dim), _rotation(axes[1], dim)
    z = np.kron(PAULI_Z, np.eye(dim))
    p = ancilla_dephasing
    patterns = [(0, 0)] if p == 0 else list(itertools.product((0, 1), repeat=2))
    prep = np.kron(_PLUS_X[:, None], np.eye(dim))
    out = {"g": [], "e": []}
    for e1, e2 in patterns:
        weight = np.sqrt((p if e1 else 1 - p) * (p if e2 else 1 - p))
        u = cd_t @ (z if e2 else np.eye(2 * dim)) @ r2 @ cd_b @ (z if e1 else np.eye(2 * dim)) @ r1 @ cd_t
        u_prep = u @ prep
        for label, bra in (("g", _PLUS_X), ("e", _MINUS_X)):
            proj = np.kron(bra.conj()[None, :], np.eye(dim))
            out[label].append(weight * (proj @ u_prep))
    return out


def _amplitudes(params: SbsParams):
    """(big, trim) displacement amplitudes for the q- and p-halves."""
    s2 = np.sqrt(2)
    big_q = 1j * params.big_length / s2
    big_p = params.big_length / s2
    trim_q = 0.5 * params.trim / s2
    trim_p = -1j * 0.5 * params.trim / s2
    return (big_q, trim_q), (big_p, trim_p)


def _confuse(half: dict, p_eg: float, p_ge: float) -> dict:
    if p_eg == 0 and p_ge == 0:
        return half
    g, e = half["g"], half["e"]
    return {
        "g": [np.sqrt(1 - p_eg) * k for k in g] + [np.sqrt(p_ge) * k for k in e if p_ge],
        "e": [np.sqrt(p_eg) * k for k in g if p_eg] + [np.sqrt(1 - p_ge) * k for k in e],
    }


def _compose(q_half: dict, p_half: dict) -> dict:
    return {(j, k): [kp @ kq for kq in q_half[j] for kp in p_half[k]] for j in OUTCOMES for k in OUTCOMES}


def _lowdin(code: GkpCode) -> np.ndarray:
    return code.lowdin_basis


def logical_action(code: GkpCode, op: np.ndarray) -> np.ndarray:
    """2x2 block of ``op`` in the orthonormalised codeword basis."""
    b = _lowdin(code)
    return b.conj().T @ op @ b


def closest_pauli(m: np.ndarray) -> str:
    scores = {k: abs(np.trace(p.conj().T @ m)) for k, p in PAULIS.items()}
    return max(scores, key=scores.get)


def _build(params: SbsParams, dim: int, frame_label: str, margin: int) -> SbsChannel:
    (bq, tq), (bp, tp) = _amplitudes(params)
    q_half = half_round_kraus(bq, tq, params.axes, dim, params.ancilla_dephasing)
    p_half = half_round_kraus(bp, tp, params.axes, dim, params.ancilla_dephasing)
    q_half = _confuse(q_half, params.p_eg, params.p_ge)
    p_half = _confuse(p_half, params.p_eg, params.p_ge)
    return SbsChannel(params, dim, q_half, p_half, _compose(q_half, p_half), PAULIS[frame_label], frame_label, margin)


def _score(channel: SbsChannel, code: GkpCode, frame_label: str | None = None):
    """(min frame-corrected fidelity, min success, flag ratio, frame label)."""
    b = _lowdin(code)
    k = channel.single("g", "g")
    label = frame_label or closest_pauli(b.conj().T @ k @ b)
    frame = PAULIS[label]
    s = 1 / np.sqrt(2)
    fids, succ = [], []
    for v in ([1, 0], [0, 1], [s, s], [s, 1j * s]):
        v = np.asarray(v, dtype=complex)
        out = k @ (b @ v)
        p = np.vdot(out, out).real
        tgt = b @ (frame @ v)
        fids.append(abs(np.vdot(tgt, out)) ** 2 / p)
        succ.append(p)
    err = code.zero.copy()
    err[:-1] = np.sqrt(np.arange(1, code.dim)) * code.zero[1:]
    err /= np.linalg.norm(err)
    p_err = 1 - np.linalg.norm(k @ err) ** 2
    p_clean = 1 - np.linalg.norm(k @ code.zero) ** 2
    ratio = p_err / p_clean if p_clean > 0 else np.inf
    return min(fids), min(succ), ratio, label


def calibrate(delta: float = 0.36, dim: int | None = None, trim: float | None = None) -> dict:
    """Search the 16 rotation-axis conventions and return the best one.

    A convention qualifies only if a single-photon-loss error raises the
    probability of a non-gg outcome at least five-fold; among those the
    one with the highest worst-case frame-corrected fidelity of K_gg on
    the logical cardinal states wins.

    Raises
    ------
    CalibrationError
        If no convention qualifies; the message lists all tried axes.
    """
    code = build_code(delta, dim)
    table = []
    for axes in itertools.product(AXES, repeat=2):
        ch = _build(SbsParams(delta, trim=trim, axes=axes), code.dim, "I", code.interior_margin)
        fid, succ, ratio, label = _score(ch, code)
        table.append(
            {"axes": axes, "fidelity": float(fid), "success": float(succ), "flag_ratio": float(ratio), "frame": label}
        )
    ok = [r for r in table if r["flag_ratio"] >= MIN_FLAG_RATIO and r["fidelity"] > 0.9]
    if not ok:
        tried = ", ".join(f"{r['axes']}: F={r['fidelity']:.3f} ratio={r['flag_ratio']:.2f}" for r in table)
        raise CalibrationError(f"no rotation convention stabilizes the code; tried {tried}")
    best = max(ok, key=lambda r: (round(r["fidelity"], 12), r["success"]))
    return {"axes": best["axes"], "frame": best["frame"], "table": table}


@lru_cache(maxsize=8)
def _frame_for(params_key: tuple, dim: int, margin: int) -> str:
    delta, big, trim, axes = params_key
    code = build_code(delta, dim, interior_margin=margin)
    ch = _build(SbsParams(delta, big, trim, axes), dim, "I", margin)
    return _score(ch, code)[3]


def build_sbs_round(params: SbsParams, dim: int, interior_margin: int = DEFAULT_INTERIOR_MARGIN) -> SbsChannel:
    """Compose the q- and p-half-rounds into the four outcome channels.

    The logical byproduct of the gg outcome is read off the ideal channel
    and stored as the Pauli frame.

    Raises
    ------
    CalibrationError
        If the ideal gg operator does not act as a Pauli on the code.
    """
    label = _frame_for((params.delta, params.big_length, params.trim, params.axes), dim, interior_margin)
    channel = _build(params, dim, label, interior_margin)
    ideal = _build(SbsParams(params.delta, params.big_length, params.trim, params.axes), dim, label, interior_margin)
    fid = _score(ideal, build_code(params.delta, dim, interior_margin=interior_margin), label)[0]
    if fid < 0.9:
        raise CalibrationError(
            f"axes {params.axes} do not stabilize the code (fidelity {fid:.3f}); run calibrate() to pick a convention"
        )
    return channel


def apply_measurement_error(channel: SbsChannel, confusion: tuple) -> SbsChannel:
    """Relabel outcomes with p(e|g), p(g|e) = ``confusion`` per measurement."""
    p_eg, p_ge = confusion
    if not (0 <= p_eg <= 1 and 0 <= p_ge <= 1):
        raise ValueError("confusion probabilities must lie in [0, 1]")
    q_half = _confuse(channel.q_half, p_eg, p_ge)
    p_half = _confuse(channel.p_half, p_eg, p_ge)
    return SbsChannel(
        channel.params,
        channel.dim,
        q_half,
        p_half,
        _compose(q_half, p_half),
        channel.frame,
        channel.frame_label,
        channel.interior_margin,
    )


def _apply_ops(ops, rho: np.ndarray) -> np.ndarray:
    out = np.zeros_like(rho)
    for k in ops:
        out += k @ rho @ k.conj().T
    return out


def apply_rounds(
    rho: OscillatorState,
    channel: SbsChannel,
    n_rounds: int,
    postselect: bool = True,
    loss_per_round: float = 0.0,
    log: list | None = None,
):
    """Apply ``n_rounds`` rounds; returns (normalised state, success probability).

    With ``postselect`` only gg branches are kept and the success
    probability is the retained trace; otherwise the full channel is
    applied each round. The logical Pauli frame accumulated over the rounds
    is ``channel.frame_after(n_rounds)``.

    Raises
    ------
    PostselectionStarved
        If the retained trace drops below 1e-12.
    """
    if n_rounds < 0:
        raise ValueError("n_rounds must be >= 0")
    r = rho.normalized().dm()
    ops = channel.k_gg if postselect else [k for v in channel.kraus.values() for k in v]
    success = 1.0
    for i in range(n_rounds):
        if loss_per_round:
            r = apply_loss(OscillatorState(r), loss_per_round).data.copy()
        r = _apply_ops(ops, r)
        w = float(np.trace(r).real)
        if w < 1e-12 or success * w < 1e-12:
            raise PostselectionStarved(f"success probability {success * w:.3e} after {i + 1} rounds")
        success *= w
        r = r / w
        if log is not None:
            log.append(SbsRecord(i + 1, "postselect-gg" if postselect else "all-outcomes", w, success))
    r = 0.5 * (r + r.conj().T)
    return OscillatorState(r), success


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    return float(0.5 * np.abs(np.linalg.eigvalsh(a - b)).sum())


def steady_state_rounds(
    rho: OscillatorState,
    channel: SbsChannel,
    tol: float,
    max_rounds: int = 100,
    history: list | None = None,
):
    """Iterate post-selected rounds until the state stops changing.

    States are compared one frame period apart, so a Pauli byproduct that
    flips the logical state each round does not count as motion. Returns
    (state, rounds_used); on non-convergence the last state is returned
    with a ``NonConvergenceWarning``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    period = channel.frame_period
    current = rho.normalized().to_dm()
    used = 0
    while used < max_rounds:
        nxt, _ = apply_rounds(current, channel, period)
        used += period
        dist = trace_distance(current.data, nxt.data)
        if history is not None:
            history.append(dist)
        current = nxt
        if dist < tol:
            return current, used
    warnings.warn(f"no steady state within {max_rounds} rounds (tol {tol})", NonConvergenceWarning, stacklevel=2)
    return current, used
