"""Parameterized gate layouts for the unitary embedding of a uniform MPS tensor.

The site tensor V of a chi = 2^n_b MPS is realized as the upper-left block of
a unitary U on 1 + n_b qubits (wire 0 = system, wires 1..n_b = bond register):

    V_sigma[alpha, beta] = <sigma, beta| U |0, alpha>

Two parameterizations are provided:

* mode="ansatz": a tiled layout built from GXY(a, b) = cZ (Rx(a) x Ry(b)) cZ
  two-qubit tiles with fixed single-qubit frames.  The frames are chosen so
  that every layout is exactly covariant under the Ising flip,

      (X x X^{n_b}) U (Z x X^{n_b})^dag = U,

  which forces the bond-register fixed point to commute with X^{x n_b}.  For
  n_b = 2 this is what makes the 3-setting restricted tomography exact.
* mode="full_unitary": exp(i sum_k c_k P_k) over the full Pauli basis of
  su(2^(1+n_b)).  Nothing is imposed, so the optimizer is free to pick
  symmetry-broken solutions (it does, for lambda below the finite-chi
  pseudo-transition).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.linalg import expm
from scipy.optimize import fsolve, minimize

from .gates import CZ, H, I2, PAULI, X, Z, embed, kron_all, rx, ry, rz
from .mps import BondsimError, BoundaryState, MPSTensor

__all__ = [
    "AnsatzParams",
    "BoundaryPrep",
    "boundary_prep",
    "OptimizerConfig",
    "ansatz_gate_sequence",
    "ansatz_num_params",
    "build_ansatz_unitary",
    "build_full_unitary",
    "canonical_gauge",
    "complete_isometry",
    "extract_isometry",
    "flip_covariance_error",
    "gxy_gate",
    "gzy_gate",
    "steady_state",
    "tensor_energy",
    "variational_optimize",
]


# ---------------------------------------------------------------------------
# tiles


def gxy_gate(alpha: float, beta: float) -> np.ndarray:
    """Two-qubit tile cZ (Rx(alpha) x Ry(beta)) cZ."""
    return CZ @ np.kron(rx(alpha), ry(beta)) @ CZ


def gzy_gate(alpha: float, beta: float) -> np.ndarray:
    """gxy tile conjugated by a fixed Ry(pi/2) basis change on the first qubit.

    The conjugation turns the inner Rx(alpha) into an Rz rotation (hence the
    name); the entanglers pick up the same basis change.
    """
    f = np.kron(ry(np.pi / 2), I2)
    return f.conj().T @ gxy_gate(alpha, beta) @ f


_IH = np.kron(I2, H)
_HH = np.kron(H, H)
# rz(-pi/2) maps Y -> X under conjugation; GXY commutes with Y x X exactly,
# so the framed tile below commutes with X x X.
_GL = np.kron(rz(-np.pi / 2), I2)
_GR = np.kron(rz(np.pi / 2), I2)


def _entry_tile(alpha: float, beta: float) -> np.ndarray:
    """Covariant entry tile: (X x X) S (Z x X)^dag = S."""
    return _IH @ gxy_gate(alpha, beta) @ _HH


def _flip_even_tile(alpha: float, beta: float) -> np.ndarray:
    """GXY tile framed to commute with X x X."""
    return _GL @ gxy_gate(alpha, beta) @ _GR


def ansatz_num_params(n_b: int) -> int:
    if n_b == 1:
        return 10
    if n_b == 2:
        return 17
    raise ValueError(f"no tiled layout defined for n_b={n_b}")


def build_ansatz_unitary(angles: np.ndarray, n_b: int) -> np.ndarray:
    """Assemble the flip-covariant tiled layout on 1 + n_b wires.

    Layer structure: one entry tile on (system, bond_1), then alternating
    framed GXY tiles separated by Rx dressings on every wire.  All Rx
    dressings and framed tiles commute with the global flip, so covariance
    of the entry tile is inherited by the whole layout.
    """
    angles = np.asarray(angles, dtype=float)
    if angles.shape != (ansatz_num_params(n_b),):
        raise ValueError("angle vector has wrong length for this layout")
    n_wires = 1 + n_b
    if n_b == 1:
        u = _entry_tile(angles[0], angles[1])
        i = 2
        for _ in range(2):
            u = np.kron(rx(angles[i]), rx(angles[i + 1])) @ u
            u = _flip_even_tile(angles[i + 2], angles[i + 3]) @ u
            i += 4
        return u
    # n_b == 2: tiles alternate between (system, bond_1) and (bond_1, bond_2)
    u = embed(_entry_tile(angles[0], angles[1]), (0, 1), n_wires)
    i = 2
    for layer in range(1, 4):
        dress = np.eye(2 ** n_wires, dtype=complex)
        for w in range(n_wires):
            dress = embed(rx(angles[i]), (w,), n_wires) @ dress
            i += 1
        u = dress @ u
        wires = (1, 2) if layer % 2 else (0, 1)
        u = embed(_flip_even_tile(angles[i], angles[i + 1]), wires, n_wires) @ u
        i += 2
    return u


def ansatz_gate_sequence(angles: np.ndarray, n_b: int) -> list:
    """The tiled layout as an ordered list of (matrix, wires) gates.

    The product of the returned gates (first entry applied first) equals
    build_ansatz_unitary.  For n_b=1 the whole layout is a single two-qubit
    gate; for n_b=2 each tile and dressing rotation is kept separate so the
    circuit layer compiles native fragments tile by tile instead of
    synthesizing a three-qubit unitary.
    """
    angles = np.asarray(angles, dtype=float)
    if angles.shape != (ansatz_num_params(n_b),):
        raise ValueError("angle vector has wrong length for this layout")
    if n_b == 1:
        return [(build_ansatz_unitary(angles, 1), (0, 1))]
    seq = [(_entry_tile(angles[0], angles[1]), (0, 1))]
    i = 2
    for layer in range(1, 4):
        for w in range(3):
            seq.append((rx(angles[i]), (w,)))
            i += 1
        wires = (1, 2) if layer % 2 else (0, 1)
        seq.append((_flip_even_tile(angles[i], angles[i + 1]), wires))
        i += 2
    return seq


_PAULI_STRINGS: dict[int, list[np.ndarray]] = {}


def _pauli_basis(n_wires: int) -> list[np.ndarray]:
    if n_wires not in _PAULI_STRINGS:
        labels = ["I", "X", "Y", "Z"]
        mats = []
        for idx in range(4 ** n_wires):
            digits = []
            k = idx
            for _ in range(n_wires):
                digits.append(labels[k % 4])
                k //= 4
            mats.append(kron_all(*[PAULI[d] for d in reversed(digits)]))
        _PAULI_STRINGS[n_wires] = mats[1:]  # drop identity
    return _PAULI_STRINGS[n_wires]


def full_unitary_num_params(n_b: int) -> int:
    return 4 ** (1 + n_b) - 1


def build_full_unitary(coeffs: np.ndarray, n_b: int) -> np.ndarray:
    """exp(i sum c_k P_k) over all non-identity Pauli strings."""
    coeffs = np.asarray(coeffs, dtype=float)
    basis = _pauli_basis(1 + n_b)
    if coeffs.shape != (len(basis),):
        raise ValueError("coefficient vector has wrong length")
    gen = np.zeros_like(basis[0])
    for c, p in zip(coeffs, basis):
        gen = gen + c * p
    return expm(1j * gen)


def flip_covariance_error(u: np.ndarray, n_b: int) -> float:
    """Residual of the Ising-flip covariance condition for a layout unitary."""
    left = kron_all(X, *([X] * n_b))
    right = kron_all(Z, *([X] * n_b))
    return float(np.linalg.norm(left @ u @ right.conj().T - u))


# ---------------------------------------------------------------------------
# isometry <-> unitary


def extract_isometry(u: np.ndarray, n_b: int) -> MPSTensor:
    """Read off V_sigma[alpha, beta] = <sigma, beta|U|0, alpha>."""
    chi = 2 ** n_b
    if u.shape != (2 * chi, 2 * chi):
        raise ValueError("unitary dimension does not match n_b")
    v = u.reshape(2, chi, 2, chi)[:, :, 0, :].transpose(0, 2, 1)
    return MPSTensor(data=np.ascontiguousarray(v))


def complete_isometry(tensor: MPSTensor) -> np.ndarray:
    """Extend the isometry columns to a full unitary on 1 + n_b qubits.

    Columns |0, alpha> are fixed by the tensor; the remaining columns are an
    arbitrary orthonormal completion (Gram-Schmidt against the fixed block).
    """
    v = tensor.data
    chi = v.shape[1]
    dim = 2 * chi
    u = np.zeros((dim, dim), dtype=complex)
    for alpha in range(chi):
        u[:, alpha] = v[:, alpha, :].reshape(dim)
    # Orthonormal completion of the column space.
    proj = np.eye(dim) - u[:, :chi] @ u[:, :chi].conj().T
    q, r = np.linalg.qr(proj)
    cols = [q[:, k] for k in range(dim) if abs(r[k, k]) > 1e-10]
    if len(cols) != chi:
        raise BondsimError("isometry completion failed; tensor not isometric?")
    for k, col in enumerate(cols):
        u[:, chi + k] = col
    return u


# ---------------------------------------------------------------------------
# fast steady state and energy


def steady_state(tensor: MPSTensor, boundary: np.ndarray | None = None) -> np.ndarray:
    """Bond-channel fixed point reachable from a boundary density matrix.

    Solves the eigenproblem of the transfer matrix once and projects the
    boundary onto the eigenvalue-1 eigenspace; with a degenerate fixed-point
    space (ordered phase) this picks the same state the iterated channel
    converges to.
    """
    v = tensor.data
    chi = v.shape[1]
    k0, k1 = v[0].T, v[1].T
    t = np.kron(k0, k0.conj()) + np.kron(k1, k1.conj())
    if boundary is None:
        boundary = np.eye(chi) / chi
    w, r = np.linalg.eig(t)
    c = np.linalg.solve(r, boundary.reshape(-1).astype(complex))
    keep = np.abs(w - 1.0) < 1e-9
    vec = (r[:, keep] * c[keep]).sum(axis=1)
    rho = vec.reshape(chi, chi)
    rho = (rho + rho.conj().T) / 2
    tr = np.trace(rho).real
    if abs(tr) < 1e-12:
        raise BondsimError("boundary has no weight on the fixed-point space")
    return rho / tr


def tensor_energy(tensor: MPSTensor, lam: float) -> float:
    """TFIM energy density -(<Z_j Z_{j+1}> + lam <X_j>) in the steady state."""
    v = tensor.data
    k = [v[0].T, v[1].T]
    rho = steady_state(tensor)
    # <X> = 2 Re tr(K_0 rho K_1^dag); <ZZ> from two channel steps with Z insertions.
    ex = 2 * np.trace(k[1] @ rho @ k[0].conj().T).real
    mid = k[0] @ rho @ k[0].conj().T - k[1] @ rho @ k[1].conj().T
    ezz = (np.trace(k[0] @ mid @ k[0].conj().T) - np.trace(k[1] @ mid @ k[1].conj().T)).real
    return -(ezz + lam * ex)


# ---------------------------------------------------------------------------
# optimization


@dataclass(frozen=True)
class AnsatzParams:
    """Optimized circuit parameters for one (lambda, n_b, mode) point."""

    lam: float
    n_b: int
    mode: str  # "ansatz" | "full_unitary"
    angles: tuple
    energy: float

    def unitary(self) -> np.ndarray:
        ang = np.asarray(self.angles, dtype=float)
        if self.mode == "ansatz":
            return build_ansatz_unitary(ang, self.n_b)
        return build_full_unitary(ang, self.n_b)

    def tensor(self) -> MPSTensor:
        return extract_isometry(self.unitary(), self.n_b)

    def to_json(self) -> dict:
        return {
            "lambda": self.lam,
            "n_b": self.n_b,
            "mode": self.mode,
            "angles": list(self.angles),
            "energy": self.energy,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "AnsatzParams":
        return cls(
            lam=float(obj["lambda"]),
            n_b=int(obj["n_b"]),
            mode=str(obj["mode"]),
            angles=tuple(float(a) for a in obj["angles"]),
            energy=float(obj["energy"]),
        )


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 6
    seed: int = 20240901
    maxiter: int = 6000
    scale: float = 1.2
    polish: bool = True
    warm_start: tuple | None = None


def _num_params(n_b: int, mode: str) -> int:
    if mode == "ansatz":
        return ansatz_num_params(n_b)
    if mode == "full_unitary":
        return full_unitary_num_params(n_b)
    raise ValueError(f"unknown mode {mode!r}")


def variational_optimize(
    lam: float,
    n_b: int,
    mode: str = "ansatz",
    config: OptimizerConfig | None = None,
) -> tuple[AnsatzParams, float]:
    """Minimize the steady-state TFIM energy density over layout angles.

    Powell restarts from seeded Gaussian initializations (plus an optional
    warm start), then a Nelder-Mead polish of the best candidate.  Fully
    deterministic for a fixed config.
    """
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    cfg = config or OptimizerConfig()
    n = _num_params(n_b, mode)
    build: Callable[[np.ndarray], np.ndarray]
    if mode == "ansatz":
        build = lambda p: build_ansatz_unitary(p, n_b)  # noqa: E731
    else:
        build = lambda p: build_full_unitary(p, n_b)  # noqa: E731

    def objective(p: np.ndarray) -> float:
        try:
            return tensor_energy(extract_isometry(build(p), n_b), lam)
        except BondsimError:
            return 10.0

    rng = np.random.default_rng(cfg.seed)
    starts = [rng.normal(scale=cfg.scale, size=n) for _ in range(cfg.restarts)]
    if cfg.warm_start is not None:
        ws = np.asarray(cfg.warm_start, dtype=float)
        if ws.shape == (n,):
            starts.insert(0, ws)
    best_val, best_x = np.inf, None
    with np.errstate(all="ignore"):
        for x0 in starts:
            res = minimize(
                objective, x0, method="Powell",
                options={"maxiter": cfg.maxiter, "xtol": 1e-12, "ftol": 1e-14},
            )
            if res.fun < best_val:
                best_val, best_x = res.fun, res.x
        if cfg.polish:
            res = minimize(
                objective, best_x, method="Nelder-Mead",
                options={"maxiter": 4 * cfg.maxiter, "xatol": 1e-13, "fatol": 1e-16},
            )
            if res.fun < best_val:
                best_val, best_x = res.fun, res.x
    params = AnsatzParams(
        lam=lam, n_b=n_b, mode=mode, angles=tuple(best_x), energy=float(best_val)
    )
    return params, float(best_val)


# ---------------------------------------------------------------------------
# boundary preparation


@dataclass(frozen=True)
class BoundaryPrep:
    """Unitary W on the bond register with W|0...0> = |L>."""

    w_unitary: np.ndarray
    target_state: BoundaryState


def boundary_prep(target: BoundaryState) -> BoundaryPrep:
    """Build a bond-register unitary whose first column is the target state.

    The remaining columns are a deterministic orthonormal completion; only
    the first column matters since the register always starts in |0...0>.
    """
    v = target.vector
    chi = v.shape[0]
    w = np.zeros((chi, chi), dtype=complex)
    w[:, 0] = v
    proj = np.eye(chi) - np.outer(v, v.conj())
    q, r = np.linalg.qr(proj)
    cols = [q[:, k] for k in range(chi) if abs(r[k, k]) > 1e-10]
    if len(cols) != chi - 1:
        raise BondsimError("boundary completion failed")
    for k, col in enumerate(cols):
        w[:, 1 + k] = col
    prepared = w[:, 0]
    if np.linalg.norm(prepared - v) > 1e-12:
        raise BondsimError("boundary preparation does not hit the target")
    return BoundaryPrep(w_unitary=w, target_state=target)


# ---------------------------------------------------------------------------
# gauge canonicalization (restricted-tomography form)


def _pauli_coeff(rho: np.ndarray, label: str) -> float:
    op = kron_all(*[PAULI[c] for c in label])
    return float(np.trace(rho @ op).real)


def canonical_gauge(tensor: MPSTensor) -> tuple[MPSTensor, np.ndarray, tuple]:
    """Rotate the bond basis so the fixed point fits the restricted pattern.

    For a flip-covariant chi=4 tensor the fixed point only carries Pauli
    weight on {II, IX, XI, XX, YY, YZ, ZY, ZZ}.  A per-qubit Rx gauge
    rotation leaves the covariance intact while rotating the (Y, Z) block
    [[YY, YZ], [ZY, ZZ]] as R(t1) M R(t2)^T; any real 2x2 matrix can be
    rotated to zero diagonal, so angles always exist that null YY and ZZ.
    The remaining support {II, IX, XI, XX, YZ, ZY} is exactly what the
    3-setting tomography {(X,X), (Y,Z), (Z,Y)} measures.

    Returns (gauged tensor, gauge unitary G, per-bond-wire Rx angles); the
    gauge acts as rho_fixed -> G rho G^dag and G = Rx(t1) x Rx(t2).
    """
    chi = tensor.data.shape[1]
    if chi == 2:
        return tensor, np.eye(2, dtype=complex), (0.0,)
    if chi != 4:
        raise ValueError("canonical gauge implemented for chi in {2, 4}")
    rho = steady_state(tensor)

    def residual(th):
        g = np.kron(rx(th[0]), rx(th[1]))
        r = g @ rho @ g.conj().T
        return [_pauli_coeff(r, "YY"), _pauli_coeff(r, "ZZ")]

    solution = None
    for t1 in np.linspace(0.0, np.pi, 7):
        for t2 in np.linspace(0.0, np.pi, 7):
            th, _, ok, _ = fsolve(residual, [t1, t2], full_output=True, xtol=1e-14)
            if ok == 1 and max(abs(v) for v in residual(th)) < 1e-12:
                solution = th
                break
        if solution is not None:
            break
    if solution is None:
        raise BondsimError("gauge angle search failed to converge")
    g = np.kron(rx(solution[0]), rx(solution[1]))
    # Kraus transform K -> G K G^dag moves the fixed point to G rho G^dag;
    # in tensor components that is V_sigma -> conj(G) V_sigma G^T.
    v = tensor.data
    gauged = np.stack([g.conj() @ v[0] @ g.T, g.conj() @ v[1] @ g.T])
    return MPSTensor(data=gauged), g, (float(solution[0]), float(solution[1]))
