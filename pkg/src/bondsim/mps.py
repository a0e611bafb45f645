"""Uniform-MPS linear algebra: isometries, bond channels, transfer spectra,
fixed points, expectation values and half-chain entanglement entropy.

Conventions: the site tensor V has shape (2, chi, chi) indexed [sigma, alpha,
beta].  The bond state propagates left-to-right as rho' = sum_s K_s rho K_s^dag
with K_s = V_s^T, which makes the channel exactly the partial trace of the
unitary dilation used by the circuit simulator.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

ISO_TOL = 1e-10


class BondsimError(Exception):
    """Base error for this package."""


class NotIsometricError(BondsimError):
    pass


class DegenerateChannelError(BondsimError):
    pass


@dataclass(frozen=True)
class MPSTensor:
    """Uniform rank-3 site tensor V[sigma, alpha, beta] with chi = 2**n_b."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        if data.ndim != 3 or data.shape[0] != 2 or data.shape[1] != data.shape[2]:
            raise ValueError(f"expected shape (2, chi, chi), got {data.shape}")
        chi = data.shape[1]
        if chi < 1 or (chi & (chi - 1)) != 0:
            raise ValueError(f"bond dimension {chi} is not a power of 2")
        object.__setattr__(self, "data", data)

    @property
    def chi(self) -> int:
        return self.data.shape[1]

    @property
    def n_b(self) -> int:
        return int(self.chi).bit_length() - 1

    def to_json(self) -> str:
        payload = {
            "chi": self.chi,
            "data": [[[[v.real, v.imag] for v in row] for row in mat] for mat in self.data],
        }
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str) -> "MPSTensor":
        payload = json.loads(text)
        arr = np.array(payload["data"], dtype=float)
        if arr.shape != (2, payload["chi"], payload["chi"], 2):
            raise ValueError("malformed MPSTensor record")
        return cls(arr[..., 0] + 1j * arr[..., 1])


@dataclass(frozen=True)
class BondChannel:
    """Kraus pair K_0, K_1 on bond space plus the chi^2 x chi^2 transfer matrix."""

    kraus: tuple
    transfer: np.ndarray = field(init=False)

    def __post_init__(self):
        k0, k1 = (np.asarray(k, dtype=complex) for k in self.kraus)
        object.__setattr__(self, "kraus", (k0, k1))
        t = np.kron(k0, k0.conj()) + np.kron(k1, k1.conj())
        object.__setattr__(self, "transfer", t)

    @property
    def chi(self) -> int:
        return self.kraus[0].shape[0]


@dataclass(frozen=True)
class ChannelSpectrum:
    eigenvalues: np.ndarray          # sorted by descending modulus
    fixed_point: np.ndarray          # Hermitian PSD, trace 1
    subdominant_mode: np.ndarray     # left eigen-operator of eigenvalues[1]
    degenerate: bool = False


@dataclass(frozen=True)
class BoundaryState:
    """Pure left-boundary vector |L> of the half-infinite chain."""

    vector: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vector, dtype=complex).ravel()
        n = np.linalg.norm(v)
        if abs(n - 1.0) > 1e-12:
            raise ValueError(f"boundary vector norm {n} != 1")
        object.__setattr__(self, "vector", v)

    @property
    def chi(self) -> int:
        return self.vector.shape[0]

    def density(self) -> np.ndarray:
        return np.outer(self.vector, self.vector.conj())


@dataclass(frozen=True)
class EntropyResult:
    entropy_bits: float
    schmidt_spectrum: np.ndarray     # descending, sums to 1


def is_isometry(tensor: MPSTensor, tol: float = ISO_TOL) -> bool:
    v = tensor.data
    gram = v[0] @ v[0].conj().T + v[1] @ v[1].conj().T
    return np.linalg.norm(gram - np.eye(tensor.chi)) <= tol


def bond_channel(tensor: MPSTensor) -> BondChannel:
    if not is_isometry(tensor, 1e-8):
        raise NotIsometricError("tensor violates sum_s V_s V_s^dag = I at 1e-8")
    return BondChannel(kraus=(tensor.data[0].T.copy(), tensor.data[1].T.copy()))


def apply_channel(channel: BondChannel, rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (channel.chi, channel.chi):
        raise ValueError(f"rho shape {rho.shape} != ({channel.chi}, {channel.chi})")
    k0, k1 = channel.kraus
    return k0 @ rho @ k0.conj().T + k1 @ rho @ k1.conj().T


def _hermitize_psd(m: np.ndarray) -> np.ndarray:
    """(M + M^dag)/2, clip negative eigenvalues, renormalize trace."""
    h = (m + m.conj().T) / 2
    w, u = np.linalg.eigh(h)
    w = np.clip(w, 0.0, None)
    h = (u * w) @ u.conj().T
    return h / np.trace(h).real


def symmetric_boundary(chi: int) -> BoundaryState:
    return BoundaryState(np.full(chi, 1 / np.sqrt(chi)))


def transfer_spectrum(channel: BondChannel, boundary: BoundaryState | None = None,
                      degeneracy_tol: float = 1e-8) -> ChannelSpectrum:
    chi = channel.chi
    evals, evecs = np.linalg.eig(channel.transfer)
    order = np.argsort(-np.abs(evals))
    evals, evecs = evals[order], evecs[:, order]

    degenerate = chi > 1 and abs(evals[1] - 1.0) < degeneracy_tol

    if degenerate:
        # Pick the fixed point reachable from the configured boundary: iterate
        # the channel until stationary.  Default boundary is the symmetric one,
        # which selects the cat-state branch deep in the ordered phase.
        if boundary is None:
            boundary = symmetric_boundary(chi)
        rho = boundary.density()
        for _ in range(10000):
            nxt = apply_channel(channel, rho)
            if np.linalg.norm(nxt - rho) < 1e-14:
                rho = nxt
                break
            rho = nxt
        fixed = _hermitize_psd(rho)
    else:
        idx = int(np.argmin(np.abs(evals - 1.0)))
        fixed = _hermitize_psd(evecs[:, idx].reshape(chi, chi))

    # Left eigen-operator at the subdominant eigenvalue: the Hilbert-Schmidt
    # overlap Tr(E2^dag rho_0) is the coefficient of the slowest transient.
    sub = np.zeros((chi, chi), dtype=complex)
    if chi > 1:
        lvals, lvecs = np.linalg.eig(channel.transfer.conj().T)
        target = np.conj(evals[1])
        lidx = int(np.argmin(np.abs(lvals - target)))
        vec = lvecs[:, lidx]
        sub = vec.reshape(chi, chi)
        sub = sub / np.linalg.norm(sub)

    return ChannelSpectrum(eigenvalues=evals, fixed_point=fixed,
                           subdominant_mode=sub, degenerate=degenerate)


def entanglement_entropy(rho: np.ndarray, tol: float = 1e-8) -> EntropyResult:
    rho = np.asarray(rho, dtype=complex)
    if np.linalg.norm(rho - rho.conj().T) > tol:
        raise ValueError("density matrix is not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > tol:
        raise ValueError(f"trace {tr} is not 1")
    w = np.linalg.eigvalsh((rho + rho.conj().T) / 2)
    if w.min() < -tol:
        raise ValueError(f"negative eigenvalue {w.min()}")
    w = np.clip(w, 0.0, None)
    w = np.sort(w)[::-1]
    w = w / w.sum()
    nz = w[w > 0]
    s = float(-(nz * np.log2(nz)).sum())
    return EntropyResult(entropy_bits=max(s, 0.0), schmidt_spectrum=w)


def half_chain_entropy(tensor: MPSTensor, boundary: BoundaryState, j: int) -> EntropyResult:
    """Entropy of the bond register after j channel iterations from |L><L|,
    i.e. the MPS bipartite entanglement across the cut after site j."""
    if j < 0:
        raise ValueError("j must be nonnegative")
    channel = bond_channel(tensor)
    rho = boundary.density()
    for _ in range(j):
        rho = apply_channel(channel, rho)
    return entanglement_entropy(rho, tol=1e-6)


def _site_expectation(channel: BondChannel, rho: np.ndarray, op: np.ndarray) -> float:
    """<O> at the site generated from bond state rho by one iteration."""
    k = channel.kraus
    val = 0.0 + 0.0j
    for s in (0, 1):
        for t in (0, 1):
            if op[s, t] != 0:
                val += op[s, t] * np.trace(k[t] @ rho @ k[s].conj().T)
    return float(val.real)


def _iterate(channel: BondChannel, boundary: BoundaryState, n: int) -> np.ndarray:
    rho = boundary.density()
    for _ in range(n):
        rho = apply_channel(channel, rho)
    return rho


def expectation_local(tensor: MPSTensor, boundary: BoundaryState, j: int,
                      op: np.ndarray) -> float:
    if j < 1:
        raise ValueError("j must be >= 1")
    channel = bond_channel(tensor)
    rho = _iterate(channel, boundary, j - 1)
    return _site_expectation(channel, rho, np.asarray(op, dtype=complex))


def expectation_nn(tensor: MPSTensor, boundary: BoundaryState, j: int,
                   op_a: np.ndarray, op_b: np.ndarray) -> float:
    if j < 1:
        raise ValueError("j must be >= 1")
    channel = bond_channel(tensor)
    rho = _iterate(channel, boundary, j - 1)
    op_a = np.asarray(op_a, dtype=complex)
    op_b = np.asarray(op_b, dtype=complex)
    k = channel.kraus
    # Generalized one-site update weighted by op_a, then close with op_b.
    mid = np.zeros_like(rho)
    for s in (0, 1):
        for t in (0, 1):
            if op_a[s, t] != 0:
                mid += op_a[s, t] * (k[t] @ rho @ k[s].conj().T)
    val = 0.0 + 0.0j
    for s in (0, 1):
        for t in (0, 1):
            if op_b[s, t] != 0:
                val += op_b[s, t] * np.trace(k[t] @ mid @ k[s].conj().T)
    return float(val.real)


def fixed_point_energy(tensor: MPSTensor, lam: float) -> float:
    """Energy density -(<ZZ> + lam <X>) evaluated at the channel fixed point."""
    channel = bond_channel(tensor)
    spec = transfer_spectrum(channel)
    rho = spec.fixed_point
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    ex = _site_expectation(channel, rho, x)
    k = channel.kraus
    mid = k[0] @ rho @ k[0].conj().T - k[1] @ rho @ k[1].conj().T  # Z-weighted
    ezz = (np.trace(k[0] @ mid @ k[0].conj().T) - np.trace(k[1] @ mid @ k[1].conj().T)).real
    return float(-(ezz + lam * ex))


def burn_in_length(channel: BondChannel, tol: float) -> int:
    """Smallest j with |mu_2|^j <= tol; mu_2 = largest modulus strictly < 1."""
    spec = transfer_spectrum(channel)
    if spec.degenerate:
        raise DegenerateChannelError(
            "channel has a degenerate fixed point; choose the iteration count manually")
    if channel.chi == 1:
        return 1
    mu2 = abs(spec.eigenvalues[1])
    if mu2 <= tol or mu2 == 0.0:
        return 1
    return max(1, int(np.ceil(np.log(tol) / np.log(mu2))))


def select_boundary(spectrum: ChannelSpectrum, n_restarts: int = 16,
                    seed: int = 7) -> tuple[BoundaryState, float]:
    """Pure state |L> minimizing |Tr(E2^dag |L><L|)|; returns achieved overlap."""
    if spectrum.degenerate:
        raise DegenerateChannelError("subdominant mode is not unique")
    e2 = spectrum.subdominant_mode
    chi = e2.shape[0]

    def overlap(params: np.ndarray) -> float:
        v = params[:chi] + 1j * params[chi:]
        n = np.linalg.norm(v)
        if n < 1e-12:
            return 1.0
        v = v / n
        return abs(v.conj() @ e2.conj().T @ v)

    rng = np.random.default_rng(seed)
    best_val, best_vec = np.inf, None
    for _ in range(n_restarts):
        x0 = rng.normal(size=2 * chi)
        res = minimize(overlap, x0, method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 4000})
        if res.fun < best_val:
            best_val = res.fun
            v = res.x[:chi] + 1j * res.x[chi:]
            best_vec = v / np.linalg.norm(v)
    # Fix the arbitrary global phase so results are deterministic.
    k = int(np.argmax(np.abs(best_vec)))
    best_vec = best_vec * np.exp(-1j * np.angle(best_vec[k]))
    return BoundaryState(best_vec), float(best_val)
