"""Stochastic noise model, gate folding, and zero-noise extrapolation.

The error budget mirrors a trapped-ion QCCD machine: depolarizing noise per
two-qubit entangler and per single-qubit rotation, leakage out of the qubit
subspace per entangler, and spectator depolarization of the bond register
during every mid-circuit measurement or reset of the system qubit.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace as _dc_replace

import numpy as np

from .circuits import Circuit, CircuitOp
from .kak import NativeCircuitFragment

__all__ = [
    "NoiseModel",
    "ZNEPair",
    "depolarize",
    "fold_circuit",
    "leakage_postselect",
    "zne_extrapolate",
]


@dataclass(frozen=True)
class NoiseModel:
    """Error rates; the defaults are the reference hardware profile."""

    p2: float = 0.008        # two-qubit depolarizing per U_zz
    p1: float = 0.0003       # single-qubit depolarizing per rotation
    p_leak: float = 0.001    # leakage probability per U_zz per qubit
    eps_meas: float = 0.002  # bond-wire depolarizing per mid-circuit measure
    eps_reset: float = 0.0004  # bond-wire depolarizing per mid-circuit reset

    def __post_init__(self):
        for name, val in asdict(self).items():
            if not 0.0 <= val <= 1.0:
                raise ValueError(f"{name} must be a probability, got {val}")

    @property
    def trivial(self) -> bool:
        return all(v == 0.0 for v in asdict(self).values())

    @classmethod
    def none(cls) -> "NoiseModel":
        return cls(p2=0.0, p1=0.0, p_leak=0.0, eps_meas=0.0, eps_reset=0.0)

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    @classmethod
    def from_json(cls, text: str) -> "NoiseModel":
        return cls(**json.loads(text))

    @classmethod
    def load(cls, path) -> "NoiseModel":
        with open(path) as fh:
            return cls.from_json(fh.read())


def depolarize(rho: np.ndarray, wires: tuple, p: float,
               n_wires: int | None = None) -> np.ndarray:
    """rho -> (1-p) rho + p (Tr_wires rho) x I/d on the targeted wires."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must be a probability")
    if p == 0.0:
        return rho
    if n_wires is None:
        n_wires = int(np.log2(rho.shape[0]))
    axes = list(range(n_wires))
    t = rho.reshape((2,) * (2 * n_wires))
    # Trace out the targeted wires, then re-insert I/2 tensor factors.
    mixed = t
    remaining = list(axes)
    for w in sorted(wires, reverse=True):
        i = remaining.index(w)
        mixed = np.trace(mixed, axis1=i, axis2=len(remaining) + i)
        remaining.remove(w)
    # mixed now lives on the remaining wires; rebuild the full tensor.
    keep = [w for w in axes if w not in wires]
    eye = np.eye(2) / 2
    full = mixed
    for _ in wires:
        full = np.tensordot(full, eye, axes=0)
    # full has row/col axes interleaved per block: (keep_rows, keep_cols,
    # then one (row, col) pair per mixed-in wire).  Permute back to
    # (all rows in wire order, all cols in wire order).
    n_keep = len(keep)
    row_src = {}
    col_src = {}
    for i, w in enumerate(keep):
        row_src[w] = i
        col_src[w] = n_keep + i
    for i, w in enumerate(sorted(wires)):
        row_src[w] = 2 * n_keep + 2 * i
        col_src[w] = 2 * n_keep + 2 * i + 1
    perm = [row_src[w] for w in axes] + [col_src[w] for w in axes]
    full = full.transpose(perm).reshape(rho.shape)
    return (1.0 - p) * rho + p * full


def _fold_fragment(frag: NativeCircuitFragment) -> NativeCircuitFragment:
    """Replace each U_zz by U_zz^3 followed by a Z x Z frame (net identity).

    Uses U_zz = i (Rz(pi) x Rz(pi)) U_zz^3, so the folded fragment is
    unitarily identical to the original, phase included, while tripling the
    physical entangler count.
    """
    ops = []
    phase = frag.phase
    for name, wires, angle in frag.ops:
        if name == "uzz":
            ops.extend([(name, wires, angle)] * 3)
            ops.append(("rz", (wires[0],), np.pi))
            ops.append(("rz", (wires[1],), np.pi))
            phase = phase * 1j
        else:
            ops.append((name, wires, angle))
    return NativeCircuitFragment(n_wires=frag.n_wires, ops=ops, phase=phase)


def fold_circuit(circuit: Circuit) -> Circuit:
    """Triple every entangler in a native-compiled circuit."""
    ops = []
    for op in circuit.ops:
        if op.kind == "gate":
            if op.fragment is None:
                raise ValueError("fold_circuit needs native fragments;"
                                 " run compile_circuit first")
            ops.append(_dc_replace(op, fragment=_fold_fragment(op.fragment)))
        else:
            ops.append(op)
    meta = dict(circuit.metadata)
    meta["folded"] = True
    return Circuit(n_wires=circuit.n_wires, ops=tuple(ops), metadata=meta)


@dataclass(frozen=True)
class ZNEPair:
    """Matched expectation values from a circuit and its noise-folded copy."""

    base_estimates: dict
    folded_estimates: dict

    def __post_init__(self):
        if set(self.base_estimates) != set(self.folded_estimates):
            raise ValueError("base and folded estimates must share labels")


def zne_extrapolate(pair: ZNEPair) -> dict:
    """Linear extrapolation to zero noise: E_0 = E_1 - (E_3 - E_1) / 2."""
    return {
        k: pair.base_estimates[k] - 0.5 * (pair.folded_estimates[k]
                                           - pair.base_estimates[k])
        for k in pair.base_estimates
    }


def leakage_postselect(shots: list, check_label: str = "leak") -> tuple:
    """Drop shots whose leak-check flag fired; report the retention fraction.

    Returns (kept shots, retention).  Raises if the label was never recorded
    or if nothing survives.
    """
    if not shots:
        raise ValueError("no shots to filter")
    if any(check_label not in s.outcomes for s in shots):
        raise KeyError(f"leak-check label {check_label!r} missing from shots")
    kept = [s for s in shots if s.outcomes[check_label] == +1]
    retention = len(kept) / len(shots)
    return kept, retention
