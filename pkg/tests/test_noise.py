import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import unitary_group

from bondsim.circuits import build_state_prep_circuit, compile_circuit
from bondsim.gates import embed, kron_all, rz
from bondsim.noise import (NoiseModel, ZNEPair, depolarize, fold_circuit,
                           leakage_postselect, zne_extrapolate)


def random_density(n_wires, seed):
    rng = np.random.default_rng(seed)
    d = 2 ** n_wires
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def test_noise_model_defaults_and_validation():
    nm = NoiseModel()
    assert nm.p2 == 0.008 and nm.p1 == 0.0003 and nm.p_leak == 0.001
    assert nm.eps_meas == 0.002 and nm.eps_reset == 0.0004
    assert not nm.trivial
    assert NoiseModel.none().trivial
    with pytest.raises(ValueError):
        NoiseModel(p2=1.5)
    with pytest.raises(ValueError):
        NoiseModel(p1=-0.1)


def test_noise_model_json_roundtrip(tmp_path):
    nm = NoiseModel(p2=0.01, p1=0.001, p_leak=0.0, eps_meas=0.0,
                    eps_reset=0.0)
    assert NoiseModel.from_json(nm.to_json()) == nm
    path = tmp_path / "noise.json"
    path.write_text(nm.to_json())
    assert NoiseModel.load(path) == nm


def test_depolarize_limits():
    rho = random_density(2, 0)
    assert np.allclose(depolarize(rho, (0, 1), 0.0, 2), rho)
    out = depolarize(rho, (0, 1), 1.0, 2)
    assert np.allclose(out, np.eye(4) / 4)
    # one wire at p=1: marginal on the other wire is untouched
    out = depolarize(rho, (0,), 1.0, 2)
    marg = out.reshape(2, 2, 2, 2).trace(axis1=0, axis2=2)
    marg_in = rho.reshape(2, 2, 2, 2).trace(axis1=0, axis2=2)
    assert np.allclose(marg, marg_in)
    assert np.allclose(out, np.kron(np.eye(2) / 2, marg_in))


@given(st.floats(0, 1), st.floats(0, 1))
@settings(max_examples=20, deadline=None)
def test_depolarize_composes(p, q):
    """Two depolarizing hits on the same wire compose with
    1 - p_eff = (1-p)(1-q)."""
    rho = random_density(2, 3)
    twice = depolarize(depolarize(rho, (1,), p, 2), (1,), q, 2)
    once = depolarize(rho, (1,), 1 - (1 - p) * (1 - q), 2)
    assert np.linalg.norm(twice - once) < 1e-12


def test_depolarize_preserves_trace_and_hermiticity():
    rho = random_density(3, 5)
    out = depolarize(rho, (0, 2), 0.3, 3)
    assert np.isclose(np.trace(out), 1.0)
    assert np.linalg.norm(out - out.conj().T) < 1e-12


def test_fold_circuit_triples_interactions_exactly():
    u = unitary_group.rvs(4, random_state=np.random.default_rng(1))
    c = compile_circuit(build_state_prep_circuit(u, None, 3))
    folded = fold_circuit(c)
    assert folded.count_uzz() == 3 * c.count_uzz()
    assert folded.metadata["folded"] is True
    # unitary-identical: every folded fragment equals the original matrix
    for op, fop in zip(c.ops, folded.ops):
        if op.kind == "gate":
            assert np.linalg.norm(op.fragment.matrix()
                                  - fop.fragment.matrix()) < 1e-10


def test_fold_inserts_frame_rotations():
    u = unitary_group.rvs(4, random_state=np.random.default_rng(2))
    c = compile_circuit(build_state_prep_circuit(u, None, 3))
    folded = fold_circuit(c)
    frag = next(op.fragment for op in folded.ops if op.kind == "gate"
                and op.fragment.uzz_count > 0)
    # Z x Z = -(rz(pi) x rz(pi)): each folded interaction carries two rz(pi)
    n_uzz = frag.uzz_count
    n_pi = sum(1 for kind, _, angle in frag.ops
               if kind == "rz" and angle is not None
               and np.isclose(angle, np.pi))
    assert n_pi >= 2 * (n_uzz // 3)


def test_fold_requires_compiled_circuit():
    u = unitary_group.rvs(4, random_state=np.random.default_rng(3))
    c = build_state_prep_circuit(u, None, 3)
    with pytest.raises(Exception):
        fold_circuit(c)


def test_zne_linear_extrapolation():
    pair = ZNEPair(base_estimates={"a": 0.9, "b": -0.3},
                   folded_estimates={"a": 0.7, "b": -0.1})
    out = zne_extrapolate(pair)
    assert np.isclose(out["a"], 1.0)
    assert np.isclose(out["b"], -0.4)
    with pytest.raises(ValueError):
        ZNEPair(base_estimates={"a": 1.0}, folded_estimates={"b": 1.0})


def test_zne_exact_for_linear_noise():
    """If E(n) = E0 + c n (n = number of interactions), the 1x/3x pair
    recovers E0 exactly."""
    e0, c = 0.42, -0.011
    pair = ZNEPair(base_estimates={"v": e0 + c}, folded_estimates={"v": e0 + 3 * c})
    assert np.isclose(zne_extrapolate(pair)["v"], e0)


def test_leakage_postselect():
    class Rec:
        def __init__(self, leak):
            self.outcomes = {"leak": leak}
    shots = [Rec(1), Rec(1), Rec(-1), Rec(1)]
    kept, retention = leakage_postselect(shots)
    assert len(kept) == 3
    assert np.isclose(retention, 0.75)
    assert all(r.outcomes["leak"] == 1 for r in kept)
