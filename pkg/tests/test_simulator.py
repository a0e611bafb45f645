"""Exact density-matrix and trajectory simulators, checked against the
bond-channel formalism they are supposed to dilate."""

import numpy as np
import pytest

from bondsim import mps
from bondsim.ansatz import build_full_unitary, extract_isometry
from bondsim.circuits import build_state_prep_circuit, compile_circuit
from bondsim.estimation import energy_from_records
from bondsim.noise import NoiseModel
from bondsim.simulator import sample_shots, shots_to_csv, simulate_exact

# a fixed, mildly entangling chi=2 site unitary (no optimization involved)
COEFFS = 0.35 * np.cos(np.arange(1, 16) * 1.7)
SITE_U = build_full_unitary(COEFFS, 1)
TENSOR = extract_isometry(SITE_U, 1)
J = 24


@pytest.fixture(scope="module")
def exact_tomo():
    c = build_state_prep_circuit(SITE_U, None, J, purpose="tomography",
                                 setting=("Z",))
    return simulate_exact(c)


def test_exact_bond_state_is_iterated_channel(exact_tomo):
    ch = mps.bond_channel(TENSOR)
    rho = np.diag([1.0, 0.0]).astype(complex)
    for _ in range(J):
        rho = mps.apply_channel(ch, rho)
    assert np.linalg.norm(exact_tomo.bond_rho - rho) < 1e-12


def test_exact_marginals_match_channel_expectations():
    c = build_state_prep_circuit(SITE_U, None, J, purpose="energy")
    res = simulate_exact(c)
    b = mps.BoundaryState(np.array([1.0, 0.0]))
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    z = np.diag([1.0, -1.0]).astype(complex)
    assert np.isclose(res.marginals[f"m{J-2}:X"],
                      mps.expectation_local(TENSOR, b, J - 2, x), atol=1e-12)
    assert np.isclose(res.marginals[f"m{J}:Z"],
                      mps.expectation_local(TENSOR, b, J, z), atol=1e-12)
    assert np.isclose(res.pair_products[(f"m{J-1}:Z", f"m{J}:Z")],
                      mps.expectation_nn(TENSOR, b, J - 1, z, z), atol=1e-12)


def test_exact_noiseless_retention_is_one(exact_tomo):
    assert exact_tomo.retention == 1.0
    assert exact_tomo.marginals["leak"] == 1.0


def test_deferred_measurement_invariance():
    """Dropping the mid-circuit measurements leaves the bond state unchanged
    (they commute with everything later on their wire)."""
    from bondsim.circuits import Circuit
    c = build_state_prep_circuit(SITE_U, None, 8, purpose="energy",
                                 schedule=[(4, "X"), (6, "Z")])
    stripped = Circuit(n_wires=c.n_wires,
                       ops=tuple(op for op in c.ops if op.kind != "measure"),
                       metadata=dict(c.metadata))
    r1 = simulate_exact(c)
    r2 = simulate_exact(stripped)
    assert np.linalg.norm(r1.bond_rho - r2.bond_rho) < 1e-12


def test_sampled_energy_consistent_with_exact():
    lam = 1.1
    c = build_state_prep_circuit(SITE_U, None, J, purpose="energy")
    exact = simulate_exact(c)
    e_exact = -(exact.pair_products[(f"m{J-1}:Z", f"m{J}:Z")]
                + lam * exact.marginals[f"m{J-2}:X"])
    shots = sample_shots(c, None, 20000, seed=11)
    est = energy_from_records(shots, lam)
    assert abs(est.e - e_exact) < 4.5 * est.sigma


def test_sampling_deterministic():
    c = build_state_prep_circuit(SITE_U, None, 5, purpose="energy")
    nm = NoiseModel(p2=0.01, p1=0.001, p_leak=0.002, eps_meas=0.001,
                    eps_reset=0.001)
    a = sample_shots(c, nm, 200, seed=42)
    b = sample_shots(c, nm, 200, seed=42)
    assert [r.outcomes for r in a] == [r.outcomes for r in b]
    c2 = sample_shots(c, nm, 200, seed=43)
    assert [r.outcomes for r in a] != [r.outcomes for r in c2]


def test_zero_leak_rate_is_noop():
    """p_leak = 0 must not consume RNG draws: outcomes bit-identical to a
    model that never mentions leakage."""
    c = build_state_prep_circuit(SITE_U, None, 5, purpose="energy")
    base = NoiseModel(p2=0.01, p1=0.001, p_leak=0.0, eps_meas=0.0,
                      eps_reset=0.0)
    a = sample_shots(c, base, 300, seed=7)
    b = sample_shots(c, base, 300, seed=7)
    assert [r.outcomes for r in a] == [r.outcomes for r in b]
    assert not any(r.leaked for r in a)
    assert all(r.outcomes["leak"] == 1 for r in a)


def test_leakage_retention_scaling():
    p_leak = 0.004
    c = compile_circuit(build_state_prep_circuit(SITE_U, None, 10,
                                                 purpose="tomography",
                                                 setting=("Z",)))
    n_uzz = c.count_uzz()
    nm = NoiseModel(p2=0.0, p1=0.0, p_leak=p_leak, eps_meas=0.0,
                    eps_reset=0.0)
    n = 20000
    shots = sample_shots(c, nm, n, seed=3)
    kept = sum(1 for r in shots if r.outcomes["leak"] == 1)
    expected = (1 - p_leak) ** (2 * n_uzz)
    sigma = np.sqrt(expected * (1 - expected) / n)
    assert abs(kept / n - expected) < 4 * sigma
    # exact-mode retention is the closed-form value
    res = simulate_exact(c, nm)
    assert np.isclose(res.retention, expected, atol=1e-12)


def test_exact_depolarizing_shrinks_purity():
    c = build_state_prep_circuit(SITE_U, None, 10, purpose="tomography",
                                 setting=("Z",))
    clean = simulate_exact(c)
    nm = NoiseModel(p2=0.05, p1=0.0, p_leak=0.0, eps_meas=0.0, eps_reset=0.0)
    noisy = simulate_exact(c, nm)
    pur = lambda r: np.trace(r @ r).real
    assert pur(noisy.bond_rho) < pur(clean.bond_rho) - 1e-6
    assert np.isclose(np.trace(noisy.bond_rho), 1.0)


def test_exact_spectator_measurement_crosstalk():
    """eps_meas depolarizes the bond register on system-qubit measurements;
    a circuit with more mid-circuit measurements decoheres more."""
    nm = NoiseModel(p2=0.0, p1=0.0, p_leak=0.0, eps_meas=0.05, eps_reset=0.0)
    few = build_state_prep_circuit(SITE_U, None, 12, purpose="energy",
                                   schedule=[(12, "Z")])
    many = build_state_prep_circuit(SITE_U, None, 12, purpose="energy",
                                    schedule=[(k, "Z") for k in range(4, 13)])
    pur = lambda c: np.trace(simulate_exact(c, nm).bond_rho
                             @ simulate_exact(c, nm).bond_rho).real
    assert pur(many) < pur(few) - 1e-6


def test_shot_csv(tmp_path):
    c = build_state_prep_circuit(SITE_U, None, 4, purpose="energy",
                                 schedule=[(3, "X"), (4, "Z")])
    shots = sample_shots(c, None, 50, seed=1)
    path = tmp_path / "shots.csv"
    shots_to_csv(shots, path)
    lines = path.read_text().strip().splitlines()
    assert len(lines) == 51
    header = lines[0].split(",")
    assert "m3:X" in header and "m4:Z" in header


def test_sampled_tomography_matches_exact_distribution():
    c = build_state_prep_circuit(SITE_U, None, J, purpose="tomography",
                                 setting=("X",))
    exact = simulate_exact(c)
    shots = sample_shots(c, None, 40000, seed=5)
    mean = np.mean([r.outcomes["b1:X"] for r in shots])
    assert abs(mean - exact.marginals["b1:X"]) < 4.5 / np.sqrt(40000)
