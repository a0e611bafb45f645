"""Exact-reference cross-checks for the transverse-field Ising oracles.

Frozen values below were computed independently: the energy densities from
the closed elliptic-integral form e(lam) = -(2/pi)(1+lam) E(m) with
m = 4 lam/(1+lam)^2, and the entropies from a separate DMRG run.
"""

import numpy as np
import pytest
from scipy.special import ellipe

from bondsim.tfim import (TFIMParams, exact_diag, exact_energy_density,
                          exact_half_chain_entropy)


def closed_form_energy(lam):
    m = 4 * lam / (1 + lam) ** 2
    return -(2 / np.pi) * (1 + lam) * ellipe(m)


@pytest.mark.parametrize("lam", [0.0, 0.3, 0.9, 1.0, 1.2, 2.0, 10.0])
def test_energy_density_matches_elliptic_form(lam):
    r = exact_energy_density(TFIMParams(lam))
    assert r.method == "quadrature"
    assert abs(r.energy_density - closed_form_energy(lam)) < 1e-10
    assert r.convergence_estimate < 1e-9


def test_energy_special_points():
    assert np.isclose(exact_energy_density(TFIMParams(0.0)).energy_density, -1.0)
    assert np.isclose(exact_energy_density(TFIMParams(1.0)).energy_density,
                      -4 / np.pi, atol=1e-12)
    # lam >> 1: e -> -lam - 1/(4 lam)
    e = exact_energy_density(TFIMParams(50.0)).energy_density
    assert abs(e - (-50.0 - 1 / 200.0)) < 1e-6


def test_negative_lambda_rejected():
    with pytest.raises(ValueError):
        TFIMParams(-0.1)


@pytest.mark.parametrize("lam,n", [(0.5, 10), (1.0, 12), (1.5, 10)])
def test_exact_diag_tracks_infinite_chain(lam, n):
    r = exact_diag(TFIMParams(lam), n, boundary="periodic")
    e_inf = exact_energy_density(TFIMParams(lam)).energy_density
    # finite-size corrections are exponentially small off criticality,
    # -pi/(6 n^2) x velocity at lam = 1
    assert abs(r.energy_density - e_inf) < 1.2 / n ** 2 + 1e-6


def test_exact_diag_two_sites():
    # H = -(ZZ + lam(X1 + X2)) on 2 sites (open): ground energy
    # -sqrt(1 + 4 lam^2) per bond
    lam = 0.7
    r = exact_diag(TFIMParams(lam), 2, boundary="open")
    assert np.isclose(r.energy_density, -np.sqrt(1 + 4 * lam ** 2), atol=1e-10)


def test_exact_diag_validation():
    with pytest.raises(ValueError):
        exact_diag(TFIMParams(1.0), 15)
    with pytest.raises(ValueError):
        exact_diag(TFIMParams(1.0), 8, boundary="weird")


def test_exact_diag_ordered_phase_entropy():
    # Deep in the ordered phase the symmetric ground state is a 2-fold cat:
    # half-chain entropy -> 1 bit.
    r = exact_diag(TFIMParams(0.05), 10)
    assert abs(r.entropy_bits - 1.0) < 1e-2


def test_entropy_oracle_disordered_phase():
    r = exact_half_chain_entropy(TFIMParams(2.0))
    assert r.method == "high_chi_mps"
    assert r.converged
    # frozen DMRG reference
    assert abs(r.entropy_bits - 0.128361) < 5e-5


def test_entropy_oracle_ordered_phase_has_cat_bit():
    r = exact_half_chain_entropy(TFIMParams(0.5))
    assert r.entropy_bits > 1.0
    # correlation length ~1.4 sites at lam=0.5, so a 12-site diagonalization
    # (which picks the symmetric cat state) is converged to the same value
    ed = exact_diag(TFIMParams(0.5), 14, boundary="open")
    assert abs(r.entropy_bits - ed.entropy_bits) < 5e-4


def test_entropy_oracle_critical_point_raises():
    with pytest.raises(ValueError):
        exact_half_chain_entropy(TFIMParams(1.0))
