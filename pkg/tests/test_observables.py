import numpy as np
import pytest
from scipy.constants import c as C0

from qnmlab.core import Background, DomainError
from qnmlab.dyson import RegularizedField
from qnmlab.observables import (
    GreenModel,
    born_green_model,
    distance_scan,
    eta_factor,
    far_green_model,
    mode_green_model,
    out_green_model,
    purcell_factor,
    se_enhancement,
    se_far_3d,
)


def test_purcell_factor_basics():
    lam = 900e-9
    f1 = purcell_factor(10.0, 1e-20, lam, 1.5)
    assert purcell_factor(20.0, 1e-20, lam, 1.5) == pytest.approx(2 * f1)
    # algebraic identity point: V_eff chosen so F_P = 1
    v = 3 / (4 * np.pi**2) * (lam / 1.5) ** 3 * 10.0
    assert purcell_factor(10.0, v, lam, 1.5) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        purcell_factor(-1.0, 1e-20, lam, 1.5)
    with pytest.raises(DomainError):
        purcell_factor(10.0, 0.0, lam, 1.5)


@pytest.mark.parametrize("seed", range(8))
def test_purcell_eta_decomposition_is_algebraic_identity(seed):
    # F_P eta + 1 reproduces the direct far-model rate to rounding (3D)
    rng = np.random.default_rng(seed)
    bg = Background(rng.uniform(1.0, 2.0))
    omega_c = rng.uniform(1.0, 4.0) * 1e15
    gamma_c = omega_c / rng.uniform(5.0, 40.0)
    omega = omega_c * rng.uniform(0.7, 1.3)
    v_eff = 10 ** rng.uniform(-24, -20)
    field = rng.normal(size=3) + 1j * rng.normal(size=3)
    n_a = rng.normal(size=3)
    n_a /= np.linalg.norm(n_a)

    q = omega_c / (2 * gamma_c)
    lam_b = 2 * np.pi * C0 / omega_c
    f_p = purcell_factor(q, v_eff, lam_b, bg.n_b)
    eta = eta_factor(field, n_a, omega, v_eff, omega_c, gamma_c, bg.eps_b)
    direct = se_far_3d(field, n_a, omega, omega_c, gamma_c, bg)
    assert f_p * eta + 1.0 == pytest.approx(direct, rel=1e-12, abs=1e-12)


def test_eta_orthogonal_orientation_vanishes():
    field = np.array([0.0, 3.0 + 1.0j, 0.0])
    eta = eta_factor(field, (1, 0, 0), 2e15, 1e-21, 2e15, 1e14, 2.25)
    assert eta == 0.0


def test_eta_far_detuning_rolls_off():
    field = np.array([0.0, 2.0 + 0.5j, 0.0])
    args = dict(n_a=(0, 1, 0), v_eff=1e-21, omega_c=2e15, gamma_c=1e14,
                eps_b=2.25)
    on = abs(eta_factor(field, omega=2e15, **args))
    off = abs(eta_factor(field, omega=6e15, **args))
    assert off < 0.05 * on


def test_eta_at_hotspot_aligned_is_unity():
    # with 1/V_eff = eps_b Re f^2 at the hot spot, eta(w_c) = 1/(1+(g/w)^2)
    eps_b = 2.25
    omega_c, gamma_c = 2.43e15, 2.173e14  # Q = 5.59
    f0 = 1.3e8  # arbitrary real aligned field value
    v_eff = 1.0 / (eps_b * f0**2)
    field = np.array([0.0, f0])
    eta = eta_factor(field, (0, 1), omega_c, v_eff, omega_c, gamma_c, eps_b)
    expected = 1.0 / (1.0 + (gamma_c / omega_c) ** 2)
    assert eta == pytest.approx(expected, rel=1e-12)
    assert abs(eta - 1.0) < 0.2


def test_zero_scattering_gives_unity_rate():
    bg = Background(1.5)
    model = GreenModel("none", lambda r1, r2, w: np.zeros((2, 2)), bg)
    assert se_enhancement(model, (0, 1e-7), (0, 1), 2.6e15) == 1.0


@pytest.fixture(scope="module")
def models(rod_pipeline):
    p = rod_pipeline
    reg = RegularizedField(p["mode"], p["rod"], p["material"], p["bg"])
    return {
        "f": mode_green_model(p["mode"], p["bg"]),
        "far": far_green_model(reg),
        "out": out_green_model(reg),
        "born": born_green_model(reg),
    }


def test_orientation_covariance(models, rod_pipeline):
    omega = rod_pipeline["mode"].frequency.omega
    r_a = (0.0, 52e-9)
    n = np.array([0.3, 0.95])
    n /= np.linalg.norm(n)
    a = se_enhancement(models["far"], r_a, n, omega)
    b = se_enhancement(models["far"], r_a, -n, omega)
    assert a == pytest.approx(b, rel=1e-12)


def test_f_and_far_models_agree_near_but_not_far(models, rod_pipeline):
    # bare-mode and regularized propagators coincide in the near zone where
    # the enhancement is large (at ~100 nm the on-resonance interference dip
    # pushes F below 1 and relative agreement of the small F-1 degrades,
    # though the absolute curves stay close); beyond the caustic radius the
    # scattered parts themselves part ways
    omega = rod_pipeline["mode"].frequency.omega
    for standoff in (10e-9, 20e-9, 30e-9):
        r_a = (0.0, 40e-9 + standoff)
        ff = se_enhancement(models["f"], r_a, (0, 1), omega)
        fa = se_enhancement(models["far"], r_a, (0, 1), omega)
        assert abs(ff - fa) <= 0.10 * abs(fa)
    r_far = (0.0, 40e-9 + 900e-9)
    sf = models["f"].scattered(r_far, r_far, omega)[1, 1]
    sa = models["far"].scattered(r_far, r_far, omega)[1, 1]
    assert abs(sf - sa) > 0.5 * abs(sa)  # raw mode tail is unphysical here


def test_out_model_matches_far_at_distance(models, rod_pipeline):
    omega = rod_pipeline["mode"].frequency.omega
    r_a = (65e-9, 0.0)  # 60 nm off the flat side: image term down to ~6%
    fo = se_enhancement(models["out"], r_a, (0, 1), omega)
    fa = se_enhancement(models["far"], r_a, (0, 1), omega)
    assert fo == pytest.approx(fa, rel=0.10)
    r_b = (145e-9, 0.0)  # 140 nm out: image term negligible
    fo = se_enhancement(models["out"], r_b, (0, 1), omega)
    fa = se_enhancement(models["far"], r_b, (0, 1), omega)
    assert fo == pytest.approx(fa, rel=0.02)


def test_distance_scan_records_and_oracle_checkpoints(models, rod_pipeline):
    omega = rod_pipeline["mode"].frequency.omega
    path = [(0, 50e-9), (0, 90e-9), (0, 140e-9)]
    calls = []

    def fake_oracle(r_a):
        calls.append(tuple(r_a))
        return 42.0

    recs = distance_scan([models["f"], models["far"]], path, (0, 1), omega,
                         oracle=fake_oracle, oracle_checkpoints=[1])
    assert len(recs) == 3
    assert calls == [tuple(np.asarray(path[1], float))]
    assert recs[1].f_a["oracle"] == 42.0
    assert np.isnan(recs[0].f_a["oracle"])
    for r in recs:
        assert set(r.f_a) >= {"f", "far"}
        assert r.orientation == (0.0, 1.0)
