import numpy as np
import pytest
import warnings

from qnmlab.core import (
    Background,
    ComplexFrequency,
    ConstantMaterial,
    Cylinder2D,
    DomainError,
    GridSpec,
    PmlSpec,
    PoleSearchError,
    Rod2D,
)
from qnmlab.solver import (
    ModeField,
    PoleSearch,
    driven_response,
    find_qnm,
    load_mode,
    save_mode,
)
from qnmlab.solver.mie import mie_pole
from qnmlab.solver.roots import distinct_roots, secant_root, winding_number

BG = Background(1.5)
MAT = ConstantMaterial(9.0)
CYL = Cylinder2D(radius=150e-9)
GUESS = 2.4e15 - 0.35e15j


def _grid(h, width=1.0e-6, pml=16):
    half = (round(width / h) // 2) * h
    return GridSpec(extent=((-half, half), (-half, half)), h=h,
                    pml=PmlSpec(cells=pml))


@pytest.fixture(scope="module")
def analytic_pole():
    return mie_pole(150e-9, MAT, BG, 1, GUESS).omega_tilde


@pytest.fixture(scope="module")
def cylinder_modes():
    out = {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for h in (10e-9, 5e-9, 2.5e-9):
            out[h] = find_qnm(_grid(h), CYL, MAT, BG,
                              PoleSearch(omega_guess=GUESS))
    return out


def test_cylinder_pole_matches_analytic_series(cylinder_modes, analytic_pole):
    got = cylinder_modes[5e-9].frequency.omega_tilde
    assert abs(got - analytic_pole) / abs(analytic_pole) < 6e-3


def test_grid_convergence_of_eigenfrequency(cylinder_modes, analytic_pole):
    # halving h cuts the eigenfrequency error at least threefold against the
    # extrapolated limit (second-order bulk scheme)
    f = [cylinder_modes[h].frequency.omega_tilde for h in (10e-9, 5e-9, 2.5e-9)]
    p_obs = np.log2(abs(f[0] - f[1]) / abs(f[1] - f[2]))
    f_rich = f[2] + (f[2] - f[1]) / (2**p_obs - 1)
    errs = np.abs(np.array(f) - f_rich)
    assert errs[0] / errs[1] >= 3.0
    assert errs[1] / errs[2] >= 3.0
    # and the extrapolated value agrees with the analytic pole to ~0.1%
    assert abs(f_rich - analytic_pole) / abs(analytic_pole) < 2e-3


def test_mode_profile_quality(cylinder_modes):
    m = cylinder_modes[5e-9]
    # eigen-residual of the extracted field, relative to the operator scale
    assert m.residual < 1e-10
    # gauge: the largest-magnitude sample is real and positive
    vals = np.concatenate([m.ex.ravel(), m.ey.ravel()])
    v = vals[np.argmax(np.abs(vals))]
    assert v.imag == pytest.approx(0.0, abs=1e-9 * abs(v))
    assert v.real > 0
    assert m.norm_state == "raw"


def test_mode_symmetry_reduction_matches_full(cylinder_modes):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        m_q = find_qnm(_grid(5e-9), CYL, MAT, BG,
                       PoleSearch(omega_guess=GUESS), symmetry="xy")
    full = cylinder_modes[5e-9].frequency.omega_tilde
    assert abs(m_q.frequency.omega_tilde - full) / abs(full) < 1e-7


def test_single_pole_lorentzian_fit_of_rod_response():
    # the rod plasmon is spectrally isolated: the scattered response at an
    # exterior probe over omega_c +- 1.5 gamma_c fits one pole plus a smooth
    # background to well under 5%
    from qnmlab.core import Dipole, DrudeModel
    from qnmlab.solver import assemble

    rod = Rod2D(10e-9, 80e-9)
    mat = DrudeModel(1.26e16, 7e13)
    grid = _grid(2.5e-9, width=0.9e-6)
    src = Dipole(position=(0, 0), orientation=(0, 1))
    probe = (0.0, 50e-9)

    def scattered_response(w):
        op = assemble(grid, rod, mat, BG, w, symmetry="xy")
        b = op.dipole_rhs(src)
        u = op.sampling_vector(probe, (0.0, 1.0))
        return u @ (op.solve(b) - op.background_twin().solve(b))

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        mode = find_qnm(grid, rod, mat, BG,
                        PoleSearch(omega_guess=2 * np.pi * (400e12 - 35e12j)),
                        symmetry="xy")
        wt = mode.frequency.omega_tilde
        ws = wt.real + np.linspace(-1.5, 1.5, 9) * abs(wt.imag)
        resp = np.array([scattered_response(w) for w in ws])
    # least squares for r(w) = a w^2/(wt - w) + b + c (w - w0), with
    # column normalization so the pole scale does not swamp the background
    basis = np.stack([ws**2 / (wt - ws), np.ones_like(ws), ws - wt.real],
                     axis=1)
    basis = basis / np.abs(basis).max(axis=0)
    coef, *_ = np.linalg.lstsq(basis, resp, rcond=None)
    fit = basis @ coef
    assert np.abs(fit - resp).max() < 0.05 * np.abs(resp).max()


def test_no_pole_in_basin_raises():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(PoleSearchError):
            find_qnm(_grid(10e-9), CYL, MAT, BG,
                     PoleSearch(omega_guess=1.0e15 - 0.5e14j,
                                basin_radius=0.5e14, max_iter=8))


def test_mode_container_roundtrip_bit_exact(cylinder_modes, tmp_path):
    m = cylinder_modes[10e-9]
    path = tmp_path / "mode.field"
    save_mode(m, path)
    r = load_mode(path)
    assert np.array_equal(r.ex, m.ex)
    assert np.array_equal(r.ey, m.ey)
    assert r.frequency == m.frequency
    assert r.grid == m.grid
    assert r.geometry == m.geometry
    assert r.bg == m.bg
    assert r.norm_state == m.norm_state and r.norm_value == m.norm_value
    # and a second save is byte-identical
    path2 = tmp_path / "mode2.field"
    save_mode(r, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_mode_value_interpolation(cylinder_modes):
    m = cylinder_modes[10e-9]
    v = m.value_at([(30e-9, 40e-9), (0.0, 100e-9)])
    assert v.shape == (2, 2)
    assert np.all(np.isfinite(v))


# -- root utilities on synthetic responses -----------------------------------


def test_secant_root_on_polynomial():
    z, _ = secant_root(lambda z: (z - 2.0 - 1.0j) * (z + 3.0), 2.2 + 0.8j)
    assert z == pytest.approx(2.0 + 1.0j, rel=1e-9)


def test_winding_counts_zeros():
    f = lambda z: (z - 1.0) * (z - 1.2 - 0.1j)
    assert winding_number(f, 1.1, 0.5) == 2
    assert winding_number(f, 1.1, 0.05) == 0


def test_two_poles_in_basin_detected_on_synthetic_response():
    # inverse response with two nearby zeros (= two poles of the response)
    p1, p2 = 2.0 + 0.5j, 2.3 + 0.4j
    inv = lambda z: (z - p1) * (z - p2) / (z**2 + 9.0)
    n = winding_number(inv, 2.15 + 0.45j, 0.4)
    assert n == 2
    seeds = [2.15 + 0.45j + 0.3 * np.exp(1j * t)
             for t in np.linspace(0, 2 * np.pi, 6, endpoint=False)]
    roots = distinct_roots(inv, seeds, basin_radius=0.6, center=2.15 + 0.45j)
    assert len(roots) == 2
    got = sorted(roots, key=lambda z: z.real)
    assert got[0] == pytest.approx(p1, rel=1e-6)
    assert got[1] == pytest.approx(p2, rel=1e-6)
