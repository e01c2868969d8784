import warnings

import numpy as np
import pytest

from qnmlab.core import Background, DrudeModel, GridSpec, PmlSpec, Rod2D
from qnmlab.normalize import norm_scan, normalize_mode
from qnmlab.solver import PoleSearch, find_qnm


@pytest.fixture(scope="session")
def rod_pipeline():
    """Shared coarse rod pipeline: mode found, normalized, with handles.

    h = 2.5 nm staircases the 10 x 80 nm rod exactly and keeps the mirror
    reduction available; the whole thing takes ~15 s once per session.
    """
    bg = Background(1.5)
    rod = Rod2D(width=10e-9, length=80e-9)
    mat = DrudeModel(omega_p=1.26e16, gamma_d=7e13)
    h = 2.5e-9
    half = 420 * h
    grid = GridSpec(extent=((-half, half), (-half, half)), h=h,
                    pml=PmlSpec(cells=24))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        mode = find_qnm(grid, rod, mat, bg,
                        PoleSearch(omega_guess=2 * np.pi * (387e12 - 30e12j)),
                        symmetry="xy")
        scan = norm_scan(mode, mat, bg, np.arange(500e-9, 950e-9, 100e-9))
        normalized = normalize_mode(mode, scan)
    return {
        "bg": bg,
        "rod": rod,
        "material": mat,
        "grid": grid,
        "mode_raw": mode,
        "mode": normalized,
        "scan": scan,
    }
