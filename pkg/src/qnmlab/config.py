"""Run-configuration parsing: JSON with explicit unit suffixes.

Physical quantities appear in config files as strings with a unit, e.g.
``"10 nm"``, ``"1.26e16 rad/s"``, ``"415.863 THz"`` (plain frequencies are
converted to angular internally).  Dimensionless numbers stay numbers.
Unknown keys anywhere in the file are rejected - a typo must fail loudly,
not silently fall back to a default.
"""

import json

import numpy as np

from .core import (
    Background,
    ConstantMaterial,
    Cylinder2D,
    DomainError,
    DrudeModel,
    GridSpec,
    PmlSpec,
    Rod2D,
)

_LENGTH = {"m": 1.0, "um": 1e-6, "nm": 1e-9}
_FREQ = {"rad/s": 1.0, "THz": 2 * np.pi * 1e12, "GHz": 2 * np.pi * 1e9}


class ConfigError(DomainError):
    """Malformed or inconsistent run configuration."""


def parse_quantity(value, kind, where=""):
    """Parse ``"<number> <unit>"`` into SI (lengths to m, frequencies to
    angular rad/s)."""
    units = {"length": _LENGTH, "frequency": _FREQ}[kind]
    if not isinstance(value, str):
        raise ConfigError(f"{where}: expected a string with a unit "
                          f"(e.g. '10 nm'), got {value!r}")
    parts = value.split()
    if len(parts) != 2 or parts[1] not in units:
        raise ConfigError(f"{where}: cannot parse {value!r}; allowed units: "
                          f"{sorted(units)}")
    try:
        num = float(parts[0])
    except ValueError:
        raise ConfigError(f"{where}: bad number in {value!r}")
    return num * units[parts[1]]


def _check_keys(d, allowed, where):
    unknown = set(d) - set(allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}; "
                          f"allowed: {sorted(allowed)}")


def _parse_geometry(d):
    _check_keys(d, {"type", "width", "length", "radius", "center"},
                "geometry")
    center = tuple(parse_quantity(v, "length", "geometry.center")
                   for v in d.get("center", ["0 nm", "0 nm"]))
    if d.get("type") == "rod":
        return Rod2D(width=parse_quantity(d["width"], "length", "geometry"),
                     length=parse_quantity(d["length"], "length", "geometry"),
                     center=center)
    if d.get("type") == "cylinder":
        return Cylinder2D(radius=parse_quantity(d["radius"], "length",
                                                "geometry"), center=center)
    raise ConfigError(f"geometry.type must be 'rod' or 'cylinder', "
                      f"got {d.get('type')!r}")


def _parse_material(d):
    _check_keys(d, {"type", "omega_p", "gamma_d", "eps"}, "material")
    if d.get("type") == "drude":
        return DrudeModel(
            omega_p=parse_quantity(d["omega_p"], "frequency", "material"),
            gamma_d=parse_quantity(d["gamma_d"], "frequency", "material"))
    if d.get("type") == "constant":
        eps = d["eps"]
        if isinstance(eps, list):
            eps = complex(eps[0], eps[1])
        return ConstantMaterial(complex(eps))
    raise ConfigError(f"material.type must be 'drude' or 'constant', "
                      f"got {d.get('type')!r}")


def _parse_grid(d):
    _check_keys(d, {"h", "half_width", "pml_cells", "pml_order",
                    "pml_reflection"}, "grid")
    h = parse_quantity(d["h"], "length", "grid.h")
    half = parse_quantity(d["half_width"], "length", "grid.half_width")
    half = round(half / h) * h  # whole cells per half: even total count
    pml = PmlSpec(cells=int(d.get("pml_cells", 20)),
                  order=int(d.get("pml_order", 3)),
                  target_reflection=float(d.get("pml_reflection", 1e-8)))
    return GridSpec(extent=((-half, half), (-half, half)), h=h, pml=pml)


def _parse_complex_freq(d, where):
    _check_keys(d, {"real", "imag"}, where)
    return (parse_quantity(d["real"], "frequency", where)
            + 1j * parse_quantity(d["imag"], "frequency", where))


class RunConfig:
    """Validated run configuration; see ``configs/`` for examples."""

    TOP_KEYS = {"geometry", "material", "background", "grid", "pole_search",
                "normalization", "dipoles", "spectrum", "distance_scan",
                "propagator", "variants", "oracle"}

    def __init__(self, data: dict):
        _check_keys(data, self.TOP_KEYS, "config")
        for key in ("geometry", "material", "background", "grid",
                    "pole_search"):
            if key not in data:
                raise ConfigError(f"config: missing required section {key!r}")
        self.geometry = _parse_geometry(data["geometry"])
        self.material = _parse_material(data["material"])
        _check_keys(data["background"], {"n"}, "background")
        self.bg = Background(float(data["background"]["n"]))
        self.grid = _parse_grid(data["grid"])

        ps = data["pole_search"]
        _check_keys(ps, {"guess", "rel_tol", "max_iter", "symmetry"},
                    "pole_search")
        self.omega_guess = _parse_complex_freq(ps["guess"],
                                               "pole_search.guess")
        self.pole_rel_tol = float(ps.get("rel_tol", 1e-9))
        self.pole_max_iter = int(ps.get("max_iter", 30))
        self.symmetry = ps.get("symmetry", None)
        if self.symmetry not in (None, "x", "y", "xy"):
            raise ConfigError("pole_search.symmetry must be x, y or xy")

        norm = data.get("normalization", {})
        _check_keys(norm, {"clearances", "rtol"}, "normalization")
        self.norm_clearances = [
            parse_quantity(v, "length", "normalization.clearances")
            for v in norm.get("clearances",
                              ["500 nm", "600 nm", "700 nm", "800 nm"])]
        self.norm_rtol = float(norm.get("rtol", 0.01))

        self.dipoles = []
        for i, dd in enumerate(data.get("dipoles", [])):
            _check_keys(dd, {"position", "orientation"}, f"dipoles[{i}]")
            pos = tuple(parse_quantity(v, "length", f"dipoles[{i}].position")
                        for v in dd["position"])
            self.dipoles.append((pos, tuple(float(v)
                                            for v in dd["orientation"])))

        spec = data.get("spectrum", {})
        _check_keys(spec, {"half_width_gammas", "points"}, "spectrum")
        self.spectrum_half_gammas = float(spec.get("half_width_gammas", 3.0))
        self.spectrum_points = int(spec.get("points", 13))

        scan = data.get("distance_scan", {})
        _check_keys(scan, {"axis", "standoffs", "orientation"},
                    "distance_scan")
        self.scan_axis = scan.get("axis", "x")
        if self.scan_axis not in ("x", "y"):
            raise ConfigError("distance_scan.axis must be 'x' or 'y'")
        self.scan_standoffs = [
            parse_quantity(v, "length", "distance_scan.standoffs")
            for v in scan.get("standoffs", [])]
        self.scan_orientation = tuple(
            float(v) for v in scan.get("orientation", [0.0, 1.0]))

        prop = data.get("propagator", {})
        _check_keys(prop, {"source_standoff", "distances"}, "propagator")
        self.prop_source_standoff = parse_quantity(
            prop["source_standoff"], "length", "propagator") \
            if "source_standoff" in prop else None
        self.prop_distances = [
            parse_quantity(v, "length", "propagator.distances")
            for v in prop.get("distances", [])]

        self.variants = list(data.get("variants", ["f", "far", "out"]))
        for v in self.variants:
            if v not in ("f", "far", "out", "far+born"):
                raise ConfigError(f"unknown variant {v!r}")

        oracle = data.get("oracle", {})
        _check_keys(oracle, {"enabled", "spectrum_stride",
                             "scan_checkpoints"}, "oracle")
        self.oracle_enabled = bool(oracle.get("enabled", False))
        self.oracle_spectrum_stride = int(oracle.get("spectrum_stride", 4))
        self.oracle_scan_checkpoints = [
            int(i) for i in oracle.get("scan_checkpoints", [])]

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fh:
                data = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}")
        return cls(data)

    @property
    def zero_contrast(self):
        if isinstance(self.material, ConstantMaterial):
            return complex(self.material.eps_const) == complex(self.bg.eps_b)
        return False
