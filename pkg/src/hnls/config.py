"""JSON experiment configuration.

Schema (unknown keys are rejected; every error names its dotted key)::

    {
      "grid":     {"half_width": 40, "n_points": 1024},
      "params":   {"a": 1, "b": 0.5, "lambda": 1, "beta": 1, "delta": 0},
      "damping":  {"profile": "plateau_with_hole", "d0": 1, "R0": 5},
      "initial":  {"kind": "gaussian", "amplitude": 1, "width": 2, "center": 0},
      "time":     {"t_final": 1, "dt": 0.001, "snapshot_stride": 10},
      "scheme":   "strang_split",
      "outputs":  {"directory": "runs/demo", "formats": ["binary", "csv"]},

      optional:
      "nonlinear": {"evaluation_mode": "pseudospectral", "dealias": true},
      "picard":    {"tol": 1e-12, "max_iters": 50},
      "periodic_data": false,
      "stability": {"perturbation": 1e-3, "alpha": 0.75, "eps": 0.5,
                    "width": 1, "center": 0},
      "weight":    {"alpha": 0.75, "eps": 0.5, "truncation_r": null}
    }

Initial data kinds, with A = amplitude, w = width, c = center:
gaussian A exp(-(x-c)^2/w^2); two_bump the gaussian at c and -c summed;
plane_modulated A (1 + cos(pi (x-c)/L)/2) exp(i k pi x / L) with
integer k = "wavenumber" (periodic and nowhere zero); file loads "path"
(.npy vector, or the first snapshot of a trajectory binary).
"""

from dataclasses import dataclass
import json
import math
from pathlib import Path

import numpy as np

from hnls._validation import ValidationError
from hnls.core import DampingSpec, EquationParams, Field, make_grid
from hnls.nonlinearity import NonlinearConfig
from hnls.solver import SolveConfig, _check_initial

_SECTIONS = {
    "grid": {"half_width", "n_points"},
    "params": {"a", "b", "lambda", "beta", "delta"},
    "damping": {"profile", "d0", "R0"},
    "initial": {"kind", "amplitude", "width", "center", "wavenumber", "path"},
    "time": {"t_final", "dt", "snapshot_stride"},
    "outputs": {"directory", "formats"},
    "nonlinear": {"evaluation_mode", "dealias"},
    "picard": {"tol", "max_iters"},
    "stability": {"perturbation", "alpha", "eps", "width", "center"},
    "weight": {"alpha", "eps", "truncation_r"},
}
_SCALARS = {"scheme", "periodic_data"}
_REQUIRED = ("grid", "initial", "time")
INITIAL_KINDS = ("gaussian", "two_bump", "plane_modulated", "file")
FORMATS = ("binary", "csv")


def _keyed(section, func, *args, **kw):
    """Run a constructor, prefixing validation errors with the config key."""
    try:
        return func(*args, **kw)
    except ValidationError as exc:
        if exc.key is not None:
            raise
        msg = str(exc)
        field = next((f for f in _SECTIONS.get(section, ()) if msg.startswith(f + " ")), None)
        if field is None and section == "params" and msg.startswith("lam "):
            field = "lambda"
        key = f"{section}.{field}" if field else section
        raise ValidationError(msg, key) from None


@dataclass(frozen=True)
class ExperimentConfig:
    raw: dict
    text: str
    base_dir: Path
    grid: object
    params: EquationParams
    damping: DampingSpec
    solve: SolveConfig
    initial_spec: dict
    output_dir: Path
    formats: tuple
    stability: dict
    weight: object

    @classmethod
    def from_text(cls, text, base_dir="."):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid JSON: {exc}", "config") from None
        if not isinstance(raw, dict):
            raise ValidationError("top level must be an object", "config")
        return cls._build(raw, text, Path(base_dir))

    @classmethod
    def from_file(cls, path):
        path = Path(path)
        return cls.from_text(path.read_text(), path.parent)

    @classmethod
    def _build(cls, raw, text, base_dir):
        for key, val in raw.items():
            if key in _SCALARS:
                continue
            if key not in _SECTIONS:
                valid = ", ".join(sorted(set(_SECTIONS) | _SCALARS))
                raise ValidationError(f"unknown section; valid: {valid}", key)
            if not isinstance(val, dict):
                raise ValidationError("must be an object", key)
            for sub in val:
                if sub not in _SECTIONS[key]:
                    raise ValidationError(
                        f"unknown key; valid: {', '.join(sorted(_SECTIONS[key]))}", f"{key}.{sub}"
                    )
        for key in _REQUIRED:
            if key not in raw:
                raise ValidationError("missing section", key)

        g = raw["grid"]
        for sub in ("half_width", "n_points"):
            if sub not in g:
                raise ValidationError("missing value", f"grid.{sub}")
        grid = _keyed("grid", make_grid, g["half_width"], g["n_points"])

        p = raw.get("params", {})
        params = _keyed("params", EquationParams, a=p.get("a", 0.0), b=p.get("b", 0.0),
                        lam=p.get("lambda", 0.0), beta=p.get("beta", 0.0),
                        delta=p.get("delta", 0.0))

        d = raw.get("damping", {})
        damping = _keyed("damping", DampingSpec, d.get("profile", "zero"),
                         d.get("d0", 0.0), d.get("R0", 1.0))

        nl = None
        if "nonlinear" in raw:
            n = raw["nonlinear"]
            nl = _keyed("nonlinear", NonlinearConfig, params.delta,
                        n.get("evaluation_mode", "pseudospectral"), bool(n.get("dealias", True)))

        t = raw["time"]
        if "t_final" not in t:
            raise ValidationError("missing value", "time.t_final")
        pic = raw.get("picard", {})
        periodic = raw.get("periodic_data", False)
        if not isinstance(periodic, bool):
            raise ValidationError("must be true or false", "periodic_data")
        initial = dict(raw["initial"])
        kind = initial.get("kind")
        if kind not in INITIAL_KINDS:
            raise ValidationError(f"unknown kind {kind!r}; valid: {', '.join(INITIAL_KINDS)}",
                                  "initial.kind")
        if kind == "plane_modulated":
            periodic = True
        solve_cfg = SolveConfig(
            t_final=t["t_final"],
            dt=t.get("dt"),
            scheme=raw.get("scheme", "strang_split"),
            snapshot_stride=t.get("snapshot_stride", 1),
            picard_tol=pic.get("tol"),
            picard_max_iters=pic.get("max_iters"),
            nonlinear=nl,
            periodic_data=periodic,
        )
        solve_cfg.resolve_steps(grid)

        out = raw.get("outputs", {})
        formats = out.get("formats", ["binary"])
        if not isinstance(formats, list) or any(f not in FORMATS for f in formats):
            raise ValidationError(f"formats must be a list drawn from {', '.join(FORMATS)}",
                                  "outputs.formats")
        directory = out.get("directory", "hnls_run")
        if not isinstance(directory, str) or not directory:
            raise ValidationError("must be a non-empty string", "outputs.directory")

        stab = {"perturbation": 1e-3, "alpha": 0.75, "eps": 0.5, "width": 1.0, "center": 0.0}
        stab.update(raw.get("stability", {}))
        weight = None
        if "weight" in raw:
            from hnls.weights import WeightSpec

            w = raw["weight"]
            weight = _keyed("weight", WeightSpec, w.get("alpha", 0.75), w.get("eps", 0.5),
                            w.get("truncation_r"))

        cfg = cls(raw, text, base_dir, grid, params, damping, solve_cfg, initial,
                  (base_dir / directory) if not Path(directory).is_absolute() else Path(directory),
                  tuple(formats), stab, weight)
        _check_initial(cfg.initial_field(), solve_cfg)
        return cfg

    def initial_field(self):
        spec = self.initial_spec
        x = self.grid.x
        L = self.grid.half_width

        def num(name, default):
            val = spec.get(name, default)
            if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
                raise ValidationError("must be a finite number", f"initial.{name}")
            return float(val)

        kind = spec["kind"]
        A = num("amplitude", 1.0)
        c = num("center", 0.0)
        if kind in ("gaussian", "two_bump"):
            w = num("width", 1.0)
            if w <= 0:
                raise ValidationError("must be > 0", "initial.width")
            vals = A * np.exp(-((x - c) / w) ** 2)
            if kind == "two_bump":
                vals = vals + A * np.exp(-((x + c) / w) ** 2)
        elif kind == "plane_modulated":
            k = spec.get("wavenumber", 1)
            if isinstance(k, bool) or not isinstance(k, int):
                raise ValidationError("must be an integer", "initial.wavenumber")
            vals = A * (1 + 0.5 * np.cos(np.pi * (x - c) / L)) * np.exp(1j * k * np.pi * x / L)
        else:
            path = spec.get("path")
            if not isinstance(path, str):
                raise ValidationError("file initial data needs a path", "initial.path")
            full = Path(path) if Path(path).is_absolute() else self.base_dir / path
            try:
                if full.suffix == ".npy":
                    vals = np.load(full)
                else:
                    from hnls.io import read_trajectory_binary

                    vals = read_trajectory_binary(full).states[0]
            except OSError as exc:
                raise ValidationError(f"cannot read {full}: {exc}", "initial.path") from None
            if np.shape(vals) != (self.grid.n_points,):
                raise ValidationError(
                    f"expected {self.grid.n_points} samples, found shape {np.shape(vals)}",
                    "initial.path",
                )
        return Field(np.asarray(vals, dtype=complex), self.grid)

    def with_value(self, dotted, value):
        """Copy of the raw config with one dotted key replaced (for sweeps)."""
        raw = json.loads(json.dumps(self.raw))
        parts = dotted.split(".")
        node = raw
        for part in parts[:-1]:
            if part not in _SECTIONS:
                raise ValidationError("unknown section", dotted)
            node = node.setdefault(part, {})
        node[parts[-1]] = value
        text = json.dumps(raw, indent=2, sort_keys=True)
        return ExperimentConfig._build(raw, text, self.base_dir)


__all__ = ["ExperimentConfig", "INITIAL_KINDS", "FORMATS"]
