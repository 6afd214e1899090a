"""Reading and writing model files.

A model file is an INI style document with four sections::

    [model]
    dimension = 1

    [drift]
    type = linear            # zero | power_radial | linear
    matrix = -1.0            # rows separated by ';', entries by ','

    [kernel]
    type = state_independent_stable
    alpha = 1.5
    scale = 1.0

    [lyapunov]
    p = 0.5
    lambda = 0.5

Drift keys: ``power_radial`` takes ``coefficient``, ``exponent`` and
``orientation`` (``outward`` or ``inward``); ``linear`` takes ``matrix``.

Kernel keys by type:

* ``none``: no keys.
* ``power_law_stable``: ``beta``, ``alpha``.
* ``state_independent_stable``: ``alpha``, ``scale`` (default 1).
* ``bounded_symmetric_1d``: ``shape`` (``uniform``, ``triangular`` or
  ``epanechnikov``), ``support`` (default 1), ``total_mass`` (default 2).
* ``cone``: ``beta``, ``alpha``, ``axis`` (``inward`` or ``outward``),
  ``half_angle`` (radians), ``inside_weight``, ``outside_weight`` and
  ``radius`` (``inf`` allowed).

Every kernel section also accepts ``factor`` (default 1), a positive
multiplier applied to the whole kernel.  Unknown keys are rejected.
"""

from __future__ import annotations

import configparser
import math
from pathlib import Path

from .model import (
    BoundedSymmetric1D,
    Cone,
    Kernel,
    LinearDrift,
    LyapunovParams,
    ModelError,
    ModelSpec,
    NoJumps,
    PowerLawStable,
    PowerRadialDrift,
    ScaledKernel,
    StateIndependentStable,
    ZeroDrift,
)

__all__ = ["load_model", "loads_model", "dumps_model", "dump_model", "bundled_model_path", "BUNDLED_MODELS"]

BUNDLED_MODELS = (
    "example1",
    "example2_a0.9",
    "example2_a1.0",
    "example2_a1.5",
    "stable_ou",
    "cone_inward",
)

_DRIFT_KEYS = {
    "zero": (),
    "power_radial": ("coefficient", "exponent", "orientation"),
    "linear": ("matrix",),
}

_KERNEL_KEYS = {
    "none": (),
    "power_law_stable": ("beta", "alpha"),
    "state_independent_stable": ("alpha", "scale"),
    "bounded_symmetric_1d": ("shape", "support", "total_mass"),
    "cone": ("beta", "alpha", "axis", "half_angle", "inside_weight", "outside_weight", "radius"),
}

_OPTIONAL = {
    "scale": "1.0",
    "shape": "uniform",
    "support": "1.0",
    "total_mass": "2.0",
    "axis": "inward",
    "inside_weight": "1.0",
    "outside_weight": "0.0",
    "radius": "inf",
    "orientation": "outward",
}


def bundled_model_path(name: str) -> Path:
    """Path of a model file shipped with the package."""
    path = Path(__file__).with_name("models") / f"{name}.model"
    if not path.is_file():
        raise ModelError(f"no bundled model named {name!r}")
    return path


def _float(section: str, key: str, text: str) -> float:
    try:
        return float(text)
    except ValueError as exc:
        raise ModelError(f"[{section}] {key} = {text!r} is not a number") from exc


def _get(sec, name: str, key: str) -> str:
    if key in sec:
        return sec[key].strip()
    if key in _OPTIONAL:
        return _OPTIONAL[key]
    raise ModelError(f"[{name}] is missing the key {key!r}")


def _check_keys(sec, name: str, allowed) -> None:
    extra = set(sec.keys()) - set(allowed)
    if extra:
        raise ModelError(f"[{name}] has unknown keys: {', '.join(sorted(extra))}")


def _section(cp, name: str):
    if not cp.has_section(name):
        raise ModelError(f"model file has no [{name}] section")
    return cp[name]


def _parse_matrix(text: str) -> tuple:
    rows = [r for r in text.split(";") if r.strip()]
    if not rows:
        raise ModelError("[drift] matrix is empty")
    return tuple(tuple(_float("drift", "matrix", v) for v in r.split(",")) for r in rows)


def _parse_drift(sec):
    kind = _get(sec, "drift", "type")
    if kind not in _DRIFT_KEYS:
        raise ModelError(f"unknown drift type {kind!r}")
    _check_keys(sec, "drift", ("type",) + _DRIFT_KEYS[kind])
    if kind == "zero":
        return ZeroDrift()
    if kind == "linear":
        return LinearDrift(_parse_matrix(_get(sec, "drift", "matrix")))
    return PowerRadialDrift(
        _float("drift", "coefficient", _get(sec, "drift", "coefficient")),
        _float("drift", "exponent", _get(sec, "drift", "exponent")),
        _get(sec, "drift", "orientation"),
    )


def _parse_kernel(sec) -> Kernel:
    kind = _get(sec, "kernel", "type")
    if kind not in _KERNEL_KEYS:
        raise ModelError(f"unknown kernel type {kind!r}")
    _check_keys(sec, "kernel", ("type", "factor") + _KERNEL_KEYS[kind])

    def num(key):
        return _float("kernel", key, _get(sec, "kernel", key))

    if kind == "none":
        base: Kernel = NoJumps()
    elif kind == "power_law_stable":
        base = PowerLawStable(num("beta"), num("alpha"))
    elif kind == "state_independent_stable":
        base = StateIndependentStable(num("alpha"), num("scale"))
    elif kind == "bounded_symmetric_1d":
        base = BoundedSymmetric1D(_get(sec, "kernel", "shape"), num("support"), num("total_mass"))
    else:
        base = Cone(
            num("beta"),
            num("alpha"),
            _get(sec, "kernel", "axis"),
            num("half_angle"),
            num("inside_weight"),
            num("outside_weight"),
            num("radius"),
        )
    if "factor" in sec:
        factor = _float("kernel", "factor", sec["factor"])
        if factor != 1.0:
            return ScaledKernel(base, factor)
    return base


def loads_model(text: str) -> tuple[ModelSpec, LyapunovParams]:
    """Parse model file text into ``(model, lyapunov parameters)``."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ModelError(f"malformed model file: {exc}") from exc
    extra = set(cp.sections()) - {"model", "drift", "kernel", "lyapunov"}
    if extra:
        raise ModelError(f"unknown sections: {', '.join(sorted(extra))}")
    msec = _section(cp, "model")
    _check_keys(msec, "model", ("dimension",))
    dtext = _get(msec, "model", "dimension")
    try:
        d = int(dtext)
    except ValueError as exc:
        raise ModelError(f"[model] dimension = {dtext!r} is not an integer") from exc
    drift = _parse_drift(_section(cp, "drift"))
    kernel = _parse_kernel(_section(cp, "kernel"))
    lsec = _section(cp, "lyapunov")
    _check_keys(lsec, "lyapunov", ("p", "lambda"))
    lyap = LyapunovParams(
        _float("lyapunov", "p", _get(lsec, "lyapunov", "p")),
        _float("lyapunov", "lambda", _get(lsec, "lyapunov", "lambda")),
    )
    return ModelSpec(d, drift, kernel), lyap


def load_model(path) -> tuple[ModelSpec, LyapunovParams]:
    """Read a model file from disk."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ModelError(f"cannot read model file {path}: {exc}") from exc
    return loads_model(text)


def _r(v: float) -> str:
    return repr(float(v)) if math.isfinite(v) else ("inf" if v > 0 else "-inf")


def _drift_lines(drift) -> list[str]:
    if isinstance(drift, ZeroDrift):
        return ["type = zero"]
    if isinstance(drift, LinearDrift):
        rows = "; ".join(", ".join(_r(v) for v in row) for row in drift.matrix)
        return ["type = linear", f"matrix = {rows}"]
    if isinstance(drift, PowerRadialDrift):
        return [
            "type = power_radial",
            f"coefficient = {_r(drift.coefficient)}",
            f"exponent = {_r(drift.exponent)}",
            f"orientation = {drift.orientation}",
        ]
    raise ModelError(f"{type(drift).__name__} cannot be written to a model file")


def _kernel_lines(kernel: Kernel) -> list[str]:
    factor = 1.0
    if isinstance(kernel, ScaledKernel):
        factor, kernel = kernel.factor, kernel.base
    if isinstance(kernel, NoJumps):
        out = ["type = none"]
    elif isinstance(kernel, PowerLawStable):
        out = ["type = power_law_stable", f"beta = {_r(kernel.beta)}", f"alpha = {_r(kernel.alpha)}"]
    elif isinstance(kernel, StateIndependentStable):
        out = ["type = state_independent_stable", f"alpha = {_r(kernel.alpha)}", f"scale = {_r(kernel.scale)}"]
    elif isinstance(kernel, BoundedSymmetric1D) and isinstance(kernel.shape, str):
        out = [
            "type = bounded_symmetric_1d",
            f"shape = {kernel.shape}",
            f"support = {_r(kernel.support)}",
            f"total_mass = {_r(kernel.total_mass)}",
        ]
    elif isinstance(kernel, Cone):
        out = [
            "type = cone",
            f"beta = {_r(kernel.beta)}",
            f"alpha = {_r(kernel.alpha)}",
            f"axis = {kernel.axis}",
            f"half_angle = {_r(kernel.half_angle)}",
            f"inside_weight = {_r(kernel.inside_weight)}",
            f"outside_weight = {_r(kernel.outside_weight)}",
            f"radius = {_r(kernel.radius)}",
        ]
    else:
        raise ModelError(f"{type(kernel).__name__} cannot be written to a model file")
    if factor != 1.0:
        out.append(f"factor = {_r(factor)}")
    return out


def dumps_model(model: ModelSpec, lyap: LyapunovParams) -> str:
    """Canonical model file text; ``loads_model`` inverts it exactly."""
    lines = ["[model]", f"dimension = {model.dimension}", "", "[drift]"]
    lines += _drift_lines(model.drift)
    lines += ["", "[kernel]"]
    lines += _kernel_lines(model.kernel)
    lines += ["", "[lyapunov]", f"p = {_r(lyap.p)}", f"lambda = {_r(lyap.lam)}", ""]
    return "\n".join(lines)


def dump_model(model: ModelSpec, lyap: LyapunovParams, path) -> None:
    """Write the canonical model file to ``path``."""
    Path(path).write_text(dumps_model(model, lyap))
