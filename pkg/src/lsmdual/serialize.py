"""Structured-text (YAML) serialization of models, kernels, and configurations.

One document format covers every model family; kernels are either named
presets ("pair", "ring:n", "complete:n") or explicit weight lists. Rates may
be written as ints, floats, or strings like "1/3" — strings and decimals
promote exactly in rational mode.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Optional, Union

import yaml

from .kernels import Kernel, kernel_from_preset, make_kernel, raw_kernel
from .models import (
    BpsParams,
    Config,
    CvpParams,
    GeneralLsmRates,
    JumpModel,
    LsmRates,
    NoiseConvention,
    RwParams,
    SrwParams,
    SsmParams,
    Variant,
)
from .numeric import Scalar


def _num(v) -> Scalar:
    if isinstance(v, str):
        return Fraction(v)
    if isinstance(v, bool):
        raise ValueError("booleans are not rates")
    return v


def _num_out(v) -> Union[int, float, str]:
    if isinstance(v, Fraction):
        return int(v) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    return v


def model_to_dict(model: Union[JumpModel, SsmParams, SrwParams]) -> dict:
    if isinstance(model, SsmParams):
        return {"family": "ssm", "r": model.r, "s": model.s, "m": model.m}
    if isinstance(model, SrwParams):
        return {
            "family": "srw", "alpha": model.alpha, "beta": model.beta,
            "gamma": model.gamma, "noise_convention": model.noise_convention.value,
        }
    p = model.params
    if model.kind == "lsm":
        if isinstance(p, GeneralLsmRates):
            out = {
                "family": "general_lsm", "n_sites": p.n_sites,
                **{k: [[_num_out(v) for v in row] for row in getattr(p, k)] for k in "abcde"},
            }
            if p.formal:
                out["formal"] = True
            return out
        out = {"family": "lsm", **{k: _num_out(getattr(p, k)) for k in "abcde"}}
        if p.formal:
            out["formal"] = True
        return out
    if model.kind == "cvp":
        return {"family": "cvp", **{k: _num_out(getattr(p, k)) for k in "rsm"}}
    if model.kind == "rw":
        return {"family": "rw", **{k: _num_out(getattr(p, k)) for k in ("eps", "rho", "beta", "delta")}}
    if model.kind == "bps":
        return {"family": "bps", **{k: _num_out(getattr(p, k)) for k in "abcd"}}
    raise ValueError(f"unknown model kind {model.kind}")


def model_from_dict(d: dict) -> Union[JumpModel, SsmParams, SrwParams]:
    d = dict(d)
    family = d.pop("family", None)
    if family is None:
        raise ValueError("model document needs a 'family' field")
    if family == "lsm":
        formal = bool(d.pop("formal", False))
        return JumpModel("lsm", LsmRates(*(_num(d[k]) for k in "abcde"), formal=formal))
    if family == "general_lsm":
        formal = bool(d.pop("formal", False))
        n = int(d.pop("n_sites"))
        maps = {
            k: tuple(tuple(_num(v) for v in row) for row in d[k]) for k in "abcde"
        }
        return JumpModel("lsm", GeneralLsmRates(n, maps["a"], maps["b"], maps["c"],
                                                maps["d"], maps["e"], formal=formal))
    if family == "cvp":
        return JumpModel("cvp", CvpParams(*(_num(d[k]) for k in "rsm")))
    if family == "rw":
        return JumpModel("rw", RwParams(*(_num(d[k]) for k in ("eps", "rho", "beta", "delta"))))
    if family == "bps":
        return JumpModel("bps", BpsParams(*(_num(d[k]) for k in "abcd")))
    if family == "ssm":
        return SsmParams(*(float(_num(d[k])) for k in "rsm"))
    if family == "srw":
        conv = NoiseConvention(d.get("noise_convention", "sqrt_two_alpha"))
        return SrwParams(*(float(_num(d[k])) for k in ("alpha", "beta", "gamma")), conv)
    raise ValueError(f"unknown model family {family!r}")


def kernel_to_dict(q: Kernel) -> dict:
    return {
        "n_sites": q.n_sites,
        "weights": [[i, j, _num_out(w)] for i, j, w in q.pairs()],
        "raw": not q.unit_rows,
    }


def kernel_from_spec(spec: Union[str, dict, Kernel]) -> Kernel:
    if isinstance(spec, Kernel):
        return spec
    if isinstance(spec, str):
        return kernel_from_preset(spec)
    n = int(spec["n_sites"])
    weights = {(int(i), int(j)): _num(w) for i, j, w in spec["weights"]}
    if spec.get("raw", False):
        return raw_kernel(n, weights)
    return make_kernel(n, weights)


def config_from_list(values, variant: Variant) -> Config:
    if variant is Variant.SPIN:
        return Config.spin(values)
    if variant is Variant.COUNT:
        return Config.count(values)
    if variant is Variant.UNIT_REAL:
        return Config.unit_real(values)
    return Config.nonneg_real(values)


def dump_yaml(obj: dict) -> str:
    return yaml.safe_dump(obj, sort_keys=True, default_flow_style=None)


def load_yaml(text: str) -> dict:
    out = yaml.safe_load(text)
    if not isinstance(out, dict):
        raise ValueError("document must be a key-value mapping")
    return out
