"""Declarative scenarios: strict JSON configs in, CSV/JSON artifacts and a checklist out."""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np

from . import analysis as an
from . import kernels as kn
from . import spectral as sp
from .constants import DEFAULT_TOLERANCES
from .grid import (EnsembleSpec, EvolutionSpec, Grid, PointSource, SourceSpec,
                   build_member_states, build_source_state, make_grid, norm2, normalize)
from .output import write_csv, write_json


class ConfigError(ValueError):
    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field


# Every invariant a scenario reports, in report order.  A report carries each
# name exactly once.
CHECKLIST = {
    "free-gaussian": ("norm_conservation", "closed_form_agreement", "variance_spreading",
                      "center_drift"),
    "oracle-crosscheck": ("convolution_spectral_l2", "convolution_norm",
                          "closed_form_agreement", "semigroup"),
    "two-slit-pure": ("norm_conservation", "w_n_zero_integral", "w_n_bound", "w_n_negative",
                      "lemma_projection", "fringe_period"),
    "two-slit-mixed": ("mixed_norm", "mixed_linearity", "mixed_visibility"),
    "n-slit": ("norm_conservation", "w_n_zero_integral", "w_n_bound", "w_n_negative",
               "lemma_projection"),
    "diffusion-compare": ("continuation_residual", "diffusion_norm", "diffusion_variance",
                          "chapman_kolmogorov"),
    "tail-exponent": ("norm_conservation", "tail_window_decade", "tail_exponent"),
    "delta-limit": ("delta_monotone", "delta_floor"),
    "potential-well": ("norm_conservation", "ehrenfest_center", "strang_order"),
}
SCENARIOS = tuple(CHECKLIST)

_SECTIONS = {
    "free-gaussian": ("gaussian", "evolution"),
    "oracle-crosscheck": ("gaussian", "evolution"),
    "two-slit-pure": ("sources", "evolution"),
    "two-slit-mixed": ("ensemble", "evolution"),
    "n-slit": ("sources", "evolution"),
    "diffusion-compare": ("diffusion",),
    "tail-exponent": ("sources", "evolution", "tail"),
    "delta-limit": ("sources", "evolution", "delta"),
    "potential-well": ("gaussian", "evolution"),
}
_OPTIONAL = {"two-slit-pure": ("samples",), "n-slit": ("samples",)}

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}


def _obj(required, **props):
    return {"type": "object", "additionalProperties": False,
            "required": list(required), "properties": props}


_SOURCES = _obj(["points", "sigma_reg"], sigma_reg=_POS, points={
    "type": "array", "minItems": 1,
    "items": _obj(["x", "w0"], x=_NUM, w0={"type": "number", "minimum": 0}, alpha=_NUM)})

SCHEMA = _obj(
    ["scenario", "grid"],
    scenario={"enum": list(SCENARIOS)},
    description={"type": "string"},
    grid=_obj(["x_min", "x_max", "n"], x_min=_NUM, x_max=_NUM,
              n={"type": "integer", "minimum": 8}),
    sources=_SOURCES,
    ensemble={"type": "array", "minItems": 1,
              "items": _obj(["P", "sources"], P={"type": "number", "minimum": 0},
                            sources=_SOURCES)},
    evolution=_obj(["t_final"],
                   s={"type": "integer", "minimum": 2},
                   m0=_POS, t_final={"type": "number", "minimum": 0}, dt=_POS,
                   slices={"type": "array", "items": {"type": "number", "minimum": 0}},
                   potential=_obj(["kind", "omega"], kind={"enum": ["harmonic"]},
                                  omega=_POS, center=_NUM)),
    gaussian=_obj(["sigma0"], sigma0=_POS, x0=_NUM, p0=_NUM),
    diffusion=_obj(["k", "t"], k=_POS, t=_POS),
    tail=_obj(["x_lo", "x_hi"], x_lo=_POS, x_hi=_POS),
    delta=_obj(["family", "width"], family={"enum": ["gaussian", "bump"]}, width=_POS,
               levels={"type": "integer", "minimum": 2}),
    samples={"type": "integer", "minimum": 1},
    seed={"type": "integer", "minimum": 0},
    output_dir={"type": "string"},
    tolerances={"type": "object", "additionalProperties": False,
                "properties": {k: _NUM for k in DEFAULT_TOLERANCES}},
)


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    grid: Grid
    raw: dict
    tolerances: dict
    seed: int = 0
    sources: Optional[SourceSpec] = None
    ensemble: Optional[EnsembleSpec] = None
    evolution: Optional[EvolutionSpec] = None
    gaussian: Optional[dict] = None
    diffusion: Optional[dict] = None
    tail: Optional[dict] = None
    delta: Optional[dict] = None
    samples: Optional[int] = None
    output_dir: Optional[str] = None
    slices: tuple = ()


def _schema_error(err: jsonschema.ValidationError) -> ConfigError:
    where = "/".join(str(p) for p in err.absolute_path) or "<root>"
    if err.validator == "additionalProperties":
        extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
        return ConfigError(f"unknown key(s) {', '.join(map(repr, extra))}", where)
    return ConfigError(err.message, where)


def _source_spec(d: dict, grid: Grid, where: str) -> SourceSpec:
    try:
        spec = SourceSpec(tuple(PointSource(float(p["x"]), float(p["w0"]),
                                            float(p.get("alpha", 0.0))) for p in d["points"]),
                          float(d["sigma_reg"]))
        spec.validate(grid)
    except ValueError as exc:
        raise ConfigError(str(exc), where) from None
    return spec


def _potential(pot: dict, grid: Grid, m0: float) -> np.ndarray:
    c = float(pot.get("center", 0.0))
    return 0.5 * m0 * pot["omega"] ** 2 * (grid.x - c) ** 2


def config_from_dict(data: dict) -> ScenarioConfig:
    """Validate a decoded config; raises ConfigError naming the offending field."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        raise _schema_error(errors[0])
    name = data["scenario"]
    allowed = set(_SECTIONS[name]) | set(_OPTIONAL.get(name, ()))
    allowed |= {"scenario", "grid", "description", "seed", "output_dir", "tolerances"}
    for key in data:
        if key not in allowed:
            raise ConfigError(f"section not used by scenario {name!r}", key)
    for key in _SECTIONS[name]:
        if key not in data:
            raise ConfigError(f"required by scenario {name!r}", key)

    try:
        grid = make_grid(**data["grid"])
    except ValueError as exc:
        raise ConfigError(str(exc), "grid") from None
    kw = {"name": name, "grid": grid, "raw": data, "seed": int(data.get("seed", 0)),
          "tolerances": {**DEFAULT_TOLERANCES, **data.get("tolerances", {})},
          "samples": data.get("samples"), "output_dir": data.get("output_dir")}

    if "sources" in data:
        spec = _source_spec(data["sources"], grid, "sources")
        k = len(spec.sources)
        need = {"two-slit-pure": k == 2, "n-slit": k >= 2,
                "tail-exponent": k == 1, "delta-limit": k == 1}[name]
        if not need:
            raise ConfigError(f"wrong number of sources ({k}) for {name!r}", "sources/points")
        kw["sources"] = spec
    if "ensemble" in data:
        members = []
        for i, m in enumerate(data["ensemble"]):
            spec = _source_spec(m["sources"], grid, f"ensemble/{i}/sources")
            if len(spec.sources) != 1:
                raise ConfigError("each mixed member must be a single source",
                                  f"ensemble/{i}/sources/points")
            members.append((m["P"], spec))
        if len(members) != 2:
            raise ConfigError("two-slit-mixed needs exactly two members", "ensemble")
        try:
            kw["ensemble"] = EnsembleSpec(tuple(members))
        except ValueError as exc:
            raise ConfigError(str(exc), "ensemble") from None

    if "evolution" in data:
        ev = data["evolution"]
        m0 = float(ev.get("m0", 1.0))
        s = int(ev.get("s", 2))
        pot = ev.get("potential")
        if pot is not None and name != "potential-well":
            raise ConfigError("potentials are only used by 'potential-well'", "evolution/potential")
        if name == "potential-well" and (pot is None or "dt" not in ev):
            raise ConfigError("potential-well needs 'potential' and 'dt'", "evolution")
        if name in ("free-gaussian", "oracle-crosscheck", "potential-well", "two-slit-mixed") and s != 2:
            raise ConfigError(f"scenario {name!r} requires s = 2", "evolution/s")
        try:
            kw["evolution"] = EvolutionSpec(
                s, m0, float(ev["t_final"]), ev.get("dt"),
                None if pot is None else _potential(pot, grid, m0))
            if pot is not None:
                sp._step_count(kw["evolution"])
        except ValueError as exc:
            raise ConfigError(str(exc), "evolution") from None
        T = kw["evolution"].t_final
        if T <= 0 and name not in ("free-gaussian",):
            raise ConfigError("t_final must be positive for this scenario", "evolution/t_final")
        slices = tuple(float(t) for t in ev.get("slices", [T]))
        if any(t > T for t in slices):
            raise ConfigError("slice times must not exceed t_final", "evolution/slices")
        kw["slices"] = slices

    if "gaussian" in data:
        gs = {"sigma0": float(data["gaussian"]["sigma0"]),
              "x0": float(data["gaussian"].get("x0", 0.0)),
              "p0": float(data["gaussian"].get("p0", 0.0))}
        if not grid.contains(gs["x0"]):
            raise ConfigError("packet centre lies outside the grid", "gaussian/x0")
        if gs["sigma0"] < 2 * grid.dx:
            raise ConfigError("sigma0 below 2*dx is not resolvable", "gaussian/sigma0")
        kw["gaussian"] = gs
        if name == "oracle-crosscheck":
            ev = kw["evolution"]
            st = kn.gaussian_free_closed_form(gs["sigma0"], gs["x0"], gs["p0"], ev.m0, 0.0, grid)
            for t in (ev.t_final, 0.5 * ev.t_final):
                r = kn.resolution_ratio(st, ev.m0, t)
                if r > math.pi:
                    raise ConfigError(f"convolution kernel under-resolved at t={t} "
                                      f"(m0*R*dx/t={r:.3f} > pi)", "evolution/t_final")
    if "diffusion" in data:
        kw["diffusion"] = {"k": float(data["diffusion"]["k"]), "t": float(data["diffusion"]["t"])}
    if "tail" in data:
        lo, hi = float(data["tail"]["x_lo"]), float(data["tail"]["x_hi"])
        x0 = kw["sources"].sources[0].x
        if hi / lo < 10.0 * (1 - 1e-12):
            raise ConfigError("tail window must span at least one decade", "tail")
        if not (x0 + hi < grid.x[-1]):
            raise ConfigError("tail window extends past the grid", "tail/x_hi")
        if lo <= 3.0 * kw["sources"].sigma_reg:
            raise ConfigError("x_lo must exceed 3*sigma_reg", "tail/x_lo")
        kw["tail"] = {"x_lo": lo, "x_hi": hi}
    if "delta" in data:
        d = data["delta"]
        chi = an.TestFunction(d["family"], kw["sources"].sources[0].x, float(d["width"]))
        if (chi.center - chi.half_support < grid.x_min
                or chi.center + chi.half_support > grid.x[-1]):
            raise ConfigError("test-function support exceeds the grid", "delta/width")
        kw["delta"] = {"chi": chi, "levels": int(d.get("levels", 7))}
    return ScenarioConfig(**kw)


def parse_config(path) -> ScenarioConfig:
    """Read and validate a JSON scenario file."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError("top level must be a JSON object")
    return config_from_dict(data)


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    bound: float
    relation: str
    passed: bool
    note: str = ""

    def to_dict(self) -> dict:
        d = {"name": self.name, "value": self.value, "bound": self.bound,
             "relation": self.relation, "passed": self.passed}
        if self.note:
            d["note"] = self.note
        return d


_RELATIONS = {"<=": lambda v, b: v <= b, ">=": lambda v, b: v >= b, "<": lambda v, b: v < b}


@dataclass
class RunReport:
    scenario: dict
    checklist: list
    outputs: list
    info: dict = field(default_factory=dict)
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checklist)

    def to_dict(self, include_timing: bool = False) -> dict:
        d = {"scenario": self.scenario, "checklist": [c.to_dict() for c in self.checklist],
             "outputs": list(self.outputs), "info": self.info, "passed": self.passed}
        if include_timing:
            d["wall_time_s"] = self.wall_time
        return d


class _Checks:
    def __init__(self, name: str, tolerances: dict):
        self.name = name
        self.tol = tolerances
        self.entries = {}

    def add(self, key: str, value, relation: str = "<=", bound: Optional[float] = None, note=""):
        bound = self.tol[key] if bound is None else bound
        value = float(value)
        ok = bool(np.isfinite(value) and _RELATIONS[relation](value, bound))
        self.entries[key] = Check(key, value, float(bound), relation, ok, note)

    def fail(self, key: str, exc: Exception, relation: str = "<="):
        self.entries[key] = Check(key, float("nan"), float(self.tol[key]), relation, False,
                                  str(exc))

    def guard(self, key: str, fn, relation: str = "<="):
        """Evaluate ``fn``; a numerical refusal (ValueError) becomes a failed entry."""
        try:
            return fn()
        except ValueError as exc:
            self.fail(key, exc, relation)
            return None

    def ordered(self) -> list:
        table = CHECKLIST[self.name]
        extra = set(self.entries) - set(table)
        if extra:
            raise RuntimeError(f"checks {sorted(extra)} missing from the static table")
        return [self.entries.get(k) or Check(k, float("nan"), float(self.tol[k]), "<=", False,
                                             "not evaluated") for k in table]


def _rel_l2(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


def _gaussian_state(cfg: ScenarioConfig, t: float = 0.0):
    g = cfg.gaussian
    return kn.gaussian_free_closed_form(g["sigma0"], g["x0"], g["p0"], cfg.evolution.m0, t, cfg.grid)


def _write_slices(cfg, state0, out: Path, files: list, evolve_to) -> None:
    for i, t in enumerate(cfg.slices):
        st = evolve_to(state0, t)
        g = st.samples
        name = f"state_{i:03d}.csv"
        write_csv(out / name, [("x", "len", cfg.grid.x), ("w", "1/len", np.abs(g) ** 2),
                               ("re_g", "1/sqrt(len)", g.real), ("im_g", "1/sqrt(len)", g.imag)])
        files.append(name)


def _run_free_gaussian(cfg, out, chk, files, info):
    ev, gs = cfg.evolution, cfg.gaussian
    st0 = normalize(_gaussian_state(cfg))
    T = ev.t_final
    st = sp.evolve_spectral(st0, 2, ev.m0, T)
    exact = _gaussian_state(cfg, T)
    chk.add("norm_conservation", abs(norm2(st) - 1.0))
    chk.add("closed_form_agreement", _rel_l2(st.samples, exact.samples))
    mom = an.moments(an.density(st))
    var0 = 0.5 * gs["sigma0"] ** 2
    expect_var = var0 * (1.0 + T ** 2 / (ev.m0 ** 2 * gs["sigma0"] ** 4))
    chk.add("variance_spreading", abs(mom.variance - expect_var) / expect_var)
    chk.add("center_drift", abs(mom.mean - (gs["x0"] + gs["p0"] * T / ev.m0)))
    info["moments"] = mom.to_dict()
    info["expected_variance"] = expect_var
    _write_slices(cfg, st0, out, files, lambda s, t: sp.evolve_spectral(s, 2, ev.m0, t))
    write_json(out / "moments.json", info["moments"])
    files.append("moments.json")


def _run_oracle(cfg, out, chk, files, info):
    ev = cfg.evolution
    T = ev.t_final
    st0 = normalize(_gaussian_state(cfg))
    spec = sp.evolve_spectral(st0, 2, ev.m0, T)
    chk.add("closed_form_agreement", _rel_l2(spec.samples, _gaussian_state(cfg, T).samples))
    try:
        conv = kn.evolve_convolution(st0, ev.m0, T)
        half = kn.evolve_convolution(kn.evolve_convolution(st0, ev.m0, 0.5 * T), ev.m0, 0.5 * T)
    except kn.ResolutionError as exc:
        for key in ("convolution_spectral_l2", "convolution_norm", "semigroup"):
            chk.fail(key, exc)
        return
    chk.add("convolution_spectral_l2", _rel_l2(conv.samples, spec.samples))
    chk.add("convolution_norm", abs(norm2(conv) - 1.0))
    chk.add("semigroup", _rel_l2(half.samples, conv.samples))
    write_csv(out / "crosscheck.csv", [
        ("x", "len", cfg.grid.x),
        ("re_conv", "1/sqrt(len)", conv.samples.real),
        ("im_conv", "1/sqrt(len)", conv.samples.imag),
        ("re_spec", "1/sqrt(len)", spec.samples.real),
        ("im_spec", "1/sqrt(len)", spec.samples.imag)])
    files.append("crosscheck.csv")


def _pattern_columns(grid, dec):
    return [("x", "len", grid.x), ("w_s", "1/len", dec.w_s.samples),
            ("w_m", "1/len", dec.w_m.samples), ("w_n", "1/len", dec.w_n.samples)]


def _decompose(cfg):
    ev = cfg.evolution
    pure = sp.evolve(build_source_state(cfg.grid, cfg.sources), ev)
    members = [sp.evolve(m, ev) for m in build_member_states(cfg.grid, cfg.sources)]
    return pure, an.decompose(pure, members)


def _lemma_checks(chk, pure, dec):
    chk.add("norm_conservation", abs(norm2(pure) - 1.0))
    chk.add("w_n_zero_integral", abs(dec.w_n_integral))
    chk.add("w_n_bound", dec.bound_excess)
    chk.add("w_n_negative", dec.w_n_min, "<", -chk.tol["w_n_negative"])
    chk.add("lemma_projection", dec.projection_coeff)


def _born_samples(cfg, pure, out, files):
    if cfg.samples:
        pos = an.sample_positions(an.density(pure), cfg.samples, cfg.seed)
        write_csv(out / "samples.csv", [("x", "len", pos)])
        files.append("samples.csv")


def _run_two_slit_pure(cfg, out, chk, files, info):
    pure, dec = _decompose(cfg)
    _lemma_checks(chk, pure, dec)
    a, b = cfg.sources.sources
    L = abs(b.x - a.x)
    period = an.fringe_spacing(cfg.evolution.m0, L, cfg.evolution.t_final)
    centre = 0.5 * (a.x + b.x)
    measured = chk.guard("fringe_period", lambda: an.measure_fringe_period(
        dec.w_s, centre, 3.0 * period))
    if measured is not None:
        chk.add("fringe_period", abs(measured - period) / period)
    d = dec.to_dict()
    d.update(fringe_period_predicted=period, fringe_period_measured=measured,
             visibility_center=an.fringe_visibility(dec.w_s, centre, 0.5 * period))
    info["decomposition"] = d
    write_csv(out / "pattern.csv", _pattern_columns(cfg.grid, dec))
    write_json(out / "decomposition.json", d)
    files += ["pattern.csv", "decomposition.json"]
    _born_samples(cfg, pure, out, files)


def _run_n_slit(cfg, out, chk, files, info):
    pure, dec = _decompose(cfg)
    _lemma_checks(chk, pure, dec)
    info["decomposition"] = dec.to_dict()
    write_csv(out / "pattern.csv", _pattern_columns(cfg.grid, dec))
    write_json(out / "decomposition.json", info["decomposition"])
    files += ["pattern.csv", "decomposition.json"]
    _born_samples(cfg, pure, out, files)


def _run_two_slit_mixed(cfg, out, chk, files, info):
    ev, grid = cfg.evolution, cfg.grid
    wm = an.mixed_density(grid, cfg.ensemble, ev)
    parts = [(P, an.density(sp.evolve(build_source_state(grid, spec), ev)).samples)
             for P, spec in cfg.ensemble.members]
    manual = np.zeros(grid.n)
    for P, w in parts:
        manual = manual + P * w
    chk.add("mixed_norm", abs(wm.norm - 1.0))
    chk.add("mixed_linearity", float(np.max(np.abs(wm.samples - manual))))
    (P1, s1), (P2, s2) = cfg.ensemble.members
    a, b = s1.sources[0], s2.sources[0]
    period = an.fringe_spacing(ev.m0, abs(b.x - a.x), ev.t_final)
    centre = 0.5 * (a.x + b.x)
    chk.add("mixed_visibility", an.fringe_visibility(wm, centre, 0.5 * period))
    pure_spec = SourceSpec((PointSource(a.x, P1, a.alpha), PointSource(b.x, P2, b.alpha)),
                           s1.sigma_reg)
    ws = an.density(sp.evolve(build_source_state(grid, pure_spec), ev))
    wn = ws.samples - wm.samples
    info["mixed"] = {
        "visibility_mixed": chk.entries["mixed_visibility"].value,
        "visibility_pure": an.fringe_visibility(ws, centre, 0.5 * period),
        "overlap_R_w": an.overlap_measure(an.Density(grid, parts[0][1]),
                                          an.Density(grid, parts[1][1])),
        "fringe_period": period,
    }
    write_csv(out / "pattern.csv", [("x", "len", grid.x), ("w_s", "1/len", ws.samples),
                                    ("w_m", "1/len", wm.samples), ("w_n", "1/len", wn)])
    write_json(out / "mixed.json", info["mixed"])
    files += ["pattern.csv", "mixed.json"]


def _run_diffusion(cfg, out, chk, files, info):
    k, t = cfg.diffusion["k"], cfg.diffusion["t"]
    grid = cfg.grid
    x = grid.x
    w = kn.diffusion_kernel(k, x, t)
    chk.add("continuation_residual", kn.diffusion_correspondence_residual(k, t, grid))
    chk.add("diffusion_norm", abs(np.sum(w) * grid.dx - 1.0))
    var = float(np.sum(x * x * w) * grid.dx)
    chk.add("diffusion_variance", abs(var - 2 * k * k * t) / (2 * k * k * t))
    chk.add("chapman_kolmogorov", kn.diffusion_semigroup_residual(k, 0.5 * t, 0.5 * t, grid))
    write_csv(out / "diffusion.csv", [("x", "len", x), ("w_D", "1/len", w)])
    files.append("diffusion.csv")


def _run_tail(cfg, out, chk, files, info):
    ev = cfg.evolution
    spec = cfg.sources
    x0 = spec.sources[0].x
    st = sp.evolve_spectral(build_source_state(cfg.grid, spec), ev.s, ev.m0, ev.t_final)
    chk.add("norm_conservation", abs(norm2(st) - 1.0))
    lo, hi = cfg.tail["x_lo"], cfg.tail["x_hi"]
    chk.add("tail_window_decade", hi / lo, ">=")
    fit = chk.guard("tail_exponent", lambda: an.fit_tail_exponent(
        st, (lo, hi), packet_scale=spec.sigma_reg, origin=x0))
    predicted = an.predicted_tail_exponent(ev.s)
    if fit is not None:
        chk.add("tail_exponent", abs(fit.exponent - predicted))
        d = fit.to_dict()
        d["predicted"] = predicted
        info["tail"] = d
        x = cfg.grid.x - x0
        m = (x >= lo) & (x <= hi)
        lx = np.log(x[m])
        la = np.log(np.abs(st.samples[m]))
        fitted = fit.exponent * lx + fit.intercept
        write_csv(out / "tail.csv", [("log_abs_x", "log len", lx), ("log_abs_g", "log amp", la),
                                     ("envelope", "log amp", fitted)])
        write_json(out / "tailfit.json", d)
        files += ["tail.csv", "tailfit.json"]


def delta_limit_errors(grid, spec, chi, s, m0, times):
    """``|I(chi, t) - chi(x0)|`` for the mass-normalized evolved source, with the t = 0 floor."""
    st0 = build_source_state(grid, spec)
    x0 = spec.sources[0].x
    target = float(chi(np.array([x0]))[0])
    floor = abs(an.delta_functional(st0, chi, mass_normalize=True) - target)
    plan = sp.SpectralPlan(grid, s, m0)
    values = [an.delta_functional(sp.evolve_spectral(st0, s, m0, t, plan), chi, mass_normalize=True)
              for t in times]
    return np.abs(np.array(values) - target), floor, np.array(values)


def _run_delta(cfg, out, chk, files, info):
    ev = cfg.evolution
    chi = cfg.delta["chi"]
    times = ev.t_final * 2.0 ** -np.arange(cfg.delta["levels"])
    errs, floor, values = delta_limit_errors(cfg.grid, cfg.sources, chi, ev.s, ev.m0, times)
    # times decrease along the sequence, so errors must strictly decrease and stay above the floor
    violations = int(np.sum(np.diff(errs) >= 0)) + int(np.sum(errs < floor * (1 - 1e-9)))
    chk.add("delta_monotone", violations)
    chk.add("delta_floor", errs[-1] / floor if floor > 0 else float("inf"))
    d = {"times": times, "errors": errs, "floor": floor, "family": chi.family,
         "width": chi.width}
    if chi.family == "gaussian" and ev.s == 2 and chi.center == cfg.sources.sources[0].x:
        a = cfg.sources.sigma_reg ** 2 + 1j * times / ev.m0
        exact = np.sqrt(chi.width ** 2 / (chi.width ** 2 + a))
        d["closed_form_max_error"] = float(np.max(np.abs(values - exact)))
    info["delta"] = d
    write_csv(out / "delta.csv", [("t", "time", times), ("abs_err", "1", errs)])
    write_json(out / "delta.json", d)
    files += ["delta.csv", "delta.json"]


def harmonic_center(x0, p0, m0, omega, c, t):
    return c + (x0 - c) * np.cos(omega * t) + p0 / (m0 * omega) * np.sin(omega * t)


def _run_potential(cfg, out, chk, files, info):
    ev, gs = cfg.evolution, cfg.gaussian
    pot = cfg.raw["evolution"]["potential"]
    omega, c = pot["omega"], pot.get("center", 0.0)
    st0 = normalize(_gaussian_state(cfg))
    x = cfg.grid.x
    ts, xs = [0.0], [float(np.sum(x * np.abs(st0.samples) ** 2) * cfg.grid.dx)]
    final = st0
    for final in sp.iter_split_step(st0, ev):
        ts.append(final.t)
        xs.append(float(np.sum(x * np.abs(final.samples) ** 2) * cfg.grid.dx))
    ts, xs = np.array(ts), np.array(xs)
    expect = harmonic_center(gs["x0"], gs["p0"], ev.m0, omega, c, ts)
    chk.add("norm_conservation", abs(norm2(final) - 1.0))
    chk.add("ehrenfest_center", float(np.max(np.abs(xs - expect))))
    order = strang_order(st0, ev)
    chk.add("strang_order", abs(order["ratio"] - 4.0))
    info["strang"] = order
    write_csv(out / "trajectory.csv", [("t", "time", ts), ("mean_x", "len", xs),
                                       ("classical_x", "len", expect)])
    write_json(out / "convergence.json", order)
    files += ["trajectory.csv", "convergence.json"]


def strang_order(state, ev: EvolutionSpec) -> dict:
    """Errors at dt and dt/2 against a dt/8 reference, and their ratio (about 4 for order 2)."""
    def run(dt):
        return sp.evolve_split_step(state, EvolutionSpec(ev.s, ev.m0, ev.t_final, dt, ev.potential))
    ref = run(ev.dt / 8).samples
    e1 = _rel_l2(run(ev.dt).samples, ref)
    e2 = _rel_l2(run(ev.dt / 2).samples, ref)
    return {"dt": ev.dt, "error_dt": e1, "error_half_dt": e2, "ratio": e1 / e2}


_RUNNERS = {
    "free-gaussian": _run_free_gaussian,
    "oracle-crosscheck": _run_oracle,
    "two-slit-pure": _run_two_slit_pure,
    "two-slit-mixed": _run_two_slit_mixed,
    "n-slit": _run_n_slit,
    "diffusion-compare": _run_diffusion,
    "tail-exponent": _run_tail,
    "delta-limit": _run_delta,
    "potential-well": _run_potential,
}


def run_scenario(cfg: ScenarioConfig, output_dir, seed: Optional[int] = None) -> RunReport:
    """Execute ``cfg``, writing artifacts and ``report.json`` under ``output_dir``."""
    if seed is not None:
        cfg = ScenarioConfig(**{**cfg.__dict__, "seed": int(seed)})
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    chk = _Checks(cfg.name, cfg.tolerances)
    files, info = [], {}
    _RUNNERS[cfg.name](cfg, out, chk, files, info)
    report = RunReport({**cfg.raw, "seed": cfg.seed}, chk.ordered(), files + ["report.json"], info)
    report.wall_time = time.perf_counter() - start
    write_json(out / "report.json", report.to_dict())
    return report
