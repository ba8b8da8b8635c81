"""Flat parameter files, the declared parameter space, validation into typed
configs, and the space export consumed by external configuration tools.

Every parameter is a ``section.name`` key; conditions are in CNF (a
conjunction of disjunctions over simple clauses) so they both evaluate
cheaply and print cleanly in the exported space.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .cmaes import CmaParams
from .core import ParseError
from .de import DeParams
from .executor import (AlgorithmConfig, ExecutionConfig, PopulationSettings)
from .localsearch import LsParams
from .pso import PsoParams


class DuplicateKey(ParseError):
    pass


# ---------------------------------------------------------------------------
# schema
# ---------------------------------------------------------------------------

# clause ops: ==, !=, in, contains (token membership in a comma list)
Clause = tuple[str, str, tuple[str, ...]]


@dataclass(frozen=True)
class ParameterSpec:
    name: str
    kind: str                      # categorical | integer | real | boolean | string
    domain: tuple = ()             # (lo, hi) for numerics, value tuple for categoricals
    condition: tuple[tuple[Clause, ...], ...] = ()   # CNF: AND of OR-groups
    default: str | None = None
    lo_open: bool = False
    hi_open: bool = False

    def domain_str(self) -> str:
        if self.kind in ("integer", "real"):
            lo = "(" if self.lo_open else "["
            hi = ")" if self.hi_open else "]"
            return f"{lo}{self.domain[0]}, {self.domain[1]}{hi}"
        if self.kind == "categorical":
            return "(" + ", ".join(self.domain) + ")"
        if self.kind == "boolean":
            return "(true, false)"
        return "(text)"

    def condition_str(self) -> str:
        groups = []
        for group in self.condition:
            parts = [f"{p} {op} {','.join(vals)}" for p, op, vals in group]
            groups.append(" || ".join(parts))
        return " && ".join(groups)


def _clause_holds(clause: Clause, values: dict[str, str]) -> bool:
    param, op, wanted = clause
    actual = values.get(param)
    if actual is None:
        return False
    if op == "==":
        return actual == wanted[0]
    if op == "!=":
        return actual != wanted[0]
    if op == "in":
        return actual in wanted
    if op == "contains":
        tokens = [t.strip() for t in actual.split(",")]
        return any(w in tokens for w in wanted)
    raise ValueError(f"unknown condition op {op!r}")


def condition_active(spec: ParameterSpec, values: dict[str, str]) -> bool:
    return all(any(_clause_holds(c, values) for c in group)
               for group in spec.condition)


def _cat(name, values, default, cond=()):
    return ParameterSpec(name, "categorical", tuple(values), cond, default)


def _real(name, lo, hi, default, cond=(), lo_open=False, hi_open=False):
    return ParameterSpec(name, "real", (lo, hi), cond, default,
                         lo_open=lo_open, hi_open=hi_open)


def _int(name, lo, hi, default, cond=()):
    return ParameterSpec(name, "integer", (lo, hi), cond, default)


def _bool(name, default, cond=()):
    return ParameterSpec(name, "boolean", (), cond, default)


_HAS_PSO = ((("exec.order", "contains", ("pso",)),),)
_HAS_DE = ((("exec.order", "contains", ("de",)),),)
_HAS_CMAES = ((("exec.order", "contains", ("cmaes",)),),)
_HAS_SWARM = ((("exec.order", "contains", ("pso", "de")),),)
_LS_ON = ((("ls.algo", "!=", ("none",)),),)
_LS_MTSLS = ((("ls.algo", "==", ("mtsls",)),),)
_LS_CMAES = ((("ls.algo", "==", ("cmaes",)),),)


def _with(base, *extra):
    return tuple(base) + tuple(extra)


PARAMETER_SPACE: tuple[ParameterSpec, ...] = (
    _cat("exec.mode", ("component_based", "probabilistic", "multiple_phases"),
         "component_based"),
    ParameterSpec("exec.order", "string", (), (), "pso"),
    _real("exec.pr", 0.0, 1.0, None,
          ((("exec.mode", "==", ("probabilistic",)),),)),
    _cat("exec.gate_dist", ("uniform", "normal", "levy"), None,
         ((("exec.mode", "==", ("probabilistic",)),),)),
    _real("exec.par_std", 0.0, 10.0, None,
          ((("exec.gate_dist", "in", ("normal", "levy")),),), lo_open=True),
    ParameterSpec("exec.phases", "string", (),
                  ((("exec.mode", "==", ("multiple_phases",)),),), None),
    _cat("exec.reinit", ("none", "change", "similarity"), "none"),

    _int("pop.size", 4, 10000, "40", _HAS_SWARM),
    _cat("pop.mode", ("constant", "incremental", "time_varying"), "constant",
         _HAS_SWARM),
    _int("pop.min", 4, 10000, None,
         _with(_HAS_SWARM, (("pop.mode", "!=", ("constant",)),))),
    _int("pop.max", 4, 10000, None,
         _with(_HAS_SWARM, (("pop.mode", "!=", ("constant",)),))),
    _int("pop.interval", 1, 10000, None,
         _with(_HAS_SWARM, (("pop.mode", "!=", ("constant",)),))),

    _cat("pso.omega1_mode",
         ("constant", "linear_decreasing", "linear_increasing", "random"),
         "constant", _HAS_PSO),
    _real("pso.omega1", 0.0, 1.0, "0.729",
          _with(_HAS_PSO, (("pso.omega1_mode", "==", ("constant",)),))),
    _real("pso.omega1_min", 0.0, 1.0, "0.4",
          _with(_HAS_PSO, (("pso.omega1_mode", "!=", ("constant",)),))),
    _real("pso.omega1_max", 0.0, 1.0, "0.9",
          _with(_HAS_PSO, (("pso.omega1_mode", "!=", ("constant",)),))),
    _cat("pso.omega2_mode", ("equal_to_omega1", "constant", "random"),
         "equal_to_omega1", _HAS_PSO),
    _real("pso.omega2", 0.0, 1.0, None,
          _with(_HAS_PSO, (("pso.omega2_mode", "==", ("constant",)),))),
    _cat("pso.omega3_mode", ("equal_to_omega1", "constant", "random"),
         "equal_to_omega1", _HAS_PSO),
    _real("pso.omega3", 0.0, 1.0, None,
          _with(_HAS_PSO, (("pso.omega3_mode", "==", ("constant",)),))),
    _cat("pso.ac_mode", ("constant", "random", "time_varying"), "constant",
         _HAS_PSO),
    _real("pso.phi1", 0.0, 4.0, "1.49445", _HAS_PSO, lo_open=True),
    _real("pso.phi2", 0.0, 4.0, "1.49445", _HAS_PSO, lo_open=True),
    _real("pso.phi1_min", 0.0, 4.0, "0.5",
          _with(_HAS_PSO, (("pso.ac_mode", "==", ("time_varying",)),)),
          lo_open=True),
    _real("pso.phi1_max", 0.0, 4.0, "2.5",
          _with(_HAS_PSO, (("pso.ac_mode", "==", ("time_varying",)),)),
          lo_open=True),
    _cat("pso.topology", ("fully_connected", "ring", "von_neumann", "wheel",
                          "random_edge", "time_varying"),
         "fully_connected", _HAS_PSO),
    _cat("pso.moi", ("best_of_neighborhood", "fully_informed",
                     "ranked_fully_informed"), "best_of_neighborhood", _HAS_PSO),
    _cat("pso.dnpp", ("rectangular", "spherical", "standard", "gaussian"),
         "rectangular", _HAS_PSO),
    _cat("pso.mtx", ("random_diagonal",), "random_diagonal", _HAS_PSO),
    _cat("pso.pert_info", ("none", "gaussian", "levy", "uniform"), "none",
         _HAS_PSO),
    _cat("pso.pert_rand", ("none", "rectangular", "noisy"), "none", _HAS_PSO),
    _cat("pso.pm_mode", ("constant", "euclidean_distance", "objfunc_distance",
                         "success_rate"), None,
         _with(_HAS_PSO, (("pso.pert_info", "!=", ("none",)),
                          ("pso.pert_rand", "!=", ("none",))))),
    _real("pso.pm", 0.0, 10.0, None,
          _with(_HAS_PSO, (("pso.pert_info", "!=", ("none",)),
                           ("pso.pert_rand", "!=", ("none",))),
                (("pso.pm_mode", "in", ("constant", "success_rate")),)),
          lo_open=True),
    _bool("pso.velocity_clamping", "true", _HAS_PSO),
    _bool("pso.stagnation_detection", "false", _HAS_PSO),
    _bool("pso.ignore_pbest", "false", _HAS_PSO),
    _cat("pso.vector_basis", ("natural", "eigenvector"), "natural", _HAS_PSO),

    _cat("de.base_vector", ("random", "best", "target_to_best",
                            "directed_random", "directed_best"), "random",
         _HAS_DE),
    _real("de.diff_fraction", 0.0, 0.25, "0.02", _HAS_DE, lo_open=True),
    _cat("de.recombination", ("binomial", "exponential"), "binomial", _HAS_DE),
    _real("de.p_a", 0.0, 1.0, "0.5", _HAS_DE),
    _real("de.beta", 0.0, 1.0, "0.5", _HAS_DE, lo_open=True),
    _cat("de.vectors", ("positions", "pbest", "mixture"), "positions", _HAS_DE),
    _cat("de.vector_basis", ("natural", "eigenvector"), "natural", _HAS_DE),
    _cat("de.recompute_velocity", ("goBack", "random", "position", "none"),
         "none", _HAS_DE),
    _bool("de.pso_only_on_fail", "false", _HAS_DE),

    _real("cmaes.a", 1.0, 10.0, "3.0", _HAS_CMAES),
    _real("cmaes.b", 1.0, 5.0, "2.0", _HAS_CMAES),
    _real("cmaes.c", 0.0, 1.0, "0.5", _HAS_CMAES, lo_open=True, hi_open=True),
    _cat("cmaes.pop_mode", ("constant", "incremental"), "incremental",
         _HAS_CMAES),
    _real("cmaes.d", 1.0, 4.0, "2.0",
          _with(_HAS_CMAES, (("cmaes.pop_mode", "==", ("incremental",)),))),
    _bool("cmaes.restart", "true", _HAS_CMAES),
    _real("cmaes.e", -20.0, -6.0, "-12.0",
          _with(_HAS_CMAES, (("cmaes.restart", "==", ("true",)),))),
    _real("cmaes.f", -20.0, -6.0, "-12.0",
          _with(_HAS_CMAES, (("cmaes.restart", "==", ("true",)),))),
    _real("cmaes.g", -20.0, -6.0, "-12.0",
          _with(_HAS_CMAES, (("cmaes.restart", "==", ("true",)),))),
    _cat("cmaes.matrix_mode", ("full", "diagonal", "full_then_diagonal"),
         "full", _HAS_CMAES),
    _cat("cmaes.weights", ("logarithmic", "linear_decreasing", "equal"),
         "logarithmic", _HAS_CMAES),

    _cat("ls.algo", ("none", "mtsls", "cmaes"), "none"),
    _real("ls.budget", 0.0, 1.0, "0.25", _LS_ON, lo_open=True),
    _int("ls.divide", 1, 100, "10", _LS_ON),
    _real("ls.mtsls_init_ss", 0.0, 1.0, "0.5", _LS_MTSLS, lo_open=True),
    _int("ls.mtsls_iterations", 1, 3, "1", _LS_MTSLS),
    _real("ls.mtsls_bias", -1.0, 1.0, "0.5", _LS_MTSLS),
    _real("ls.cmaes.a", 1.0, 10.0, "3.0", _LS_CMAES),
    _real("ls.cmaes.b", 1.0, 5.0, "2.0", _LS_CMAES),
    _real("ls.cmaes.c", 0.0, 1.0, "0.1", _LS_CMAES, lo_open=True, hi_open=True),
    _cat("ls.cmaes.pop_mode", ("constant", "incremental"), "constant",
         _LS_CMAES),
    _real("ls.cmaes.d", 1.0, 4.0, "2.0",
          _with(_LS_CMAES, (("ls.cmaes.pop_mode", "==", ("incremental",)),))),
    _bool("ls.cmaes.restart", "true", _LS_CMAES),
    _real("ls.cmaes.e", -20.0, -6.0, "-12.0", _LS_CMAES),
    _real("ls.cmaes.f", -20.0, -6.0, "-12.0", _LS_CMAES),
    _real("ls.cmaes.g", -20.0, -6.0, "-12.0", _LS_CMAES),
    _cat("ls.cmaes.matrix_mode", ("full", "diagonal", "full_then_diagonal"),
         "full", _LS_CMAES),
    _cat("ls.cmaes.weights", ("logarithmic", "linear_decreasing", "equal"),
         "logarithmic", _LS_CMAES),
)

_SPEC_BY_NAME = {s.name: s for s in PARAMETER_SPACE}

# problem-definition keys accepted in parameter files but not part of the
# exported algorithm space
INSTANCE_KEYS = {"hybrid.parts"}


# ---------------------------------------------------------------------------
# parameter files
# ---------------------------------------------------------------------------

def parse_parameter_file(text: str) -> dict[str, str]:
    """Parse 'key = value' lines into a flat map; '#' starts a comment."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = line.split("=", 1)
        key, value = key.strip(), value.strip()
        if not key or not value:
            raise ParseError(f"line {lineno}: empty key or value")
        if key in out:
            raise DuplicateKey(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def format_parameter_file(values: dict[str, str]) -> str:
    return "\n".join(f"{k} = {v}" for k, v in values.items()) + "\n"


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

@dataclass
class ValidationReport:
    missing: list[str] = field(default_factory=list)
    conflicting: list[tuple[str, str, str]] = field(default_factory=list)
    out_of_range: list[tuple[str, str, str]] = field(default_factory=list)

    def ok(self) -> bool:
        return not (self.missing or self.conflicting or self.out_of_range)

    def describe(self) -> str:
        lines = []
        for name in self.missing:
            lines.append(f"missing: {name}")
        for a, b, reason in self.conflicting:
            lines.append(f"conflict: {a} / {b}: {reason}")
        for name, value, rng in self.out_of_range:
            lines.append(f"out of range: {name} = {value} (expected {rng})")
        return "\n".join(lines)


def _parse_value(spec: ParameterSpec, text: str):
    if spec.kind == "categorical":
        if text not in spec.domain:
            raise ValueError
        return text
    if spec.kind == "boolean":
        low = text.lower()
        if low in ("true", "1", "yes"):
            return True
        if low in ("false", "0", "no"):
            return False
        raise ValueError
    if spec.kind == "integer":
        value = int(text)
    elif spec.kind == "real":
        value = float(text)
    else:
        return text
    lo, hi = spec.domain
    if value < lo or value > hi:
        raise ValueError
    if spec.lo_open and value == lo:
        raise ValueError
    if spec.hi_open and value == hi:
        raise ValueError
    return value


def _parse_order(text: str):
    return tuple(tok.strip() for tok in text.split(",") if tok.strip())


def validate(raw: dict[str, str]):
    """Check ranges, dependencies and mode availability.

    Returns a typed AlgorithmConfig on success, otherwise a ValidationReport
    listing every missing, conflicting and out-of-range entry.
    """
    report = ValidationReport()
    for key in raw:
        if key not in _SPEC_BY_NAME and key not in INSTANCE_KEYS:
            report.conflicting.append((key, "", "unknown parameter"))

    effective = {s.name: s.default for s in PARAMETER_SPACE if s.default is not None}
    effective.update({k: v for k, v in raw.items() if k in _SPEC_BY_NAME})
    for spec in PARAMETER_SPACE:  # normalize booleans so conditions match
        if spec.kind == "boolean" and spec.name in effective:
            effective[spec.name] = effective[spec.name].lower()

    typed: dict[str, object] = {}
    for spec in PARAMETER_SPACE:
        active = condition_active(spec, effective)
        supplied = spec.name in raw
        if not supplied and active and spec.default is None:
            report.missing.append(spec.name)
            continue
        if spec.name in effective:
            try:
                typed[spec.name] = _parse_value(spec, effective[spec.name])
            except ValueError:
                report.out_of_range.append(
                    (spec.name, effective[spec.name], spec.domain_str()))

    order = _parse_order(str(typed.get("exec.order", "")))
    mode = typed.get("exec.mode", "component_based")
    bad_order = False
    if not order or len(order) > 3 or len(set(order)) != len(order) \
            or any(m not in ("pso", "de", "cmaes") for m in order):
        report.conflicting.append(
            ("exec.order", "", f"order must be 1-3 distinct modules, got {order!r}"))
        bad_order = True

    if not bad_order:
        if mode == "probabilistic" and set(order) != {"pso", "de"}:
            report.conflicting.append(
                ("exec.mode", "exec.order",
                 "probabilistic execution is available only for pso and de"))
        if mode == "component_based" and len(order) > 1 and set(order) != {"pso", "de"}:
            report.conflicting.append(
                ("exec.mode", "exec.order",
                 "component-based composition is available only for pso and de"))

    fractions = ()
    if mode == "multiple_phases" and not bad_order and "exec.phases" in typed:
        try:
            fractions = tuple(float(tok) for tok in
                              str(typed["exec.phases"]).split(","))
        except ValueError:
            fractions = ()
        if len(fractions) != len(order) or any(f <= 0 or f > 1 for f in fractions) \
                or abs(sum(fractions) - 1.0) > 1e-9:
            report.conflicting.append(
                ("exec.phases", "exec.order",
                 "phase fractions must match the module order and sum to 1"))

    has_swarm = any(m in ("pso", "de") for m in order)
    if has_swarm and not bad_order:
        if typed.get("pop.mode", "constant") != "constant":
            if "pso" in order:
                report.conflicting.append(
                    ("pop.mode", "exec.order",
                     "population growth schedules apply to de only"))
            if typed.get("pop.min", 0) > typed.get("pop.max", 0):
                report.conflicting.append(
                    ("pop.min", "pop.max", "pop.min must not exceed pop.max"))
        if "pso" in order:
            n = typed.get("pop.min") if typed.get("pop.mode") != "constant" \
                else typed.get("pop.size")
            if typed.get("pso.topology") == "time_varying" and (n or 0) < 4:
                report.conflicting.append(
                    ("pso.topology", "pop.size",
                     "time-varying topology needs at least 4 particles"))
            if typed.get("pso.moi") in ("fully_informed", "ranked_fully_informed") \
                    and typed.get("pso.dnpp") != "rectangular":
                report.conflicting.append(
                    ("pso.moi", "pso.dnpp",
                     "informed models of influence require the rectangular DNPP"))

    if not report.ok():
        return report

    execution = ExecutionConfig(
        mode=mode, module_order=order,
        pr=typed.get("exec.pr", 0.5),
        gate_dist=typed.get("exec.gate_dist", "uniform"),
        par_std=typed.get("exec.par_std", 1.0),
        phase_fractions=fractions,
        reinit=typed.get("exec.reinit", "none"))
    population = PopulationSettings(
        size=typed.get("pop.size", 40),
        mode=typed.get("pop.mode", "constant"),
        min_size=typed.get("pop.min", typed.get("pop.size", 40)),
        max_size=typed.get("pop.max", typed.get("pop.size", 40)),
        interval=typed.get("pop.interval", 10))

    pso = None
    if "pso" in order:
        pso = PsoParams(
            omega1_mode=typed["pso.omega1_mode"], omega1=typed["pso.omega1"],
            omega1_min=typed["pso.omega1_min"], omega1_max=typed["pso.omega1_max"],
            omega2_mode=typed["pso.omega2_mode"],
            omega2=typed.get("pso.omega2", 1.0),
            omega3_mode=typed["pso.omega3_mode"],
            omega3=typed.get("pso.omega3", 1.0),
            ac_mode=typed["pso.ac_mode"], phi1=typed["pso.phi1"],
            phi2=typed["pso.phi2"], phi1_min=typed["pso.phi1_min"],
            phi1_max=typed["pso.phi1_max"], topology=typed["pso.topology"],
            moi=typed["pso.moi"], dnpp=typed["pso.dnpp"], mtx=typed["pso.mtx"],
            pert_info=typed["pso.pert_info"], pert_rand=typed["pso.pert_rand"],
            pm_mode=typed.get("pso.pm_mode", "constant"),
            pm=typed.get("pso.pm", 0.01),
            velocity_clamping=typed["pso.velocity_clamping"],
            stagnation_detection=typed["pso.stagnation_detection"],
            ignore_pbest=typed["pso.ignore_pbest"],
            vector_basis=typed["pso.vector_basis"])

    de = None
    if "de" in order:
        de = DeParams(
            base_vector=typed["de.base_vector"],
            diff_fraction=typed["de.diff_fraction"],
            recombination=typed["de.recombination"], p_a=typed["de.p_a"],
            beta=typed["de.beta"], vectors=typed["de.vectors"],
            vector_basis=typed["de.vector_basis"],
            recompute_velocity=typed["de.recompute_velocity"],
            pso_only_on_fail=typed["de.pso_only_on_fail"])

    cmaes = None
    if "cmaes" in order:
        cmaes = _cma_params(typed, "cmaes.")

    ls = LsParams(algo=typed.get("ls.algo", "none"))
    if ls.algo != "none":
        ls.budget = typed["ls.budget"]
        ls.divide = typed["ls.divide"]
        if ls.algo == "mtsls":
            ls.mtsls_init_ss = typed["ls.mtsls_init_ss"]
            ls.mtsls_iterations = typed["ls.mtsls_iterations"]
            ls.mtsls_bias = typed["ls.mtsls_bias"]
        else:
            ls.nested_cma = _cma_params(typed, "ls.cmaes.")

    return AlgorithmConfig(execution=execution, population=population,
                           pso=pso, de=de, cmaes=cmaes, ls=ls, raw=dict(raw))


def _cma_params(typed: dict, prefix: str) -> CmaParams:
    return CmaParams(
        a=typed[prefix + "a"], b=typed[prefix + "b"], c=typed[prefix + "c"],
        d_inc=typed.get(prefix + "d", 2.0),
        e=typed.get(prefix + "e", -12.0), f=typed.get(prefix + "f", -12.0),
        g=typed.get(prefix + "g", -12.0),
        matrix_mode=typed[prefix + "matrix_mode"],
        weight_scheme=typed[prefix + "weights"],
        pop_mode=typed[prefix + "pop_mode"],
        restart=typed[prefix + "restart"])


def default_config(overrides: dict[str, str] | None = None) -> dict[str, str]:
    """Default assignment for every parameter active under the defaults."""
    values = {s.name: s.default for s in PARAMETER_SPACE if s.default is not None}
    if overrides:
        values.update(overrides)
    active = {}
    for spec in PARAMETER_SPACE:
        if spec.name in values and condition_active(spec, values):
            active[spec.name] = values[spec.name]
    return active


# ---------------------------------------------------------------------------
# parameter-space export
# ---------------------------------------------------------------------------

def export_parameter_space(fmt: str = "racing_tool") -> str:
    """Emit the declared parameter space for an external configurator."""
    if fmt == "json":
        import json
        entries = [{
            "name": s.name,
            "switch": f"--{s.name} ",
            "kind": s.kind,
            "domain": s.domain_str(),
            "condition": s.condition_str(),
            "default": s.default,
        } for s in PARAMETER_SPACE]
        return json.dumps(entries, indent=2) + "\n"
    if fmt == "racing_tool":
        kind_codes = {"categorical": "c", "integer": "i", "real": "r",
                      "boolean": "c", "string": "c"}
        lines = []
        for s in PARAMETER_SPACE:
            cond = s.condition_str()
            line = (f"{s.name:28s} \"--{s.name} \" {kind_codes[s.kind]} "
                    f"{s.domain_str()}")
            if cond:
                line += f" | {cond}"
            lines.append(line)
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown export format {fmt!r}")
