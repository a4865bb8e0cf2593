"""Planning run configuration.

A planning run is described by a single JSON document.  The document names
the input files (network, gauge record, impact table, optional price book),
the screening and filtering thresholds, the price assumptions, the scenario
weighting and every plan-level constraint.  Each field maps to exactly one
command line flag of the ``riverplan`` tool, so a config file and a pile of
flags are interchangeable.

Values are validated here only as far as the workbench owns them (files must
exist, probabilities must sum to one, factors must be positive).  Anything
deeper is left to the owning module, which will complain when the value is
actually used.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from typing import Any, Mapping

from ..engineering import (
    SCHEME_DAM_TOE,
    SCHEME_DIVERSION,
    TEMPLATE_GRAVITY,
    DesignRules,
    FinanceTerms,
)
from ..metrics import MetricDef, SatisfactionConfig
from ..optimizer import SolverOptions
from ..screening import (
    DEFAULT_HEAD_LADDER,
    MAX_UNIT_COST_USD_PER_KW,
    MIN_POWER_DENSITY_MW_PER_KM2,
    ScreeningCriteria,
)

__all__ = [
    "ConfigError",
    "PlanningConfig",
    "load_config",
    "dump_config",
    "apply_overrides",
    "config_flags",
]


class ConfigError(ValueError):
    """Raised when a configuration document cannot be used."""


@dataclass(frozen=True)
class PlanningConfig:
    """Everything a planning run needs, in one document.

    File paths are stored as given; :func:`load_config` resolves them
    against the directory holding the config file so a run directory can
    be moved around as a unit.
    """

    network_file: str
    gauge_file: str
    scenario_years: tuple[tuple[str, float], ...]
    impact_file: str | None = None
    price_file: str | None = None

    # candidate generation
    screening: ScreeningCriteria = field(default_factory=ScreeningCriteria)
    head_ladder: tuple[float, ...] = DEFAULT_HEAD_LADDER
    schemes: tuple[str, ...] = (SCHEME_DAM_TOE, SCHEME_DIVERSION)
    template: str = TEMPLATE_GRAVITY
    passable_schemes: tuple[str, ...] = ()
    ecological_release_fraction: float = 0.0
    max_unit_cost_usd_per_kw: float = MAX_UNIT_COST_USD_PER_KW
    min_power_density_mw_per_km2: float = MIN_POWER_DENSITY_MW_PER_KM2

    # economics
    energy_price_usd_per_kwh: float = 0.05
    capacity_price_usd_per_kw_yr: float = 0.0
    risk_adjusted_price_factor: float = 1.0
    discount_rate: float = 0.10
    lifetime_yr: int = 40

    # plan constraints
    metric_bounds: tuple[MetricDef, ...] = ()
    min_free_flowing_km: float | None = None
    satisfaction: SatisfactionConfig | None = None
    forced: tuple[str, ...] = ()
    forbidden: tuple[str, ...] = ()

    # solver
    gap_tol: float = 1e-6
    time_limit_s: float | None = None
    seed: int = 0
    threads: int = 1

    def __post_init__(self) -> None:
        # Accept document-shaped values so direct construction and JSON
        # parsing agree on what a valid config is.
        if isinstance(self.screening, Mapping):
            object.__setattr__(self, "screening", ScreeningCriteria(**self.screening))
        if self.satisfaction is not None and isinstance(self.satisfaction, Mapping):
            sat = self.satisfaction
            object.__setattr__(
                self,
                "satisfaction",
                SatisfactionConfig(
                    weight_mean=float(sat["weight_mean"]),
                    required=float(sat["required"]),
                    metric_ids=tuple(sat["metric_ids"]),
                ),
            )
        if any(isinstance(m, Mapping) for m in self.metric_bounds):
            coerced = tuple(
                m if isinstance(m, MetricDef) else _metric_def_from(m) for m in self.metric_bounds
            )
            object.__setattr__(self, "metric_bounds", coerced)
        for key in ("scenario_years", "head_ladder", "schemes", "passable_schemes",
                    "metric_bounds", "forced", "forbidden"):
            value = getattr(self, key)
            if not isinstance(value, tuple):
                object.__setattr__(self, key, tuple(value))
        if not self.scenario_years:
            raise ConfigError("scenario_years must list at least one year")
        total = 0.0
        for entry in self.scenario_years:
            label, prob = entry
            if prob <= 0.0:
                raise ConfigError(f"scenario year {label} has probability {prob}")
            total += prob
        if abs(total - 1.0) > 1e-9:
            raise ConfigError(f"scenario year probabilities sum to {total}, expected 1")
        if self.risk_adjusted_price_factor <= 0.0:
            raise ConfigError("risk_adjusted_price_factor must be positive")
        if not 0.0 <= self.ecological_release_fraction < 1.0:
            raise ConfigError("ecological_release_fraction must lie in [0, 1)")
        for scheme in self.schemes:
            if scheme not in (SCHEME_DAM_TOE, SCHEME_DIVERSION):
                raise ConfigError(f"unknown scheme {scheme!r}")
        for scheme in self.passable_schemes:
            if scheme not in self.schemes:
                raise ConfigError(f"passable scheme {scheme!r} is not in schemes")
        dup = set(self.forced) & set(self.forbidden)
        if dup:
            raise ConfigError(f"variants both forced and forbidden: {sorted(dup)}")
        # Exercise the owning modules' validation early so a bad config
        # fails at load time, not three subcommands later.
        self.finance()
        self.solver_options()

    def finance(self) -> FinanceTerms:
        return FinanceTerms(discount_rate=self.discount_rate, lifetime_yr=self.lifetime_yr)

    def design_rules(self) -> DesignRules:
        return DesignRules()

    def solver_options(self, on_progress=None) -> SolverOptions:
        return SolverOptions(
            gap_tol=self.gap_tol,
            time_limit_s=self.time_limit_s,
            seed=self.seed,
            threads=self.threads,
            on_progress=on_progress,
        )

    def effective_energy_price(self) -> float:
        """Energy price after the risk adjustment factor."""
        return self.energy_price_usd_per_kwh * self.risk_adjusted_price_factor


# One entry per config key: the JSON/CLI name, a parser for the raw string
# and a one line description (doubles as --help text).
def _float_or_null(raw: str):
    return None if raw in ("null", "none", "") else float(raw)


def _str_or_null(raw: str):
    return None if raw in ("null", "none", "") else raw


def _json_value(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"expected a JSON value, got {raw!r}: {exc}") from exc


CONFIG_FLAGS: dict[str, tuple[Any, str]] = {
    "network_file": (str, "path to the river network JSON file"),
    "gauge_file": (str, "path to the daily gauge record CSV"),
    "impact_file": (_str_or_null, "path to the impact density table CSV"),
    "price_file": (_str_or_null, "path to a unit price book JSON (default book if omitted)"),
    "scenario_years": (_json_value, 'hydrologic years and weights, e.g. [["2001", 0.5], ["2003", 0.5]]'),
    "screening": (_json_value, 'screening thresholds, e.g. {"min_head_m": 10}'),
    "head_ladder": (_json_value, "candidate dam heights in metres"),
    "schemes": (_json_value, 'layout schemes to design, subset of ["dam-toe", "diversion"]'),
    "template": (str, "dam template for the cost model"),
    "passable_schemes": (_json_value, "schemes built with fish passage"),
    "ecological_release_fraction": (float, "fraction of the low-flow statistic reserved as release"),
    "max_unit_cost_usd_per_kw": (float, "ex-ante filter: max capex per installed kW"),
    "min_power_density_mw_per_km2": (float, "ex-ante filter: min MW per flooded km2"),
    "energy_price_usd_per_kwh": (float, "energy price paid per kWh"),
    "capacity_price_usd_per_kw_yr": (float, "capacity payment per installed kW and year"),
    "risk_adjusted_price_factor": (float, "multiplier applied to the energy price for the portfolio run"),
    "discount_rate": (float, "annual discount rate for capital recovery"),
    "lifetime_yr": (int, "project lifetime in years"),
    "metric_bounds": (_json_value, "plan-level impact bounds (list of metric definitions)"),
    "min_free_flowing_km": (_float_or_null, "minimum river length kept free-flowing"),
    "satisfaction": (_json_value, "stakeholder satisfaction settings or null"),
    "forced": (_json_value, "variant ids that must be built"),
    "forbidden": (_json_value, "variant ids that may not be built"),
    "gap_tol": (float, "relative optimality gap at which the search stops"),
    "time_limit_s": (_float_or_null, "wall clock limit for the search, or null"),
    "seed": (int, "random seed recorded with the run"),
    "threads": (int, "worker threads for the search"),
}


def config_flags() -> dict[str, tuple[Any, str]]:
    """Flag name -> (value parser, help text), one per config key."""
    return dict(CONFIG_FLAGS)


def _metric_def_from(doc: Mapping[str, Any]) -> MetricDef:
    known = {"id", "bound_kind", "bound", "cumulative", "satisfaction_bounds", "orientation"}
    extra = set(doc) - known
    if extra:
        raise ConfigError(f"metric bound has unknown fields {sorted(extra)}")
    kwargs = dict(doc)
    if "satisfaction_bounds" in kwargs and kwargs["satisfaction_bounds"] is not None:
        kwargs["satisfaction_bounds"] = tuple(kwargs["satisfaction_bounds"])
    return MetricDef(**kwargs)


def _from_document(doc: Mapping[str, Any]) -> PlanningConfig:
    if not isinstance(doc, Mapping):
        raise ConfigError("config document must be a JSON object")
    known = set(CONFIG_FLAGS)
    extra = set(doc) - known
    if extra:
        raise ConfigError(f"unknown config keys: {sorted(extra)}")
    kwargs: dict[str, Any] = dict(doc)

    if "scenario_years" in kwargs:
        years = []
        for entry in kwargs["scenario_years"]:
            if isinstance(entry, Mapping):
                years.append((str(entry["label"]), float(entry["probability"])))
            else:
                label, prob = entry
                years.append((str(label), float(prob)))
        kwargs["scenario_years"] = tuple(years)
    if "screening" in kwargs and not isinstance(kwargs["screening"], ScreeningCriteria):
        kwargs["screening"] = ScreeningCriteria(**kwargs["screening"])
    for key in ("head_ladder", "schemes", "passable_schemes", "forced", "forbidden"):
        if key in kwargs and kwargs[key] is not None:
            kwargs[key] = tuple(kwargs[key])
    if kwargs.get("metric_bounds"):
        bounds = []
        for item in kwargs["metric_bounds"]:
            bounds.append(item if isinstance(item, MetricDef) else _metric_def_from(item))
        kwargs["metric_bounds"] = tuple(bounds)
    sat = kwargs.get("satisfaction")
    if sat is not None and not isinstance(sat, SatisfactionConfig):
        kwargs["satisfaction"] = SatisfactionConfig(
            weight_mean=float(sat["weight_mean"]),
            required=float(sat["required"]),
            metric_ids=tuple(sat["metric_ids"]),
        )
    try:
        return PlanningConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def apply_overrides(cfg: PlanningConfig, overrides: Mapping[str, str]) -> PlanningConfig:
    """Return ``cfg`` with raw CLI override strings applied.

    Keys mirror config keys; values are parsed with the same parser the
    config file uses, so ``--min-free-flowing-km 120`` and a JSON field
    behave identically.
    """
    if not overrides:
        return cfg
    doc = _as_document(cfg)
    for key, raw in overrides.items():
        if key not in CONFIG_FLAGS:
            raise ConfigError(f"unknown config key {key!r}")
        parser, _ = CONFIG_FLAGS[key]
        doc[key] = parser(raw) if isinstance(raw, str) else raw
    return _from_document(doc)


def _as_document(cfg: PlanningConfig) -> dict[str, Any]:
    doc: dict[str, Any] = {}
    for f in dataclasses.fields(PlanningConfig):
        value = getattr(cfg, f.name)
        if isinstance(value, ScreeningCriteria):
            value = dataclasses.asdict(value)
        elif isinstance(value, SatisfactionConfig):
            value = {
                "weight_mean": value.weight_mean,
                "required": value.required,
                "metric_ids": list(value.metric_ids),
            }
        elif isinstance(value, tuple) and value and isinstance(value[0], MetricDef):
            value = [
                {
                    "id": m.id,
                    "bound_kind": m.bound_kind,
                    "bound": m.bound,
                    "cumulative": m.cumulative,
                    "satisfaction_bounds": list(m.satisfaction_bounds) if m.satisfaction_bounds else None,
                    "orientation": m.orientation,
                }
                for m in value
            ]
        elif isinstance(value, tuple):
            value = [list(v) if isinstance(v, tuple) else v for v in value]
        doc[f.name] = value
    return doc


def dump_config(cfg: PlanningConfig) -> str:
    """Serialize a config to its JSON document form."""
    return json.dumps(_as_document(cfg), indent=2, sort_keys=True) + "\n"


def load_config(source, *, base_dir: str | None = None) -> PlanningConfig:
    """Parse a config document from text, a file object or a path.

    Relative input file paths are resolved against ``base_dir``, which
    defaults to the directory containing the config file (or the current
    directory when the config did not come from a file).  Referenced files
    must exist.
    """
    if hasattr(source, "read"):
        text = source.read()
        origin = getattr(source, "name", None)
    elif isinstance(source, str) and not source.lstrip().startswith("{"):
        origin = source
        with open(source, "r", encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = source
        origin = None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc

    cfg = _from_document(doc)
    if base_dir is None:
        base_dir = os.path.dirname(origin) if origin else "."

    resolved: dict[str, Any] = {}
    for key in ("network_file", "gauge_file", "impact_file", "price_file"):
        path = getattr(cfg, key)
        if path is None:
            continue
        if not os.path.isabs(path):
            path = os.path.normpath(os.path.join(base_dir, path))
        if not os.path.exists(path):
            raise ConfigError(f"{key} does not exist: {path}")
        resolved[key] = path
    if resolved:
        cfg = dataclasses.replace(cfg, **resolved)
    return cfg
