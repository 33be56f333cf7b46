"""Problem-instance definition: parsing, validation and serialization.

A scenario file is a human-editable JSON document with five blocks:
``areas[]``, ``current_portfolio``, ``constraints``, ``forecasts`` and
``solver``.  All currency is in $Bn, all times in years.  Per-phase values
are given as length-4 lists in phase order Phase 1, Phase 2, Phase 3,
registration.  Parsed configs are immutable and safe to share across
workers.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

PHASES = ("1", "2", "3", "r")
NUM_PHASES = len(PHASES)


class ScenarioError(ValueError):
    """Raised for malformed or invalid scenario documents."""


@dataclass(frozen=True)
class AreaParams:
    """Template-model parameters for one disease area."""

    area_id: str
    median_duration: tuple[float, float, float, float]
    median_cost: tuple[float, float, float, float]
    sigma: float
    transition_prob: tuple[float, float, float, float]
    ramp_up_years: float
    peak_year_revenue: float
    exclusivity_years: float
    post_loe_fraction: float

    @property
    def overall_success(self) -> float:
        """Probability that a newly started project eventually launches."""
        p = 1.0
        for q in self.transition_prob:
            p *= q
        return p

    def survival_from(self, phase: int) -> float:
        """Launch probability for a project currently in ``phase`` (0-based)."""
        p = 1.0
        for q in self.transition_prob[phase:]:
            p *= q
        return p


@dataclass(frozen=True)
class CurrentPortfolio:
    """Project counts currently in development, indexed [phase][area]."""

    counts: tuple[tuple[int, ...], ...]

    def count(self, phase: int, area: int) -> int:
        return self.counts[phase][area]


@dataclass(frozen=True)
class BalanceConstraints:
    """Portfolio-balance minima and the inflow ramp limit."""

    min_per_phase: tuple[float, float, float, float]
    min_per_area: tuple[float, ...]
    min_launches: tuple[float, ...]
    max_annual_increase: float
    enforce_window: tuple[int, int]


@dataclass(frozen=True)
class Forecasts:
    """Exogenous revenue/budget series over years 1..T.

    ``dev_revenue_override`` replaces the internally computed revenue of the
    current development portfolio when present.  Target/budget series are
    optional; each objective framing validates that the series it needs are
    supplied.
    """

    marketed_revenue: tuple[float, ...]
    dev_revenue_override: tuple[float, ...] | None = None
    revenue_target: tuple[float, ...] | None = None
    mean_revenue_target: float | None = None
    budget: tuple[float, ...] | None = None
    mean_budget: float | None = None


@dataclass(frozen=True)
class SASchedule:
    """Simulated-annealing schedule. ``initial_temp=None`` self-scales."""

    initial_temp: float | None = None
    cooling_factor: float = 0.95
    iterations: int = 100_000
    moves_per_temp: int = 200


@dataclass(frozen=True)
class SolverSettings:
    horizon_years: int = 30
    inflow_years: int = 30
    grid_step: float = 1.0 / 12.0
    mc_iterations: int = 10_000
    seed: int = 12345
    max_new_per_area_year: int = 8
    restarts: int = 4
    sa_schedule: SASchedule = field(default_factory=SASchedule)

    @property
    def points_per_year(self) -> int:
        return round(1.0 / self.grid_step)


@dataclass(frozen=True)
class ScenarioConfig:
    """A full, validated problem instance."""

    areas: tuple[AreaParams, ...]
    current_portfolio: CurrentPortfolio
    constraints: BalanceConstraints
    forecasts: Forecasts
    solver: SolverSettings

    @property
    def n_areas(self) -> int:
        return len(self.areas)

    @property
    def area_ids(self) -> tuple[str, ...]:
        return tuple(a.area_id for a in self.areas)

    @property
    def horizon(self) -> int:
        return self.solver.horizon_years

    def to_dict(self) -> dict:
        delta = self.constraints.max_annual_increase
        return {
            "areas": [
                {
                    "id": a.area_id,
                    "median_duration": list(a.median_duration),
                    "median_cost": list(a.median_cost),
                    "sigma": a.sigma,
                    "transition_prob": list(a.transition_prob),
                    "ramp_up_years": a.ramp_up_years,
                    "peak_year_revenue": a.peak_year_revenue,
                    "exclusivity_years": a.exclusivity_years,
                    "post_loe_fraction": a.post_loe_fraction,
                }
                for a in self.areas
            ],
            "current_portfolio": {
                a.area_id: [self.current_portfolio.counts[i][j] for i in range(NUM_PHASES)]
                for j, a in enumerate(self.areas)
            },
            "constraints": {
                "min_per_phase": list(self.constraints.min_per_phase),
                "min_per_area": list(self.constraints.min_per_area),
                "min_launches": list(self.constraints.min_launches),
                "max_annual_increase": None if math.isinf(delta) else delta,
                "enforce_window": list(self.constraints.enforce_window),
            },
            "forecasts": {
                "marketed_revenue": list(self.forecasts.marketed_revenue),
                "dev_revenue_override": _opt_list(self.forecasts.dev_revenue_override),
                "revenue_target": _opt_list(self.forecasts.revenue_target),
                "mean_revenue_target": self.forecasts.mean_revenue_target,
                "budget": _opt_list(self.forecasts.budget),
                "mean_budget": self.forecasts.mean_budget,
            },
            "solver": {
                "horizon_years": self.solver.horizon_years,
                "inflow_years": self.solver.inflow_years,
                "grid_step": self.solver.grid_step,
                "mc_iterations": self.solver.mc_iterations,
                "seed": self.solver.seed,
                "max_new_per_area_year": self.solver.max_new_per_area_year,
                "restarts": self.solver.restarts,
                "sa_schedule": {
                    "initial_temp": self.solver.sa_schedule.initial_temp,
                    "cooling_factor": self.solver.sa_schedule.cooling_factor,
                    "iterations": self.solver.sa_schedule.iterations,
                    "moves_per_temp": self.solver.sa_schedule.moves_per_temp,
                },
            },
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _opt_list(values: tuple[float, ...] | None) -> list[float] | None:
    return None if values is None else list(values)


# --------------------------------------------------------------------------
# parsing helpers

def _require(mapping: dict, key: str, where: str):
    if key not in mapping:
        raise ScenarioError(f"missing required field: {where}{key}")
    return mapping[key]


def _as_number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{where}: expected number, got {type(value).__name__}")
    return float(value)


def _as_int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(f"{where}: expected integer, got {type(value).__name__}")
    return value


def _as_number_list(value, where: str, length: int | None = None) -> tuple[float, ...]:
    if not isinstance(value, list):
        raise ScenarioError(f"{where}: expected list, got {type(value).__name__}")
    if length is not None and len(value) != length:
        raise ScenarioError(f"{where}: expected {length} entries, got {len(value)}")
    return tuple(_as_number(v, f"{where}[{k}]") for k, v in enumerate(value))


def _parse_area(raw: dict, index: int) -> AreaParams:
    where = f"areas[{index}]."
    if not isinstance(raw, dict):
        raise ScenarioError(f"areas[{index}]: expected object")
    return AreaParams(
        area_id=str(_require(raw, "id", where)),
        median_duration=_as_number_list(_require(raw, "median_duration", where), where + "median_duration", NUM_PHASES),
        median_cost=_as_number_list(_require(raw, "median_cost", where), where + "median_cost", NUM_PHASES),
        sigma=_as_number(_require(raw, "sigma", where), where + "sigma"),
        transition_prob=_as_number_list(_require(raw, "transition_prob", where), where + "transition_prob", NUM_PHASES),
        ramp_up_years=_as_number(_require(raw, "ramp_up_years", where), where + "ramp_up_years"),
        peak_year_revenue=_as_number(_require(raw, "peak_year_revenue", where), where + "peak_year_revenue"),
        exclusivity_years=_as_number(raw.get("exclusivity_years", 12.0), where + "exclusivity_years"),
        post_loe_fraction=_as_number(_require(raw, "post_loe_fraction", where), where + "post_loe_fraction"),
    )


def _parse_portfolio(raw, area_ids: tuple[str, ...]) -> CurrentPortfolio:
    if not isinstance(raw, dict):
        raise ScenarioError("current_portfolio: expected object keyed by area id")
    for key in raw:
        if key not in area_ids:
            raise ScenarioError(f"current_portfolio: unknown area id '{key}'")
    columns = []
    for aid in area_ids:
        row = raw.get(aid, [0] * NUM_PHASES)
        if not isinstance(row, list) or len(row) != NUM_PHASES:
            raise ScenarioError(f"current_portfolio.{aid}: expected {NUM_PHASES} phase counts")
        columns.append([_as_int(v, f"current_portfolio.{aid}[{i}]") for i, v in enumerate(row)])
    counts = tuple(tuple(columns[j][i] for j in range(len(area_ids))) for i in range(NUM_PHASES))
    return CurrentPortfolio(counts=counts)


def _parse_constraints(raw: dict, n_areas: int) -> BalanceConstraints:
    if not isinstance(raw, dict):
        raise ScenarioError("constraints: expected object")
    delta_raw = raw.get("max_annual_increase", 2.0)
    delta = math.inf if delta_raw is None else _as_number(delta_raw, "constraints.max_annual_increase")
    window = raw.get("enforce_window", [3, 20])
    if not isinstance(window, list) or len(window) != 2:
        raise ScenarioError("constraints.enforce_window: expected [year_start, year_end]")
    return BalanceConstraints(
        min_per_phase=_as_number_list(raw.get("min_per_phase", [0] * NUM_PHASES), "constraints.min_per_phase", NUM_PHASES),
        min_per_area=_as_number_list(raw.get("min_per_area", [0] * n_areas), "constraints.min_per_area", n_areas),
        min_launches=_as_number_list(raw.get("min_launches", [0] * n_areas), "constraints.min_launches", n_areas),
        max_annual_increase=delta,
        enforce_window=(_as_int(window[0], "enforce_window[0]"), _as_int(window[1], "enforce_window[1]")),
    )


def _parse_forecasts(raw: dict, horizon: int) -> Forecasts:
    if not isinstance(raw, dict):
        raise ScenarioError("forecasts: expected object")

    def series(key: str) -> tuple[float, ...] | None:
        value = raw.get(key)
        return None if value is None else _as_number_list(value, f"forecasts.{key}")

    def scalar(key: str) -> float | None:
        value = raw.get(key)
        return None if value is None else _as_number(value, f"forecasts.{key}")

    marketed = raw.get("marketed_revenue")
    if marketed is None:
        raise ScenarioError("missing required field: forecasts.marketed_revenue")
    return Forecasts(
        marketed_revenue=_as_number_list(marketed, "forecasts.marketed_revenue"),
        dev_revenue_override=series("dev_revenue_override"),
        revenue_target=series("revenue_target"),
        mean_revenue_target=scalar("mean_revenue_target"),
        budget=series("budget"),
        mean_budget=scalar("mean_budget"),
    )


def _parse_solver(raw: dict) -> SolverSettings:
    if not isinstance(raw, dict):
        raise ScenarioError("solver: expected object")
    horizon = _as_int(raw.get("horizon_years", 30), "solver.horizon_years")
    inflow = raw.get("inflow_years")
    sa_raw = raw.get("sa_schedule", {})
    if not isinstance(sa_raw, dict):
        raise ScenarioError("solver.sa_schedule: expected object")
    init_temp = sa_raw.get("initial_temp")
    schedule = SASchedule(
        initial_temp=None if init_temp is None else _as_number(init_temp, "sa_schedule.initial_temp"),
        cooling_factor=_as_number(sa_raw.get("cooling_factor", 0.95), "sa_schedule.cooling_factor"),
        iterations=_as_int(sa_raw.get("iterations", 100_000), "sa_schedule.iterations"),
        moves_per_temp=_as_int(sa_raw.get("moves_per_temp", 200), "sa_schedule.moves_per_temp"),
    )
    return SolverSettings(
        horizon_years=horizon,
        inflow_years=horizon if inflow is None else _as_int(inflow, "solver.inflow_years"),
        grid_step=_as_number(raw.get("grid_step", 1.0 / 12.0), "solver.grid_step"),
        mc_iterations=_as_int(raw.get("mc_iterations", 10_000), "solver.mc_iterations"),
        seed=_as_int(raw.get("seed", 12345), "solver.seed"),
        max_new_per_area_year=_as_int(raw.get("max_new_per_area_year", 8), "solver.max_new_per_area_year"),
        restarts=_as_int(raw.get("restarts", 4), "solver.restarts"),
        sa_schedule=schedule,
    )


def parse_scenario(text: str) -> ScenarioConfig:
    """Parse a scenario JSON document, apply defaults and validate.

    Raises ScenarioError with a position-annotated message on syntax errors,
    and with a description of every violation if the document is well-formed
    but invalid.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"syntax error at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ScenarioError("scenario document must be a JSON object")

    areas_raw = _require(raw, "areas", "")
    if not isinstance(areas_raw, list) or not areas_raw:
        raise ScenarioError("areas: expected a non-empty list")
    areas = tuple(_parse_area(a, i) for i, a in enumerate(areas_raw))
    area_ids = tuple(a.area_id for a in areas)
    if len(set(area_ids)) != len(area_ids):
        raise ScenarioError("areas: duplicate area ids")

    solver = _parse_solver(raw.get("solver", {}))
    cfg = ScenarioConfig(
        areas=areas,
        current_portfolio=_parse_portfolio(raw.get("current_portfolio", {}), area_ids),
        constraints=_parse_constraints(raw.get("constraints", {}), len(areas)),
        forecasts=_parse_forecasts(_require(raw, "forecasts", ""), solver.horizon_years),
        solver=solver,
    )
    problems = validate(cfg)
    if problems:
        raise ScenarioError("invalid scenario:\n" + "\n".join(f"  - {p}" for p in problems))
    return cfg


def load_scenario(path: str | Path) -> ScenarioConfig:
    return parse_scenario(Path(path).read_text())


def validate(cfg: ScenarioConfig) -> list[str]:
    """Return a list of invariant violations; empty means the config is valid."""
    out: list[str] = []
    T = cfg.solver.horizon_years

    for j, a in enumerate(cfg.areas):
        label = f"area {j + 1}"
        for i, d in enumerate(a.median_duration):
            if not d > 0:
                out.append(f"{label} phase {PHASES[i]}: duration must be > 0")
        for i, c in enumerate(a.median_cost):
            if c < 0:
                out.append(f"{label} phase {PHASES[i]}: cost must be >= 0")
        if a.sigma < 0:
            out.append(f"{label}: sigma must be >= 0")
        for i, p in enumerate(a.transition_prob):
            if not 0.0 < p <= 1.0:
                out.append(f"{label} phase {PHASES[i]}: probability out of range")
        if not 0.0 <= a.post_loe_fraction <= 1.0:
            out.append(f"{label}: post_loe_fraction must be in [0, 1]")
        if not a.ramp_up_years > 0:
            out.append(f"{label}: ramp_up_years must be > 0")
        if not a.exclusivity_years > a.ramp_up_years:
            out.append(f"{label}: exclusivity_years must exceed ramp_up_years")

    for i, row in enumerate(cfg.current_portfolio.counts):
        for j, k in enumerate(row):
            if k < 0:
                out.append(f"current_portfolio area {j + 1} phase {PHASES[i]}: count must be >= 0")

    c = cfg.constraints
    if any(v < 0 for v in c.min_per_phase):
        out.append("constraints.min_per_phase: minima must be >= 0")
    if any(v < 0 for v in c.min_per_area):
        out.append("constraints.min_per_area: minima must be >= 0")
    if any(v < 0 for v in c.min_launches):
        out.append("constraints.min_launches: minima must be >= 0")
    if c.max_annual_increase < 0:
        out.append("constraints.max_annual_increase: must be >= 0")
    lo, hi = c.enforce_window
    if not 1 <= lo <= hi <= T:
        out.append(f"constraints.enforce_window: need 1 <= start <= end <= {T}")

    f = cfg.forecasts
    named = {
        "marketed_revenue": f.marketed_revenue,
        "dev_revenue_override": f.dev_revenue_override,
        "revenue_target": f.revenue_target,
        "budget": f.budget,
    }
    for name, series in named.items():
        if series is None:
            continue
        if len(series) != T:
            out.append(f"{name}: expected {T} entries, got {len(series)}")
        if any(v < 0 for v in series):
            out.append(f"{name}: entries must be >= 0")
    for name, value in (("mean_revenue_target", f.mean_revenue_target), ("mean_budget", f.mean_budget)):
        if value is not None and value < 0:
            out.append(f"{name}: must be >= 0")

    s = cfg.solver
    if s.horizon_years < 1:
        out.append("solver.horizon_years: must be >= 1")
    if not 0 <= s.inflow_years <= s.horizon_years:
        out.append("solver.inflow_years: need 0 <= inflow_years <= horizon_years")
    ppy = round(1.0 / s.grid_step) if s.grid_step > 0 else 0
    if ppy < 1 or abs(1.0 / s.grid_step - ppy) > 1e-9:
        out.append("solver.grid_step: must divide 1.0 evenly")
    if s.mc_iterations < 1:
        out.append("solver.mc_iterations: must be >= 1")
    if s.max_new_per_area_year < 0:
        out.append("solver.max_new_per_area_year: must be >= 0")
    if s.restarts < 1:
        out.append("solver.restarts: must be >= 1")
    sa = s.sa_schedule
    if sa.initial_temp is not None and sa.initial_temp <= 0:
        out.append("sa_schedule.initial_temp: must be > 0 when given")
    if not 0.0 < sa.cooling_factor < 1.0:
        out.append("sa_schedule.cooling_factor: must be in (0, 1)")
    if sa.iterations < 0:
        out.append("sa_schedule.iterations: must be >= 0")
    if sa.moves_per_temp < 1:
        out.append("sa_schedule.moves_per_temp: must be >= 1")

    return out


def scenario_hash(cfg: ScenarioConfig) -> str:
    """Stable content hash of a scenario (used to key curve caches and runs)."""
    canonical = json.dumps(cfg.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()
