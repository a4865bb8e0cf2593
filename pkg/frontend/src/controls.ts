import type { MetricBoundOverride, NetworkDoc, SolveOverrides } from "./types.js";

/**
 * The what-if control panel: energy price, the floor on free-flowing river
 * length, a cap on flooded households, and two hard toggles (no railway
 * flooding, no protected-area flooding).
 *
 * The panel edits values relative to the run it would amend. A solve
 * request carries only the controls the user actually changed, matching
 * the service's override semantics: absent keys inherit the baseline run.
 * Validation enforces the ranges the service advertises on GET network,
 * so a request that would be rejected is never submitted.
 */

export const METRIC_HOUSEHOLDS = "households";
export const METRIC_RAILWAY_M = "railway_m";
export const METRIC_PROTECTED_KM2 = "protected_area_km2";

export type ControlId =
  | "energyPrice"
  | "minFreeFlowingKm"
  | "maxHouseholds"
  | "blockRailwayFlooding"
  | "blockProtectedAreas";

export interface ControlValues {
  energyPrice: number;
  minFreeFlowingKm: number;
  /** null = no cap. */
  maxHouseholds: number | null;
  blockRailwayFlooding: boolean;
  blockProtectedAreas: boolean;
}

export type ControlErrors = Partial<Record<ControlId, string>>;

export type ValidationResult =
  | { ok: true; overrides: SolveOverrides }
  | { ok: false; errors: ControlErrors };

interface MetricState {
  boundKind: "max" | "min";
  bound: number | null;
}

/** Constraint settings in force for some run, reconstructed from its log. */
export interface EffectiveControls {
  energyPriceUsdPerKwh: number;
  minFreeFlowingKm: number;
  metricBounds: Map<string, MetricState>;
}

export function baseControls(network: NetworkDoc): EffectiveControls {
  const c = network.controls;
  const metricBounds = new Map<string, MetricState>();
  for (const m of c.metrics) {
    metricBounds.set(m.id, { boundKind: m.bound_kind, bound: m.value });
  }
  return {
    energyPriceUsdPerKwh: c.energy_price_usd_per_kwh.value ?? 0,
    minFreeFlowingKm: c.min_free_flowing_km.value ?? 0,
    metricBounds,
  };
}

/**
 * Overlay one run's override document. Runs form a chain (each amends its
 * baseline), so replaying the chain from the base configuration gives the
 * settings a run was actually solved under.
 */
export function applyRunOverrides(
  eff: EffectiveControls,
  overrides: Record<string, unknown>
): EffectiveControls {
  const next: EffectiveControls = {
    energyPriceUsdPerKwh: eff.energyPriceUsdPerKwh,
    minFreeFlowingKm: eff.minFreeFlowingKm,
    metricBounds: new Map(eff.metricBounds),
  };
  const price = overrides["energy_price_usd_per_kwh"];
  if (typeof price === "number") {
    next.energyPriceUsdPerKwh = price;
  }
  const floor = overrides["min_free_flowing_km"];
  if (typeof floor === "number") {
    next.minFreeFlowingKm = floor;
  }
  const bounds = overrides["metric_bounds"];
  if (Array.isArray(bounds)) {
    for (const raw of bounds) {
      if (typeof raw !== "object" || raw === null) {
        continue;
      }
      const doc = raw as Record<string, unknown>;
      const id = doc["id"];
      if (typeof id !== "string") {
        continue;
      }
      const kind = doc["bound_kind"] === "min" ? "min" : "max";
      const bound = typeof doc["bound"] === "number" ? doc["bound"] : null;
      next.metricBounds.set(id, { boundKind: kind, bound });
    }
  }
  return next;
}

function maxBound(eff: EffectiveControls, id: string): number | null {
  const m = eff.metricBounds.get(id);
  if (!m || m.boundKind !== "max") {
    return null;
  }
  return m.bound;
}

/** Panel values matching the effective settings of a run. */
export function controlValuesFrom(eff: EffectiveControls): ControlValues {
  const railway = maxBound(eff, METRIC_RAILWAY_M);
  const protectedArea = maxBound(eff, METRIC_PROTECTED_KM2);
  return {
    energyPrice: eff.energyPriceUsdPerKwh,
    minFreeFlowingKm: eff.minFreeFlowingKm,
    maxHouseholds: maxBound(eff, METRIC_HOUSEHOLDS),
    blockRailwayFlooding: railway !== null && railway <= 0,
    blockProtectedAreas: protectedArea !== null && protectedArea <= 0,
  };
}

export interface NumericRange {
  min: number;
  max: number | null;
}

/** Input ranges as advertised by the service; inputs clamp to these. */
export function controlRanges(network: NetworkDoc): Record<
  "energyPrice" | "minFreeFlowingKm" | "maxHouseholds",
  NumericRange
> {
  const c = network.controls;
  const households = c.metrics.find((m) => m.id === METRIC_HOUSEHOLDS);
  return {
    energyPrice: { min: c.energy_price_usd_per_kwh.min, max: null },
    minFreeFlowingKm: {
      min: c.min_free_flowing_km.min,
      max: c.min_free_flowing_km.max ?? null,
    },
    maxHouseholds: households ? { min: households.min, max: households.max } : { min: 0, max: null },
  };
}

function checkRange(value: number, range: NumericRange, unit: string): string | null {
  if (!Number.isFinite(value)) {
    return "enter a number";
  }
  if (value < range.min) {
    return `must be at least ${range.min}${unit}`;
  }
  if (range.max !== null && value > range.max) {
    return `must be at most ${range.max.toFixed(1)}${unit}`;
  }
  return null;
}

/**
 * Check panel values against the advertised ranges and reduce them to the
 * override document for POST solve. Only values that differ from the
 * effective settings of the run being amended are included.
 */
export function validateControls(
  values: ControlValues,
  network: NetworkDoc,
  eff: EffectiveControls
): ValidationResult {
  const ranges = controlRanges(network);
  const errors: ControlErrors = {};

  const priceError = checkRange(values.energyPrice, ranges.energyPrice, " $/kWh");
  if (priceError) {
    errors.energyPrice = priceError;
  }
  const floorError = checkRange(values.minFreeFlowingKm, ranges.minFreeFlowingKm, " km");
  if (floorError) {
    errors.minFreeFlowingKm = floorError;
  }
  if (values.maxHouseholds !== null) {
    const hhError = checkRange(values.maxHouseholds, ranges.maxHouseholds, " households");
    if (hhError) {
      errors.maxHouseholds = hhError;
    }
  }
  if (Object.keys(errors).length > 0) {
    return { ok: false, errors };
  }

  const overrides: SolveOverrides = {};
  const bounds: MetricBoundOverride[] = [];
  if (values.energyPrice !== eff.energyPriceUsdPerKwh) {
    overrides.energy_price_usd_per_kwh = values.energyPrice;
  }
  if (values.minFreeFlowingKm !== eff.minFreeFlowingKm) {
    overrides.min_free_flowing_km = values.minFreeFlowingKm;
  }
  if (values.maxHouseholds !== maxBound(eff, METRIC_HOUSEHOLDS)) {
    bounds.push({ id: METRIC_HOUSEHOLDS, bound_kind: "max", bound: values.maxHouseholds });
  }
  const current = controlValuesFrom(eff);
  if (values.blockRailwayFlooding !== current.blockRailwayFlooding) {
    bounds.push({
      id: METRIC_RAILWAY_M,
      bound_kind: "max",
      bound: values.blockRailwayFlooding ? 0 : null,
    });
  }
  if (values.blockProtectedAreas !== current.blockProtectedAreas) {
    bounds.push({
      id: METRIC_PROTECTED_KM2,
      bound_kind: "max",
      bound: values.blockProtectedAreas ? 0 : null,
    });
  }
  if (bounds.length > 0) {
    overrides.metric_bounds = bounds;
  }
  return { ok: true, overrides };
}

/**
 * Point a rejected solve at the control it most likely came from. The
 * service reports validation failures as prose; this is a display heuristic
 * only, and unmatched messages surface at the form level.
 */
export function attributeServerError(message: string): ControlId | null {
  const m = message.toLowerCase();
  if (m.includes("free-flowing") || m.includes("free flowing")) {
    return "minFreeFlowingKm";
  }
  if (m.includes("price")) {
    return "energyPrice";
  }
  if (m.includes(METRIC_HOUSEHOLDS)) {
    return "maxHouseholds";
  }
  if (m.includes("railway")) {
    return "blockRailwayFlooding";
  }
  if (m.includes("protected")) {
    return "blockProtectedAreas";
  }
  return null;
}
