// Wire types for the serve endpoints, plus tolerant parsing: the console
// renders only what the service sends and drops anything malformed.

export interface TelemetryFrame {
  t: number;
  s: number;
  n: number;
  delta_phi: number;
  v: number;
  delta: number;
  d_left: number;
  d_right: number;
  crashed: boolean;
  x: number;
  y: number;
  heading: number;
  params_hash: string;
  last_decision: string | null;
  last_update: ParamUpdateSummary | null;
}

export interface ParamUpdateSummary {
  update: Record<string, number>;
  warnings: string[];
}

export interface JournalEntry {
  t: number;
  source: string;
  update: Record<string, number>;
  applied: Record<string, number>;
  warnings: string[];
}

export interface TrackGeometry {
  centerline: [number, number][];
  left_wall: [number, number][];
  right_wall: [number, number][];
  total_length: number;
  closed: boolean;
}

const FRAME_NUMBERS = [
  "t", "s", "n", "delta_phi", "v", "delta", "d_left", "d_right", "x", "y", "heading",
] as const;

export function parseFrame(raw: unknown): TelemetryFrame | null {
  if (typeof raw !== "object" || raw === null) return null;
  const source = raw as Record<string, unknown>;
  for (const key of FRAME_NUMBERS) {
    if (typeof source[key] !== "number" || !Number.isFinite(source[key] as number)) return null;
  }
  if (typeof source.crashed !== "boolean") return null;
  if (typeof source.params_hash !== "string") return null;
  return {
    t: source.t as number,
    s: source.s as number,
    n: source.n as number,
    delta_phi: source.delta_phi as number,
    v: source.v as number,
    delta: source.delta as number,
    d_left: source.d_left as number,
    d_right: source.d_right as number,
    crashed: source.crashed as boolean,
    x: source.x as number,
    y: source.y as number,
    heading: source.heading as number,
    params_hash: source.params_hash,
    last_decision: typeof source.last_decision === "string" ? source.last_decision : null,
    last_update: parseUpdateSummary(source.last_update),
  };
}

function parseUpdateSummary(raw: unknown): ParamUpdateSummary | null {
  if (typeof raw !== "object" || raw === null) return null;
  const source = raw as Record<string, unknown>;
  if (typeof source.update !== "object" || source.update === null) return null;
  const update: Record<string, number> = {};
  for (const [key, value] of Object.entries(source.update as Record<string, unknown>)) {
    if (typeof value === "number" && Number.isFinite(value)) update[key] = value;
  }
  const warnings = Array.isArray(source.warnings)
    ? (source.warnings as unknown[]).filter((w): w is string => typeof w === "string")
    : [];
  return { update, warnings };
}

export function parseTrack(raw: unknown): TrackGeometry | null {
  if (typeof raw !== "object" || raw === null) return null;
  const source = raw as Record<string, unknown>;
  const lines = ["centerline", "left_wall", "right_wall"] as const;
  for (const key of lines) {
    if (!Array.isArray(source[key]) || (source[key] as unknown[]).length < 3) return null;
  }
  return {
    centerline: source.centerline as [number, number][],
    left_wall: source.left_wall as [number, number][],
    right_wall: source.right_wall as [number, number][],
    total_length: typeof source.total_length === "number" ? source.total_length : 0,
    closed: source.closed !== false,
  };
}
