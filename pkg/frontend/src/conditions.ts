export type Vibration = "WC" | "GT" | "WS" | "FR" | "MW";
export type Thermal = "h" | "c";

export interface Condition {
  readonly vibration: Vibration;
  readonly thermal: Thermal;
  readonly label: string;
}

export const VIBRATIONS: readonly Vibration[] = ["WC", "GT", "WS", "FR", "MW"];
export const VIBRATION_NAMES: Record<Vibration, string> = {
  WC: "Wood carving",
  GT: "Glass tapping",
  WS: "Wood striking",
  FR: "Fabric rubbing",
  MW: "Metal whooshing",
};

// Canonical reporting order: the hot block then the cold block.
export const CONDITIONS: readonly Condition[] = (["h", "c"] as const).flatMap((thermal) =>
  VIBRATIONS.map((vibration) => ({
    vibration,
    thermal,
    label: `${vibration}-${thermal}`,
  })),
);

export const CONDITION_LABELS: readonly string[] = CONDITIONS.map((c) => c.label);

export function conditionIndex(label: string): number {
  const index = CONDITION_LABELS.indexOf(label);
  if (index < 0) {
    throw new Error(`unknown condition label: ${label}`);
  }
  return index;
}

export const TRIALS_PER_SESSION = 50;
