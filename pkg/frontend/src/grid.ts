import { CONDITIONS, VIBRATION_NAMES } from "./conditions.js";
import { keyForIndex } from "./keyboard.js";

export interface ResponseGrid {
  element: HTMLElement;
  setEnabled(enabled: boolean): void;
  /** Programmatic activation used by keyboard shortcuts and tests. */
  select(index: number): void;
}

/**
 * The 10-button response grid: 5 vibrations x hot/cold in canonical order.
 * Buttons disable as a group after one selection until explicitly
 * re-enabled, so double clicks cannot submit twice.
 */
export function createResponseGrid(
  doc: Document,
  onSelect: (conditionLabel: string) => void,
): ResponseGrid {
  const element = doc.createElement("div");
  element.className = "response-grid";
  element.setAttribute("role", "group");
  element.setAttribute("aria-label", "perceived pattern");

  let enabled = false;
  const buttons: HTMLButtonElement[] = [];

  const setEnabled = (value: boolean) => {
    enabled = value;
    for (const button of buttons) {
      button.disabled = !value;
    }
    element.dataset["enabled"] = String(value);
  };

  const select = (index: number) => {
    const condition = CONDITIONS[index];
    if (!enabled || condition === undefined) return;
    setEnabled(false); // guard before any async work: one response per trial
    onSelect(condition.label);
  };

  CONDITIONS.forEach((condition, index) => {
    const button = doc.createElement("button");
    button.type = "button";
    button.className = `grid-button thermal-${condition.thermal}`;
    button.dataset["condition"] = condition.label;
    button.dataset["shortcut"] = keyForIndex(index);
    button.innerHTML =
      `<span class="key">${keyForIndex(index)}</span>` +
      `<span class="label">${condition.label}</span>` +
      `<span class="name">${VIBRATION_NAMES[condition.vibration]} · ` +
      `${condition.thermal === "h" ? "hot" : "cold"}</span>`;
    button.addEventListener("click", () => select(index));
    buttons.push(button);
    element.appendChild(button);
  });

  setEnabled(false);
  return { element, setEnabled, select };
}
