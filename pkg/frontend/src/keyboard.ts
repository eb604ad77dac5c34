// Keys 1..9,0 select the 10 response-grid entries in display order.
const KEY_ORDER = ["1", "2", "3", "4", "5", "6", "7", "8", "9", "0"] as const;

export function indexForKey(key: string): number | null {
  const index = (KEY_ORDER as readonly string[]).indexOf(key);
  return index >= 0 ? index : null;
}

export function keyForIndex(index: number): string {
  const key = KEY_ORDER[index];
  if (key === undefined) {
    throw new Error(`no shortcut for grid index ${index}`);
  }
  return key;
}

function isTypingTarget(target: EventTarget | null): boolean {
  return (
    target instanceof HTMLInputElement ||
    target instanceof HTMLTextAreaElement ||
    (target instanceof HTMLElement && target.isContentEditable)
  );
}

/** Routes number keys to the handler; returns a detach function. */
export function attachKeyboard(
  doc: Document,
  handler: (gridIndex: number) => void,
): () => void {
  const listener = (event: KeyboardEvent) => {
    if (event.ctrlKey || event.metaKey || event.altKey) return;
    if (isTypingTarget(event.target)) return;
    const index = indexForKey(event.key);
    if (index === null) return;
    event.preventDefault();
    handler(index);
  };
  doc.addEventListener("keydown", listener);
  return () => doc.removeEventListener("keydown", listener);
}
