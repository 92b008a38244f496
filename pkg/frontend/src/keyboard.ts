// One keystroke per decision: moderation throughput matters.

export type KeyAction =
  | { kind: "label"; label: 0 | 1 }
  | { kind: "skip" }
  | { kind: "reveal" };

export function actionForKey(key: string): KeyAction | null {
  switch (key.toLowerCase()) {
    case "h":
      return { kind: "label", label: 1 };
    case "b":
      return { kind: "label", label: 0 };
    case "s":
      return { kind: "skip" };
    case "r":
      return { kind: "reveal" };
    default:
      return null;
  }
}
