// Keyboard-first controls: number keys pick the category, D deletes the
// hovered box, A accepts the image and advances.

export type KeyAction =
  | { type: 'select-category'; category: number }
  | { type: 'delete-hovered' }
  | { type: 'accept-image' };

export function interpretKey(key: string): KeyAction | null {
  if (/^[1-9]$/.test(key)) {
    return { type: 'select-category', category: Number(key) };
  }
  switch (key.toLowerCase()) {
    case 'd':
      return { type: 'delete-hovered' };
    case 'a':
      return { type: 'accept-image' };
    default:
      return null;
  }
}
