/** Tiny DOM construction helper; no framework, just typed createElement. */

export type Child = Node | string | null | undefined;

export interface Attrs {
  [key: string]: unknown;
}

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Attrs = {},
  ...children: Child[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (value === undefined || value === null) continue;
    if (key.startsWith("on") && typeof value === "function") {
      node.addEventListener(key.slice(2).toLowerCase(), value as EventListener);
    } else if (key === "class") {
      node.className = String(value);
    } else if (key === "disabled" || key === "checked" || key === "selected") {
      (node as any)[key] = Boolean(value);
    } else if (key === "value") {
      (node as any).value = String(value);
    } else {
      node.setAttribute(key, String(value));
    }
  }
  for (const child of children) {
    if (child === null || child === undefined) continue;
    node.append(child);
  }
  return node;
}

export function clear(node: HTMLElement): void {
  while (node.firstChild) node.removeChild(node.firstChild);
}

export function replaceChildren(node: HTMLElement, ...children: Child[]): void {
  clear(node);
  for (const child of children) {
    if (child !== null && child !== undefined) node.append(child);
  }
}
