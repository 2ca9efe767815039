import type { TreeNodeJson, TreeResponse } from "./types.js";

export interface TreeViewNode {
  name: string;
  status: string;
  attributes: Record<string, string>;
  depth: number;
  children: TreeViewNode[];
}

export interface TreeViewModel {
  revision: number;
  /** Byte-identical copy of the server's canonical tree text. */
  text: string;
  root: TreeViewNode;
}

/** Build the display model; content comes from the server untouched. */
export function buildViewModel(response: TreeResponse): TreeViewModel {
  const build = (node: TreeNodeJson, depth: number): TreeViewNode => ({
    name: node.name,
    status: node.status,
    attributes: { ...node.attributes },
    depth,
    children: node.children.map((child) => build(child, depth + 1)),
  });
  return {
    revision: response.revision,
    text: response.text,
    root: build(response.root, 0),
  };
}

/** The text panel shows exactly what the server serialized. */
export function renderedText(model: TreeViewModel): string {
  return model.text;
}

const STATUS_BADGES: Record<string, string> = {
  todo: "badge-todo",
  "in-progress": "badge-progress",
  completed: "badge-done",
  failed: "badge-failed",
  blocked: "badge-blocked",
  "not-applicable": "badge-na",
};

export function badgeClass(status: string): string {
  return STATUS_BADGES[status] ?? "badge-todo";
}

export function flatten(model: TreeViewModel): TreeViewNode[] {
  const out: TreeViewNode[] = [];
  const walk = (node: TreeViewNode) => {
    out.push(node);
    node.children.forEach(walk);
  };
  walk(model.root);
  return out;
}
