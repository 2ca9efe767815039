// JSON shapes of the engine's HTTP/SSE contract. These mirror the server
// responses exactly; the UI never reshapes server data before display.

export interface TranscriptEvent {
  seq: number;
  kind: string;
  payload: string;
  timestamp: string;
}

export interface ApiEvent {
  session_id: string;
  event: TranscriptEvent;
}

export interface TreeNodeJson {
  name: string;
  status: string;
  attributes: Record<string, string>;
  children: TreeNodeJson[];
}

export interface TreeResponse {
  text: string;
  revision: number;
  root: TreeNodeJson;
}

export interface NextOperation {
  kind: "terminal-command" | "gui-operation";
  content: string;
  step_index: number;
  expected_outcome: string;
}

export interface CreateSessionResponse {
  id: string;
  tree: string;
}

export interface ApiErrorBody {
  error: string;
  message: string;
  tree?: string;
}

export type InputCategory =
  | "user-intention"
  | "tool-output"
  | "http-web"
  | "source-code";

export const INPUT_CATEGORIES: InputCategory[] = [
  "user-intention",
  "tool-output",
  "http-web",
  "source-code",
];
