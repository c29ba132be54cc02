export type ColumnKind = "number" | "text";

export interface ColumnSpec {
  name: string;
  kind: ColumnKind;
}

export type Cell = number | string;

export interface Candidate {
  text: string;
  probability: number;
}

export interface PendingQuery {
  query_id: string;
  example_id: string;
  utterance: string;
  table_id: string;
  columns: ColumnSpec[];
  rows: Cell[][];
  truncated_rows: number;
  answer: Cell | Cell[];
  candidates: Candidate[];
  allowed_kinds: AnnotationKind[];
  iteration: number;
}

export type AnnotationKind = "full_mr" | "sketch";

export interface AnnotationPayload {
  example_id: string;
  kind: AnnotationKind;
  payload: string;
}

export interface ExperimentStatus {
  state: "idle" | "training" | "awaiting_annotations" | "done";
  iteration: number;
  pending_count: number;
  accuracies: { train?: number; dev?: number; test?: number } | null;
}

export type SubmitResult =
  | { ok: true }
  | { ok: false; status: number; reason: string };
