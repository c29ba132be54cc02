// Pre-submission validation. The query payload carries the full table
// preview and the expected answer, so for untruncated tables the client
// can run the exact checks the server will run: syntax, arity, column
// names, execution against the answer, and search-space membership.
// Server-side validation remains authoritative either way.

import {
  FUNCTIONS,
  MAX_PROGRAM_LEN,
  MRSyntaxError,
  answersMatch,
  describeResult,
  execute,
  inSearchSpace,
  parseProgram,
  parseSketch,
} from "./mr.js";
import type { AnnotationKind, PendingQuery } from "./types.js";

export type Verdict =
  | { status: "valid" }
  | { status: "invalid"; reason: string }
  | { status: "unverified"; reason: string };

export function validateFullProgram(query: PendingQuery, text: string): Verdict {
  let program;
  try {
    program = parseProgram(text);
  } catch (err) {
    if (err instanceof MRSyntaxError) {
      return { status: "invalid", reason: err.message };
    }
    throw err;
  }
  const unknown = program.find(
    (stmt) => stmt.column !== undefined && !query.columns.some((c) => c.name === stmt.column)
  );
  if (unknown) {
    return { status: "invalid", reason: `unknown column ${unknown.column} for this table` };
  }
  if (query.truncated_rows > 0) {
    return {
      status: "unverified",
      reason: "table preview is truncated; the server will run the full check",
    };
  }
  const result = execute(program, query.columns, query.rows);
  if (result.kind === "error") {
    return { status: "invalid", reason: `program fails to execute: ${result.reason}` };
  }
  if (!answersMatch(result, query.answer)) {
    return {
      status: "invalid",
      reason: `executes to ${describeResult(result)}, expected ${JSON.stringify(query.answer)}`,
    };
  }
  const outside = inSearchSpace(program, query.columns, query.rows, query.utterance);
  if (outside) {
    return { status: "invalid", reason: outside };
  }
  return { status: "valid" };
}

export function validateSketchText(text: string): Verdict {
  let funcs;
  try {
    funcs = parseSketch(text);
  } catch (err) {
    if (err instanceof MRSyntaxError) {
      return { status: "invalid", reason: err.message };
    }
    throw err;
  }
  if (funcs.length > MAX_PROGRAM_LEN) {
    return { status: "invalid", reason: `sketch longer than ${MAX_PROGRAM_LEN} statements` };
  }
  return { status: "valid" };
}

export function validatePayload(query: PendingQuery, kind: AnnotationKind, payload: string): Verdict {
  if (!query.allowed_kinds.includes(kind)) {
    return { status: "invalid", reason: `this query accepts ${query.allowed_kinds.join(", ")}` };
  }
  if (kind === "full_mr") {
    return validateFullProgram(query, payload);
  }
  return validateSketchText(payload);
}

/** Chip-based sketch builder: an ordered list of operator names. */
export class SketchBuilder {
  readonly ops: string[] = [];

  add(op: string): boolean {
    if (!(FUNCTIONS as readonly string[]).includes(op)) return false;
    if (this.ops.length >= MAX_PROGRAM_LEN) return false;
    this.ops.push(op);
    return true;
  }

  removeLast(): void {
    this.ops.pop();
  }

  clear(): void {
    this.ops.length = 0;
  }

  payload(): string {
    return this.ops.map((f) => `(${f} ...)`).join(" ");
  }
}
