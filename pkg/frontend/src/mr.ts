// Client-side mirror of the table program language: enough of the parser
// and executor to pre-validate an annotation before it goes to the server.

import type { Cell, ColumnSpec } from "./types.js";

export const FUNCTIONS = [
  "filter_eq",
  "filter_greater",
  "filter_less",
  "hop",
  "count",
  "argmax",
  "argmin",
  "maximum",
  "minimum",
] as const;

export type FuncName = (typeof FUNCTIONS)[number];

export const MAX_PROGRAM_LEN = 4;

// argument layout per operator: rows, then optionally literal and column
const SIGNATURES: Record<FuncName, { args: string[]; result: "rows" | "number" | "values" }> = {
  filter_eq: { args: ["rows", "literal", "column"], result: "rows" },
  filter_greater: { args: ["rows", "literal", "column"], result: "rows" },
  filter_less: { args: ["rows", "literal", "column"], result: "rows" },
  hop: { args: ["rows", "column"], result: "values" },
  count: { args: ["rows"], result: "number" },
  argmax: { args: ["rows", "column"], result: "rows" },
  argmin: { args: ["rows", "column"], result: "rows" },
  maximum: { args: ["rows", "column"], result: "number" },
  minimum: { args: ["rows", "column"], result: "number" },
};

const NUMERIC_COLUMN_FUNCS = new Set<FuncName>([
  "filter_greater",
  "filter_less",
  "argmax",
  "argmin",
  "maximum",
  "minimum",
]);

export interface Statement {
  func: FuncName;
  rows: { kind: "all" } | { kind: "var"; index: number };
  literal?: Cell;
  column?: string;
}

export type Program = Statement[];

export class MRSyntaxError extends Error {
  constructor(message: string, public stmtIndex: number = -1) {
    super(stmtIndex >= 0 ? `statement ${stmtIndex}: ${message}` : message);
  }
}

type Token = { tag: "(" | ")" | "atom" | "string"; text: string };

export function tokenizeSurface(text: string): Token[] {
  const tokens: Token[] = [];
  let i = 0;
  while (i < text.length) {
    const ch = text[i];
    if (/\s/.test(ch)) {
      i += 1;
    } else if (ch === "(" || ch === ")") {
      tokens.push({ tag: ch, text: ch });
      i += 1;
    } else if (ch === "`") {
      const j = text.indexOf("'", i + 1);
      if (j < 0) throw new MRSyntaxError("unterminated quoted string");
      tokens.push({ tag: "string", text: text.slice(i + 1, j) });
      i = j + 1;
    } else {
      let j = i;
      while (j < text.length && !/[\s()`']/.test(text[j])) j += 1;
      if (j === i) throw new MRSyntaxError(`unexpected character ${text[i]}`);
      tokens.push({ tag: "atom", text: text.slice(i, j) });
      i = j;
    }
  }
  return tokens;
}

function parseNumber(token: string): number | null {
  if (/^-?\d+$/.test(token)) return parseInt(token, 10);
  if (/^-?\d*\.\d+$/.test(token)) return parseFloat(token);
  return null;
}

export function parseProgram(text: string): Program {
  const tokens = tokenizeSurface(text);
  const stmts: Program = [];
  const resultKinds: string[] = [];
  let i = 0;
  while (i < tokens.length) {
    const stmtIndex = stmts.length;
    if (tokens[i].tag !== "(") throw new MRSyntaxError("expected '('", stmtIndex);
    const group: Token[] = [];
    let j = i + 1;
    while (j < tokens.length && tokens[j].tag !== ")") {
      if (tokens[j].tag === "(") {
        throw new MRSyntaxError("nested statements are not allowed", stmtIndex);
      }
      group.push(tokens[j]);
      j += 1;
    }
    if (j >= tokens.length) throw new MRSyntaxError("missing ')'", stmtIndex);
    if (!group.length || group[0].tag !== "atom") {
      throw new MRSyntaxError("statement must start with a function name", stmtIndex);
    }
    const func = group[0].text as FuncName;
    if (!(func in SIGNATURES)) {
      throw new MRSyntaxError(`unknown function ${group[0].text}`, stmtIndex);
    }
    const sig = SIGNATURES[func];
    if (group.length - 1 !== sig.args.length) {
      throw new MRSyntaxError(
        `${func} takes ${sig.args.length} arguments, got ${group.length - 1}`,
        stmtIndex
      );
    }
    const stmt: Statement = { func, rows: { kind: "all" } };
    sig.args.forEach((kind, argIdx) => {
      const token = group[argIdx + 1];
      if (kind === "rows") {
        if (token.tag === "atom" && token.text === "all_rows") {
          stmt.rows = { kind: "all" };
        } else if (token.tag === "atom" && /^v\d+$/.test(token.text)) {
          const index = parseInt(token.text.slice(1), 10);
          if (index >= stmtIndex) {
            throw new MRSyntaxError(`v${index} is not defined yet`, stmtIndex);
          }
          if (resultKinds[index] !== "rows") {
            throw new MRSyntaxError(`v${index} is not a row set`, stmtIndex);
          }
          stmt.rows = { kind: "var", index };
        } else {
          throw new MRSyntaxError(`expected row set, got ${token.text}`, stmtIndex);
        }
      } else if (kind === "column") {
        if (token.tag !== "string") {
          throw new MRSyntaxError(`expected quoted column name, got ${token.text}`, stmtIndex);
        }
        stmt.column = token.text;
      } else {
        if (token.tag === "string") {
          stmt.literal = token.text;
        } else {
          const value = parseNumber(token.text);
          if (value === null) {
            throw new MRSyntaxError(`expected literal, got ${token.text}`, stmtIndex);
          }
          stmt.literal = value;
        }
      }
    });
    stmts.push(stmt);
    resultKinds.push(sig.result);
    i = j + 1;
  }
  if (!stmts.length) throw new MRSyntaxError("empty program");
  return stmts;
}

export function printProgram(program: Program): string {
  return program
    .map((stmt) => {
      const parts: string[] = [stmt.func];
      parts.push(stmt.rows.kind === "all" ? "all_rows" : `v${stmt.rows.index}`);
      if (stmt.literal !== undefined) {
        parts.push(typeof stmt.literal === "string" ? `\`${stmt.literal}'` : String(stmt.literal));
      }
      if (stmt.column !== undefined) parts.push(`\`${stmt.column}'`);
      return `(${parts.join(" ")})`;
    })
    .join(" ");
}

export function sketchOf(program: Program): FuncName[] {
  return program.map((s) => s.func);
}

export function parseSketch(text: string): FuncName[] {
  const tokens = tokenizeSurface(text);
  const funcs: FuncName[] = [];
  let i = 0;
  while (i < tokens.length) {
    if (tokens[i].tag !== "(") throw new MRSyntaxError("expected '('", funcs.length);
    const group: Token[] = [];
    let j = i + 1;
    while (j < tokens.length && tokens[j].tag !== ")") {
      group.push(tokens[j]);
      j += 1;
    }
    if (j >= tokens.length) throw new MRSyntaxError("missing ')'", funcs.length);
    if (!group.length || !(group[0].text in SIGNATURES)) {
      throw new MRSyntaxError(`unknown function ${group[0]?.text ?? ""}`, funcs.length);
    }
    for (const extra of group.slice(1)) {
      if (!(extra.tag === "atom" && /^\.+$/.test(extra.text))) {
        throw new MRSyntaxError(`unexpected token ${extra.text} in sketch`, funcs.length);
      }
    }
    funcs.push(group[0].text as FuncName);
    i = j + 1;
  }
  if (!funcs.length) throw new MRSyntaxError("empty sketch");
  return funcs;
}

export function printSketch(funcs: string[]): string {
  return funcs.map((f) => `(${f} ...)`).join(" ");
}

// ---------------------------------------------------------------------------
// Execution over the preview table

export type ExecResult =
  | { kind: "rows"; indices: number[] }
  | { kind: "number"; value: number }
  | { kind: "values"; values: Cell[] }
  | { kind: "error"; reason: string };

function coerceNumber(value: Cell): number | null {
  if (typeof value === "number") return value;
  return parseNumber(value.trim());
}

export function execute(program: Program, columns: ColumnSpec[], rows: Cell[][]): ExecResult {
  const colIndex = new Map(columns.map((c, i) => [c.name, i] as const));
  const colKind = new Map(columns.map((c) => [c.name, c.kind] as const));
  const memory: ExecResult[] = [];
  for (let s = 0; s < program.length; s += 1) {
    const stmt = program[s];
    let indices: number[];
    if (stmt.rows.kind === "all") {
      indices = rows.map((_, i) => i);
    } else {
      const prior = memory[stmt.rows.index];
      if (prior.kind !== "rows") return { kind: "error", reason: `v${stmt.rows.index} is not a row set` };
      indices = prior.indices;
    }
    let value: ExecResult;
    if (stmt.func === "count") {
      value = { kind: "number", value: indices.length };
    } else {
      const column = stmt.column as string;
      if (!colIndex.has(column)) {
        return { kind: "error", reason: `unknown column ${column} (statement ${s})` };
      }
      const ci = colIndex.get(column) as number;
      const numeric = colKind.get(column) === "number";
      const cells = indices.map((r) => rows[r][ci]);
      if (stmt.func === "filter_eq") {
        let kept: number[];
        if (numeric) {
          const target = coerceNumber(stmt.literal as Cell);
          kept = target === null ? [] : indices.filter((r) => rows[r][ci] === target);
        } else {
          const target =
            typeof stmt.literal === "string" ? stmt.literal : String(stmt.literal);
          kept = indices.filter((r) => rows[r][ci] === target);
        }
        value = { kind: "rows", indices: kept };
      } else if (stmt.func === "filter_greater" || stmt.func === "filter_less") {
        if (!numeric) return { kind: "error", reason: `numeric comparison on text column ${column} (statement ${s})` };
        const target = coerceNumber(stmt.literal as Cell);
        if (target === null) return { kind: "error", reason: `non-numeric literal (statement ${s})` };
        const kept = indices.filter((r) =>
          stmt.func === "filter_greater" ? (rows[r][ci] as number) > target : (rows[r][ci] as number) < target
        );
        value = { kind: "rows", indices: kept };
      } else if (stmt.func === "hop") {
        if (!indices.length) return { kind: "error", reason: `empty row set (statement ${s})` };
        value = { kind: "values", values: cells };
      } else {
        if (!numeric) return { kind: "error", reason: `numeric operator on text column ${column} (statement ${s})` };
        if (!indices.length) return { kind: "error", reason: `empty row set (statement ${s})` };
        const numbers = cells as number[];
        const extreme =
          stmt.func === "maximum" || stmt.func === "argmax"
            ? Math.max(...numbers)
            : Math.min(...numbers);
        if (stmt.func === "maximum" || stmt.func === "minimum") {
          value = { kind: "number", value: extreme };
        } else {
          value = { kind: "rows", indices: indices.filter((r) => rows[r][ci] === extreme) };
        }
      }
    }
    memory.push(value);
  }
  return memory[memory.length - 1];
}

function multiset(values: Cell[]): Map<string, number> {
  const out = new Map<string, number>();
  for (const v of values) {
    const key = typeof v === "number" ? `n:${v}` : `t:${v}`;
    out.set(key, (out.get(key) ?? 0) + 1);
  }
  return out;
}

export function answersMatch(result: ExecResult, answer: Cell | Cell[]): boolean {
  if (result.kind === "error" || result.kind === "rows") return false;
  const got: Cell[] = result.kind === "number" ? [result.value] : result.values;
  const want: Cell[] = Array.isArray(answer) ? answer : [answer];
  if (got.length === 1 && want.length === 1) {
    return got[0] === want[0];
  }
  const a = multiset(got);
  const b = multiset(want);
  if (a.size !== b.size) return false;
  for (const [key, count] of a) if (b.get(key) !== count) return false;
  return true;
}

export function describeResult(result: ExecResult): string {
  if (result.kind === "error") return `error: ${result.reason}`;
  if (result.kind === "rows") return `a set of ${result.indices.length} rows`;
  if (result.kind === "number") return String(result.value);
  return JSON.stringify(result.values);
}

// ---------------------------------------------------------------------------
// Search-space membership (mirrors the parser's literal pools)

export function tokenize(text: string): string[] {
  return text.toLowerCase().match(/[a-z0-9]+(?:\.[0-9]+)?/g) ?? [];
}

function valueInUtterance(value: Cell, tokens: string[]): boolean {
  const needle = tokenize(typeof value === "string" ? value : String(value));
  if (!needle.length) return false;
  outer: for (let i = 0; i + needle.length <= tokens.length; i += 1) {
    for (let k = 0; k < needle.length; k += 1) {
      if (tokens[i + k] !== needle[k]) continue outer;
    }
    return true;
  }
  return false;
}

export function literalPools(
  columns: ColumnSpec[],
  rows: Cell[][],
  utterance: string
): Map<string, Cell[]> {
  const tokens = tokenize(utterance);
  const pools = new Map<string, Cell[]>();
  columns.forEach((col, ci) => {
    const distinct: Cell[] = [];
    const seen = new Set<string>();
    for (const row of rows) {
      const key = typeof row[ci] === "number" ? `n:${row[ci]}` : `t:${row[ci]}`;
      if (!seen.has(key)) {
        seen.add(key);
        distinct.push(row[ci]);
      }
    }
    const matched = distinct.filter((v) => valueInUtterance(v, tokens));
    pools.set(col.name, matched.length ? matched : distinct);
  });
  return pools;
}

/** Whether the parser's constrained search space can produce this program
 * for this question (column kinds and literal pools). */
export function inSearchSpace(
  program: Program,
  columns: ColumnSpec[],
  rows: Cell[][],
  utterance: string
): string | null {
  if (program.length > MAX_PROGRAM_LEN) {
    return `programs are limited to ${MAX_PROGRAM_LEN} statements`;
  }
  const pools = literalPools(columns, rows, utterance);
  const kinds = new Map(columns.map((c) => [c.name, c.kind] as const));
  for (let s = 0; s < program.length; s += 1) {
    const stmt = program[s];
    if (stmt.column !== undefined) {
      if (!kinds.has(stmt.column)) return `unknown column ${stmt.column} (statement ${s})`;
      if (NUMERIC_COLUMN_FUNCS.has(stmt.func) && kinds.get(stmt.column) !== "number") {
        return `${stmt.func} needs a number column (statement ${s})`;
      }
    }
    if (stmt.literal !== undefined) {
      const pool = pools.get(stmt.column as string) ?? [];
      const hit = pool.some((v) =>
        typeof v === "number" && typeof stmt.literal === "string"
          ? v === coerceNumber(stmt.literal)
          : v === stmt.literal
      );
      if (!hit) {
        return `literal ${JSON.stringify(stmt.literal)} is outside the parser's candidates for ${stmt.column} (statement ${s})`;
      }
    }
  }
  return null;
}
