import { describe, expect, it } from "vitest";

import {
  answersMatch,
  execute,
  parseProgram,
  parseSketch,
  printProgram,
  printSketch,
  sketchOf,
} from "../src/mr.js";
import { SketchBuilder, validatePayload, validateSketchText } from "../src/validate.js";
import type { PendingQuery } from "../src/types.js";

const medalQuery: PendingQuery = {
  query_id: "q1",
  example_id: "e1",
  utterance: "which country is the number one gold medal winner",
  table_id: "medals",
  columns: [
    { name: "Country", kind: "text" },
    { name: "Gold", kind: "number" },
    { name: "Year", kind: "number" },
  ],
  rows: [
    ["norway", 10, 2006],
    ["china", 12, 2007],
    ["kenya", 5, 2007],
  ],
  truncated_rows: 0,
  answer: "china",
  candidates: [],
  allowed_kinds: ["full_mr", "sketch"],
  iteration: 1,
};

describe("program parsing", () => {
  it("round-trips the canonical surface form", () => {
    const text = "(argmax all_rows `Gold') (hop v0 `Country')";
    const program = parseProgram(text);
    expect(printProgram(program)).toBe(text);
    expect(sketchOf(program)).toEqual(["argmax", "hop"]);
  });

  it("rejects malformed text with a statement index", () => {
    expect(() => parseProgram("(count v0)")).toThrowError(/statement 0/);
    expect(() => parseProgram("(frobnicate all_rows)")).toThrowError(/unknown function/);
    expect(() => parseProgram("(count all_rows `Gold')")).toThrowError(/arguments/);
    expect(() => parseProgram("(count all_rows")).toThrowError(/missing/);
  });

  it("parses quoted literals and bare numbers", () => {
    const program = parseProgram("(filter_eq all_rows `2007' `Year') (count v0)");
    expect(program[0].literal).toBe("2007");
    const numeric = parseProgram("(filter_eq all_rows 2007 `Year') (count v0)");
    expect(numeric[0].literal).toBe(2007);
  });
});

describe("execution", () => {
  it("matches filter, count, aggregate and hop semantics", () => {
    const { columns, rows } = medalQuery;
    const count = execute(parseProgram("(filter_eq all_rows 2007 `Year') (count v0)"), columns, rows);
    expect(count).toEqual({ kind: "number", value: 2 });
    const hop = execute(parseProgram("(argmax all_rows `Gold') (hop v0 `Country')"), columns, rows);
    expect(hop).toEqual({ kind: "values", values: ["china"] });
    const err = execute(parseProgram("(filter_greater all_rows 99 `Gold') (hop v0 `Country')"), columns, rows);
    expect(err.kind).toBe("error");
  });

  it("compares answers exactly, list answers as multisets", () => {
    expect(answersMatch({ kind: "number", value: 2 }, 2)).toBe(true);
    expect(answersMatch({ kind: "values", values: ["china"] }, "china")).toBe(true);
    expect(answersMatch({ kind: "values", values: ["a", "b"] }, ["b", "a"])).toBe(true);
    expect(answersMatch({ kind: "values", values: ["a", "a"] }, ["a"])).toBe(false);
    expect(answersMatch({ kind: "error", reason: "x" }, 2)).toBe(false);
  });
});

describe("full-program validation", () => {
  it("accepts the gold program", () => {
    const verdict = validatePayload(medalQuery, "full_mr", "(argmax all_rows `Gold') (hop v0 `Country')");
    expect(verdict.status).toBe("valid");
  });

  it("rejects wrong-answer programs with the executed value", () => {
    const verdict = validatePayload(medalQuery, "full_mr", "(count all_rows)");
    expect(verdict.status).toBe("invalid");
    if (verdict.status === "invalid") {
      expect(verdict.reason).toContain("expected");
    }
  });

  it("rejects unknown columns and syntax errors", () => {
    expect(validatePayload(medalQuery, "full_mr", "(hop all_rows `Bronze')").status).toBe("invalid");
    expect(validatePayload(medalQuery, "full_mr", "(argmax all_rows").status).toBe("invalid");
  });

  it("rejects literals outside the parser's candidate pool", () => {
    // executes to the right answer, but 11 is not a Gold cell value
    const verdict = validatePayload(
      medalQuery,
      "full_mr",
      "(filter_greater all_rows 11 `Gold') (hop v0 `Country')"
    );
    expect(verdict.status).toBe("invalid");
    if (verdict.status === "invalid") {
      expect(verdict.reason).toContain("candidates");
    }
  });

  it("downgrades to unverified when the table preview is truncated", () => {
    const truncated = { ...medalQuery, truncated_rows: 3 };
    const verdict = validatePayload(truncated, "full_mr", "(argmax all_rows `Gold') (hop v0 `Country')");
    expect(verdict.status).toBe("unverified");
  });

  it("rejects kinds the query does not allow", () => {
    const sketchOnly = { ...medalQuery, allowed_kinds: ["sketch"] as ("sketch" | "full_mr")[] };
    const verdict = validatePayload(sketchOnly, "full_mr", "(count all_rows)");
    expect(verdict.status).toBe("invalid");
  });
});

describe("sketches", () => {
  it("parses and prints sketch text", () => {
    expect(parseSketch("(argmax ...) (hop ...)")).toEqual(["argmax", "hop"]);
    expect(printSketch(["argmax", "hop"])).toBe("(argmax ...) (hop ...)");
  });

  it("validates sketch payloads", () => {
    expect(validateSketchText("(argmax ...) (hop ...)").status).toBe("valid");
    expect(validateSketchText("(join ...)").status).toBe("invalid");
    expect(validateSketchText("").status).toBe("invalid");
    expect(validateSketchText("(count ...) (count ...) (count ...) (count ...) (count ...)").status).toBe(
      "invalid"
    );
  });

  it("builder emits only known operators, in order, capped at the program limit", () => {
    const builder = new SketchBuilder();
    expect(builder.add("argmax")).toBe(true);
    expect(builder.add("hop")).toBe(true);
    expect(builder.add("join")).toBe(false);
    expect(builder.payload()).toBe("(argmax ...) (hop ...)");
    builder.add("count");
    builder.add("count");
    expect(builder.add("count")).toBe(false); // length cap
    builder.removeLast();
    expect(builder.payload()).toBe("(argmax ...) (hop ...) (count ...)");
  });
});
