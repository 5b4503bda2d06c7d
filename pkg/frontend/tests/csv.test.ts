import { describe, expect, it } from "vitest";
import { column, parseCsv, SchemaError } from "../src/csv.js";

describe("parseCsv", () => {
  it("parses header and rows", () => {
    const t = parseCsv("a,b\n1,2\n3,\n");
    expect(t.header).toEqual(["a", "b"]);
    expect(t.rows).toHaveLength(2);
  });

  it("rejects empty input", () => {
    expect(() => parseCsv("")).toThrow(SchemaError);
  });

  it("rejects ragged rows", () => {
    expect(() => parseCsv("a,b\n1,2,3\n")).toThrow(SchemaError);
  });
});

describe("column", () => {
  it("returns null for empty fields", () => {
    const t = parseCsv("a,b\n1,\n2,5\n");
    expect(column(t, "b")).toEqual([null, 5]);
  });

  it("raises on missing columns", () => {
    const t = parseCsv("a\n1\n");
    expect(() => column(t, "nope")).toThrow(SchemaError);
  });

  it("raises on non-numeric values", () => {
    const t = parseCsv("a\nxyz\n");
    expect(() => column(t, "a")).toThrow(SchemaError);
  });
});
