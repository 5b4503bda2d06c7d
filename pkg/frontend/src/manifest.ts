import { readFileSync } from "node:fs";
import { join } from "node:path";
import { SchemaError } from "./csv.js";

export const MANIFEST_SCHEMA = "contrastlab-manifest-v1";

export interface PredicateSpec {
  value: number | null;
  target: number;
  tol: number;
  op: string;
  pass: boolean;
}

export interface Manifest {
  schema: string;
  campaign: string;
  pass: boolean;
  parameters: Record<string, unknown>;
  files: Record<string, string>;
  predicates: Record<string, PredicateSpec>;
}

export function loadManifest(artifactDir: string): Manifest {
  let raw: string;
  try {
    raw = readFileSync(join(artifactDir, "manifest.json"), "utf8");
  } catch (err) {
    throw new SchemaError(`no manifest.json in ${artifactDir}: ${err}`);
  }
  let data: Manifest;
  try {
    data = JSON.parse(raw) as Manifest;
  } catch (err) {
    throw new SchemaError(`corrupt manifest: ${err}`);
  }
  if (data.schema !== MANIFEST_SCHEMA) {
    throw new SchemaError(`unknown manifest schema ${data.schema}`);
  }
  return data;
}

export function numericParameter(manifest: Manifest, key: string): number {
  const v = manifest.parameters[key];
  if (typeof v !== "number") {
    throw new SchemaError(`manifest parameter ${key} missing or not numeric`);
  }
  return v;
}
