import { mkdirSync } from "node:fs";
import { loadManifest } from "./manifest.js";
import { dataLayerRegression } from "./recompute.js";
import { plotCampaign } from "./plots.js";

function usage(): never {
  console.error("usage: plot <artifact-dir> [--out <dir>] [--check-only]");
  process.exit(2);
}

export function main(argv: string[]): number {
  const args = [...argv];
  let outDir: string | undefined;
  let checkOnly = false;
  const positional: string[] = [];
  while (args.length) {
    const a = args.shift()!;
    if (a === "--out") {
      outDir = args.shift() ?? usage();
    } else if (a === "--check-only") {
      checkOnly = true;
    } else if (a.startsWith("--")) {
      usage();
    } else {
      positional.push(a);
    }
  }
  if (positional.length !== 1) usage();
  const dir = positional[0];

  const manifest = loadManifest(dir);
  const regression = dataLayerRegression(dir, manifest);
  if (regression.mismatches.length) {
    console.error("data-layer regression failed:", regression.mismatches);
    return 4;
  }
  if (checkOnly) {
    console.log(
      JSON.stringify({ campaign: manifest.campaign, checked: regression.checked }),
    );
    return 0;
  }
  if (outDir) mkdirSync(outDir, { recursive: true });
  const figures = plotCampaign(dir, outDir ?? dir);
  console.log(
    JSON.stringify({
      campaign: manifest.campaign,
      figures: figures.map((f) => f.file),
      annotations: figures.flatMap((f) => f.annotations),
    }),
  );
  return 0;
}

try {
  process.exit(main(process.argv.slice(2)));
} catch (err) {
  console.error(`error: ${err instanceof Error ? err.message : err}`);
  process.exit(2);
}
