// Token-id stream wire format shared with the CLI: '#'-prefixed header
// lines, then one `id<TAB>space-separated ids` line per sequence.

import type { TokenizedRecord } from "./client.js";

export interface StreamHeader {
  method: string;
  vocabSize: number;
  seed: number;
}

export function formatTokenStream(tokens: TokenizedRecord[], header: StreamHeader): string {
  const lines = [
    "# prottok tokens v1",
    `# model: ${header.method} vocab_size=${header.vocabSize}`,
    `# seed: ${header.seed}`,
  ];
  for (const record of tokens) {
    lines.push(`${record.id}\t${record.ids.join(" ")}`);
  }
  return lines.join("\n") + "\n";
}

export function parseTokenStream(text: string): TokenizedRecord[] {
  const out: TokenizedRecord[] = [];
  for (const line of text.split("\n")) {
    if (!line || line.startsWith("#")) {
      continue;
    }
    const tab = line.indexOf("\t");
    if (tab < 0) {
      throw new Error(`bad token stream line: ${JSON.stringify(line)}`);
    }
    const body = line.slice(tab + 1);
    out.push({
      id: line.slice(0, tab),
      ids: body === "" ? [] : body.split(" ").map((v) => Number.parseInt(v, 10)),
    });
  }
  return out;
}
