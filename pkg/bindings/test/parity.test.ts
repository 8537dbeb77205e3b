// Binding parity: encode/train through the client must produce byte-identical
// token streams and model files to the CLI on the fixture corpus, for all
// three tokenization methods.

import { execFile } from "node:child_process";
import { mkdtemp, readFile } from "node:fs/promises";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { promisify } from "node:util";

import { beforeAll, describe, expect, it } from "vitest";

import { ProttokClient, ProttokServiceError } from "../src/client.js";
import { formatTokenStream, parseTokenStream } from "../src/stream.js";
import { BASE_URL } from "./setup.js";

const exec = promisify(execFile);
const FIXTURE = fileURLToPath(new URL("./fixtures/corpus.fasta", import.meta.url));

const METHODS: [string, number][] = [
  ["per-aa", 33],
  ["bpe", 60],
  ["unigram", 45],
];

const client = new ProttokClient(BASE_URL);
let workDir: string;
let fixtureText: string;

async function cli(...args: string[]): Promise<void> {
  await exec("python3", ["-m", "prottok.cli", ...args]);
}

beforeAll(async () => {
  workDir = await mkdtemp(join(tmpdir(), "prottok-parity-"));
  fixtureText = await readFile(FIXTURE, "utf-8");
});

describe("train parity", () => {
  it.each(METHODS)("%s model file equals the CLI's byte for byte", async (method, size) => {
    const cliPath = join(workDir, `cli-${method}.model`);
    await cli(
      "train", "--method", method, "--vocab-size", String(size),
      "--in", FIXTURE, "--out", cliPath,
    );
    const boundPath = join(workDir, `bound-${method}.model`);
    await client.trainToFile(method, FIXTURE, size, boundPath);
    const [cliBytes, boundBytes] = await Promise.all([
      readFile(cliPath),
      readFile(boundPath),
    ]);
    expect(boundBytes.equals(cliBytes)).toBe(true);
  });

  it("unigram trained twice through the binding is identical", async () => {
    const first = await client.train("unigram", 45, fixtureText);
    const second = await client.train("unigram", 45, fixtureText);
    expect(second.modelText).toBe(first.modelText);
    expect(second.id).toBe(first.id);
  });
});

describe("encode parity", () => {
  it.each(METHODS)("%s token stream equals the CLI's byte for byte", async (method, size) => {
    const modelPath = join(workDir, `cli-${method}.model`);
    await cli(
      "train", "--method", method, "--vocab-size", String(size),
      "--in", FIXTURE, "--out", modelPath,
    );
    const cliTokensPath = join(workDir, `cli-${method}.tokens`);
    await cli("encode", "--model", modelPath, "--in", FIXTURE, "--out", cliTokensPath);

    const tokenizer = await client.loadFile(modelPath);
    const tokens = await tokenizer.encodeFasta(fixtureText);
    const stream = formatTokenStream(tokens, {
      method: tokenizer.method,
      vocabSize: tokenizer.vocabSize,
      seed: 42,
    });
    expect(stream).toBe(await readFile(cliTokensPath, "utf-8"));
  });
});

describe("round trips and errors", () => {
  it("decode(encode(s)) returns the original residues", async () => {
    const tokenizer = await client.train("bpe", 60, fixtureText);
    const sequences = [
      { id: "a", residues: "MKVLLMMKWWYGA" },
      { id: "b", residues: "GAXBZUOJ" },
    ];
    const tokens = await tokenizer.encode(sequences);
    const decoded = await tokenizer.decode(tokens);
    expect(decoded).toEqual(sequences);
  });

  it("token stream format round-trips through the parser", async () => {
    const tokenizer = await client.train("per-aa", 33, fixtureText);
    const tokens = await tokenizer.encodeFasta(fixtureText);
    const stream = formatTokenStream(tokens, { method: "per-aa", vocabSize: 33, seed: 7 });
    expect(parseTokenStream(stream)).toEqual(tokens);
  });

  it("corrupt model files raise a structured error", async () => {
    await expect(client.load("definitely not a model")).rejects.toThrowError(
      ProttokServiceError,
    );
    await expect(client.load("definitely not a model")).rejects.toMatchObject({
      status: 400,
    });
  });

  it("vocab size below the base inventory is rejected", async () => {
    await expect(client.train("bpe", 10, fixtureText)).rejects.toMatchObject({
      status: 400,
    });
  });

  it("masking through the binding is deterministic and non-special", async () => {
    const tokenizer = await client.train("per-aa", 33, fixtureText);
    const tokens = await tokenizer.encodeFasta(fixtureText);
    const a = await tokenizer.mask(tokens.slice(0, 10), 0.3, 11);
    const b = await tokenizer.mask(tokens.slice(0, 10), 0.3, 11);
    expect(a).toEqual(b);
    for (const [i, plan] of a.plans.entries()) {
      for (const [k, pos] of plan.positions.entries()) {
        expect(tokens[i].ids[pos]).toBe(plan.original_ids[k]);
        expect(a.masked[i].ids[pos]).toBe(4);
      }
    }
  });

  it("manifest validation and metric dispatch work end to end", async () => {
    const manifest = [
      "prottok-manifest v1",
      "task_name: demo",
      "category: protein-wise",
      "kind: regression",
      "metric: spearman",
      "split_train: a",
      "split_validation: b",
      "split_test: c",
    ].join("\n");
    const info = await client.validateManifest(manifest);
    expect(info.metric).toBe("spearman");
    const result = await client.evaluate(manifest, ["1.0", "2.0", "3.0"], ["3", "2", "1"]);
    expect(result.value).toBe(-1.0);
    const bad = manifest.replace("metric: spearman", "metric: accuracy");
    await expect(client.validateManifest(bad)).rejects.toMatchObject({ status: 400 });
  });
});
