// HTTP client for the prottok tokenization service. The client adds no
// tokenization logic of its own: every call delegates to the service, which
// runs the same code as the CLI, so model files and token ids are identical
// byte for byte.

import { readFile, writeFile } from "node:fs/promises";

export interface SequenceRecord {
  id: string;
  residues: string;
}

export interface TokenizedRecord {
  id: string;
  ids: number[];
}

export interface MaskPlanRecord {
  id: string;
  positions: number[];
  original_ids: number[];
}

export interface TokenizerInfo {
  tokenizer_id: string;
  method: string;
  vocab_size: number;
  incomplete: boolean;
}

export interface CorpusSummary {
  count: number;
  total_residues: number;
  warnings: string[];
  summary: { id: string; length: number }[];
}

export interface CompressionStats {
  tokens_per_residue: number;
  mean_piece_length: number;
  piece_length_histogram: Record<string, number>;
}

export interface SweepRow {
  method: string;
  vocab_size: number;
  perplexity: number;
  normalized_perplexity: number;
  tokens_per_residue: number;
  val_token_count: number;
}

export interface ManifestInfo {
  task_name: string;
  category: string;
  kind: string;
  metric: string;
  class_count: number | null;
  multi_label: boolean;
}

/** Error reported by the service (validation failures, bad model files). */
export class ProttokServiceError extends Error {
  constructor(
    message: string,
    public readonly status: number,
  ) {
    super(message);
    this.name = "ProttokServiceError";
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const response = await fetch(url, init);
  const text = await response.text();
  if (!response.ok) {
    let detail = text;
    try {
      detail = (JSON.parse(text) as { detail?: string }).detail ?? text;
    } catch {
      // non-JSON body: report it verbatim
    }
    throw new ProttokServiceError(
      typeof detail === "string" ? detail : JSON.stringify(detail),
      response.status,
    );
  }
  return JSON.parse(text) as T;
}

export class ProttokClient {
  constructor(readonly baseUrl: string) {}

  private post<T>(path: string, payload: unknown): Promise<T> {
    return request<T>(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  async health(): Promise<{ status: string }> {
    return request(`${this.baseUrl}/health`);
  }

  async parseCorpus(fastaText: string, maxLen = 1024): Promise<CorpusSummary> {
    return this.post("/corpus/parse", { fasta_text: fastaText, max_len: maxLen });
  }

  /** Train a tokenizer on FASTA text held by the caller. */
  async train(method: string, vocabSize: number, fastaText: string): Promise<BoundTokenizer> {
    const body = await this.post<TokenizerInfo & { model_text: string }>("/tokenizers/train", {
      method,
      vocab_size: vocabSize,
      fasta_text: fastaText,
    });
    return new BoundTokenizer(this, body, body.model_text);
  }

  /** Train from a FASTA file and write the model file; the bytes equal what
   * the CLI `train` subcommand writes for the same arguments. */
  async trainToFile(
    method: string,
    corpusPath: string,
    vocabSize: number,
    outPath: string,
  ): Promise<string> {
    const fasta = await readFile(corpusPath, "utf-8");
    const tokenizer = await this.train(method, vocabSize, fasta);
    await writeFile(outPath, tokenizer.modelText, "utf-8");
    return outPath;
  }

  /** Load a model file's text into the service registry. */
  async load(modelText: string): Promise<BoundTokenizer> {
    const info = await this.post<TokenizerInfo>("/tokenizers/load", { model_text: modelText });
    return new BoundTokenizer(this, info, modelText);
  }

  async loadFile(modelPath: string): Promise<BoundTokenizer> {
    return this.load(await readFile(modelPath, "utf-8"));
  }

  async listTokenizers(): Promise<TokenizerInfo[]> {
    return request(`${this.baseUrl}/tokenizers`);
  }

  async validateManifest(manifestText: string): Promise<ManifestInfo> {
    return this.post("/manifests/validate", { manifest_text: manifestText });
  }

  async evaluate(
    manifestText: string,
    predictions: string[],
    labels: string[],
  ): Promise<{ metric: string; value: number }> {
    return this.post("/evaluate", { manifest_text: manifestText, predictions, labels });
  }

  async sweep(
    trainFasta: string,
    valFasta: string,
    specs: { method: string; vocab_size: number }[],
    alpha = 1.0,
  ): Promise<{ rows: SweepRow[]; table: string }> {
    return this.post("/sweep", {
      train_fasta: trainFasta,
      val_fasta: valFasta,
      specs,
      alpha,
    });
  }

  /** @internal */
  postForTokenizer<T>(tokenizerId: string, op: string, payload: unknown): Promise<T> {
    return this.post(`/tokenizers/${tokenizerId}/${op}`, payload);
  }
}

/** Handle to a tokenizer loaded in the service registry. */
export class BoundTokenizer {
  readonly id: string;
  readonly method: string;
  readonly vocabSize: number;
  readonly incomplete: boolean;

  constructor(
    private readonly client: ProttokClient,
    info: TokenizerInfo,
    readonly modelText: string,
  ) {
    this.id = info.tokenizer_id;
    this.method = info.method;
    this.vocabSize = info.vocab_size;
    this.incomplete = info.incomplete;
  }

  async encode(sequences: SequenceRecord[]): Promise<TokenizedRecord[]> {
    const body = await this.client.postForTokenizer<{ tokens: TokenizedRecord[] }>(
      this.id,
      "encode",
      { sequences },
    );
    return body.tokens;
  }

  /** Encode every record of a FASTA text (parsing happens service-side). */
  async encodeFasta(fastaText: string, maxLen = 1024): Promise<TokenizedRecord[]> {
    const body = await this.client.postForTokenizer<{ tokens: TokenizedRecord[] }>(
      this.id,
      "encode",
      { fasta_text: fastaText, max_len: maxLen },
    );
    return body.tokens;
  }

  async decode(tokens: TokenizedRecord[]): Promise<SequenceRecord[]> {
    const body = await this.client.postForTokenizer<{ sequences: SequenceRecord[] }>(
      this.id,
      "decode",
      { tokens },
    );
    return body.sequences;
  }

  async mask(
    tokens: TokenizedRecord[],
    rate = 0.15,
    seed = 42,
  ): Promise<{ masked: TokenizedRecord[]; plans: MaskPlanRecord[] }> {
    return this.client.postForTokenizer(this.id, "mask", { tokens, rate, seed });
  }

  async stats(fastaText: string, maxLen = 1024): Promise<CompressionStats> {
    return this.client.postForTokenizer(this.id, "stats", {
      fasta_text: fastaText,
      max_len: maxLen,
    });
  }
}
