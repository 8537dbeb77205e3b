export {
  BoundTokenizer,
  ProttokClient,
  ProttokServiceError,
} from "./client.js";
export type {
  CompressionStats,
  CorpusSummary,
  ManifestInfo,
  MaskPlanRecord,
  SequenceRecord,
  SweepRow,
  TokenizedRecord,
  TokenizerInfo,
} from "./client.js";
export { formatTokenStream, parseTokenStream } from "./stream.js";
export type { StreamHeader } from "./stream.js";
