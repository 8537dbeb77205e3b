"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class SequenceIn(BaseModel):
    id: str
    residues: str


class SequenceOut(BaseModel):
    id: str
    residues: str


class TokenizedSequence(BaseModel):
    id: str
    ids: list[int]


class ParseCorpusRequest(BaseModel):
    fasta_text: str
    max_len: int = 1024


class ParseCorpusResponse(BaseModel):
    count: int
    total_residues: int
    warnings: list[str]
    summary: list[dict]


class TrainRequest(BaseModel):
    method: str = Field(description="per-aa | bpe | unigram")
    vocab_size: int = 33
    fasta_text: str
    max_len: int = 1024


class TokenizerInfo(BaseModel):
    tokenizer_id: str
    method: str
    vocab_size: int
    incomplete: bool = False


class TrainResponse(TokenizerInfo):
    model_text: str


class LoadRequest(BaseModel):
    model_text: str


class EncodeRequest(BaseModel):
    """Sequences to encode, given inline or as FASTA text (exactly one)."""

    sequences: list[SequenceIn] | None = None
    fasta_text: str | None = None
    max_len: int = 1024


class EncodeResponse(BaseModel):
    tokens: list[TokenizedSequence]


class DecodeRequest(BaseModel):
    tokens: list[TokenizedSequence]


class DecodeResponse(BaseModel):
    sequences: list[SequenceOut]


class MaskRequest(BaseModel):
    tokens: list[TokenizedSequence]
    rate: float = 0.15
    seed: int = 42


class MaskPlanOut(BaseModel):
    id: str
    positions: list[int]
    original_ids: list[int]


class MaskResponse(BaseModel):
    masked: list[TokenizedSequence]
    plans: list[MaskPlanOut]


class StatsRequest(BaseModel):
    fasta_text: str
    max_len: int = 1024


class StatsResponse(BaseModel):
    tokens_per_residue: float
    mean_piece_length: float
    piece_length_histogram: dict[int, int]


class SweepSpec(BaseModel):
    method: str
    vocab_size: int = 33


class SweepRequest(BaseModel):
    train_fasta: str
    val_fasta: str
    specs: list[SweepSpec]
    alpha: float = 1.0
    max_len: int = 1024


class SweepRowOut(BaseModel):
    method: str
    vocab_size: int
    perplexity: float
    normalized_perplexity: float
    tokens_per_residue: float
    val_token_count: int


class SweepResponse(BaseModel):
    rows: list[SweepRowOut]
    table: str


class ManifestRequest(BaseModel):
    manifest_text: str


class ManifestResponse(BaseModel):
    task_name: str
    category: str
    kind: str
    metric: str
    class_count: int | None = None
    multi_label: bool = False


class EvaluateRequest(BaseModel):
    manifest_text: str
    predictions: list[str]
    labels: list[str]


class EvaluateResponse(BaseModel):
    metric: str
    value: float
