"""FastAPI service wrapping the core package.

Tokenizers are held in an in-process registry keyed by a content hash of
their model file, so a client can train or load once and then stream
encode/decode/mask calls against the handle.  All endpoints delegate to the
core modules without re-implementing any logic.
"""

from __future__ import annotations

import hashlib

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse

from prottok import benchtasks, metrics, mlm, tokenizers
from prottok.corpus import parse_fasta
from prottok.errors import ProttokError
from prottok.service import schemas
from prottok.vocab import TokenSequence


def _tokenizer_id(model_bytes: bytes) -> str:
    return hashlib.sha256(model_bytes).hexdigest()[:16]


def create_app() -> FastAPI:
    app = FastAPI(title="prottok", version="0.1.0")
    registry: dict[str, tokenizers.Tokenizer] = {}

    @app.exception_handler(ProttokError)
    async def _domain_error(request: Request, err: ProttokError):
        return JSONResponse(status_code=400, content={"detail": str(err)})

    def _get(tokenizer_id: str) -> tokenizers.Tokenizer:
        tok = registry.get(tokenizer_id)
        if tok is None:
            raise HTTPException(status_code=404, detail=f"no tokenizer {tokenizer_id!r}")
        return tok

    def _info(tokenizer_id: str, tok: tokenizers.Tokenizer) -> schemas.TokenizerInfo:
        return schemas.TokenizerInfo(
            tokenizer_id=tokenizer_id,
            method=tok.method,
            vocab_size=tok.vocab_size,
            incomplete=bool(getattr(tok.model, "incomplete", False)),
        )

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/corpus/parse", response_model=schemas.ParseCorpusResponse)
    def corpus_parse(req: schemas.ParseCorpusRequest):
        corpus = parse_fasta(req.fasta_text, max_len=req.max_len)
        return schemas.ParseCorpusResponse(
            count=len(corpus),
            total_residues=corpus.total_residues(),
            warnings=list(corpus.warnings),
            summary=[{"id": s.id, "length": len(s)} for s in corpus],
        )

    @app.post("/tokenizers/train", response_model=schemas.TrainResponse)
    def tokenizers_train(req: schemas.TrainRequest):
        corpus = parse_fasta(req.fasta_text, max_len=req.max_len)
        tok = tokenizers.train(req.method, corpus, req.vocab_size)
        model_bytes = tok.save()
        tokenizer_id = _tokenizer_id(model_bytes)
        registry[tokenizer_id] = tok
        info = _info(tokenizer_id, tok)
        return schemas.TrainResponse(**info.model_dump(), model_text=model_bytes.decode("utf-8"))

    @app.post("/tokenizers/load", response_model=schemas.TokenizerInfo)
    def tokenizers_load(req: schemas.LoadRequest):
        model_bytes = req.model_text.encode("utf-8")
        tok = tokenizers.load(model_bytes)
        tokenizer_id = _tokenizer_id(tok.save())
        registry[tokenizer_id] = tok
        return _info(tokenizer_id, tok)

    @app.get("/tokenizers", response_model=list[schemas.TokenizerInfo])
    def tokenizers_list():
        return [_info(tid, tok) for tid, tok in sorted(registry.items())]

    @app.get("/tokenizers/{tokenizer_id}", response_model=schemas.TokenizerInfo)
    def tokenizers_get(tokenizer_id: str):
        return _info(tokenizer_id, _get(tokenizer_id))

    @app.get("/tokenizers/{tokenizer_id}/model")
    def tokenizers_model(tokenizer_id: str):
        return {"model_text": _get(tokenizer_id).save().decode("utf-8")}

    @app.delete("/tokenizers/{tokenizer_id}")
    def tokenizers_delete(tokenizer_id: str):
        _get(tokenizer_id)
        del registry[tokenizer_id]
        return {"deleted": tokenizer_id}

    @app.post("/tokenizers/{tokenizer_id}/encode", response_model=schemas.EncodeResponse)
    def tokenizers_encode(tokenizer_id: str, req: schemas.EncodeRequest):
        tok = _get(tokenizer_id)
        from prottok.corpus import ProteinSequence

        if (req.sequences is None) == (req.fasta_text is None):
            raise HTTPException(
                status_code=422, detail="provide exactly one of sequences or fasta_text"
            )
        if req.fasta_text is not None:
            to_encode = list(parse_fasta(req.fasta_text, max_len=req.max_len))
        else:
            to_encode = [ProteinSequence(s.id, s.residues.upper()) for s in req.sequences]
        out = []
        for seq in to_encode:
            encoded = tok.encode(seq)
            out.append(schemas.TokenizedSequence(id=seq.id, ids=list(encoded.ids)))
        return schemas.EncodeResponse(tokens=out)

    @app.post("/tokenizers/{tokenizer_id}/decode", response_model=schemas.DecodeResponse)
    def tokenizers_decode(tokenizer_id: str, req: schemas.DecodeRequest):
        tok = _get(tokenizer_id)
        out = []
        for item in req.tokens:
            ts = TokenSequence(tuple(item.ids), tok.vocab_size, item.id)
            out.append(schemas.SequenceOut(id=item.id, residues=tok.decode(ts)))
        return schemas.DecodeResponse(sequences=out)

    @app.post("/tokenizers/{tokenizer_id}/mask", response_model=schemas.MaskResponse)
    def tokenizers_mask(tokenizer_id: str, req: schemas.MaskRequest):
        import numpy as np

        tok = _get(tokenizer_id)
        masked_out = []
        plans_out = []
        for index, item in enumerate(req.tokens):
            ts = TokenSequence(tuple(item.ids), tok.vocab_size, item.id)
            child_seed = int(np.random.SeedSequence([req.seed, index]).generate_state(1)[0])
            masked, plan = mlm.mask_tokens(ts, req.rate, child_seed)
            masked_out.append(schemas.TokenizedSequence(id=item.id, ids=list(masked.ids)))
            plans_out.append(
                schemas.MaskPlanOut(
                    id=item.id,
                    positions=list(plan.masked_positions),
                    original_ids=list(plan.original_ids),
                )
            )
        return schemas.MaskResponse(masked=masked_out, plans=plans_out)

    @app.post("/tokenizers/{tokenizer_id}/stats", response_model=schemas.StatsResponse)
    def tokenizers_stats(tokenizer_id: str, req: schemas.StatsRequest):
        tok = _get(tokenizer_id)
        corpus = parse_fasta(req.fasta_text, max_len=req.max_len)
        stats = metrics.compression_stats(tok, corpus)
        return schemas.StatsResponse(
            tokens_per_residue=stats.tokens_per_residue,
            mean_piece_length=stats.mean_piece_length,
            piece_length_histogram=stats.piece_length_histogram,
        )

    @app.post("/sweep", response_model=schemas.SweepResponse)
    def sweep(req: schemas.SweepRequest):
        c_train = parse_fasta(req.train_fasta, source="train", max_len=req.max_len)
        c_val = parse_fasta(req.val_fasta, source="validation", max_len=req.max_len)
        specs = [(s.method, s.vocab_size) for s in req.specs]
        rows = mlm.perplexity_sweep(c_train, c_val, specs, alpha=req.alpha)
        return schemas.SweepResponse(
            rows=[schemas.SweepRowOut(**r.__dict__) for r in rows],
            table=mlm.sweep_table(rows),
        )

    @app.post("/manifests/validate", response_model=schemas.ManifestResponse)
    def manifests_validate(req: schemas.ManifestRequest):
        manifest = benchtasks.load_manifest(req.manifest_text.encode("utf-8"))
        return schemas.ManifestResponse(
            task_name=manifest.task_name,
            category=manifest.category,
            kind=manifest.kind,
            metric=manifest.metric,
            class_count=manifest.class_count,
            multi_label=manifest.multi_label,
        )

    @app.post("/evaluate", response_model=schemas.EvaluateResponse)
    def evaluate(req: schemas.EvaluateRequest):
        manifest = benchtasks.load_manifest(req.manifest_text.encode("utf-8"))
        predictions = [
            benchtasks._parse_label(manifest, text, n)
            for n, text in enumerate(req.predictions, start=1)
        ]
        labels = [
            benchtasks._parse_label(manifest, text, n)
            for n, text in enumerate(req.labels, start=1)
        ]
        value = benchtasks.evaluate(manifest, predictions, labels)
        return schemas.EvaluateResponse(metric=manifest.metric, value=value)

    return app


app = create_app()
