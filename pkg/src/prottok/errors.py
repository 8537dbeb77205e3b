"""Exception types shared across the package."""


class ProttokError(Exception):
    """Base class for all errors raised by this package."""


class FastaError(ProttokError):
    """Malformed FASTA input (bad record structure, bad residues)."""

    def __init__(self, message, record_id=None, line=None):
        super().__init__(message)
        self.record_id = record_id
        self.line = line


class CorpusError(ProttokError):
    """Invalid corpus-level operation (bad split spec, duplicate ids)."""


class VocabError(ProttokError):
    """Invalid vocabulary contents or serialization."""


class ModelError(ProttokError):
    """Invalid tokenizer-model contents, training arguments or files."""


class MetricError(ProttokError):
    """Invalid metric input (empty batches, unnormalized distributions)."""


class KernelError(ProttokError):
    """Invalid numeric-kernel input (shape mismatches, empty masks)."""


class ManifestError(ProttokError):
    """Invalid benchmark-task manifest or split file."""

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row
