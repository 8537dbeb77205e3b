"""Benchmark-task manifests: schema, split loading and metric dispatch.

The repo ships one manifest per dataset of the benchmark (33 in total) with
its category, label kind and metric; dataset contents are external inputs.
Split files are tab-separated with a header row: `sequence<TAB>label` for
protein-wise tasks, `sequence_a<TAB>sequence_b<TAB>label` for protein-pair
tasks.  Multi-label class sets are encoded as `;`-joined class ids and
evaluated by exact-set accuracy.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from importlib import resources

from prottok import metrics as metrics_mod
from prottok.corpus import ProteinSequence
from prottok.errors import FastaError, ManifestError
from prottok.metrics import PredictionBatch

MANIFEST_MAGIC = "prottok-manifest"
MANIFEST_VERSION = "v1"

CATEGORIES = ("protein-wise", "protein-pair")
KINDS = ("regression", "classification")
METRICS = ("spearman", "accuracy", "mse")
_KIND_OF_METRIC = {"spearman": "regression", "mse": "regression", "accuracy": "classification"}
SPLITS = ("train", "validation", "test")


@dataclass(frozen=True)
class TaskManifest:
    task_name: str
    category: str
    kind: str
    metric: str
    splits: dict[str, str]
    class_count: int | None = None
    multi_label: bool = False

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise ManifestError(f"unknown category {self.category!r}")
        if self.kind not in KINDS:
            raise ManifestError(f"unknown kind {self.kind!r}")
        if self.metric not in METRICS:
            raise ManifestError(f"unknown metric {self.metric!r}")
        if _KIND_OF_METRIC[self.metric] != self.kind:
            raise ManifestError(
                f"metric {self.metric!r} is inconsistent with kind {self.kind!r}"
            )
        if (self.class_count is not None) != (self.kind == "classification"):
            raise ManifestError("class_count must be present iff the task is classification")
        if self.class_count is not None and self.class_count < 1:
            raise ManifestError("class_count must be positive")
        if self.multi_label and self.kind != "classification":
            raise ManifestError("multi_label applies only to classification tasks")
        for split in SPLITS:
            if split not in self.splits or not self.splits[split]:
                raise ManifestError(f"manifest is missing the {split!r} split file entry")


@dataclass(frozen=True)
class LabeledExample:
    """One benchmark example: a sequence (or pair) and its label."""

    sequences: tuple[ProteinSequence, ...]
    label: object

    def __post_init__(self):
        if len(self.sequences) not in (1, 2):
            raise ManifestError("examples carry one sequence or a pair")


def load_manifest(data: bytes) -> TaskManifest:
    lines = data.decode("utf-8").splitlines()
    if not lines or lines[0].split() != [MANIFEST_MAGIC, MANIFEST_VERSION]:
        raise ManifestError(f"bad manifest header: {lines[0] if lines else ''!r}")
    fields: dict[str, str] = {}
    for n, line in enumerate(lines[1:], start=2):
        if not line.strip() or line.startswith("#"):
            continue
        if ":" not in line:
            raise ManifestError(f"bad manifest line {n}: {line!r}")
        key, value = line.split(":", 1)
        fields[key.strip()] = value.strip()
    try:
        task_name = fields.pop("task_name")
        category = fields.pop("category")
        kind = fields.pop("kind")
        metric = fields.pop("metric")
    except KeyError as missing:
        raise ManifestError(f"manifest missing required field {missing}") from None
    splits = {s: fields.pop(f"split_{s}", "") for s in SPLITS}
    class_count = int(fields.pop("class_count")) if "class_count" in fields else None
    multi_label = fields.pop("multi_label", "false").lower() == "true"
    if fields:
        raise ManifestError(f"unknown manifest fields: {sorted(fields)}")
    return TaskManifest(
        task_name=task_name,
        category=category,
        kind=kind,
        metric=metric,
        splits=splits,
        class_count=class_count,
        multi_label=multi_label,
    )


def save_manifest(manifest: TaskManifest) -> bytes:
    lines = [f"{MANIFEST_MAGIC} {MANIFEST_VERSION}"]
    lines.append(f"task_name: {manifest.task_name}")
    lines.append(f"category: {manifest.category}")
    lines.append(f"kind: {manifest.kind}")
    lines.append(f"metric: {manifest.metric}")
    if manifest.class_count is not None:
        lines.append(f"class_count: {manifest.class_count}")
    if manifest.multi_label:
        lines.append("multi_label: true")
    for split in SPLITS:
        lines.append(f"split_{split}: {manifest.splits[split]}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def _parse_label(manifest: TaskManifest, text: str, row: int):
    if manifest.kind == "regression":
        try:
            return float(text)
        except ValueError:
            raise ManifestError(f"row {row}: bad regression label {text!r}", row=row) from None
    if manifest.multi_label:
        ids = frozenset(int(c) for c in text.split(";") if c != "")
        bad = [c for c in ids if not 0 <= c < manifest.class_count]
        if bad or not ids:
            raise ManifestError(f"row {row}: bad class set {text!r}", row=row)
        return ids
    try:
        label = int(text)
    except ValueError:
        raise ManifestError(f"row {row}: bad class id {text!r}", row=row) from None
    if not 0 <= label < manifest.class_count:
        raise ManifestError(
            f"row {row}: class id {label} outside [0, {manifest.class_count})", row=row
        )
    return label


def load_split(
    manifest: TaskManifest, split: str, base_dir: str = "."
) -> list[LabeledExample]:
    """Load one split file, validating sequences and labels per the manifest.

    Errors carry the offending row number.
    """
    if split not in SPLITS:
        raise ManifestError(f"unknown split {split!r}")
    path = os.path.join(base_dir, manifest.splits[split])
    if not os.path.exists(path):
        raise ManifestError(f"split file {path!r} does not exist")
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ManifestError(f"split file {path!r} is empty")
    n_seq_cols = 2 if manifest.category == "protein-pair" else 1
    expected_header = (
        ["sequence_a", "sequence_b", "label"] if n_seq_cols == 2 else ["sequence", "label"]
    )
    if lines[0].split("\t") != expected_header:
        raise ManifestError(f"split file {path!r} has header {lines[0]!r}")
    examples = []
    for row, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        cols = line.split("\t")
        if len(cols) != n_seq_cols + 1:
            raise ManifestError(f"row {row}: expected {n_seq_cols + 1} columns", row=row)
        try:
            seqs = tuple(
                ProteinSequence(f"{manifest.task_name}:{row}:{i}", col)
                for i, col in enumerate(cols[:n_seq_cols])
            )
        except FastaError as err:
            raise ManifestError(f"row {row}: {err}", row=row) from None
        examples.append(LabeledExample(seqs, _parse_label(manifest, cols[-1], row)))
    return examples


def save_split(manifest: TaskManifest, examples: list[LabeledExample]) -> str:
    """Serialize examples in the split-file format (used for round-trips)."""
    n_seq_cols = 2 if manifest.category == "protein-pair" else 1
    header = "sequence_a\tsequence_b\tlabel" if n_seq_cols == 2 else "sequence\tlabel"
    lines = [header]
    for ex in examples:
        label = ex.label
        if isinstance(label, frozenset):
            label = ";".join(str(c) for c in sorted(label))
        elif isinstance(label, float):
            label = f"{label:.17g}"
        lines.append("\t".join([s.residues for s in ex.sequences] + [str(label)]))
    return "\n".join(lines) + "\n"


def evaluate(manifest: TaskManifest, predictions, labels) -> float:
    """Dispatch to the metric named by the manifest."""
    if len(predictions) != len(labels):
        raise ManifestError("predictions and labels must align")
    if manifest.metric == "spearman":
        return metrics_mod.spearman(predictions, labels)
    batch = PredictionBatch(
        tuple(predictions), tuple(labels), manifest.kind, class_count=manifest.class_count
    )
    if manifest.metric == "accuracy":
        return metrics_mod.accuracy(batch)
    return metrics_mod.mse(batch)


def shipped_manifest_names() -> list[str]:
    """Names of the manifests bundled with the package."""
    root = resources.files("prottok").joinpath("manifests")
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".manifest"))


def load_shipped_manifest(name: str) -> TaskManifest:
    data = resources.files("prottok").joinpath(f"manifests/{name}").read_bytes()
    return load_manifest(data)
