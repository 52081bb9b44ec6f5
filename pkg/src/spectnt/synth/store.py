import json
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from spectnt.errors import ConfigError, SpecTNTError
from spectnt.io.tensorfile import atomic_write, read_tensor, write_tensor
from spectnt.synth.tasks import SynthSample, SynthTaskSpec, generate, split_dataset

logger = logging.getLogger(__name__)

MANIFEST = "manifest.json"


def sample_path(root: Path, split: str, sample_id: int) -> Path:
    return root / split / f"{sample_id:05d}.stnt"


def _write_sample(spec: SynthTaskSpec, root: Path, split: str, sample_id: int) -> dict:
    """Generate one clip, write its features and return its manifest entry."""
    sample = generate(spec, sample_id)
    write_tensor(sample_path(root, split, sample_id), sample.features)
    entry = {"id": sample_id, "seed": sample.seed, "labels": sample.labels.tolist()}
    if sample.trajectory is not None:
        entry["trajectory"] = sample.trajectory.tolist()
    return entry


def write_dataset(spec: SynthTaskSpec, root: str | Path, workers: int = 8) -> Path:
    """Materialise every split under ``root`` in parallel; returns the manifest path."""
    root = Path(root)
    splits = split_dataset(spec)
    jobs = [(name, i) for name, ids in splits.items() for i in ids]
    entries: dict[str, list[dict]] = {name: [] for name in splits}
    failures = 0
    with ThreadPoolExecutor(max_workers=max(1, min(workers, len(jobs)))) as executor:
        futures = [(name, executor.submit(_write_sample, spec, root, name, i)) for name, i in jobs]
        for name, future in futures:
            try:
                entries[name].append(future.result())
            except Exception:
                failures += 1
                logger.warning("spectnt: sample write failed", exc_info=True)
    if failures:
        raise SpecTNTError(f"{failures} of {len(jobs)} sample writes failed under {root}")

    manifest = {"spec": spec.to_dict(), "splits": entries}
    path = root / MANIFEST
    atomic_write(path, json.dumps(manifest).encode("utf-8"))
    logger.info("wrote %d %s clips to %s", len(jobs), spec.task, root)
    return path


def load_dataset(root: str | Path) -> tuple[SynthTaskSpec, dict[str, list[SynthSample]]]:
    root = Path(root)
    path = root / MANIFEST
    if not path.exists():
        raise ConfigError(f"no dataset manifest at {path}")
    manifest = json.loads(path.read_text())
    spec = SynthTaskSpec.from_dict(manifest["spec"])
    label_dtype = np.float32 if spec.task == "tagging" else np.int64
    data: dict[str, list[SynthSample]] = {}
    for split, items in manifest["splits"].items():
        data[split] = [
            SynthSample(
                features=read_tensor(sample_path(root, split, item["id"])),
                labels=np.asarray(item["labels"], dtype=label_dtype),
                seed=item["seed"],
                id=item["id"],
                trajectory=np.asarray(item["trajectory"]) if "trajectory" in item else None,
            )
            for item in items
        ]
    return spec, data
