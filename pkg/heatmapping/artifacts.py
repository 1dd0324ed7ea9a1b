import hashlib
import os
import shutil
import tempfile
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import BaseModel

from heatmapping import __version__
from heatmapping.logger import get_logger

logger = get_logger(__name__)

MANIFEST_NAME = "manifest.json"


class RunManifest(BaseModel):
    command: str
    config: Dict[str, Any]
    seeds: Dict[str, int]
    input_hashes: Dict[str, str]
    tool_version: str = __version__
    outputs: List[str]
    created_at: str


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


class ArtifactWriter:
    """
    Stage a command's outputs and publish them only on success.

    Files are written into a hidden temporary directory next to ``out_dir``.
    When the ``with`` block exits cleanly the staging directory gets exactly
    one ``manifest.json`` and replaces ``out_dir`` as a whole, so files of an
    earlier run never outlive it. On error the staging directory is removed
    and ``out_dir`` is left as it was.

    Usage:
        with ArtifactWriter(out, "explain") as writer:
            write_image(rgb, writer.path("heatmap.ppm"))
            writer.describe(config=cfg.model_dump(mode="json"), seeds={"seed": 0})
    """

    def __init__(self, out_dir, command: str):
        self.out_dir = Path(out_dir)
        self.command = command
        self.staging: Optional[Path] = None
        self._config: Dict[str, Any] = {}
        self._seeds: Dict[str, int] = {}
        self._inputs: Dict[str, str] = {}

    def __enter__(self) -> "ArtifactWriter":
        parent = self.out_dir.resolve().parent
        parent.mkdir(parents=True, exist_ok=True)
        self.staging = Path(tempfile.mkdtemp(prefix=f".{self.command}-", dir=parent))
        return self

    def path(self, name: str) -> Path:
        """Staged location for output ``name`` (may contain subdirectories)."""
        target = self.staging / name
        target.parent.mkdir(parents=True, exist_ok=True)
        return target

    def describe(
        self,
        config: Dict[str, Any],
        seeds: Optional[Dict[str, int]] = None,
        inputs: Optional[Dict[str, Path]] = None,
    ) -> None:
        self._config = config
        self._seeds = seeds or {}
        self._inputs = {
            label: sha256_file(p) for label, p in (inputs or {}).items()
        }

    def _staged(self) -> List[str]:
        return sorted(
            p.relative_to(self.staging).as_posix()
            for p in self.staging.rglob("*")
            if p.is_file()
        )

    def _manifest(self, outputs: List[str]) -> RunManifest:
        return RunManifest(
            command=self.command,
            config=self._config,
            seeds=self._seeds,
            input_hashes=self._inputs,
            outputs=[str(self.out_dir / name) for name in outputs],
            created_at=datetime.now(timezone.utc).isoformat(),
        )

    def _swap_in(self) -> None:
        previous = self.staging.with_name(self.staging.name + "-previous")
        if self.out_dir.exists():
            os.replace(self.out_dir, previous)
        os.replace(self.staging, self.out_dir)
        shutil.rmtree(previous, ignore_errors=True)

    def __exit__(self, exc_type, exc, tb) -> bool:
        try:
            if exc_type is not None:
                logger.debug(f"discarding staged outputs of {self.command}")
                return False
            outputs = self._staged()
            manifest = self._manifest(outputs)
            (self.staging / MANIFEST_NAME).write_text(
                manifest.model_dump_json(indent=2) + "\n", encoding="utf-8"
            )
            self._swap_in()
            logger.info(f"💾 Wrote {len(outputs)} outputs to {self.out_dir}")
            return False
        finally:
            shutil.rmtree(self.staging, ignore_errors=True)
