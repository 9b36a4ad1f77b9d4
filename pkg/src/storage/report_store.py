"""Report, curve and manifest persistence for experiment runs"""

import csv
import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Union

from src.lab.reports import json_safe

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "v1"


def canonical_json(data: Any) -> str:
    return json.dumps(json_safe(data), sort_keys=True, separators=(",", ":"))


def config_hash(raw_config: Dict[str, Any]) -> str:
    """sha256 of the canonical JSON form, so key order and whitespace do not matter."""
    return hashlib.sha256(canonical_json(raw_config).encode("utf-8")).hexdigest()


def file_digest(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


class ReportStore:
    """Writes run artifacts below one output directory and remembers what it wrote."""

    def __init__(self, out_dir: Union[str, Path]):
        """
        Initialize the store

        Args:
            out_dir: Directory for report.json, curves/*.csv and manifest.json; created if missing
        """
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.written: List[Path] = []

    def _track(self, path: Path) -> Path:
        self.written.append(path)
        return path

    def path_for(self, relative: str) -> Path:
        path = self.out_dir / relative
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    def write_json(self, relative: str, payload: Dict[str, Any]) -> Path:
        path = self.path_for(relative)
        path.write_text(json.dumps(json_safe(payload), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        logger.debug(f"wrote {path}")
        return self._track(path)

    def write_csv(self, relative: str, rows: Iterable[Dict[str, Any]],
                  fieldnames: Optional[List[str]] = None) -> Path:
        rows = [json_safe(r) for r in rows]
        if fieldnames is None:
            fieldnames = []
            for row in rows:
                fieldnames.extend(k for k in row if k not in fieldnames)
        path = self.path_for(relative)
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=fieldnames)
            writer.writeheader()
            writer.writerows(rows)
        logger.debug(f"wrote {len(rows)} rows to {path}")
        return self._track(path)

    def track_external(self, path: Union[str, Path]) -> Path:
        """Register a file written elsewhere (path dumps) so the manifest lists it."""
        return self._track(Path(path))

    def write_manifest(self, raw_config: Dict[str, Any], seed: int, extra: Optional[Dict[str, Any]] = None) -> Path:
        files = {str(p.relative_to(self.out_dir)): file_digest(p) for p in sorted(set(self.written))}
        manifest = {"schema": SCHEMA_VERSION, "config_sha256": config_hash(raw_config), "seed": seed,
                    "files": files, **(extra or {})}
        path = self.path_for("manifest.json")
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        logger.info(f"manifest with {len(files)} files written to {path}")
        return path
