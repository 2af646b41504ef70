"""Run manifest: config hash, seeds and library versions, no timestamps."""

import hashlib
import json
import platform
from importlib import metadata
from pathlib import Path
from typing import Dict, Optional

PACKAGE_NAME = "geocalc"
PACKAGE_VERSION = "1.0.0"
TRACKED_LIBRARIES = ("numpy", "scipy", "pandas", "pydantic", "tenacity", "tqdm", "jsonlines", "python-dotenv")


def canonical_json(data: Dict) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"), default=str)


def config_hash(data: Dict) -> str:
    """sha256 of the canonical JSON rendering of a resolved configuration."""
    return hashlib.sha256(canonical_json(data).encode("utf-8")).hexdigest()


def library_versions() -> Dict[str, str]:
    versions = {"python": platform.python_version(), PACKAGE_NAME: PACKAGE_VERSION}
    for name in TRACKED_LIBRARIES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "unknown"
    return versions


def build_manifest(command: str, resolved_config: Dict, seeds: Dict[str, int]) -> Dict:
    return {
        "command": command,
        "config": resolved_config,
        "config_hash": config_hash(resolved_config),
        "seeds": dict(sorted(seeds.items())),
        "versions": library_versions(),
    }


def write_manifest(
    output_dir: Path,
    command: str,
    resolved_config: Dict,
    seeds: Dict[str, int],
    filename: Optional[str] = None,
) -> Path:
    """Write manifest.json into output_dir and return its path."""
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    path = output_dir / (filename or "manifest.json")
    with open(path, "w", encoding="utf-8") as f:
        json.dump(build_manifest(command, resolved_config, seeds), f, indent=2, sort_keys=True, default=str)
        f.write("\n")
    return path
