import logging
import os
import zipfile
from typing import List, Optional

logger = logging.getLogger(__name__)

DEFAULT_EXCLUDES = ("status.json", "upload.csv", "__pycache__", ".log")


def sweep_zip_path(output_dir: str, sweep_id: str) -> str:
    return os.path.join(output_dir, f"{sweep_id}.zip")


async def create_sweep_zip(
    sweep_id: str,
    output_dir: str,
    exclude_patterns: Optional[List[str]] = None,
) -> str:
    """Bundle the files of a finished sweep into <output_dir>/<sweep_id>.zip."""
    sweep_dir = os.path.join(output_dir, sweep_id)
    zip_path = sweep_zip_path(output_dir, sweep_id)
    exclude_patterns = exclude_patterns or list(DEFAULT_EXCLUDES)
    if not os.path.isdir(sweep_dir):
        raise FileNotFoundError(f"Sweep directory {sweep_dir} does not exist")

    with zipfile.ZipFile(zip_path, "w", zipfile.ZIP_DEFLATED) as zf:
        for name in sorted(os.listdir(sweep_dir)):
            if any(pattern in name for pattern in exclude_patterns):
                continue
            file_path = os.path.join(sweep_dir, name)
            if os.path.isfile(file_path):
                zf.write(file_path, name)
    logger.info("[Zip] Created %s", zip_path)
    return zip_path


async def get_zip_contents(sweep_id: str, output_dir: str) -> List[str]:
    """Names of the files in a sweep bundle; empty when it does not exist."""
    zip_path = sweep_zip_path(output_dir, sweep_id)
    if not os.path.exists(zip_path):
        return []
    with zipfile.ZipFile(zip_path, "r") as zf:
        return zf.namelist()
