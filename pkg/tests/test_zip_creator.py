import asyncio
import zipfile

import pytest

from backend.services.zip_creator import create_sweep_zip, get_zip_contents, sweep_zip_path


def test_bundle_skips_status_and_uploads(tmp_path):
    sweep_dir = tmp_path / "abc"
    sweep_dir.mkdir()
    for name in ("table.csv", "table.json", "status.json", "upload.csv"):
        (sweep_dir / name).write_text("x")
    path = asyncio.run(create_sweep_zip("abc", str(tmp_path)))
    assert path == sweep_zip_path(str(tmp_path), "abc")
    with zipfile.ZipFile(path) as zf:
        assert sorted(zf.namelist()) == ["table.csv", "table.json"]
    assert sorted(asyncio.run(get_zip_contents("abc", str(tmp_path)))) == ["table.csv", "table.json"]


def test_missing_sweep(tmp_path):
    with pytest.raises(FileNotFoundError):
        asyncio.run(create_sweep_zip("nope", str(tmp_path)))
    assert asyncio.run(get_zip_contents("nope", str(tmp_path))) == []
