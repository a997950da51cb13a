import asyncio
import json
import logging
import os
import uuid
from datetime import datetime
from typing import Dict, Optional

import aiofiles

from ..config import Settings, get_settings
from ..optics.models import QuadratureSpec, SpectralModel
from .file_generator import emit_statistics, emit_table
from .schemas import SweepGrid
from .sweep import depth_statistics, run_sweep
from .zip_creator import create_sweep_zip

logger = logging.getLogger(__name__)

TABLE_CSV = "table.csv"
TABLE_JSON = "table.json"
STATS_CSV = "stats.csv"
STATUS_JSON = "status.json"

# finished sweeps kept in memory; older ones are served from their status.json
MAX_TRACKED_SWEEPS = 64
FINISHED_STATES = ("completed", "partial", "failed")


class SweepNotFound(KeyError):
    pass


class SweepOrchestrator:
    # Class-level registry so every request handler sees the same sweeps
    _sweep_status: Dict[str, Dict] = {}
    max_tracked = MAX_TRACKED_SWEEPS

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or get_settings()
        self.output_dir = self.settings.output_dir
        os.makedirs(self.output_dir, exist_ok=True)

    @property
    def sweep_status(self) -> Dict[str, Dict]:
        return self._sweep_status

    def sweep_dir(self, sweep_id: str) -> str:
        return os.path.join(self.output_dir, sweep_id)

    async def initialize_sweep(
        self,
        grid: SweepGrid,
        collapse_depth: bool,
        jobs: Optional[int] = None,
    ) -> str:
        """Register a sweep and create its output directory; returns the sweep id."""
        sweep_id = str(uuid.uuid4())
        self._sweep_status[sweep_id] = {
            "sweep_id": sweep_id,
            "start_time": datetime.now().isoformat(),
            "status": "initializing",
            "config": {
                "grid": grid.model_dump(),
                "collapse_depth": collapse_depth,
                "jobs": jobs or self.settings.jobs,
            },
            "record_count": grid.size(collapse_depth),
            "failed_count": 0,
            "current_step": "Queued",
            "completed_steps": [],
            "errors": [],
        }
        self._evict_finished()
        os.makedirs(self.sweep_dir(sweep_id), exist_ok=True)
        logger.info("[Orchestrator] Sweep %s registered (%d records)", sweep_id, grid.size(collapse_depth))
        return sweep_id

    async def run(
        self,
        sweep_id: str,
        spectral: Optional[SpectralModel] = None,
        quad: Optional[QuadratureSpec] = None,
    ) -> None:
        """Evaluate, write the tables and bundle them. Errors end up in the status document."""
        status = await self.get_sweep_status(sweep_id)
        config = status["config"]
        grid = SweepGrid(**config["grid"])
        spectral = spectral or self.settings.spectral()
        quad = quad or self.settings.quadrature()
        sweep_dir = self.sweep_dir(sweep_id)
        try:
            status["status"] = "in_progress"
            status["current_step"] = "Evaluating records"
            records = await asyncio.to_thread(
                run_sweep,
                grid,
                spectral,
                quad,
                config["collapse_depth"],
                config["jobs"],
                self.settings.freq_samples,
            )
            failed = [r for r in records if not r.ok]
            status["failed_count"] = len(failed)
            status["completed_steps"].append(f"Evaluated {len(records)} records")
            for r in failed:
                status["errors"].append(self._error_entry(r.error, status["current_step"]))

            status["current_step"] = "Writing tables"
            emit_table(records, "csv", os.path.join(sweep_dir, TABLE_CSV))
            emit_table(records, "json", os.path.join(sweep_dir, TABLE_JSON))
            if not config["collapse_depth"]:
                emit_statistics(depth_statistics([r for r in records if r.ok]), os.path.join(sweep_dir, STATS_CSV))
            status["completed_steps"].append("Tables written")

            status["current_step"] = "Creating sweep ZIP"
            await create_sweep_zip(sweep_id, self.output_dir)
            status["completed_steps"].append("Sweep ZIP created")

            status["status"] = "partial" if failed else "completed"
            status["current_step"] = "Sweep completed"
            logger.info("[Orchestrator] Sweep %s %s", sweep_id, status["status"])
        except Exception as e:
            logger.exception("[Orchestrator] Sweep %s failed", sweep_id)
            status["status"] = "failed"
            status["errors"].append(self._error_entry(str(e), status.get("current_step", "unknown")))
        finally:
            await self._save_status(sweep_id)

    async def get_sweep_status(self, sweep_id: str) -> Dict:
        if sweep_id in self._sweep_status:
            return self._sweep_status[sweep_id]
        try:
            uuid.UUID(sweep_id)
        except ValueError:
            raise SweepNotFound(sweep_id) from None
        path = os.path.join(self.sweep_dir(sweep_id), STATUS_JSON)
        if not os.path.isfile(path):
            raise SweepNotFound(sweep_id)
        async with aiofiles.open(path) as f:
            return json.loads(await f.read())

    def _evict_finished(self) -> None:
        """Drop the oldest finished sweeps once more than max_tracked are held."""
        finished = [k for k, v in self._sweep_status.items() if v["status"] in FINISHED_STATES]
        excess = len(self._sweep_status) - self.max_tracked
        for sweep_id in finished[:max(excess, 0)]:
            del self._sweep_status[sweep_id]
            logger.debug("[Orchestrator] Sweep %s evicted from memory", sweep_id)

    @staticmethod
    def _error_entry(message: str, step: str) -> Dict:
        return {"timestamp": datetime.now().isoformat(), "message": message, "step": step}

    async def _save_status(self, sweep_id: str) -> None:
        path = os.path.join(self.sweep_dir(sweep_id), STATUS_JSON)
        async with aiofiles.open(path, "w") as f:
            await f.write(json.dumps(self._sweep_status[sweep_id], indent=2, default=str))
