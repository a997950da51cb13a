import logging
import os
import uuid
from typing import List, Literal, Optional

import aiofiles
import numpy as np
from fastapi import APIRouter, BackgroundTasks, File, Form, HTTPException, UploadFile
from fastapi.responses import FileResponse
from pydantic import BaseModel, Field, model_validator

from ..config import get_settings
from ..optics.errors import OpticsError, QuadratureError, TableSchemaError
from ..optics.gaussian_fit import fit_sigma_equal_area, gaussian
from ..optics.geometry import coc_from_depth, state_from_coc, state_from_wavefront
from ..optics.models import CameraConfig, DefocusState
from ..optics.mono_otf import defocus_transfer, defocused_otf_exact, diffraction_otf
from ..optics.spectral_otf import mtf, polychromatic_otf
from ..services.file_generator import read_table
from ..services.orchestrator import SweepNotFound, SweepOrchestrator
from ..services.schemas import MICRON, FilterCriteria, SweepGrid
from ..services.sweep import depth_statistics, filter_records
from ..services.zip_creator import get_zip_contents, sweep_zip_path

logger = logging.getLogger(__name__)

router = APIRouter()


class MonoRequest(BaseModel):
    ar_over_lambda: float = Field(ge=0)
    samples: int = Field(default=101, ge=2, le=10001)
    mode: Literal["exact", "approx"] = "exact"


class CameraRequest(BaseModel):
    """Camera settings in metres."""

    focal_length: float
    f_number: float
    focus_distance: float
    pixel_pitch: float


class SpectralRequest(BaseModel):
    camera: CameraRequest
    coc_px: Optional[float] = None
    depth_offset: Optional[float] = None
    ar_px: Optional[float] = None
    freq_samples: Optional[int] = Field(default=None, ge=32)

    @model_validator(mode="after")
    def _one_defocus(self):
        given = [v for v in (self.coc_px, self.depth_offset, self.ar_px) if v is not None]
        if len(given) != 1:
            raise ValueError("exactly one of coc_px, depth_offset, ar_px is required")
        return self


class SweepRequest(BaseModel):
    f_numbers: Optional[List[float]] = None
    focus_distances: Optional[List[float]] = None
    c_max_values: Optional[List[float]] = None
    pixel_pitches: Optional[List[float]] = None
    eta: Optional[float] = None
    n_depth: Optional[int] = None
    reduced: bool = False
    collapsed: bool = True
    jobs: Optional[int] = Field(default=None, ge=1)

    def grid(self, default_depth_points: int) -> SweepGrid:
        base = SweepGrid.reduced() if self.reduced else SweepGrid.standard()
        base = base.model_copy(update={"n_depth": default_depth_points})
        overrides = {
            k: v for k, v in self.model_dump(
                include={"f_numbers", "focus_distances", "c_max_values", "pixel_pitches", "eta", "n_depth"}
            ).items() if v is not None
        }
        return SweepGrid(**{**base.model_dump(), **overrides})


def defocus_state(camera: CameraConfig, request: SpectralRequest) -> DefocusState:
    """State from whichever of blur (pixels), depth offset (m) or A_R (pixels) was given."""
    if request.depth_offset is not None:
        return coc_from_depth(camera, request.depth_offset)
    if request.coc_px is not None:
        return state_from_coc(camera, request.coc_px * camera.pixel_pitch)
    return state_from_wavefront(camera, request.ar_px * camera.pixel_pitch)


@router.post("/otf/mono")
async def otf_mono(request: MonoRequest):
    settings = get_settings()
    try:
        quad = settings.quadrature()
        s = np.linspace(0.0, 1.0, request.samples)
        h_def = np.asarray(defocused_otf_exact(s, request.ar_over_lambda, quad))
        h_o = np.asarray(diffraction_otf(s))
        transfer = defocus_transfer(s, request.ar_over_lambda, quad, mode=request.mode)
        approx = defocus_transfer(s, request.ar_over_lambda, quad, mode="approx")
    except OpticsError as e:
        raise HTTPException(status_code=400, detail=str(e))
    except QuadratureError as e:
        raise HTTPException(status_code=500, detail=str(e))
    return {
        "rows": [
            {
                "s": float(s[i]),
                "h_def_o": float(h_def[i]),
                "h_o": float(h_o[i]),
                "h_transfer": float(transfer.value[i]),
                "h_approx": float(approx.value[i]),
                "limit": bool(transfer.limit[i]),
            }
            for i in range(s.size)
        ]
    }


@router.post("/otf/spectral")
async def otf_spectral(request: SpectralRequest):
    settings = get_settings()
    try:
        camera = CameraConfig.build(**request.camera.model_dump())
        state = defocus_state(camera, request)
        curve = polychromatic_otf(
            camera,
            state,
            settings.spectral(),
            request.freq_samples or settings.freq_samples,
            settings.quadrature(),
        )
        filt = mtf(curve)
        fit = fit_sigma_equal_area(filt)
    except OpticsError as e:
        raise HTTPException(status_code=400, detail=str(e))
    except QuadratureError as e:
        raise HTTPException(status_code=500, detail=str(e))
    return {
        "u_cpp": curve.frequencies.tolist(),
        "h_def": curve.values.tolist(),
        "mtf": filt.values.tolist(),
        "gauss_fit": gaussian(curve.frequencies, fit.sigma).tolist(),
        "sigma": fit.sigma,
        "mae": fit.mae,
        "rmse": fit.rmse,
        "coc_px": state.coc_diameter / camera.pixel_pitch,
        "ar_px": state.wavefront_coefficient / camera.pixel_pitch,
    }


@router.post("/sweep")
async def start_sweep(request: SweepRequest, background_tasks: BackgroundTasks):
    try:
        grid = request.grid(get_settings().depth_points)
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))
    orchestrator = SweepOrchestrator()
    sweep_id = await orchestrator.initialize_sweep(grid, request.collapsed, request.jobs)
    logger.info("[API] Sweep %s started", sweep_id)
    background_tasks.add_task(orchestrator.run, sweep_id)
    return {
        "status": "success",
        "message": "Sweep started",
        "sweep_id": sweep_id,
        "record_count": grid.size(request.collapsed),
    }


@router.get("/status/{sweep_id}")
async def get_sweep_status(sweep_id: str):
    """Progress document of a sweep plus the file names of its bundle, once built."""
    orchestrator = SweepOrchestrator()
    try:
        status = await orchestrator.get_sweep_status(sweep_id)
    except SweepNotFound:
        raise HTTPException(status_code=404, detail=f"Sweep {sweep_id} not found")
    return {**status, "files": await get_zip_contents(sweep_id, orchestrator.output_dir)}


@router.get("/download/{sweep_id}")
async def download_sweep(sweep_id: str):
    zip_path = sweep_zip_path(get_settings().output_dir, sweep_id)
    if not os.path.exists(zip_path):
        raise HTTPException(status_code=404, detail="Sweep bundle not found")
    return FileResponse(zip_path, media_type="application/zip", filename=f"{sweep_id}.zip")


@router.post("/filter")
async def filter_table(
    table: UploadFile = File(...),
    mae_max: float = Form(0.01),
    sigma_min: float = Form(1.0),
    sigma_max: float = Form(5.0),
    pixel_max_um: float = Form(5.6),
    focal_max_mm: Optional[float] = Form(100.0),
    pixel_exact_um: Optional[float] = Form(None),
):
    """Filter an uploaded sweep CSV and summarize the accepted records per focused depth."""
    try:
        criteria = FilterCriteria(
            mae_threshold=mae_max,
            sigma_lower=sigma_min,
            sigma_upper=sigma_max,
            pixel_max=pixel_max_um * MICRON,
            focal_max=None if focal_max_mm is None else focal_max_mm * 1e-3,
            pixel_exact=None if pixel_exact_um is None else pixel_exact_um * MICRON,
        )
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))

    upload_dir = os.path.join(get_settings().output_dir, "uploads")
    os.makedirs(upload_dir, exist_ok=True)
    path = os.path.join(upload_dir, f"{uuid.uuid4()}.csv")
    async with aiofiles.open(path, "wb") as f:
        await f.write(await table.read())
    try:
        records = read_table(path)
    except TableSchemaError as e:
        raise HTTPException(status_code=400, detail=str(e))
    finally:
        os.remove(path)

    kept, counts = filter_records(records, criteria)
    return {
        "count": len(kept),
        "per_depth": {f"{d:g}": n for d, n in counts.items()},
        "records": [r.model_dump() for r in kept],
        "statistics": [s.model_dump() for s in depth_statistics(kept)],
    }
