"""Batch pipeline: image stack -> diffusion -> threshold -> components ->
per-VOI isosurface -> smoothing -> mesh files + JSON report.

Runs are reproducible: the report carries no timestamps, keys are sorted,
and mesh writers are deterministic, so two runs over the same inputs
produce byte-identical outputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .assets import RootNotFound
from .meshio import MeshFormat, write_obj, write_stl
from .quantify import mesh_report, voi_report
from .segmentation import component_mesh, connected_components, laplacian_smooth, threshold
from .volume import anisotropic_diffusion, load_stack_dir

__all__ = ["PipelineConfig", "PipelineError", "load_config", "pipeline_run"]


class PipelineError(Exception):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    stack_dir: str
    diffusion_iterations: int = 5
    diffusion_kappa: float = 0.1
    diffusion_lambda: float = 1.0 / 6.0
    threshold_lo: float = 0.5
    threshold_hi: float = 1.0
    smooth_iterations: int = 10
    smooth_lambda: float = 0.5
    export_format: str = "stl"

    def to_json_dict(self) -> dict:
        return {
            "stack_dir": self.stack_dir,
            "diffusion": {
                "iterations": self.diffusion_iterations,
                "kappa": self.diffusion_kappa,
                "lambda": self.diffusion_lambda,
            },
            "threshold": {"lo": self.threshold_lo, "hi": self.threshold_hi},
            "smooth": {"iterations": self.smooth_iterations, "lambda": self.smooth_lambda},
            "export": {"format": self.export_format},
        }


def _section(obj: dict, key: str) -> dict:
    sec = obj.get(key, {})
    if not isinstance(sec, dict):
        raise PipelineError(f"config key {key!r} must be an object")
    return sec


def config_from_dict(obj: dict, base_dir: Path | None = None) -> PipelineConfig:
    if "stack_dir" not in obj:
        raise PipelineError("config needs 'stack_dir'")
    stack_dir = str(obj["stack_dir"])
    if base_dir is not None and not Path(stack_dir).is_absolute():
        stack_dir = str(base_dir / stack_dir)
    diffusion = _section(obj, "diffusion")
    thr = _section(obj, "threshold")
    smooth = _section(obj, "smooth")
    export = _section(obj, "export")
    fmt = str(export.get("format", "stl")).lower()
    if fmt not in ("stl", "obj"):
        raise PipelineError(f"export.format must be 'stl' or 'obj', got {fmt!r}")
    return PipelineConfig(
        stack_dir=stack_dir,
        diffusion_iterations=int(diffusion.get("iterations", 5)),
        diffusion_kappa=float(diffusion.get("kappa", 0.1)),
        diffusion_lambda=float(diffusion.get("lambda", 1.0 / 6.0)),
        threshold_lo=float(thr.get("lo", 0.5)),
        threshold_hi=float(thr.get("hi", 1.0)),
        smooth_iterations=int(smooth.get("iterations", 10)),
        smooth_lambda=float(smooth.get("lambda", 0.5)),
        export_format=fmt,
    )


def load_config(path) -> PipelineConfig:
    path = Path(path)
    try:
        obj = json.loads(path.read_text())
    except FileNotFoundError:
        raise PipelineError(f"config not found: {path}") from None
    except json.JSONDecodeError as e:
        raise PipelineError(f"config is not valid JSON: {e}") from None
    if not isinstance(obj, dict):
        raise PipelineError("config must be a JSON object")
    return config_from_dict(obj, base_dir=path.parent)


def pipeline_run(config: PipelineConfig, out_dir) -> dict:
    """Execute the full chain; writes meshes + report.json under out_dir."""
    if not Path(config.stack_dir).is_dir():
        raise RootNotFound(f"stack directory not found: {config.stack_dir}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    volume = load_stack_dir(config.stack_dir)
    filtered = anisotropic_diffusion(
        volume, config.diffusion_iterations, config.diffusion_kappa, config.diffusion_lambda)
    mask = threshold(filtered, config.threshold_lo, config.threshold_hi)
    labels = connected_components(mask)

    vois = []
    for label in range(1, labels.count + 1):
        mesh = component_mesh(labels, label, spacing=filtered.spacing)
        mesh = laplacian_smooth(mesh, config.smooth_iterations, config.smooth_lambda)
        name = f"voi_{label:03d}.{config.export_format}"
        path = out / name
        if config.export_format == "stl":
            path.write_bytes(write_stl(mesh, MeshFormat.STL_BINARY))
        else:
            path.write_text(write_obj(mesh))
        entry = voi_report(labels, filtered, label).to_dict()
        entry["mesh_file"] = name
        entry["mesh_report"] = mesh_report(mesh).to_dict()
        vois.append(entry)

    report = {
        "config": config.to_json_dict(),
        "input_dims": list(volume.dims),
        "component_count": labels.count,
        "vois": vois,
    }
    (out / "report.json").write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
    return report
