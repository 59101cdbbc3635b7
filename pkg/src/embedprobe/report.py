"""Assembly of metric reports into one assessment artifact, plus renderers.

The JSON rendering is canonical (sorted keys, repr floats) so identical runs
serialize byte-identically. SVG panels are built by hand: heatmaps of the
entanglement / reconstruction / scenario matrices and overlaid trajectory
plots, with features labeled by their display codes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfig, ProvenanceMismatch, UnknownPanel
from .metrics import (
    DecodingReport,
    DynamicsReport,
    EntanglementReport,
    ReconstructionReport,
    ScenarioReport,
)
from .signals import FEATURE_CODES

ASSESSMENT_SCHEMA_VERSION = 1

# Verdict thresholds. Only the decoding AUC bar comes from the published
# evaluation protocol; the other two are tool defaults, and the output says so.
DEFAULT_THRESHOLDS = {
    "decoding_auc": 0.9,
    "smoothness_margin": 0.2,
    "similarity_margin": 0.1,
}
THRESHOLD_ORIGINS = {
    "decoding_auc": "published",
    "smoothness_margin": "tool-default",
    "similarity_margin": "tool-default",
}

PANELS = ("entanglement", "reconstruction", "dynamics", "scenario")


def compute_verdicts(
    dynamics: DynamicsReport,
    scenario: ScenarioReport,
    decoding: DecodingReport,
    thresholds: dict,
) -> dict:
    """Pure verdict rules; recomputable from the serialized numbers."""
    return {
        "disentanglement": bool(decoding.embedded_mean > thresholds["decoding_auc"]),
        "temporal_preservation": bool(
            dynamics.mean_embedded_smoothness
            >= dynamics.mean_raw_smoothness - thresholds["smoothness_margin"]
        ),
        "scenario_discrimination": bool(
            scenario.embedded_mean_offdiag
            <= scenario.raw_mean_offdiag + thresholds["similarity_margin"]
        ),
    }


@dataclass
class AssessmentReport:
    provenance: dict
    entanglement: EntanglementReport
    reconstruction: ReconstructionReport
    dynamics: DynamicsReport
    scenario: ScenarioReport
    decoding: DecodingReport
    verdicts: dict
    thresholds: dict

    def to_dict(self) -> dict:
        return {
            "schema_version": ASSESSMENT_SCHEMA_VERSION,
            "provenance": self.provenance,
            "entanglement": self.entanglement.to_dict(),
            "reconstruction": self.reconstruction.to_dict(),
            "dynamics": self.dynamics.to_dict(),
            "scenario": self.scenario.to_dict(),
            "decoding": self.decoding.to_dict(),
            "verdicts": self.verdicts,
            "thresholds": {
                name: {"value": value, "origin": THRESHOLD_ORIGINS.get(name, "tool-default")}
                for name, value in self.thresholds.items()
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AssessmentReport":
        if data.get("schema_version") != ASSESSMENT_SCHEMA_VERSION:
            raise InvalidConfig(f"unsupported schema version {data.get('schema_version')!r}")
        return cls(
            provenance=data["provenance"],
            entanglement=EntanglementReport.from_dict(data["entanglement"]),
            reconstruction=ReconstructionReport.from_dict(data["reconstruction"]),
            dynamics=DynamicsReport.from_dict(data["dynamics"]),
            scenario=ScenarioReport.from_dict(data["scenario"]),
            decoding=DecodingReport.from_dict(data["decoding"]),
            verdicts=data["verdicts"],
            thresholds={name: entry["value"] for name, entry in data["thresholds"].items()},
        )


def assemble(
    entanglement: EntanglementReport,
    reconstruction: ReconstructionReport,
    dynamics: DynamicsReport,
    scenario: ScenarioReport,
    decoding: DecodingReport,
    thresholds: dict | None = None,
    provenance: dict | None = None,
) -> AssessmentReport:
    """Join the five metric reports, check provenance, and compute verdicts."""
    merged = dict(DEFAULT_THRESHOLDS)
    if thresholds:
        unknown = set(thresholds) - set(DEFAULT_THRESHOLDS)
        if unknown:
            raise InvalidConfig(f"unknown threshold names: {sorted(unknown)}")
        merged.update(thresholds)

    reports = [entanglement, reconstruction, dynamics, scenario, decoding]
    digests = {r.dataset_digest for r in reports}
    if len(digests) != 1:
        raise ProvenanceMismatch(f"reports come from different datasets: {sorted(digests)}")
    model_ids = {r.model_id for r in reports}
    if len(model_ids) != 1:
        raise ProvenanceMismatch(f"reports come from different models: {sorted(model_ids)}")

    info = {
        "dataset_digest": digests.pop(),
        "model_id": model_ids.pop(),
        "tool_version": _tool_version(),
    }
    if provenance:
        info.update(provenance)
    return AssessmentReport(
        provenance=info,
        entanglement=entanglement,
        reconstruction=reconstruction,
        dynamics=dynamics,
        scenario=scenario,
        decoding=decoding,
        verdicts=compute_verdicts(dynamics, scenario, decoding, merged),
        thresholds=merged,
    )


def _tool_version() -> str:
    from . import __version__

    return __version__


def render_json(report: AssessmentReport) -> str:
    """Canonical JSON: sorted keys, repr floats, newline-terminated."""
    return json.dumps(report.to_dict(), sort_keys=True, indent=2, allow_nan=False) + "\n"


def parse_json(text: str) -> AssessmentReport:
    return AssessmentReport.from_dict(json.loads(text))


def render_markdown(report: AssessmentReport) -> str:
    ent = report.entanglement
    rec = report.reconstruction
    dyn = report.dynamics
    sce = report.scenario
    dec = report.decoding
    own = np.diag(rec.matrix)
    lines = [
        "# Embedding assessment",
        "",
        f"- model: `{report.provenance['model_id']}`",
        f"- dataset digest: `{report.provenance['dataset_digest'][:16]}...`",
        f"- tool version: {report.provenance['tool_version']}",
        "",
        "## Verdicts",
        "",
        "| check | verdict | rule |",
        "| --- | --- | --- |",
        f"| disentanglement | {_pf(report.verdicts['disentanglement'])} | "
        f"embedded mean decoding AUC > {report.thresholds['decoding_auc']} ({THRESHOLD_ORIGINS['decoding_auc']}) |",
        f"| temporal preservation | {_pf(report.verdicts['temporal_preservation'])} | "
        f"embedded smoothness >= raw - {report.thresholds['smoothness_margin']} ({THRESHOLD_ORIGINS['smoothness_margin']}) |",
        f"| scenario discrimination | {_pf(report.verdicts['scenario_discrimination'])} | "
        f"embedded mean similarity <= raw + {report.thresholds['similarity_margin']} ({THRESHOLD_ORIGINS['similarity_margin']}) |",
        "",
        "## Summary",
        "",
        "| metric | raw | embedded |",
        "| --- | --- | --- |",
        f"| feature entanglement (grand mean abs corr) | {ent.raw_grand_mean:.4f} | {ent.embedded_grand_mean:.4f} |",
        f"| own-feature reconstruction R2 (mean) | n/a | {own.mean():.4f} |",
        f"| trajectory dimensionality at {dyn.variance_threshold:.0%} (mean) | {dyn.mean_raw_dimension:.2f} | {dyn.mean_embedded_dimension:.2f} |",
        f"| trajectory smoothness (mean) | {dyn.mean_raw_smoothness:.4f} | {dyn.mean_embedded_smoothness:.4f} |",
        f"| scenario similarity (mean off-diagonal) | {sce.raw_mean_offdiag:.4f} | {sce.embedded_mean_offdiag:.4f} |",
        f"| cross-scenario dimensionality | {sce.raw_dimension} | {sce.embedded_dimension} |",
        f"| pairwise decoding AUC | {dec.raw_mean:.2f} +/- {dec.raw_std:.2f} | {dec.embedded_mean:.2f} +/- {dec.embedded_std:.2f} |",
        "",
        "## Feature codes",
        "",
    ]
    for feature in ent.features:
        lines.append(f"- {FEATURE_CODES[feature]}: {feature}")
    if dec.notes:
        lines += ["", "## Notes", ""] + [f"- {n}" for n in dec.notes]
    if ent.excluded_cells:
        lines += ["", "## Excluded cells", ""] + [f"- {c}" for c in ent.excluded_cells]
    return "\n".join(lines) + "\n"


def _pf(flag: bool) -> str:
    return "pass" if flag else "FAIL"


# ---------------------------------------------------------------------------
# SVG rendering
# ---------------------------------------------------------------------------

_CELL = 28
_PAD = 56


def _heat_color(value: float, vmin: float, vmax: float) -> str:
    """Linear white -> crimson ramp; NaN renders gray."""
    if np.isnan(value):
        return "#cccccc"
    t = 0.0 if vmax <= vmin else (float(value) - vmin) / (vmax - vmin)
    t = min(max(t, 0.0), 1.0)
    r = round(255 + t * (165 - 255))
    g = round(255 + t * (15 - 255))
    b = round(255 + t * (21 - 255))
    return f"#{r:02x}{g:02x}{b:02x}"


def _svg_heatmap(parts: list, matrix: np.ndarray, labels: list, title: str, x0: int, y0: int, vmin: float, vmax: float):
    n = matrix.shape[0]
    parts.append(f'<text x="{x0}" y="{y0 - 34}" font-size="13" font-family="sans-serif">{title}</text>')
    for idx, label in enumerate(labels):
        parts.append(
            f'<text x="{x0 + idx * _CELL + _CELL // 2}" y="{y0 - 8}" font-size="11" '
            f'font-family="sans-serif" text-anchor="middle">{label}</text>'
        )
        parts.append(
            f'<text x="{x0 - 10}" y="{y0 + idx * _CELL + _CELL // 2 + 4}" font-size="11" '
            f'font-family="sans-serif" text-anchor="end">{label}</text>'
        )
    for i in range(n):
        for j in range(n):
            color = _heat_color(matrix[i, j], vmin, vmax)
            parts.append(
                f'<rect x="{x0 + j * _CELL}" y="{y0 + i * _CELL}" width="{_CELL}" height="{_CELL}" '
                f'fill="{color}" stroke="#ffffff" stroke-width="1"/>'
            )
    parts.append(
        f'<text x="{x0}" y="{y0 + n * _CELL + 16}" font-size="10" font-family="sans-serif">'
        f"scale: {vmin:g} (white) to {vmax:g} (red)</text>"
    )


def _heatmap_panel(matrices: list, titles: list, labels: list, vmin: float, vmax: float) -> str:
    n = matrices[0].shape[0]
    panel_w = n * _CELL + _PAD
    width = _PAD + len(matrices) * (panel_w + 24)
    height = n * _CELL + 2 * _PAD + 24
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="#ffffff"/>',
    ]
    for k, (matrix, title) in enumerate(zip(matrices, titles)):
        _svg_heatmap(parts, matrix, labels, title, _PAD + k * (panel_w + 24), _PAD + 12, vmin, vmax)
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _polyline(points: np.ndarray, x0: float, y0: float, w: float, h: float, color: str, dash: str = "") -> str:
    x = points[:, 0]
    y = points[:, 1] if points.shape[1] > 1 else np.zeros_like(x)
    x_span = max(x.max() - x.min(), 1e-12)
    y_span = max(y.max() - y.min(), 1e-12)
    px = x0 + (x - x.min()) / x_span * w
    py = y0 + h - (y - y.min()) / y_span * h
    coords = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
    dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
    return f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.2"{dash_attr}/>'


def _dynamics_panel(report: DynamicsReport) -> str:
    box = 200
    width = _PAD + len(report.scenarios) * (box + 36)
    height = box + 2 * _PAD + 20
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="#ffffff"/>',
        f'<text x="{_PAD}" y="24" font-size="13" font-family="sans-serif">'
        "PCA trajectories (first two components): raw solid, embedded dashed</text>",
    ]
    for k, scenario in enumerate(report.scenarios):
        x0 = _PAD + k * (box + 36)
        y0 = _PAD
        raw = np.asarray(report.trajectories[scenario]["raw"])
        emb = np.asarray(report.trajectories[scenario]["embedded"])
        parts.append(
            f'<rect x="{x0}" y="{y0}" width="{box}" height="{box}" fill="none" stroke="#888888"/>'
        )
        parts.append(_polyline(raw, x0 + 4, y0 + 4, box - 8, box - 8, "#1f6fb4"))
        parts.append(_polyline(emb, x0 + 4, y0 + 4, box - 8, box - 8, "#e07b39", dash="4 3"))
        parts.append(
            f'<text x="{x0}" y="{y0 + box + 16}" font-size="11" font-family="sans-serif">'
            f"{scenario} (dim raw {report.raw_dimension[scenario]}, emb {report.embedded_dimension[scenario]}; "
            f"smooth raw {report.raw_smoothness[scenario]:.2f}, emb {report.embedded_smoothness[scenario]:.2f})</text>"
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_svg(report: AssessmentReport, panel: str) -> str:
    """Render one figure panel as standalone SVG text."""
    if panel == "entanglement":
        scenario = report.entanglement.scenarios[0]
        labels = [FEATURE_CODES[f] for f in report.entanglement.features]
        return _heatmap_panel(
            [
                report.entanglement.raw_matrices[scenario],
                report.entanglement.embedded_matrices[scenario],
            ],
            [f"raw |r| ({scenario})", f"embedded |r| ({scenario})"],
            labels,
            0.0,
            1.0,
        )
    if panel == "reconstruction":
        labels = [FEATURE_CODES[f] for f in report.reconstruction.features]
        return _heatmap_panel(
            [np.clip(report.reconstruction.matrix, 0.0, 1.0)],
            ["test R2 (row: source embedding, col: target signal)"],
            labels,
            0.0,
            1.0,
        )
    if panel == "dynamics":
        return _dynamics_panel(report.dynamics)
    if panel == "scenario":
        labels = [s[:12] for s in report.scenario.scenarios]
        return _heatmap_panel(
            [report.scenario.raw_matrix, report.scenario.embedded_matrix],
            ["raw cosine", "embedded cosine"],
            labels,
            -1.0,
            1.0,
        )
    raise UnknownPanel(f"unknown panel {panel!r}; expected one of {PANELS}")
