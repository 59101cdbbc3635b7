import json
import re

import pytest

from embedprobe.embedders import EmbedderSpec, embed_dataset
from embedprobe.errors import ProvenanceMismatch, UnknownPanel
from embedprobe.metrics import (
    feature_decoding,
    feature_entanglement,
    reconstruction_assessment,
    scenario_similarity,
    temporal_dynamics,
)
from embedprobe.report import (
    assemble,
    compute_verdicts,
    parse_json,
    render_json,
    render_markdown,
    render_svg,
)


@pytest.fixture(scope="module")
def identity_assessment(default_canonical):
    embeddings = embed_dataset(default_canonical, EmbedderSpec.identity())
    return assemble(
        feature_entanglement(default_canonical, embeddings),
        reconstruction_assessment(default_canonical, embeddings, seed=1),
        temporal_dynamics(default_canonical, embeddings, seed=1, n_perm=200),
        scenario_similarity(default_canonical, embeddings),
        feature_decoding(default_canonical, embeddings, window=50, seed=1),
        provenance={"config_digest": "test", "seeds": {"global": 1}},
    )


class TestAssemble:
    def test_identity_run_passes_all_verdicts(self, identity_assessment):
        assert identity_assessment.verdicts == {
            "disentanglement": True,
            "temporal_preservation": True,
            "scenario_discrimination": True,
        }

    def test_decoding_auc_thresholds(self, identity_assessment):
        report = identity_assessment
        high = dict(vars(report.decoding))
        low = dict(vars(report.decoding))
        high["embedded_mean"] = 0.95
        low["embedded_mean"] = 0.78
        verdict_high = compute_verdicts(
            report.dynamics, report.scenario, type(report.decoding)(**high), report.thresholds
        )
        verdict_low = compute_verdicts(
            report.dynamics, report.scenario, type(report.decoding)(**low), report.thresholds
        )
        assert verdict_high["disentanglement"] is True
        assert verdict_low["disentanglement"] is False

    def test_provenance_mismatch_rejected(self, default_canonical, identity_assessment):
        embeddings = embed_dataset(default_canonical, EmbedderSpec.identity())
        stranger = feature_entanglement(default_canonical, embeddings)
        stranger.dataset_digest = "deadbeef"
        with pytest.raises(ProvenanceMismatch):
            assemble(
                stranger,
                identity_assessment.reconstruction,
                identity_assessment.dynamics,
                identity_assessment.scenario,
                identity_assessment.decoding,
            )

    def test_threshold_origins_marked(self, identity_assessment):
        data = identity_assessment.to_dict()
        assert data["thresholds"]["decoding_auc"]["origin"] == "published"
        assert data["thresholds"]["smoothness_margin"]["origin"] == "tool-default"


class TestJson:
    def test_round_trip_preserves_structure(self, identity_assessment):
        text = render_json(identity_assessment)
        back = parse_json(text)
        assert back.to_dict() == identity_assessment.to_dict()
        assert render_json(back) == text

    def test_rendering_is_canonical(self, identity_assessment):
        assert render_json(identity_assessment) == render_json(identity_assessment)
        parsed = json.loads(render_json(identity_assessment))
        assert parsed["schema_version"] == 1

    def test_verdicts_recomputable_from_serialized_numbers(self, identity_assessment):
        back = parse_json(render_json(identity_assessment))
        again = compute_verdicts(back.dynamics, back.scenario, back.decoding, back.thresholds)
        assert again == identity_assessment.verdicts


class TestMarkdown:
    def test_contains_verdicts_and_codes(self, identity_assessment):
        text = render_markdown(identity_assessment)
        assert "| disentanglement | pass |" in text
        assert "- A: arterial_pressure" in text
        assert "- G: respiration_rate" in text


class TestSvg:
    def test_heatmap_symmetric_cells(self, identity_assessment):
        svg = render_svg(identity_assessment, "entanglement")
        fills = re.findall(r'<rect x="(\d+)" y="(\d+)" width="28" height="28" fill="(#[0-9a-f]{6})"', svg)
        n = len(identity_assessment.entanglement.features)
        first = fills[: n * n]  # first heatmap, row-major
        colors = {}
        for x, y, color in first:
            colors[(int(y), int(x))] = color
        ys = sorted({k[0] for k in colors})
        xs = sorted({k[1] for k in colors})
        for i in range(n):
            for j in range(n):
                assert colors[(ys[i], xs[j])] == colors[(ys[j], xs[i])]

    def test_identity_trajectories_coincide(self, identity_assessment):
        svg = render_svg(identity_assessment, "dynamics")
        polylines = re.findall(r'<polyline points="([^"]+)"', svg)
        assert len(polylines) == 2 * len(identity_assessment.dynamics.scenarios)
        for raw_points, emb_points in zip(polylines[::2], polylines[1::2]):
            assert raw_points == emb_points

    def test_all_panels_render(self, identity_assessment):
        for panel in ("entanglement", "reconstruction", "dynamics", "scenario"):
            svg = render_svg(identity_assessment, panel)
            assert svg.startswith("<svg")
            assert svg.rstrip().endswith("</svg>")

    def test_feature_codes_on_axes(self, identity_assessment):
        svg = render_svg(identity_assessment, "entanglement")
        for code in "ABCDEFG":
            assert f">{code}</text>" in svg

    def test_unknown_panel(self, identity_assessment):
        with pytest.raises(UnknownPanel):
            render_svg(identity_assessment, "pie_chart")
