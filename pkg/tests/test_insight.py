import json

import numpy as np
import pytest
import scipy.stats

from hiertab.insight import (
    CHART_TAGS,
    DEFAULT_CONFIG,
    PATTERN_ALL_SAME,
    PATTERN_ONE_DIFFERS,
    SINGLE_BLOCK_KINDS,
    DetectorError,
    InsightRecord,
    compose_multiblock,
    detect_all,
    detect_change_point,
    detect_correlation,
    detect_cross_measure,
    detect_dependence,
    detect_dominance,
    detect_evenness,
    detect_kurtosis,
    detect_outlier,
    detect_outstanding_negative,
    detect_skewness,
    detect_top_two,
    detect_trend,
    recommend_blocks,
)
from hiertab.table import block_for, parse_table


class TestOutlier:
    def test_iqr_fires_on_far_point(self):
        rec = detect_outlier([1, 2, 3, 4, 5, 6, 7, 8, 100])
        assert rec is not None and rec.params["method"] == "iqr"
        # sorted quartiles: q1=3, q3=7, fence 7 + 3*4 = 19
        assert rec.params["upper"] == 19.0
        assert rec.params["indices"] == [8]
        assert rec.score == 1.0

    def test_iqr_quiet_on_uniformish_data(self):
        assert detect_outlier([3.0, 5.0, 7.0, 9.0, 11.0, 13.0]) is None

    def test_iqr_minimum_size(self):
        with pytest.raises(DetectorError):
            detect_outlier([1.0, 2.0, 3.0, 4.0])

    def test_powerlaw_quiet_on_clean_power_law(self):
        clean = [1000.0 / r for r in range(1, 8)]
        assert detect_outlier(clean, method="powerlaw") is None

    def test_powerlaw_fires_on_broken_tail(self):
        broken = [1000.0 / r for r in range(1, 8)]
        broken[-1] = broken[-1] * 0.01
        rec = detect_outlier(broken, method="powerlaw")
        assert rec is not None and rec.params["method"] == "powerlaw"
        assert rec.params["indices"] == [6]

    def test_powerlaw_requires_positive(self):
        with pytest.raises(DetectorError):
            detect_outlier([5.0, 4.0, 3.0, 2.0, 1.0, -1.0], method="powerlaw")


class TestShares:
    def test_dominance_boundary_inclusive(self):
        rec = detect_dominance([2.0, 1.0, 1.0])
        assert rec is not None and rec.score == 0.5
        assert rec.params["index"] == 0

    def test_dominance_below_boundary(self):
        assert detect_dominance([0.49, 0.3, 0.21]) is None

    def test_top_two_boundary_inclusive(self):
        rec = detect_top_two([34.0, 34.0, 32.0])
        assert rec is not None
        assert rec.params["shares"] == [pytest.approx(0.34), pytest.approx(0.34)]

    def test_top_two_second_below_threshold(self):
        assert detect_top_two([60.0, 30.0, 10.0]) is None

    def test_negative_values_rejected(self):
        with pytest.raises(DetectorError):
            detect_dominance([1.0, -1.0, 3.0])


class TestOutstandingNegative:
    def test_fires_on_deep_negative(self):
        rec = detect_outstanding_negative([5.0, 6.0, 5.5, -40.0])
        assert rec is not None and rec.params["index"] == 3

    def test_quiet_without_negative(self):
        assert detect_outstanding_negative([5.0, 6.0, 5.5, 4.0]) is None

    def test_quiet_when_gap_within_sigma(self):
        assert detect_outstanding_negative([10.0, -8.0, 9.0, -9.0]) is None


class TestTrendChangePoint:
    def test_perfect_trend(self):
        rec = detect_trend([1.0, 2.0, 3.0, 4.0])
        assert rec is not None
        assert rec.score == pytest.approx(1.0)
        assert rec.params["direction"] == "up"

    def test_downward_direction(self):
        rec = detect_trend([9.0, 7.0, 5.0, 3.0])
        assert rec is not None and rec.params["direction"] == "down"

    def test_noise_is_quiet(self):
        assert detect_trend([5.0, 1.0, 4.0, 2.0, 5.0]) is None

    def test_change_point_step_function(self):
        rec = detect_change_point([1.0, 1.0, 1.0, 10.0, 10.0, 10.0])
        assert rec is not None
        assert rec.params["index"] == 3
        assert rec.score == pytest.approx(1.0)

    def test_change_point_quiet_on_noise(self):
        assert detect_change_point([5.0, 1.0, 4.0, 2.0, 5.0, 3.0]) is None


class TestDistributionShapes:
    def test_evenness_fires_on_flat_values(self):
        rec = detect_evenness([10.0, 10.5, 10.0, 9.5])
        assert rec is not None
        cv = np.std([10.0, 10.5, 10.0, 9.5]) / 10.0
        assert rec.params["cv"] == pytest.approx(cv)
        assert rec.score == pytest.approx(1.0 - cv / 0.1)

    def test_evenness_boundary_inclusive(self):
        # cv exactly 0.1
        values = [9.0, 11.0, 9.0, 11.0]
        cv = np.std(values) / np.mean(values)
        assert cv == pytest.approx(0.1)
        rec = detect_evenness(values)
        assert rec is not None and rec.score == pytest.approx(0.0)

    def test_evenness_zero_mean_undefined(self):
        with pytest.raises(DetectorError):
            detect_evenness([-1.0, 0.0, 1.0])

    def test_skewness_fires(self):
        values = [1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 100.0]
        rec = detect_skewness(values)
        assert rec is not None
        assert rec.params["kappa1"] == pytest.approx(
            scipy.stats.skew(values, bias=True), abs=1e-9
        )

    def test_skewness_below_threshold(self):
        # kappa1 = 1.5 exactly, under the 2.0 threshold
        assert detect_skewness([1.0, 1.0, 1.0, 1.0, 50.0]) is None

    def test_kurtosis_fires(self):
        values = [1.0] * 9 + [100.0]
        rec = detect_kurtosis(values)
        assert rec is not None
        assert rec.params["kappa2"] == pytest.approx(
            scipy.stats.kurtosis(values, fisher=False, bias=True), abs=1e-9
        )

    def test_kurtosis_quiet_on_normalish(self):
        rng = np.random.default_rng(3)
        assert detect_kurtosis(rng.normal(0, 1, 30)) is None


class TestMatrixDetectors:
    def test_dependence_fires_on_diagonal_structure(self):
        rec = detect_dependence(np.array([[50.0, 10.0], [10.0, 50.0]]))
        assert rec is not None and rec.params["p"] < 0.05

    def test_dependence_expected_count_guard(self):
        with pytest.raises(DetectorError):
            detect_dependence(np.array([[1.0, 1.0], [1.0, 1.0]]))

    def test_correlation_fires_on_proportional_rows(self):
        mat = np.array([
            [1.0, 2.0, 3.0, 4.0, 5.0],
            [2.0, 4.0, 6.0, 8.0, 10.0],
            [3.0, 6.0, 9.0, 12.0, 15.0],
        ])
        rec = detect_correlation(mat)
        assert rec is not None and rec.params["fraction"] == 1.0

    def test_correlation_needs_majority(self):
        rng = np.random.default_rng(0)
        assert detect_correlation(rng.normal(0, 1, (4, 6))) is None

    def test_cross_measure_fires(self):
        rec = detect_cross_measure([1.0, 2.0, 3.0, 4.0], [2.0, 4.0, 6.0, 8.0])
        assert rec is not None and rec.score == pytest.approx(1.0)

    def test_cross_measure_magnitude_threshold(self):
        assert detect_cross_measure(
            [1.0, 2.0, 3.0, 4.0], [2.0, 1.0, 4.0, 2.0]
        ) is None


class TestRecordInvariants:
    def test_scores_clamped_to_unit_interval(self):
        rec = detect_top_two([50.0, 50.0, 0.0])
        assert rec is not None and rec.score == 1.0

    def test_non_finite_score_rejected(self):
        with pytest.raises(ValueError):
            InsightRecord(kind="trend", block=(), score=float("nan"))

    def test_chart_tags_cover_every_kind(self):
        assert set(CHART_TAGS) >= set(SINGLE_BLOCK_KINDS)
        tags = {tag for tag_list in CHART_TAGS.values() for tag in tag_list}
        assert len(tags) == 10


class TestDetectAll:
    def test_returns_sorted_by_score(self, planted_doc):
        state = parse_table(json.dumps(planted_doc))
        records = detect_all(state, block_for(state, ("RA", "r2"), ("CB",)))
        assert records
        scores = [r.score for r in records]
        assert scores == sorted(scores, reverse=True)
        assert all(r.block.row_entry == ("RA", "r2") for r in records)

    def test_trend_suppresses_change_point(self):
        doc = {
            "rowTree": {"label": "", "children": [{"label": "r", "children": []}]},
            "colTree": {"label": "", "children": [{"label": "C", "children": [
                {"label": f"c{i}", "children": []} for i in range(8)
            ]}]},
            "values": [[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]],
        }
        state = parse_table(json.dumps(doc))
        records = detect_all(state, block_for(state, ("r",), ("C",)))
        kinds = [r.kind for r in records]
        assert "trend" in kinds and "change_point" not in kinds

    def test_one_dim_block_skips_matrix_detectors(self, planted_doc):
        state = parse_table(json.dumps(planted_doc))
        records = detect_all(state, block_for(state, ("RA", "r1"), ("CA",)))
        assert all(
            r.kind not in ("dependence", "correlation", "cross_measure")
            for r in records
        )

    def test_two_row_block_includes_cross_measure(self, planted_doc):
        state = parse_table(json.dumps(planted_doc))
        records = detect_all(state, block_for(state, ("RA",), ("CA",)))
        assert any(r.kind == "cross_measure" for r in records)

    def test_empty_block_raises(self):
        doc = {
            "rowTree": {"label": "", "children": [{"label": "r", "children": []}]},
            "colTree": {"label": "", "children": [{"label": "c", "children": []}]},
            "values": [[None]],
        }
        state = parse_table(json.dumps(doc))
        with pytest.raises(DetectorError):
            detect_all(state, block_for(state, ("r",), ("c",)))

    def test_missing_values_filtered_for_sequences(self):
        doc = {
            "rowTree": {"label": "", "children": [{"label": "r", "children": []}]},
            "colTree": {"label": "", "children": [{"label": "C", "children": [
                {"label": f"c{i}", "children": []} for i in range(6)
            ]}]},
            "values": [[1.0, 2.0, None, 3.0, 4.0, 5.0]],
        }
        state = parse_table(json.dumps(doc))
        records = detect_all(state, block_for(state, ("r",), ("C",)))
        assert any(r.kind == "trend" for r in records)


class TestBlockRelations:
    def test_name_based_matches_same_label(self, insurance_doc):
        state = parse_table(json.dumps(insurance_doc))
        anchor = block_for(state, ("Auto",), ("2023", "Q1"))
        relations = recommend_blocks(state, anchor)
        named = [r for r in relations if r.mechanism == "name-based"]
        assert named
        assert named[0].related[0].col_entry == ("2024", "Q1")

    def test_topology_based_siblings(self, planted_doc):
        state = parse_table(json.dumps(planted_doc))
        anchor = block_for(state, ("RA", "r1"), ("CA",))
        relations = recommend_blocks(state, anchor)
        topo = [r for r in relations if r.mechanism == "topology-based"]
        sibling_rows = {
            b.row_entry for rel in topo for b in rel.related
            if rel.shared_side == "col"
        }
        assert ("RA", "r2") in sibling_rows

    def test_blocks_within_a_relation_share_one_shape(self, planted_doc):
        state = parse_table(json.dumps(planted_doc))
        anchor = block_for(state, ("RA",), ("CA",))
        for relation in recommend_blocks(state, anchor):
            shapes = {b.shape for b in relation.related}
            assert len(shapes) == 1
            if relation.mechanism == "name-based":
                assert shapes == {anchor.shape}


class TestComposeMultiblock:
    @staticmethod
    def _relation(state, entries):
        anchor = block_for(state, *entries[0])
        related = tuple(block_for(state, *e) for e in entries[1:])
        from hiertab.insight import BlockRelation

        return BlockRelation("topology-based", anchor, related, "col")

    @staticmethod
    def _rec(kind, score):
        return InsightRecord(kind=kind, block=(), score=score)

    def test_all_same_pattern(self, planted_doc):
        state = parse_table(json.dumps(planted_doc))
        relation = self._relation(
            state, [(("RA", "r1"), ("CA",)), (("RA", "r2"), ("CA",))]
        )
        rec = compose_multiblock(
            relation,
            [[self._rec("trend", 1.0)], [self._rec("trend", 0.9)]],
        )
        assert rec is not None and rec.kind == PATTERN_ALL_SAME
        assert rec.params["sharedKind"] == "trend"

    def test_one_differs_needs_three_blocks(self, planted_doc):
        state = parse_table(json.dumps(planted_doc))
        relation = self._relation(
            state, [(("RA", "r1"), ("CA",)), (("RA", "r2"), ("CA",))]
        )
        assert compose_multiblock(
            relation, [[self._rec("trend", 1.0)], []]
        ) is None

    def test_one_differs_pattern(self, planted_doc):
        state = parse_table(json.dumps(planted_doc))
        relation = self._relation(
            state,
            [(("RB", "r3"), ("CA",)), (("RB", "r4"), ("CA",)),
             (("RB", "r5"), ("CA",))],
        )
        rec = compose_multiblock(
            relation,
            [[self._rec("evenness", 0.8)], [self._rec("evenness", 0.7)], []],
        )
        assert rec is not None and rec.kind == PATTERN_ONE_DIFFERS
        assert rec.params["differingBlock"] == 2
