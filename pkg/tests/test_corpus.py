"""Dataset loading, cleaning, normalization, and splitting."""

import numpy as np
import pytest

from pvreg import corpus
from pvreg.corpus import (AllTrain, ConstantColumnError, CorpusError,
                          DatasetError, LeaveBlendOut, LeaveRowsOut)


@pytest.fixture(scope="module")
def engine():
    return corpus.load_engine_dataset()


@pytest.fixture(scope="module")
def emissions():
    return corpus.load_emission_dataset()


class TestEngineLoading:
    def test_bundled_row_count(self, engine):
        assert len(engine) == 36

    def test_six_rows_per_blend(self, engine):
        for blend in (0, 10, 20, 30, 40, 50):
            assert sum(1 for p in engine if p.biodiesel_pct == blend) == 6

    def test_row_4_cleaned(self, engine):
        p = engine.patterns[3]
        assert (p.full_load, p.biodiesel_pct, p.diesel_pct) == (1, 0, 100)
        assert (p.speed_rpm, p.power_kw, p.torque_nm, p.sfc) == (2400, 16.0, 63, 0.33)

    def test_row_22_torque(self, engine):
        p = engine.patterns[21]
        assert p.torque_nm == 64 and p.speed_rpm == 2400 and p.biodiesel_pct == 30

    def test_cleaning_log_covers_b0_rows(self, engine):
        assert len(engine.cleaning_log) == 6
        assert all(e.column == "diesel_pct" and e.old == 1 and e.new == 100
                   for e in engine.cleaning_log)
        assert [e.row for e in engine.cleaning_log] == [1, 2, 3, 4, 5, 6]

    def test_blend_sum_invariant_after_cleaning(self, engine):
        for p in engine:
            assert p.biodiesel_pct + p.diesel_pct == 100

    def test_raw_mode_preserves_printed_values(self):
        data = corpus.load_engine_dataset(cleaning=corpus.CLEAN_RAW)
        assert data.patterns[0].diesel_pct == 1
        assert data.cleaning_log == ()

    def test_complement_fill_on_external_file(self, tmp_path):
        f = tmp_path / "eng.csv"
        f.write_text("sno,full_load,biodiesel_pct,diesel_pct,speed_rpm,power_kw,torque_nm,sfc\n"
                     "1,1,10,85,1500,7.0,50,0.3\n")
        data = corpus.load_engine_dataset(f)
        assert data.patterns[0].diesel_pct == 90
        assert len(data.cleaning_log) == 1
        entry = data.cleaning_log[0]
        assert (entry.row, entry.column, entry.old, entry.new) == (1, "diesel_pct", 85, 90)

    def test_ordering_matches_source(self, engine):
        assert [p.sno for p in engine] == list(range(1, 37))

    def test_missing_column(self, tmp_path):
        f = tmp_path / "bad.csv"
        f.write_text("sno,full_load,biodiesel_pct,diesel_pct,speed_rpm,power_kw,torque_nm\n")
        with pytest.raises(DatasetError, match="missing column 'sfc'"):
            corpus.load_engine_dataset(f)

    def test_non_numeric_cell(self, tmp_path):
        f = tmp_path / "bad.csv"
        f.write_text("sno,full_load,biodiesel_pct,diesel_pct,speed_rpm,power_kw,torque_nm,sfc\n"
                     "1,1,0,100,1200,6.2,oops,0.32\n")
        with pytest.raises(DatasetError, match="row 1, column 'torque_nm'"):
            corpus.load_engine_dataset(f)

    def test_invariant_violation_names_row(self, tmp_path):
        f = tmp_path / "bad.csv"
        f.write_text("sno,full_load,biodiesel_pct,diesel_pct,speed_rpm,power_kw,torque_nm,sfc\n"
                     "1,1,0,100,-5,6.2,48,0.32\n")
        with pytest.raises(DatasetError, match="row 1, column 'speed_rpm'"):
            corpus.load_engine_dataset(f)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DatasetError, match="not found"):
            corpus.load_engine_dataset(tmp_path / "nope.csv")


class TestEmissionLoading:
    def test_bundled_row_count(self, emissions):
        assert len(emissions) == 6

    def test_b30_values(self, emissions):
        p = next(p for p in emissions if p.blend_pct == 30)
        assert (p.hc, p.co) == (5, 0.45)

    def test_b0_values(self, emissions):
        p = next(p for p in emissions if p.blend_pct == 0)
        assert (p.hc, p.co) == (32, 0.48)

    def test_blend_levels(self, emissions):
        assert emissions.blends() == (0, 10, 20, 30, 40, 50)

    def test_empty_file(self, tmp_path):
        f = tmp_path / "empty.csv"
        f.write_text("")
        with pytest.raises(DatasetError, match="empty dataset"):
            corpus.load_emission_dataset(f)

    def test_header_only_file(self, tmp_path):
        f = tmp_path / "header.csv"
        f.write_text("blend_pct,hc,co\n")
        with pytest.raises(DatasetError, match="empty dataset"):
            corpus.load_emission_dataset(f)


class TestNormalization:
    def test_speed_endpoints(self, engine):
        params = corpus.fit_normalizer(engine, ["speed_rpm"])
        assert corpus.normalize([1200], params)[0] == pytest.approx(0.05, abs=1e-15)
        assert corpus.normalize([3200], params)[0] == pytest.approx(0.95, abs=1e-15)

    def test_speed_midpoint(self, engine):
        params = corpus.fit_normalizer(engine, ["speed_rpm"])
        assert corpus.normalize([2200], params)[0] == pytest.approx(0.5, abs=1e-15)

    def test_constant_column_rejected(self, engine):
        with pytest.raises(ConstantColumnError, match="full_load"):
            corpus.fit_normalizer(engine, ["full_load"])

    def test_constant_column_midpoint_when_allowed(self, engine):
        params = corpus.fit_normalizer(engine, ["full_load"], allow_constant=True)
        assert corpus.normalize([1.0], params)[0] == pytest.approx(0.5)
        assert corpus.denormalize([0.5], params)[0] == pytest.approx(1.0)

    def test_round_trip_all_bundled_rows(self, engine):
        columns = ["biodiesel_pct", "diesel_pct", "speed_rpm", "power_kw", "torque_nm", "sfc"]
        params = corpus.fit_normalizer(engine, columns)
        raw = engine.matrix(columns)
        back = corpus.denormalize(corpus.normalize(raw, params), params)
        np.testing.assert_allclose(back, raw, rtol=1e-12)

    def test_training_values_land_in_range(self, engine):
        columns = ["speed_rpm", "power_kw", "torque_nm", "sfc"]
        params = corpus.fit_normalizer(engine, columns)
        normed = corpus.normalize(engine.matrix(columns), params)
        assert normed.min() >= 0.05 - 1e-12
        assert normed.max() <= 0.95 + 1e-12

    def test_denormalize_extrapolates_and_flags(self, engine):
        params = corpus.fit_normalizer(engine, ["speed_rpm"])
        # hand evaluation of the affine map: (0.99-0.05)/0.9*2000+1200
        values, outside = corpus.denormalize_flagged([0.99], params)
        assert values[0] == pytest.approx(3288.888888888889, rel=1e-12)
        assert outside[0]
        inside_values, inside = corpus.denormalize_flagged([0.5], params)
        assert not inside[0]

    def test_length_mismatch(self, engine):
        params = corpus.fit_normalizer(engine, ["speed_rpm", "power_kw"])
        with pytest.raises(CorpusError, match="length"):
            corpus.normalize([1200], params)
        with pytest.raises(CorpusError, match="length"):
            corpus.denormalize([0.5, 0.5, 0.5], params)

    def test_invalid_target_range(self, engine):
        for bad in ((0.0, 0.95), (0.05, 1.0), (0.9, 0.1)):
            with pytest.raises(CorpusError):
                corpus.fit_normalizer(engine, ["speed_rpm"], value_range=bad)

    def test_params_round_trip_dict(self, engine):
        params = corpus.fit_normalizer(engine, ["speed_rpm", "torque_nm"])
        again = corpus.NormalizationParams.from_dict(params.as_dict())
        assert again == params


class TestSplitting:
    def test_all_train(self, engine):
        train, test = corpus.split(engine, AllTrain())
        assert len(train) == 36 and len(test) == 0

    def test_leave_blend_out(self, engine):
        train, test = corpus.split(engine, LeaveBlendOut(20))
        assert len(train) == 30 and len(test) == 6
        assert all(p.biodiesel_pct == 20 for p in test)
        assert all(p.biodiesel_pct != 20 for p in train)

    def test_leave_rows_out(self, engine):
        train, test = corpus.split(engine, LeaveRowsOut((1, 5, 36)))
        assert len(train) == 33 and len(test) == 3
        assert [p.sno for p in test] == [1, 5, 36]

    def test_all_rows_held_out_is_error(self, engine):
        with pytest.raises(CorpusError, match="empty train side"):
            corpus.split(engine, LeaveRowsOut(tuple(range(1, 37))))

    def test_partition_is_exact(self, engine):
        train, test = corpus.split(engine, LeaveBlendOut(30))
        ids = sorted([p.sno for p in train] + [p.sno for p in test])
        assert ids == [p.sno for p in engine]

    def test_determinism(self, engine):
        a = corpus.split(engine, LeaveBlendOut(40), seed=7)
        b = corpus.split(engine, LeaveBlendOut(40), seed=7)
        assert [p.sno for p in a[0]] == [p.sno for p in b[0]]
        assert [p.sno for p in a[1]] == [p.sno for p in b[1]]

    def test_order_preserved(self, engine):
        train, _ = corpus.split(engine, LeaveBlendOut(0))
        assert [p.sno for p in train] == sorted(p.sno for p in train)
