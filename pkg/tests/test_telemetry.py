import io
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from green500kit import telemetry as tm
from green500kit.errors import CoverageError, DataError, DomainError, ParseError

from .conftest import piecewise_traces
from .oracles import exact_integral


class TestIngest:
    def test_constant_csv(self):
        tr = tm.ingest_trace(b"0,100\n10,100", "csv")
        assert len(tr) == 2
        assert list(tr.p) == [100.0, 100.0]

    def test_sorts(self):
        tr = tm.ingest_trace(b"10,50\n0,100", "csv")
        assert list(tr.t) == [0.0, 10.0]
        assert list(tr.p) == [100.0, 50.0]

    def test_negative_power(self):
        with pytest.raises(DataError, match="negative"):
            tm.ingest_trace(b"0,-5", "csv")

    def test_header_comments_and_metadata(self):
        text = "# meter_id: node07\n# epoch: 2014-11-01T00:00:00Z\nt_s,power_w\n0,1\n# mid note\n1,2\n"
        tr = tm.ingest_trace(text, "csv")
        assert tr.meter_id == "node07"
        assert tr.epoch == "2014-11-01T00:00:00Z"
        assert tr.samples == [tm.PowerSample(0.0, 1.0), tm.PowerSample(1.0, 2.0)]

    def test_malformed_row_line_number(self):
        with pytest.raises(ParseError) as err:
            tm.ingest_trace("t_s,power_w\n0,1\n1,abc\n", "csv")
        assert err.value.line == 3

    def test_wrong_field_count(self):
        with pytest.raises(ParseError, match="line 2"):
            tm.ingest_trace("0,1\n1,2,3\n", "csv")

    def test_duplicate_timestamps_rejected(self):
        with pytest.raises(DataError, match="duplicate"):
            tm.ingest_trace("0,1\n5,2\n5,3\n", "csv")

    def test_nan_rejected(self):
        with pytest.raises(DataError):
            tm.ingest_trace("0,1\nnan,2\n", "csv")

    def test_jsonl_with_meta(self):
        lines = [{"meter_id": "sw", "epoch": "e0"}, {"t_s": 5, "power_w": 257},
                 {"t_s": 0, "power_w": 257}]
        tr = tm.ingest_trace(io.BytesIO("\n".join(map(json.dumps, lines)).encode()), "jsonl")
        assert (tr.meter_id, tr.epoch) == ("sw", "e0")
        assert list(tr.t) == [0.0, 5.0]

    def test_jsonl_errors(self):
        with pytest.raises(ParseError) as err:
            tm.ingest_trace('{"t_s": 0, "power_w": 1}\n{"t_s": 1}\n', "jsonl")
        assert err.value.line == 2
        with pytest.raises(ParseError, match="line 1"):
            tm.ingest_trace("{not json\n", "jsonl")

    def test_unknown_format(self):
        with pytest.raises(DomainError):
            tm.ingest_trace("0,1", "xml")

    def test_csv_roundtrip(self):
        tr = tm.PowerTrace("m", [0.0, 0.1, 1 / 3], [1.5, 2.25, 1e-7], epoch="e")
        assert tm.ingest_trace(tm.dump_csv(tr), "csv") == tr


class TestAlign:
    def test_identity(self):
        tr = tm.PowerTrace("m", [0, 10], [1, 2])
        assert tm.align(tr, 0) == tr

    def test_shift(self):
        tr = tm.PowerTrace("m", [0, 10], [1, 2])
        assert list(tm.align(tr, 5).t) == [5, 15]
        assert list(tm.align(tr, -3).t) == [-3, 7]


class TestEnergy:
    def test_constant(self):
        tr = tm.PowerTrace("m", [0, 10], [100, 100])
        assert tm.energy(tr, 0, 10) == 1000.0
        assert tm.average_power(tr, 2.5, 7.25) == 100.0

    def test_ramp(self):
        tr = tm.PowerTrace("m", [0, 10], [100, 50])
        assert tm.energy(tr, 0, 10) == 750.0
        assert tm.energy(tr, 5, 10) == 312.5
        assert tm.average_power(tr, 0, 10) == 75.0
        assert tm.average_power(tr, 5, 10) == 62.5

    def test_coverage_error(self):
        tr = tm.PowerTrace("m", [0, 10], [100, 50])
        with pytest.raises(CoverageError):
            tm.energy(tr, -1, 5)
        with pytest.raises(CoverageError):
            tm.energy(tr, 5, 10.5)

    def test_empty_interval(self):
        tr = tm.PowerTrace("m", [0, 10], [100, 50])
        with pytest.raises(DomainError):
            tm.energy(tr, 5, 5)

    def test_single_sample_not_integrable(self):
        tr = tm.PowerTrace("m", [0], [1])
        with pytest.raises(DataError):
            tm.energy(tr, 0, 0.0 + 1e-9)

    @settings(max_examples=200, deadline=None)
    @given(tr=piecewise_traces(), fr=st.lists(st.floats(0, 1), min_size=3, max_size=3))
    def test_additive(self, tr, fr):
        a, b, c = sorted(tr.start + f * (tr.end - tr.start) for f in fr)
        if not (a < b < c):
            return
        whole = tm.energy(tr, a, c)
        parts = tm.energy(tr, a, b) + tm.energy(tr, b, c)
        assert abs(parts - whole) <= 1e-9 * max(abs(whole), 1e-300) + 1e-12

    @settings(max_examples=100, deadline=None)
    @given(p=st.floats(0, 1e5, allow_subnormal=False), t0=st.floats(-1e6, 1e6), span=st.floats(1e-3, 1e5),
           u=st.floats(0, 0.5), v=st.floats(0.5, 1))
    def test_constant_average_exact(self, p, t0, span, u, v):
        tr = tm.PowerTrace("c", [t0, t0 + span / 3, t0 + span], [p, p, p])
        a, b = t0 + u * span, t0 + v * span
        if not a < b:
            return
        assert tm.average_power(tr, a, b) == pytest.approx(p, rel=1e-12, abs=0)

    @settings(max_examples=100, deadline=None)
    @given(tr=piecewise_traces(), off=st.floats(-1e4, 1e4), u=st.floats(0, 1), v=st.floats(0, 1))
    def test_align_preserves_energy(self, tr, off, u, v):
        a, b = sorted((tr.start + u * (tr.end - tr.start), tr.start + v * (tr.end - tr.start)))
        if b - a < 1e-3:
            return
        shifted = tm.align(tr, off)
        a2, b2 = max(a + off, shifted.start), min(b + off, shifted.end)
        want = float(exact_integral(tr.t, tr.p, a2 - off, b2 - off))
        got = tm.energy(shifted, a2, b2)
        assert got == pytest.approx(want, rel=1e-9, abs=1e-9 * float(tr.p.max()) * (b - a))


class TestMerge:
    def test_constant_sum_257(self):
        a = tm.PowerTrace("a", [0, 10], [50, 50])
        b = tm.PowerTrace("b", [0, 5, 10], [207, 207, 207])
        m = tm.merge_traces([a, b])
        assert np.all(m.p == 257.0)
        assert list(m.t) == [0, 5, 10]

    def test_single(self):
        a = tm.PowerTrace("a", [0, 10], [50, 50])
        assert tm.merge_traces([a]) == a

    def test_disjoint(self):
        a = tm.PowerTrace("a", [0, 10], [1, 1])
        b = tm.PowerTrace("b", [20, 30], [1, 1])
        with pytest.raises(CoverageError):
            tm.merge_traces([a, b])

    def test_epoch_mismatch(self):
        a = tm.PowerTrace("a", [0, 10], [1, 1], epoch="x")
        b = tm.PowerTrace("b", [0, 10], [1, 1], epoch="y")
        with pytest.raises(DataError):
            tm.merge_traces([a, b])

    def test_restricted_to_intersection(self):
        a = tm.PowerTrace("a", [0, 10], [0, 10])
        b = tm.PowerTrace("b", [4, 12], [1, 1])
        m = tm.merge_traces([a, b])
        assert (m.start, m.end) == (4, 10)
        assert m.value_at(7.0) == 8.0

    @settings(max_examples=60, deadline=None)
    @given(k=st.integers(1, 6), vals=st.lists(st.floats(0, 3000), min_size=6, max_size=6))
    def test_k_constants(self, k, vals):
        traces = [tm.PowerTrace(f"m{i}", [0, 3 + i, 50], [vals[i]] * 3) for i in range(k)]
        m = tm.merge_traces(traces)
        np.testing.assert_allclose(m.p, sum(vals[:k]), rtol=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(a=piecewise_traces(t_max=10), b=piecewise_traces(t_max=10))
    def test_merged_energy_is_sum(self, a, b):
        lo, hi = max(a.start, b.start), min(a.end, b.end)
        if not hi - lo > 1e-3:
            return
        m = tm.merge_traces([a, b])
        want = float(exact_integral(a.t, a.p, lo, hi) + exact_integral(b.t, b.p, lo, hi))
        scale = (float(a.p.max()) + float(b.p.max())) * (hi - lo)
        assert abs(tm.energy(m, lo, hi) - want) <= 1e-9 * scale + 1e-12
