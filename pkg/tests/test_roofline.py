import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from green500kit import roofline as rf
from green500kit.errors import DataError, DomainError, ParseError

GB = rf.GB
AI = 100 / (0.8 * 240)
K = rf.KernelModel(AI, 0.8)


def s9150_node(n=4):
    return rf.NodeConfig((rf.S9150,) * n)


def chip(mem_gb, bw_gb=320):
    return rf.GpuSpec("c", 1, mem_gb * GB, bw_gb * GB, 275)


class TestKernelPerf:
    def test_calibration(self):
        assert rf.kernel_perf(rf.GpuSpec("x", 1, GB, 240 * GB, 1), K) == pytest.approx(100.0)
        assert rf.DSLASH.arithmetic_intensity == pytest.approx(0.5208333, abs=1e-7)

    def test_s9150(self):
        got = rf.kernel_perf(rf.S9150, K)
        assert got == pytest.approx(133.333, abs=0.01)
        assert abs(got - 135) / 135 < 0.025

    def test_unit(self):
        assert rf.kernel_perf(rf.GpuSpec("x", 1, 1, GB, 1), rf.KernelModel(1.0, 1.0)) == 1.0

    def test_invariants(self):
        with pytest.raises(DataError):
            rf.KernelModel(1.0, 1.5)
        with pytest.raises(DataError):
            rf.GpuSpec("x", 1, 0, 1, 1)

    @settings(max_examples=100, deadline=None)
    @given(bw=st.floats(1, 2000), eff=st.floats(0.01, 0.5), ai=st.floats(0.01, 50),
           k=st.floats(1.0, 2.0))
    def test_linear(self, bw, eff, ai, k):
        base = rf.kernel_perf(chip(1, bw), rf.KernelModel(ai, eff))
        assert rf.kernel_perf(chip(1, bw * k), rf.KernelModel(ai, eff)) == pytest.approx(k * base)
        assert rf.kernel_perf(chip(1, bw), rf.KernelModel(ai, eff * k)) == pytest.approx(k * base)
        assert rf.kernel_perf(chip(1, bw), rf.KernelModel(ai * k, eff)) == pytest.approx(k * base)


class TestFootprint:
    def test_thermal(self):
        job = rf.LatticeJob(32, 32, 32, 8, 12288)
        assert rf.lattice_footprint(job) == 3221225472
        assert rf.lattice_footprint(job) / rf.GIB == 3.0

    def test_trivial_and_linear(self):
        assert rf.lattice_footprint(rf.LatticeJob(1, 1, 1, 1, 1)) == 1
        a = rf.LatticeJob(8, 8, 8, 4, 100)
        b = rf.LatticeJob(8, 8, 8, 8, 100)
        assert rf.lattice_footprint(b) == 2 * rf.lattice_footprint(a)

    def test_bytes_per_site_required(self):
        with pytest.raises(ParseError):
            rf.LatticeJob.from_json({"nx": 1, "ny": 1, "nz": 1, "nt": 1})


class TestPlacement:
    def test_single(self):
        pl = rf.place_job(rf.LatticeJob(32, 32, 32, 8, 12288), s9150_node(), K)
        assert pl.kind == "single_chip" and pl.n_chips == 1
        assert pl.gflops == pytest.approx(133.33, abs=0.01)

    def test_spread(self):
        job = rf.LatticeJob(1, 1, 1, 1, 20 * GB)
        pl = rf.place_job(job, s9150_node(), K)
        assert (pl.kind, pl.n_chips) == ("spread", 2)
        assert pl.gflops == pytest.approx(2 * 133.333 * 0.8, abs=0.01)

    def test_infeasible(self):
        pl = rf.place_job(rf.LatticeJob(1, 1, 1, 1, 100 * GB), s9150_node(), K)
        assert pl.kind == "infeasible" and pl.gflops == 0.0
        assert s9150_node().gpu_memory == 64 * GB

    def test_s10000_chips(self):
        node = rf.NodeConfig((rf.S10000,) * 4)
        assert len(node.chips) == 8
        pl = rf.place_job(rf.LatticeJob(1, 1, 1, 1, 10 * GB), node, K)
        assert (pl.kind, pl.n_chips) == ("spread", 2)
        assert pl.gflops == pytest.approx(2 * 100 * 0.8)

    def test_penalty_domain(self):
        with pytest.raises(DomainError):
            rf.place_job(rf.LatticeJob(1, 1, 1, 1, 1), s9150_node(), K, 1.5)

    @settings(max_examples=100, deadline=None)
    @given(fp=st.floats(0.1, 60), m1=st.floats(1, 32), shrink=st.floats(0.05, 1))
    def test_per_chip_perf_non_increasing(self, fp, m1, shrink):
        job = rf.LatticeJob(1, 1, 1, 1, fp * GB)
        big = rf.place_job(job, rf.NodeConfig((chip(m1),) * 4), K)
        small = rf.place_job(job, rf.NodeConfig((chip(m1 * shrink),) * 4), K)
        per = lambda pl: pl.gflops / pl.n_chips if pl.n_chips else 0.0
        assert per(small) <= per(big) + 1e-9
        assert small.n_chips >= big.n_chips or small.kind == "infeasible"


class TestThroughput:
    small = rf.LatticeJob(32, 32, 32, 8, 12288)

    def test_four_parallel(self):
        r = rf.node_throughput(s9150_node(), [self.small] * 4, K)
        assert r.gflops == pytest.approx(4 * 133.333, abs=0.01)
        assert r.queued == []

    def test_empty(self):
        assert rf.node_throughput(s9150_node(), [], K).gflops == 0.0

    def test_queue(self):
        r = rf.node_throughput(s9150_node(), [self.small] * 5, K)
        assert len(r.assignments) == 4 and r.queued == [4]

    def test_ffd_order(self):
        node = rf.NodeConfig((chip(4), chip(16)))
        jobs = [rf.LatticeJob(1, 1, 1, 1, 3 * GB), rf.LatticeJob(1, 1, 1, 1, 10 * GB)]
        r = rf.node_throughput(node, jobs, K)
        assert [a["chips"] for a in r.assignments] == [[0], [1]]

    def test_infeasible_listed(self):
        r = rf.node_throughput(s9150_node(), [rf.LatticeJob(1, 1, 1, 1, 65 * GB)], K)
        assert r.infeasible == [0] and r.gflops == 0

    @settings(max_examples=100, deadline=None)
    @given(fps=st.lists(st.floats(0.1, 70), max_size=10), mems=st.lists(st.floats(1, 20), min_size=1, max_size=6))
    def test_bounded(self, fps, mems):
        node = rf.NodeConfig(tuple(chip(x) for x in mems))
        jobs = [rf.LatticeJob(1, 1, 1, 1, f * GB) for f in fps]
        r = rf.node_throughput(node, jobs, K)
        assert r.gflops <= len(node.chips) * rf.kernel_perf(chip(1), K) + 1e-9
        used = [c for a in r.assignments for c in a["chips"]]
        assert len(used) == len(set(used))
        assert len(r.assignments) + len(r.queued) + len(r.infeasible) == len(jobs)


class TestModeSelect:
    def test_efficiency_mode(self):
        perf = rf.OperatingMode("performance", 10000, 2000)
        eff = rf.OperatingMode("efficiency", 9500, 1800)
        assert rf.mode_select([perf, eff]) is eff
        assert eff.gflops_per_w == pytest.approx(5.2778, abs=1e-4)

    def test_tie(self):
        a = rf.OperatingMode("performance", 10000, 2000)
        b = rf.OperatingMode("efficiency", 5000, 1000)
        assert rf.mode_select([b, a]) is a
        c = rf.OperatingMode("efficiency", 10000, 2000)
        assert rf.mode_select([a, c]) is a

    def test_single(self):
        a = rf.OperatingMode("performance", 1, 1)
        assert rf.mode_select([a]) is a

    def test_empty(self):
        with pytest.raises(DomainError):
            rf.mode_select([])


class TestNodeJson:
    def test_presets_and_custom(self):
        node = rf.NodeConfig.from_json({"gpu_boards": ["S9150", {
            "name": "x", "memory_per_chip_gb": 8, "bandwidth_per_chip_gb_s": 100,
            "board_power_w": 200}], "host_memory_gb": 256})
        assert node.gpu_boards[0] is rf.S9150
        assert node.gpu_boards[1].memory_per_chip == 8 * GB
        assert node.host_memory == 256 * GB

    def test_unknown_preset(self):
        with pytest.raises(ParseError):
            rf.NodeConfig.from_json({"gpu_boards": ["K80"]})
