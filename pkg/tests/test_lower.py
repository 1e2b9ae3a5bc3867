import numpy as np
import pandas as pd
import pytest

import blockenc.advection as advection
import blockenc.coupling as coupling
import blockenc.full_operator as full_operator
import lower.resources as resources
from circuit.arithmetic import inplace_add_const
from circuit.builders import control_on
from circuit.ir import Circuit, Gate, GateKind, Register, single_qubit_matrix
from config.settings import Config
from lower.cost_model import (adder_candidates, baseline_cost, best, gate_cost, ladder_cost,
                              mcu_candidates, mcx_dirty_cost)
from lower.decompose import (AncillaPool, LoweringError, and_ladder, controlled_gates, cx,
                             is_basis, mcu_baseline_gates, mcu_ladder_gates, mcx_dirty_gates,
                             rccx_gates, single, toffoli_gates, zyz_angles)
from lower.passes import (GateLowering, LoweringRun, cancel_inverse_pairs, drop_zero_angles,
                          lower_to_basis, merge_rotations, peephole)
from lower.resources import (CSV_COLUMNS, ResourceReport, count_resources, cx_ratios,
                             single_step_circuit, step_resources, sweep_json, sweep_report,
                             write_sweep)
from sim.statevector import extract_block, extract_unitary, unitaries_equal


def _as_circuit(gates, width, ancillas=0):
    registers = (Register('q', width),)
    if ancillas:
        registers += (Register('anc', ancillas, 'ancilla', offset=width),)
    return Circuit(registers, tuple(gates))


def _cx_count(gates):
    return sum(1 for g in gates if g.controls)


def _reference(kind, controls, target, width, param=0.0):
    gate = Gate(kind, (target,), tuple(controls), (1,) * len(controls), param)
    return extract_unitary(_as_circuit([gate], width))


def _lowered_unitary(circuit, strategy, ancillas=None):
    lowered = lower_to_basis(circuit, strategy, ancillas)
    assert all(is_basis(g) for g in lowered.gates())
    anc = [r for r in lowered.registers if r.kind == 'ancilla']
    return extract_block(lowered, anc)


class TestGadgets:
    def test_toffoli(self):
        u = extract_unitary(_as_circuit(toffoli_gates(0, 1, 2), 3))
        np.testing.assert_allclose(u, _reference(GateKind.X, [0, 1], 2, 3), atol=1e-12)
        assert _cx_count(toffoli_gates(0, 1, 2)) == 6

    def test_relative_phase_toffoli(self):
        u = extract_unitary(_as_circuit(rccx_gates(0, 1, 2), 3))
        np.testing.assert_allclose(np.abs(u), np.abs(_reference(GateKind.X, [0, 1], 2, 3)),
                                   atol=1e-12)
        assert _cx_count(rccx_gates(0, 1, 2)) == 3

    @pytest.mark.parametrize("kind, param", [
        (GateKind.X, 0.0), (GateKind.Z, 0.0), (GateKind.H, 0.0),
        (GateKind.RY, 0.7), (GateKind.RZ, -1.3), (GateKind.P, 0.4),
    ])
    def test_single_control(self, kind, param):
        gates = controlled_gates(0, 1, kind, param)
        u = extract_unitary(_as_circuit(gates, 2))
        np.testing.assert_allclose(u, _reference(kind, [0], 1, 2, param), atol=1e-10)
        assert _cx_count(gates) == (1 if kind in (GateKind.X, GateKind.Z) else 2)

    def test_zyz_reconstructs(self, rng):
        q, _ = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
        for u in (q, np.array([[0, 1], [1, 0]]), np.diag([1j, -1])):
            alpha, beta, gamma, delta = zyz_angles(u)
            rebuilt = (np.exp(1j * alpha) * single_qubit_matrix(GateKind.RZ, beta)
                       @ single_qubit_matrix(GateKind.RY, gamma)
                       @ single_qubit_matrix(GateKind.RZ, delta))
            np.testing.assert_allclose(rebuilt, u, atol=1e-10)


class TestMultiControl:
    @pytest.mark.parametrize("m, n_dirty", [(3, 1), (4, 1), (4, 2), (5, 1)])
    def test_dirty_mcx(self, m, n_dirty):
        controls = list(range(m))
        dirty = list(range(m + 1, m + 1 + n_dirty))
        gates = mcx_dirty_gates(controls, m, dirty)
        width = m + 1 + n_dirty
        u = extract_unitary(_as_circuit(gates, width))
        np.testing.assert_allclose(u, _reference(GateKind.X, controls, m, width), atol=1e-10)
        assert _cx_count(gates) == mcx_dirty_cost(m, n_dirty)

    @pytest.mark.parametrize("kind, param", [
        (GateKind.X, 0.0), (GateKind.Z, 0.0), (GateKind.H, 0.0),
        (GateKind.RY, 0.9), (GateKind.P, -0.6),
    ])
    @pytest.mark.parametrize("k", [2, 3])
    def test_no_ancilla(self, kind, param, k):
        gates = mcu_baseline_gates(list(range(k)), k, kind, param)
        u = extract_unitary(_as_circuit(gates, k + 1))
        assert unitaries_equal(u, _reference(kind, range(k), k, k + 1, param))
        assert _cx_count(gates) == baseline_cost(kind, k)

    @pytest.mark.parametrize("kind, param", [
        (GateKind.X, 0.0), (GateKind.Z, 0.0), (GateKind.H, 0.0), (GateKind.RZ, 0.8),
    ])
    def test_clean_ladder(self, kind, param):
        k = 3
        need = 1 if kind in (GateKind.X, GateKind.Z) else 2
        ancillas = list(range(k + 1, k + 1 + need))
        gates = mcu_ladder_gates(list(range(k)), k, kind, ancillas, param)
        lowered = _as_circuit(gates, k + 1, need)
        block = extract_block(lowered, [lowered.register('anc')])
        np.testing.assert_allclose(block, _reference(kind, range(k), k, k + 1, param),
                                   atol=1e-10)
        assert _cx_count(gates) == ladder_cost(kind, k)

    def test_ladder_needs_matching_ancillas(self):
        with pytest.raises(LoweringError):
            and_ladder([0, 1, 2], [3])


class TestCostModel:
    def test_ladder_beats_baseline_with_one_ancilla(self):
        assert baseline_cost(GateKind.X, 3) == 24
        choice = best(mcu_candidates(GateKind.X, 3, 1, 'optimized'))
        assert (choice.method, choice.cost, choice.ancillas) == ('ladder', 12, 1)

    def test_baseline_never_uses_ancillas(self):
        candidates = mcu_candidates(GateKind.X, 5, float('inf'), 'baseline')
        assert [c.method for c in candidates] == ['baseline']

    def test_ties_keep_baseline(self):
        assert best(mcu_candidates(GateKind.P, 2, 4, 'optimized')).method == 'baseline'

    def test_gate_cost_small_k(self):
        assert gate_cost(GateKind.H, 0, 0, 'baseline') == 0
        assert gate_cost(GateKind.Z, 1, 0, 'baseline') == 1
        assert gate_cost(GateKind.RY, 1, 0, 'baseline') == 2

    def test_adder_candidates(self):
        methods = {c.method: c for c in adder_candidates(1, 3, 2, float('inf'), 'optimized')}
        assert methods['qft'].cost == 12 + 3 * 8
        assert methods['qft_shared'].cost == 6 + 12 + 3 * 2
        assert methods['ripple'].ancillas == 4
        assert best(list(methods.values())).method == 'qft_shared'
        baseline = adder_candidates(1, 3, 2, float('inf'), 'baseline')
        assert [c.method for c in baseline] == ['qft']


class TestAncillaPool:
    def test_stack_discipline(self):
        pool = AncillaPool(5, limit=3)
        first = pool.allocate(2)
        assert first == [5, 6]
        with pool.borrow(1) as inner:
            assert inner == [7]
            assert pool.free == 0
        assert pool.peak == 3
        with pytest.raises(LoweringError):
            pool.allocate(2)
        with pytest.raises(LoweringError):
            pool.release([5])
        pool.release(first)
        assert pool.in_use == 0

    def test_unbounded(self):
        pool = AncillaPool(0)
        assert pool.can_allocate(1000)
        pool.allocate(7)
        assert pool.peak == 7


class TestPeephole:
    def test_drop_zero_angles(self):
        gates = [single('RZ', 0, 2 * np.pi), single('RY', 1, 0.0), single('RZ', 0, 0.1),
                 Gate(GateKind.P, (0,), (1,), (1,), 0.0)]
        kept = drop_zero_angles(gates)
        assert [g.param for g in kept] == [0.1, 0.0]

    def test_cancel_nested_pairs(self):
        gates = [single('H', 0), cx(0, 1), cx(0, 1), single('H', 0)]
        assert cancel_inverse_pairs(gates) == []

    def test_cancel_skips_unrelated_qubits(self):
        gates = [single('H', 0), single('X', 1), single('H', 0)]
        assert cancel_inverse_pairs(gates) == [single('X', 1)]

    def test_no_cancel_across_blocking_gate(self):
        gates = [cx(0, 1), cx(1, 0), cx(0, 1)]
        assert len(cancel_inverse_pairs(gates)) == 3

    def test_merge_and_cancel(self):
        merged = merge_rotations([single('RZ', 0, 0.2), single('RZ', 0, 0.3)])
        assert len(merged) == 1
        assert merged[0].param == pytest.approx(0.5)
        gates = [single('RY', 0, 0.4), single('H', 1), single('RY', 0, -0.4), single('H', 1)]
        assert peephole(gates) == []


class TestLowering:
    def test_basis_gate_passes_through(self):
        lowering = GateLowering('optimized', AncillaPool(2))
        gate = cx(0, 1)
        assert lowering.lower(gate) == [gate]

    def test_negative_control_is_wrapped(self):
        lowering = GateLowering('baseline', AncillaPool(2, 0))
        gates = lowering.lower(Gate(GateKind.X, (1,), (0,), (0,)))
        assert gates == [single('X', 0), cx(0, 1), single('X', 0)]

    def test_unknown_strategy(self):
        with pytest.raises(LoweringError):
            GateLowering('fastest', AncillaPool(0))

    def test_one_ancilla_beats_baseline(self):
        circuit = _as_circuit([Gate(GateKind.X, (3,), (0, 1, 2), (1, 1, 1))], 4)
        baseline = list(LoweringRun(circuit, 'baseline'))
        optimized = list(LoweringRun(circuit, 'optimized', ancillas=1))
        assert _cx_count(baseline) == 24
        assert _cx_count(optimized) == 12
        assert count_resources(lower_to_basis(circuit, 'optimized', 1)).cx_count <= 12

    @pytest.mark.parametrize("strategy", ['baseline', 'optimized'])
    def test_mixed_circuit_is_preserved(self, strategy):
        q = Register('q', 4)
        gates = (Gate(GateKind.H, (0,)),
                 Gate(GateKind.X, (3,), (0, 1, 2), (1, 0, 1)),
                 Gate(GateKind.RY, (2,), (0, 3), (1, 1), 0.3),
                 Gate(GateKind.H, (1,), (0, 2), (0, 1)))
        circuit = Circuit((q,), gates)
        assert unitaries_equal(_lowered_unitary(circuit, strategy), extract_unitary(circuit))

    @pytest.mark.parametrize("strategy", ['baseline', 'optimized'])
    def test_constant_adder(self, strategy):
        circuit = inplace_add_const(1, Register('t', 3))
        assert unitaries_equal(_lowered_unitary(circuit, strategy), extract_unitary(circuit))

    @pytest.mark.parametrize("strategy", ['baseline', 'optimized'])
    def test_controlled_adder(self, strategy):
        t, c = Register('t', 3), Register('c', 2, offset=3)
        circuit = control_on((c, 2), inplace_add_const(-3, t))
        assert unitaries_equal(_lowered_unitary(circuit, strategy), extract_unitary(circuit))

    def test_adder_choice(self):
        t, c = Register('t', 3), Register('c', 2, offset=3)
        circuit = control_on((c, 3), inplace_add_const(1, t))
        run = LoweringRun(circuit, 'optimized')
        gates = list(run)
        assert run.lowering.choices == {'add_qft_shared': 1}
        assert _cx_count(gates) == 24
        assert run.ancilla_register().width == 1
        baseline = list(LoweringRun(circuit, 'baseline'))
        assert _cx_count(baseline) == 36


class TestCounting:
    def test_empty_circuit(self):
        report = count_resources(Circuit((Register('q', 2),)))
        assert (report.cx_count, report.width, report.depth) == (0, 2, 0)

    def test_single_cx(self):
        report = count_resources(_as_circuit([cx(0, 1)], 2))
        assert (report.cx_count, report.depth) == (1, 1)

    def test_depth_and_ancillas(self):
        report = count_resources(_as_circuit([single('H', 0), single('H', 1), cx(0, 2)], 2, 1))
        assert report.depth == 2
        assert report.width == 2
        assert report.ancillas == 1
        assert report.total_width == 3

    def test_rejects_unlowered_gates(self):
        with pytest.raises(LoweringError):
            count_resources(_as_circuit([Gate(GateKind.X, (2,), (0, 1), (1, 1))], 3))

    def test_step_builds_no_dense_references(self, monkeypatch):
        def refuse(*args):
            raise AssertionError("dense reference assembled while counting")

        monkeypatch.setattr(full_operator, 'assemble_operator', refuse)
        monkeypatch.setattr(advection, 'advection_matrix', refuse)
        monkeypatch.setattr(coupling, 'coupling_matrix', refuse)
        assert step_resources(3, 2, 'optimized').width == 15

    @pytest.mark.parametrize("n_x, n_v", [(3, 2), (4, 3)])
    def test_step_width(self, n_x, n_v):
        assert single_step_circuit(n_x, n_v).width == n_x + n_v + 10

    @pytest.mark.slow
    def test_optimized_step_is_cheaper(self):
        baseline = step_resources(3, 2, 'baseline')
        optimized = step_resources(3, 2, 'optimized')
        assert baseline.ancillas == 0
        assert baseline.width == optimized.width == 15
        assert 0 < optimized.cx_count < baseline.cx_count


def _fake_step(n_x, n_v, strategy, params=None, ancillas=None):
    cx_count = 10 * n_x * n_v * (4 if strategy == 'baseline' else 1)
    return ResourceReport(n_x, n_v, strategy, cx_count, n_x + n_v + 10, 3 * n_x)


class TestSweep:
    def test_rows_sorted_and_ratios(self, monkeypatch):
        monkeypatch.setattr(resources, 'step_resources', _fake_step)
        df = sweep_report(sizes=[(4, 2), (3, 2)], workers=2)
        assert list(zip(df.n_x, df.n_v, df.strategy)) == [
            (3, 2, 'baseline'), (3, 2, 'optimized'), (4, 2, 'baseline'), (4, 2, 'optimized')]
        assert list(cx_ratios(df).cx_reduction) == [4.0, 4.0]

    def test_files(self, monkeypatch, tmp_path):
        monkeypatch.setattr(resources, 'step_resources', _fake_step)
        df = sweep_report(sizes=[(3, 2)])
        csv_path, json_path = tmp_path / 'sweep.csv', tmp_path / 'sweep.json'
        write_sweep(df, csv_path, json_path)
        lines = csv_path.read_text().splitlines()
        assert lines[0] == 'n_x,n_v,strategy,cx_count,width,depth'
        assert lines[1] == '3,2,baseline,240,15,9'
        assert pd.read_csv(csv_path).columns.tolist() == CSV_COLUMNS
        assert json_path.read_text() == sweep_json(df) + '\n'

    def test_validation(self):
        with pytest.raises(LoweringError):
            sweep_report(sizes=[(2, 2)])
        with pytest.raises(LoweringError):
            sweep_report(sizes=[(3, 2)], strategies=('greedy',))

    def test_real_counts_over_default_sizes(self):
        df = sweep_report(workers=2)
        assert sorted(set(zip(df.n_x, df.n_v))) == sorted(Config.SWEEP_SIZES)
        counts = df.pivot_table(index=['n_x', 'n_v'], columns='strategy', values='cx_count')
        assert (counts['optimized'] <= counts['baseline']).all()
        ratios = cx_ratios(df).set_index(['n_x', 'n_v']).cx_reduction
        assert ratios[(6, 4)] >= 1.5
        # Non-decreasing in n_x at fixed n_v and strategy
        for _, group in df.groupby(['strategy', 'n_v']):
            assert group.sort_values('n_x').cx_count.is_monotonic_increasing

    @pytest.mark.slow
    def test_real_sweep_is_deterministic(self, tmp_path):
        first = sweep_report(sizes=[(3, 2)], workers=2)
        second = sweep_report(sizes=[(3, 2)], workers=1)
        pd.testing.assert_frame_equal(first, second)
        assert (cx_ratios(first).cx_reduction > 1).all()
