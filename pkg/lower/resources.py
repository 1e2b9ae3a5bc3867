"""CX counts, widths and depths of lowered QSVT steps, and the size sweep."""
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Iterable, Optional

import pandas as pd

from blockenc.full_operator import full_be
from circuit.ir import Circuit, Gate
from config.settings import Config
from lower.cost_model import STRATEGIES
from lower.decompose import LoweringError, is_basis
from lower.passes import LoweringRun, peephole
from problem.plasma_model import PlasmaParams, make_grid
from qsvt.solver import qsvt_step, sign_register

logger = logging.getLogger(__name__)

CSV_COLUMNS = ['n_x', 'n_v', 'strategy', 'cx_count', 'width', 'depth']
STEP_ANGLE = 0.25


@dataclass(frozen=True)
class ResourceReport:
    n_x: int
    n_v: int
    strategy: str
    cx_count: int
    width: int
    depth: int
    ancillas: int = 0

    @property
    def total_width(self):
        return self.width + self.ancillas

    def to_dict(self):
        return asdict(self)


def _tally(gates: Iterable[Gate]):
    """(cx_count, asap_depth) of a basis gate stream"""
    cx_count = 0
    level = {}
    depth = 0
    for g in gates:
        if not is_basis(g):
            raise LoweringError(f"non-basis gate {g.name} on {g.qubits} at counting time")
        if g.controls:
            cx_count += 1
        # ASAP layer: one past the latest gate on any of its qubits
        t = max(level.get(q, 0) for q in g.qubits) + 1
        for q in g.qubits:
            level[q] = t
        depth = max(depth, t)
    return cx_count, depth


def count_resources(c: Circuit, n_x=0, n_v=0, strategy='') -> ResourceReport:
    """Exact CX tally, logical width plus ancillas, and ASAP depth of a basis circuit"""
    cx_count, depth = _tally(c.gates())
    ancillas = sum(r.width for r in c.registers if r.kind == 'ancilla')
    return ResourceReport(n_x, n_v, strategy, cx_count, c.width - ancillas, depth, ancillas)


def single_step_circuit(n_x, n_v, params: Optional[PlasmaParams] = None,
                        angle=STEP_ANGLE) -> Circuit:
    """phase, U, phase, U^dagger on the full encoding plus the sign qubit"""
    params = params or PlasmaParams.default()
    be = full_be(make_grid(params, n_x, n_v), params)
    return qsvt_step(be, angle, sign_register(be)[0])


def step_resources(n_x, n_v, strategy, params: Optional[PlasmaParams] = None,
                   ancillas=None) -> ResourceReport:
    """Lower and count one QSVT step without materializing the baseline gate list"""
    circuit = single_step_circuit(n_x, n_v, params)
    run = LoweringRun(circuit, strategy, ancillas)
    gates = peephole(run) if run.strategy == 'optimized' else run
    cx_count, depth = _tally(gates)
    report = ResourceReport(n_x, n_v, run.strategy, cx_count, circuit.width, depth,
                            run.pool.peak)
    logger.info(f"Step ({n_x},{n_v}) {run.strategy}: cx={cx_count} width={circuit.width} "
                f"ancillas={run.pool.peak} depth={depth}")
    return report


def sweep_report(sizes=None, strategies=STRATEGIES, workers=None,
                 params: Optional[PlasmaParams] = None) -> pd.DataFrame:
    """One row per (size, strategy), sorted, regardless of completion order"""
    sizes = [tuple(s) for s in (sizes or Config.SWEEP_SIZES)]
    for n_x, n_v in sizes:
        if n_x < 3:
            raise LoweringError(f"sweep sizes need n_x >= 3, got ({n_x}, {n_v})")
    for s in strategies:
        if s not in STRATEGIES:
            raise LoweringError(f"unknown strategy {s!r}; choose from {STRATEGIES}")
    workers = workers or Config.MAX_WORKERS

    jobs = [(n_x, n_v, s) for n_x, n_v in sizes for s in strategies]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        futures = [executor.submit(step_resources, n_x, n_v, s, params) for n_x, n_v, s in jobs]
        reports = [f.result() for f in futures]

    df = pd.DataFrame([r.to_dict() for r in reports])
    df = df.sort_values(['n_x', 'n_v', 'strategy']).reset_index(drop=True)
    logger.info(f"Sweep finished: {len(df)} rows over {len(sizes)} sizes")
    return df


def cx_ratios(df: pd.DataFrame) -> pd.DataFrame:
    """baseline/optimized CX ratio per size where both strategies were counted"""
    table = df.pivot_table(index=['n_x', 'n_v'], columns='strategy', values='cx_count')
    if not set(STRATEGIES) <= set(table.columns):
        return pd.DataFrame(columns=['n_x', 'n_v', 'cx_reduction'])
    table['cx_reduction'] = table['baseline'] / table['optimized']
    return table.reset_index()[['n_x', 'n_v', 'cx_reduction']]


def _records(df: pd.DataFrame):
    # numpy scalars -> python for json
    return [{k: (v.item() if hasattr(v, 'item') else v) for k, v in r.items()}
            for r in df.to_dict(orient='records')]


def sweep_json(df: pd.DataFrame) -> str:
    payload = {'rows': _records(df), 'ratios': _records(cx_ratios(df))}
    return json.dumps(payload, sort_keys=True, indent=2)


def write_sweep(df: pd.DataFrame, csv_path, json_path=None):
    df[CSV_COLUMNS].to_csv(csv_path, index=False)
    logger.info(f"Wrote sweep table to {csv_path}")
    if json_path:
        with open(json_path, 'w') as f:
            f.write(sweep_json(df) + '\n')
        logger.info(f"Wrote sweep JSON to {json_path}")
