"""Command line front end: verify encodings, solve, count and sweep CX resources."""
import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from blockenc.block_encoding import BlockEncodingError
from blockenc.full_operator import all_encodings
from circuit.ir import CircuitError
from config.settings import Config, ConfigError, load_run_config
from lower.cost_model import STRATEGIES
from lower.decompose import LoweringError
from lower.resources import single_step_circuit, step_resources, sweep_report, \
    sweep_json, write_sweep
from problem.matrix_io import save_matrix
from problem.plasma_model import PlasmaParams, ProblemError, SingularMatrixError, make_grid
from qsvt.phases import PhaseFindingError
from qsvt.polynomial import PolynomialError, SolverConfig
from qsvt.solver import SolverError, solve_quantum
from sim.statevector import SimulationError

logger = logging.getLogger(__name__)

COMMANDS = ('verify', 'solve', 'count', 'sweep')
PACKAGE_ERRORS = (ConfigError, ProblemError, SingularMatrixError, CircuitError, SimulationError,
                  BlockEncodingError, PolynomialError, PhaseFindingError, SolverError,
                  LoweringError, MemoryError)
STEP_EXTRA_QUBITS = 10
FULL_BLOCK_QUBITS = 8


@dataclass
class RunConfig:
    command: str
    config_path: Optional[str] = None
    out: Optional[str] = None
    overrides: Dict = field(default_factory=dict)
    mode: Optional[str] = None
    dump_solution: Optional[str] = None
    log_level: str = Config.LOG_LEVEL

    def settings(self) -> Dict:
        """Config defaults, then file values, then command line flags"""
        values = {
            'n_x': Config.N_X, 'n_v': Config.N_V, 'omega0': Config.OMEGA0,
            'x_max': Config.X_MAX, 'v_max': Config.V_MAX, 'source_width': Config.SOURCE_WIDTH,
            'eps': Config.EPS,
            'kappa': None, 'strategy': None, 'max_degree': Config.MAX_DEGREE,
            'include_a': True, 'sizes': None,
        }
        if self.config_path:
            values.update(load_run_config(self.config_path))
        values.update({k: v for k, v in self.overrides.items() if v is not None})
        if values['strategy'] is not None and values['strategy'] not in STRATEGIES:
            raise ConfigError(f"unknown strategy {values['strategy']!r}; choose from {STRATEGIES}")
        return values


def parse_sizes(text) -> List[Tuple[int, int]]:
    """'3x2,4x2' -> [(3, 2), (4, 2)]"""
    sizes = []
    for item in text.split(','):
        try:
            n_x, n_v = item.strip().lower().split('x')
            sizes.append((int(n_x), int(n_v)))
        except ValueError:
            raise ConfigError(f"bad size {item!r}; expected NXxNV such as 4x3")
    return sizes


def build_params(values: Dict) -> PlasmaParams:
    def profile(key):
        value = values.get(key, 1.0)
        return np.asarray(value, dtype=float) if isinstance(value, list) else float(value)

    return PlasmaParams.default(omega0=values['omega0'], x_max=values['x_max'],
                                v_max=values['v_max'], source_width=values['source_width'],
                                source_center=values.get('source_center'),
                                density=profile('density'), temperature=profile('temperature'),
                                include_a=bool(values['include_a']))


def cmd_verify(run: RunConfig) -> Tuple[int, Dict]:
    values = run.settings()
    n_x, n_v = values['n_x'], values['n_v']
    if n_x + n_v + 1 > Config.MAX_DATA_QUBITS:
        raise SimulationError(f"data width {n_x + n_v + 1} exceeds the guard of "
                              f"{Config.MAX_DATA_QUBITS} qubits; use --mode=count-only")
    params = build_params(values)
    grid = make_grid(params, n_x, n_v)

    rows = []
    passed = True
    full_details = {}
    for be in all_encodings(grid, params):
        if be.label == 'full':
            full_details = be.details
        error = be.verify()
        row = {'label': be.label, 'scale': float(be.scale), 'error': error,
               'block_width': be.block_width, 'data_width': be.data_width, 'width': be.width,
               'passed': error <= Config.VERIFY_TOLERANCE, 'unitarity_error': None}
        if be.width <= Config.UNITARITY_CHECK_QUBITS:
            row['unitarity_error'] = be.unitarity_error()
            row['passed'] = row['passed'] and row['unitarity_error'] <= Config.UNITARY_TOLERANCE
        logger.info(f"{be.label}: error={error:.3e} passed={row['passed']}")
        passed = passed and row['passed']
        rows.append(row)

    full = next(row for row in rows if row['label'] == 'full')
    step_width = single_step_circuit(n_x, n_v, params).width
    structure = {
        'block_qubits': full['block_width'],
        'data_qubits': full['data_width'],
        'step_width': step_width,
        'passed': (full['block_width'] == FULL_BLOCK_QUBITS
                   and full['data_width'] == n_x + n_v + 1
                   and step_width == n_x + n_v + STEP_EXTRA_QUBITS),
    }
    passed = passed and structure['passed']
    scales = {'s': full['scale']}
    scales.update({k: v for k, v in full_details.items() if k in ('s_F', 's_C', 'omega0')})

    report = {'command': 'verify', 'n_x': n_x, 'n_v': n_v, 'encodings': rows,
              'scales': scales, 'structure': structure, 'passed': passed}
    return (0 if passed else 1), report


def cmd_solve(run: RunConfig) -> Tuple[int, Dict]:
    values = run.settings()
    params = build_params(values)
    grid = make_grid(params, values['n_x'], values['n_v'])
    config = SolverConfig(kappa=values['kappa'], eps=values['eps'],
                          max_degree=values['max_degree'])
    solution = solve_quantum(grid, params, config)

    passed = solution.fidelity >= config.fidelity_threshold
    report = {'command': 'solve', 'n_x': values['n_x'], 'n_v': values['n_v'],
              'eps': config.eps, 'include_a': params.include_a, 'passed': passed}
    report.update(solution.report())
    if run.dump_solution:
        save_matrix(run.dump_solution, solution.normalized_state)
        report['solution_dump'] = run.dump_solution
    if not passed:
        logger.error(f"Fidelity {solution.fidelity:.6f} below {config.fidelity_threshold}")
    return (0 if passed else 1), report


def _strategies(values):
    return (values['strategy'],) if values['strategy'] else STRATEGIES


def cmd_count(run: RunConfig) -> Tuple[int, Dict]:
    values = run.settings()
    n_x, n_v = values['n_x'], values['n_v']
    params = build_params(values)
    reports = [step_resources(n_x, n_v, s, params) for s in _strategies(values)]

    counts = {r.strategy: r.cx_count for r in reports}
    passed = all(r.width == n_x + n_v + STEP_EXTRA_QUBITS for r in reports)
    if set(counts) == set(STRATEGIES):
        passed = passed and counts['optimized'] <= counts['baseline']
    report = {'command': 'count', 'n_x': n_x, 'n_v': n_v,
              'rows': [r.to_dict() for r in reports], 'passed': passed}
    return (0 if passed else 1), report


def cmd_sweep(run: RunConfig) -> Tuple[int, Dict]:
    values = run.settings()
    sizes = values['sizes'] or Config.SWEEP_SIZES
    if isinstance(sizes, str):
        sizes = parse_sizes(sizes)
    df = sweep_report(sizes, _strategies(values), Config.MAX_WORKERS, build_params(values))

    passed = True
    if set(df['strategy']) == set(STRATEGIES):
        table = df.pivot_table(index=['n_x', 'n_v'], columns='strategy', values='cx_count')
        passed = bool((table['optimized'] <= table['baseline']).all())

    csv_path = Path(run.out or 'sweep.csv')
    write_sweep(df, csv_path, csv_path.with_suffix('.json'))
    report = json.loads(sweep_json(df))
    report.update({'command': 'sweep', 'csv': str(csv_path), 'passed': passed})
    return (0 if passed else 1), report


HANDLERS = {'verify': cmd_verify, 'solve': cmd_solve, 'count': cmd_count, 'sweep': cmd_sweep}


def parse_args(argv=None) -> RunConfig:
    parser = argparse.ArgumentParser(description="Vlasov-Ampere block encoding, QSVT solve "
                                                 "and CX resource counts")
    parser.add_argument('command', choices=COMMANDS)
    parser.add_argument('--config', help="JSON or TOML run configuration")
    parser.add_argument('--out', help="report path (CSV path for sweep)")
    parser.add_argument('--nx', type=int)
    parser.add_argument('--nv', type=int)
    parser.add_argument('--omega0', type=float)
    parser.add_argument('--kappa', type=float)
    parser.add_argument('--eps', type=float)
    parser.add_argument('--strategy', choices=STRATEGIES)
    parser.add_argument('--mode', choices=('count-only',))
    parser.add_argument('--sizes', help="comma separated NXxNV list, e.g. 3x2,4x3")
    parser.add_argument('--log-level', default=Config.LOG_LEVEL)
    parser.add_argument('--dump-solution', help="write the solution vector as a matrix dump")
    args = parser.parse_args(argv)

    overrides = {'n_x': args.nx, 'n_v': args.nv, 'omega0': args.omega0, 'kappa': args.kappa,
                 'eps': args.eps, 'strategy': args.strategy, 'sizes': args.sizes}
    return RunConfig(command=args.command, config_path=args.config, out=args.out,
                     overrides=overrides, mode=args.mode, dump_solution=args.dump_solution,
                     log_level=args.log_level)


def write_report(report: Dict, out: Optional[str]):
    text = json.dumps(report, sort_keys=True, indent=2)
    if out:
        with open(out, 'w') as f:
            f.write(text + '\n')
        logger.info(f"Wrote report to {out}")
    else:
        print(text)


def main(argv=None) -> int:
    run = parse_args(argv)
    logging.basicConfig(level=run.log_level.upper(),
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')

    command = run.command
    if run.mode == 'count-only' and command in ('verify', 'solve'):
        logger.info(f"count-only mode: counting resources instead of running {command}")
        command = 'count'

    try:
        status, report = HANDLERS[command](run)
    except PACKAGE_ERRORS as e:
        logger.error(f"{command} failed: {e}")
        return 1

    out = None if command == 'sweep' else run.out
    write_report(report, out)
    return status


if __name__ == "__main__":
    sys.exit(main())
