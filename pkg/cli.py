#!/usr/bin/env python3
"""
sdcert command line

    analyze    structure report and singularity degree bounds for a graph
    reduce     facial reduction on an instance file or a directory of them
    verify     check a certificate against an instance, conditions (c1)-(c7)
    generate   write the framework and instance of a construction
    rigidity   super stability / universal rigidity report for a framework
    met-check  metric polytope membership of an instance's weights

Exit codes: 0 ok, 1 verification failed, 2 bad input, 3 infeasible, 4 solver stall.
"""
import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from certificates import load_certificate, save_certificate, verify_certificate
from config import RunConfig, set_config
from constructions import FAMILIES, ConstructionSpec, generate, parse_params
from errors import (ConfigError, InfeasibleInstance, InstanceParseError, InvalidInput, InvalidSpec,
                    MaxIterations, MetricInfeasible, SdcertError, TooLarge)
from facial_reduction import (augment_tightness, check_nondegeneracy, check_tightness, facial_reduction,
                              implied_entries, label_singularity_degree, lift_certificate,
                              nondegenerate_on_face)
from graphs import Graph, classify_sd_bounds
from instance import load_instance, preprocess_degenerate, save_instance, uncontract_solution
from linalg_core import numeric_rank
from logger_config import logger, set_verbosity
from metric_polytope import candidate_stage_one, instance_met_check
from stress_rigidity import (framework_to_instance, load_framework, save_framework, staged_stress_analysis,
                             verify_super_stable, verify_universal_rigidity_certificate)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_BAD_INPUT = 2
EXIT_INFEASIBLE = 3
EXIT_STALL = 4
CONDITIONS = ('c1', 'c2', 'c3', 'c4', 'c5', 'c6', 'c7')


def load_graph(path) -> Graph:
    """{"n": int, "edges": [[u, v], ...]}; instance and framework files also work"""
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
        edges = [(e['u'], e['v']) if isinstance(e, dict) else tuple(e) for e in data['edges']]
        return Graph(int(data['n']), edges)
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise InstanceParseError(f"Cannot read graph {path}: {e}")


def _emit(args, report, lines):
    if args.json:
        print(json.dumps(report, indent=2, default=float))
    else:
        for line in lines:
            print(line)


def _bound_line(name, lower, upper):
    if upper is None:
        return f"{name} >= {lower} (no bound from structure theorems)"
    if lower == upper:
        return f"{name} = {lower} (exact)"
    return f"{lower} <= {name} <= {upper}"


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------

def cmd_analyze(args, cfg):
    G = load_graph(args.graph)
    bounds = classify_sd_bounds(G)
    lines = [f"{args.graph}: {G}"]
    if bounds.chordality.chordal:
        lines.append(f"chordal: yes, perfect elimination ordering {list(bounds.chordality.ordering)}")
    else:
        lines.append(f"chordal: no, hole {list(bounds.chordality.hole)}")
    lines.append(f"K4-minor-free: {'yes' if bounds.k4_minor_free else 'no'}")
    for leaf in bounds.decomposition.leaves():
        lines.append(f"  clique-sum piece {list(leaf.vertices)}: {leaf.label}")
    lines.append(_bound_line('sd', bounds.sd_lower, bounds.sd_upper))
    lines.append(_bound_line('sd*', bounds.sd_star_lower, bounds.sd_star_upper))
    lines += [f"  - {r}" for r in bounds.reasons]
    _emit(args, bounds.to_dict(), lines)
    return EXIT_OK


# ---------------------------------------------------------------------------
# reduce
# ---------------------------------------------------------------------------

def _stage_lines(cert):
    lines = []
    for j, stage in enumerate(cert.stages, start=1):
        lines.append(f"  stage {j}: face {cert.face_dims[j - 1]} -> {cert.face_dims[j]}, "
                     f"support {len(stage.edge_support())} edges, max |w| {stage.max_abs():.3e}")
    return lines


def _reduce_one(path, args, cfg):
    """Returns (exit code, report dict, lines)"""
    inst = load_instance(path)
    cert_path = Path(args.out) if args.out else Path(path).with_suffix('.cert.json')
    report = {'instance': str(path), 'n': inst.n, 'edges': len(inst.constraints)}
    try:
        if args.preprocess:
            red = preprocess_degenerate(inst)
            result = facial_reduction(red.reduced, config=cfg)
            cert = lift_certificate(red, result.certificate, config=cfg)
            X = None if result.infeasible else uncontract_solution(result.max_rank_solution, red)
            report['reduced_n'] = red.reduced.n
        else:
            result = facial_reduction(inst, config=cfg)
            cert, X = result.certificate, result.max_rank_solution
    except MaxIterations as e:
        logger.error(f"{path}: {e}")
        lines = [f"{path}: solver stalled"]
        if e.partial is not None:
            lines += _stage_lines(e.partial)
            report['partial_face_dims'] = list(e.partial.face_dims)
        report['status'] = 'stalled'
        return EXIT_STALL, report, lines

    save_certificate(cert, cert_path)
    report.update({'stages': len(cert.stages), 'face_dims': list(cert.face_dims),
                   'certificate': str(cert_path), 'certificate_rank': cert.rank})
    lines = [f"{path}: {len(cert.stages)} stage(s)"] + _stage_lines(cert)
    if result.infeasible:
        report['status'] = 'infeasible'
        lines.append(f"  infeasible: stage {cert.infeasible_stage} has a negative objective")
        lines.append(f"  certificate written to {cert_path}")
        return EXIT_INFEASIBLE, report, lines

    rank = numeric_rank(X, cfg.tol_rank)
    sd = label_singularity_degree(inst, result)
    if args.preprocess and cert is not result.certificate:
        report['sd'] = {'value': len(cert.stages), 'kind': 'upper_bound'}
        lines.append(f"  sd <= {len(cert.stages)} (reduced sd {sd.value} + 1)")
    else:
        report['sd'] = sd.to_dict()
        lines.append(f"  sd = {sd.value} ({sd.kind.replace('_', ' ')})")
    report.update({'status': 'feasible', 'rank': rank})
    lines.append(f"  maximum rank {rank}, certificate rank {cert.rank}")
    if args.implied:
        fixed = implied_entries(inst, X, config=cfg)
        report['implied'] = [{'u': u, 'v': v, 'value': val} for u, v, val in fixed]
        lines += [f"  implied X[{u}, {v}] = {val!r}" for u, v, val in fixed]
    lines.append(f"  certificate written to {cert_path}")
    return EXIT_OK, report, lines


def _reduce_guarded(path, args, cfg):
    try:
        return _reduce_one(path, args, cfg)
    except MetricInfeasible as e:
        logger.error(f"{path}: {e}")
        return EXIT_INFEASIBLE, {'instance': str(path), 'status': 'metric_infeasible', 'cycle': e.cycle}, \
            [f"{path}: metric infeasible, cycle {e.cycle}"]
    except (InstanceParseError, InvalidInput) as e:
        logger.error(f"{path}: {e}")
        return EXIT_BAD_INPUT, {'instance': str(path), 'status': 'error', 'error': str(e)}, [f"{path}: {e}"]


def cmd_reduce(args, cfg):
    target = Path(args.instance)
    if not target.is_dir():
        code, report, lines = _reduce_guarded(target, args, cfg)
        _emit(args, report, lines)
        return code
    if args.out:
        raise InvalidInput("--out names a single certificate file; omit it for directories")
    paths = sorted(p for p in target.glob('*.json') if not p.name.endswith(('.cert.json', '.framework.json')))
    logger.info(f"Reducing {len(paths)} instances from {target} with {args.jobs} worker(s)")
    with ThreadPoolExecutor(max_workers=args.jobs) as pool:
        results = list(pool.map(lambda p: _reduce_guarded(p, args, cfg), paths))
    report = {'directory': str(target), 'results': [r for _, r, _ in results]}
    lines = [line for _, _, ls in results for line in ls]
    _emit(args, report, lines)
    return max((code for code, _, _ in results), default=EXIT_OK)


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def cmd_verify(args, cfg):
    inst = load_instance(args.instance)
    cert = load_certificate(args.certificate)
    if cert.n != inst.n:
        raise InvalidInput(f"Certificate is for n={cert.n}, instance has n={inst.n}")
    requested = [c.strip() for c in args.conditions.split(',') if c.strip()]
    unknown = set(requested) - set(CONDITIONS)
    if unknown:
        raise InvalidInput(f"Unknown conditions {sorted(unknown)}")

    X = None
    if cert.infeasible_stage is None and set(requested) & {'c4', 'c5', 'c7'}:
        X = facial_reduction(inst, config=cfg).max_rank_solution
    report = verify_certificate(inst, cert, X, config=cfg)
    results = {'c1': report.c1, 'c2': report.c2, 'c3': report.c3, 'c4': report.c4}
    if X is not None and 'c5' in requested:
        bad = check_tightness(inst, cert, X, config=cfg)
        results['c5'] = not bad
        report.messages += [f"(c5) fails on {key}" for key in bad]
    if 'c6' in requested:
        results['c6'] = nondegenerate_on_face(inst, cert, config=cfg)
    if X is not None and 'c7' in requested:
        results['c7'] = check_nondegeneracy(inst, cert, X, config=cfg)

    lines = []
    passed = True
    for name in requested:
        value = results.get(name)
        if value is None:
            lines.append(f"{name}: n/a")
            continue
        passed &= bool(value)
        lines.append(f"{name}: {'PASS' if value else 'FAIL'}")
    if not report.faces_match:
        passed = False
        lines.append(f"faces: FAIL, recorded {list(cert.face_dims)}, recomputed {list(report.face_dims)}")
        logger.warning(f"Recorded face dimensions {list(cert.face_dims)} differ from {list(report.face_dims)}")
    lines += [f"  {m}" for m in report.messages]
    out = report.to_dict()
    out.update({k: v for k, v in results.items() if k in requested})
    out['requested'] = requested
    out['passed'] = passed
    _emit(args, out, lines)
    if not passed:
        logger.warning(f"Certificate {args.certificate} fails {[n for n in requested if results.get(n) is False]}")
    return EXIT_OK if passed else EXIT_VERIFY_FAILED


# ---------------------------------------------------------------------------
# generate
# ---------------------------------------------------------------------------

def cmd_generate(args, cfg):
    spec = ConstructionSpec(args.family, parse_params(args.param or []))
    F, inst = generate(spec)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    name = args.name or args.family
    framework_path = out_dir / f"{name}.framework.json"
    instance_path = out_dir / f"{name}.instance.json"
    save_framework(F, framework_path)
    save_instance(inst, instance_path)
    report = {'spec': spec.to_dict(), 'framework': str(framework_path), 'instance': str(instance_path),
              'n': F.n, 'd': F.d, 'params': F.params}
    _emit(args, report, [f"{spec.family}: n={F.n}, d={F.d}, {len(F.graph.edges)} edges",
                         f"  framework written to {framework_path}",
                         f"  instance written to {instance_path}"])
    return EXIT_OK


# ---------------------------------------------------------------------------
# rigidity
# ---------------------------------------------------------------------------

def cmd_rigidity(args, cfg):
    F = load_framework(args.framework)
    inst = framework_to_instance(F)
    result = facial_reduction(inst, config=cfg)
    if result.infeasible:
        raise InfeasibleInstance(f"{args.framework} does not define a feasible instance")
    cert = augment_tightness(inst, result.certificate, config=cfg)
    staged = staged_stress_analysis(F, cert, config=cfg)
    rank = inst.n - cert.rank
    super_stable = bool(cert.stages) and verify_super_stable(F, cert.stages[0], config=cfg)
    universal = super_stable or verify_universal_rigidity_certificate(F, cert, config=cfg)
    if super_stable:
        verdict = 'super stable'
    elif universal:
        verdict = f"universally rigid ({len(result.certificate.stages)}-stage certificate), not super stable"
    elif rank > F.d:
        verdict = f"not universally rigid (a completion of rank {rank} > d = {F.d} exists)"
    else:
        verdict = 'inconclusive'
    report = {'framework': str(args.framework), 'n': F.n, 'd': F.d, 'stages': len(result.certificate.stages),
              'max_rank': rank, 'super_stable': super_stable, 'universally_rigid': universal,
              'verdict': verdict, 'staged': staged.to_dict()}
    lines = [f"{args.framework}: {verdict}"]
    for s in staged.stages:
        lines.append(f"  stage {s.index}: stressed {sorted(s.stressed)}")
    _emit(args, report, lines)
    return EXIT_OK


# ---------------------------------------------------------------------------
# met-check
# ---------------------------------------------------------------------------

def cmd_met_check(args, cfg):
    inst = load_instance(args.instance)
    res = instance_met_check(inst, cfg.cycle_cap)
    report = res.to_dict()
    verdict = 'in' if res.feasible else 'outside'
    lines = [f"{args.instance}: arccos(c)/pi is {verdict} the metric polytope "
             f"({'exact' if res.exact else 'necessary condition only'}), margin {res.check.margin:.3e}"]
    if res.check.cycle:
        lines.append(f"  tightest cycle {list(res.check.cycle)}")
    if args.candidate:
        omega = candidate_stage_one(inst, cfg.cycle_cap)
        report['candidate'] = omega.to_dict()
        lines.append(f"  tight-cycle candidate: support {len(omega.edge_support())} edges, "
                     f"objective {omega.objective(inst.weights):.3e}")
    _emit(args, report, lines)
    return EXIT_OK if res.feasible else EXIT_INFEASIBLE


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

COMMANDS = {
    'analyze': cmd_analyze,
    'reduce': cmd_reduce,
    'verify': cmd_verify,
    'generate': cmd_generate,
    'rigidity': cmd_rigidity,
    'met-check': cmd_met_check,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='sdcert', description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument('--json', action='store_true', help='emit one JSON document on stdout')
    parser.add_argument('--config', help='JSON config file (also SDCERT_CONFIG)')
    parser.add_argument('--tol-rank', type=float)
    parser.add_argument('--tol-psd', type=float)
    parser.add_argument('--tol-feas', type=float)
    parser.add_argument('--cycle-cap', type=int)
    parser.add_argument('--max-iters', type=int)
    level = parser.add_mutually_exclusive_group()
    level.add_argument('-v', '--verbose', action='store_true')
    level.add_argument('-q', '--quiet', action='store_true')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('analyze', help='structure report and sd bounds for a graph')
    p.add_argument('graph')

    p = sub.add_parser('reduce', help='facial reduction on an instance file or directory')
    p.add_argument('instance')
    p.add_argument('--out', help='certificate path (single instance only)')
    p.add_argument('--jobs', type=int, default=1, help='worker threads for a directory')
    p.add_argument('--implied', action='store_true', help='list non-edge entries fixed on the feasible set')
    p.add_argument('--preprocess', action='store_true', help='contract +-1 edges before reducing')

    p = sub.add_parser('verify', help='check a certificate against an instance')
    p.add_argument('instance')
    p.add_argument('certificate')
    p.add_argument('--conditions', default='c1,c2,c3,c4', help='comma-separated subset of c1..c7')

    p = sub.add_parser('generate', help='write a construction as framework and instance files')
    p.add_argument('family', choices=FAMILIES)
    p.add_argument('--param', action='append', metavar='KEY=VALUE')
    p.add_argument('--out-dir', default='.')
    p.add_argument('--name')

    p = sub.add_parser('rigidity', help='universal rigidity report for a framework')
    p.add_argument('framework')

    p = sub.add_parser('met-check', help='metric polytope membership of instance weights')
    p.add_argument('instance')
    p.add_argument('--candidate', action='store_true', help='also build the tight-cycle stage-one candidate')
    return parser


def resolve_config(args) -> RunConfig:
    cfg = RunConfig.from_env()
    path = args.config or os.getenv('SDCERT_CONFIG')
    if path:
        cfg = RunConfig.from_file(path, base=cfg)
    overrides = {'tol_rank': args.tol_rank, 'tol_psd': args.tol_psd, 'tol_feas': args.tol_feas,
                 'cycle_cap': args.cycle_cap, 'max_iters': args.max_iters}
    cfg = cfg.with_overrides(**{k: v for k, v in overrides.items() if v is not None})
    if args.verbose:
        cfg = cfg.with_overrides(verbosity='verbose')
    elif args.quiet:
        cfg = cfg.with_overrides(verbosity='quiet')
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        set_config(cfg)
        set_verbosity(cfg.verbosity)
        if getattr(args, 'jobs', 1) < 1:
            raise InvalidInput("--jobs must be >= 1")
        return COMMANDS[args.command](args, cfg)
    except (InstanceParseError, InvalidSpec, InvalidInput, ConfigError, TooLarge) as e:
        logger.error(f"{args.command}: {e}")
        return EXIT_BAD_INPUT
    except (InfeasibleInstance, MetricInfeasible) as e:
        logger.error(f"{args.command}: {e}")
        return EXIT_INFEASIBLE
    except MaxIterations as e:
        logger.error(f"{args.command}: {e}")
        return EXIT_STALL
    except SdcertError as e:
        logger.error(f"{args.command}: {e}")
        return EXIT_BAD_INPUT


if __name__ == '__main__':
    sys.exit(main())
