#!/usr/bin/env python3
DESCRIPTION = """
copula_transport.py computes optimal-transport distances between the empirical copulas of multivariate
                time series: copula histograms (transform), EMD between signatures (emd), the intra-dependence
                distance (intra), the Target Dependencies Coefficient (tdc), pairwise distance matrices (matrix),
                hierarchical clustering (cluster), power benchmarks of dependence estimators (power) and synthetic
                data (gen). More details regarding the input files in the README.md"""

import sys
import argparse
import logging
from pathlib import Path

import baselines
import cluster
import copula
import dependence
import power
import synth
import transport
from copula_util import (DEFAULT_SEED, ENV_JOBS, ENV_SEED, EXIT_OK, CopulaTransportError, DataError, initialize,
                         read_distance_matrix_csv, read_json, read_manifest, read_panel_csv, write_distance_matrix_csv,
                         write_json, write_manifest, write_matrix_csv, write_panel_csv)

logger = logging.getLogger(__name__)

# Power patterns are bivariate: x and y stack into 2 coordinates
POWER_DIMENSION = 2


def create_arg_parser(description=DESCRIPTION):
    parser = argparse.ArgumentParser(prog='copula-transport', description=description,
                                     formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    return parser


def add_configuration_arguments(parser):
    parser.add_argument('-v', '--verbose', default=False, action='store_true', help='Print debug messages.')
    parser.add_argument('-q', '--quiet', default=False, action='store_true', help='Hide progress bars.')
    parser.add_argument('-lf', '--log_file', type=str, default=None, help='Path to a log file (messages are always printed on stderr).')
    return parser


def add_output_argument(parser, required=False, help='Output file (printed on stdout when omitted).'):
    parser.add_argument('-o', '--out', required=required, default=None, help=help)


def add_grid_argument(parser):
    parser.add_argument('-g', '--grid', type=int, default=None,
                        help='Grid resolution m of the copula histograms (default depends on the dimension: 16 for d=2, 8 for d=3, 4 above).')


def add_seed_argument(parser):
    parser.add_argument('-s', '--seed', type=int, default=None,
                        help=f'Seed of the random streams (default ${ENV_SEED} or {DEFAULT_SEED}).')


def add_jobs_argument(parser):
    parser.add_argument('-j', '--jobs', type=int, default=None,
                        help=f'Number of parallel workers, -1 for all cores (default ${ENV_JOBS} or 1). Never changes the results.')


def add_solver_arguments(parser):
    parser.add_argument('--solver', default=None, choices=transport.SOLVERS, help='EMD solver (default exact).')
    parser.add_argument('--epsilon', type=float, default=transport.DEFAULT_EPSILON, help='Sinkhorn regularization.')
    parser.add_argument('--tol', type=float, default=transport.DEFAULT_TOLERANCE, help='Sinkhorn marginal tolerance.')
    parser.add_argument('--max_iter', type=int, default=transport.DEFAULT_MAX_ITER, help='Sinkhorn iteration budget.')


def solver_options(args, fallback='exact'):
    solver = args.solver or fallback
    if solver == 'sinkhorn':
        return solver, {'epsilon': args.epsilon, 'tol': args.tol, 'max_iter': args.max_iter}
    return solver, {}


def split_list(text):
    return [item.strip() for item in text.split(',') if item.strip() != '']


# Sub-commands

def transform(args, config):
    panel = read_panel_csv(args.input)
    sample = copula.empirical_copula_transform(panel)
    write_matrix_csv(args.out, sample.points, panel.column_names())
    logger.info(f'Wrote the copula transform of {panel.length} observations to {args.out}')
    if args.signature:
        resolution = args.grid or copula.default_resolution(panel.dimension)
        signature = copula.bin_copula(sample, resolution)
        write_json(args.signature, signature.to_json())
        logger.info(f'Wrote a signature of {signature.size} atoms at resolution {resolution} to {args.signature}')


def emd(args, config):
    s1 = copula.Signature.from_json(read_json(args.a), where=args.a)
    s2 = copula.Signature.from_json(read_json(args.b), where=args.b)
    solver, options = solver_options(args)
    document = {'solver': solver}
    if solver == 'sinkhorn':
        result = transport.emd_sinkhorn(s1, s2, **options)
        document.update({'emd': result.cost, 'status': result.status, 'iterations': result.iterations,
                         'epsilon': result.epsilon, 'marginal_violation': result.marginal_violation})
    else:
        document['emd'] = transport.emd_exact(s1, s2).total_cost
    write_json(args.out, document)


def intra(args, config):
    x1 = read_panel_csv(args.x1)
    x2 = read_panel_csv(args.x2)
    resolution = args.grid or copula.default_resolution(x1.dimension)
    solver, options = solver_options(args)
    value = dependence.intra_distance(x1, x2, resolution=resolution, solver=solver, **options)
    write_json(args.out, {'d_intra': value, 'resolution': resolution, 'solver': solver})


def load_targets(document, resolution, dimension, seed, where):
    if document is None:
        logger.info('No target file given: using the comonotone and countermonotone targets')
        return dependence.TargetSet.comonotone_countermonotone(dimension, resolution)
    return dependence.TargetSet.from_json(document, resolution, dimension=dimension, seed=seed, where=where)


def tdc(args, config):
    x = read_panel_csv(args.x)
    y = read_panel_csv(args.y)
    document = read_json(args.targets) if args.targets else None
    dimension = x.dimension + y.dimension
    resolution = args.grid or copula.default_resolution(dimension)
    targets = load_targets(document, resolution, dimension, config['seed'], args.targets)
    solver, options = solver_options(args)
    result = dependence.tdc(x, y, targets, solver=solver, **options)
    write_json(args.out, result.to_json())


def matrix(args, config):
    manifest = read_manifest(args.manifest)
    panels = manifest.read_panels()
    mode = args.mode or manifest.mode or 'intra'
    resolution = args.grid or manifest.resolution
    seed = manifest.seed if args.seed is None and manifest.seed is not None else config['seed']
    solver, options = solver_options(args, fallback=manifest.solver or 'exact')

    targets = None
    if mode == 'tdc':
        if args.targets:
            manifest_targets, where = read_json(args.targets), args.targets
        else:
            manifest_targets, where = manifest.targets, f'{args.manifest}: targets'
        resolution = resolution or copula.default_resolution(2 * panels[0].dimension)
        targets = load_targets(manifest_targets, resolution, 2 * panels[0].dimension, seed, where)

    dm = dependence.distance_matrix(panels, mode=mode, targets=targets, resolution=resolution, solver=solver,
                                    jobs=config['jobs'], quiet=config['quiet'], **options)
    write_distance_matrix_csv(args.out, dm)
    logger.info(f'Wrote the {dm.size} x {dm.size} {mode} distance matrix to {args.out}')


def clustering(args, config):
    dm = read_distance_matrix_csv(args.input)
    dendrogram = cluster.agglomerate(dm, linkage=args.linkage)
    document = {'dendrogram': dendrogram.to_json()}
    if args.k is not None:
        assignments = cluster.cut(dendrogram, args.k)
        document.update(cluster.assignments_to_json(dendrogram, assignments))
        if args.truth:
            truth = read_manifest(args.truth).truth()
            missing = [label for label in dendrogram.labels if label not in truth]
            if len(missing) > 0:
                raise DataError(f'{args.truth}: no class label for {", ".join(missing)}')
            ari = cluster.adjusted_rand_index(assignments, [truth[label] for label in dendrogram.labels])
            document['adjusted_rand_index'] = ari
            logger.info(f'Adjusted Rand index against {args.truth}: {ari:.4f}')
    elif args.truth:
        raise DataError('--truth needs a partition: give the number of clusters with -k')
    write_json(args.out, document)


def benchmark(args, config):
    estimators = [power.make_estimator(name, projections=args.projections, scale=args.scale,
                                       resolution=args.grid or copula.default_resolution(POWER_DIMENSION), solver=args.solver or 'exact')
                  for name in split_list(args.estimators)]
    patterns = split_list(args.patterns) if args.patterns else list(synth.PATTERNS)
    if args.noise_levels:
        try:
            noise_levels = [float(level) for level in split_list(args.noise_levels)]
        except ValueError as e:
            raise DataError(f'--noise_levels must be a comma separated list of numbers ({e})') from e
    else:
        noise_levels = list(synth.NOISE_LEVELS)

    table = power.benchmark(estimators, patterns, noise_levels, trials=args.trials, alpha=args.alpha, seed=config['seed'],
                            sample_size=args.sample_size, null_mode=args.null_mode, jobs=config['jobs'],
                            quiet=config['quiet'])
    path = Path(args.out)
    path.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(str(path), index=False)
    logger.info(f'Wrote {len(table)} power rows to {path}')


def gen(args, config):
    seed = config['seed']
    if args.classes:
        classes = [synth.MtsClass.parse(text) for text in split_list(args.classes)]
        dataset = synth.generate_mts_dataset(args.n_per_class, classes, length=args.sample_size, seed=seed)
        folder = Path(args.out)
        folder.mkdir(parents=True, exist_ok=True)
        paths = []
        for panel, _ in dataset:
            paths.append(folder / f'{panel.series_id}.csv')
            write_panel_csv(paths[-1], panel)
        write_manifest(folder / 'manifest.json', paths, [label for _, label in dataset], seed=seed)
        logger.info(f'Wrote {len(dataset)} panels and their manifest to {folder}')
    elif args.rho is not None:
        write_panel_csv(args.out, synth.gaussian_copula_panel(args.rho, sample_size=args.sample_size, seed=seed))
    elif args.pattern:
        spec = synth.PatternSpec(args.pattern, args.noise, args.sample_size, seed)
        write_panel_csv(args.out, synth.generate_pattern(spec))
    else:
        raise DataError('gen needs one of --pattern, --rho or --classes')


def add_subcommands(parser):
    subparsers = parser.add_subparsers(dest='command', required=True, metavar='command')

    def add_subcommand(name, function, help):
        subparser = subparsers.add_parser(name, help=help, description=help,
                                          formatter_class=argparse.ArgumentDefaultsHelpFormatter)
        add_configuration_arguments(subparser)
        subparser.set_defaults(function=function)
        return subparser

    subparser = add_subcommand('transform', transform, 'Empirical copula transform of a panel CSV, optionally binned into a signature.')
    subparser.add_argument('-i', '--input', required=True, help='Panel CSV (header row, one column per variable).')
    add_output_argument(subparser, required=True, help='Copula sample CSV (normalized ranks).')
    subparser.add_argument('-sig', '--signature', default=None, help='Also write the binned signature to this JSON file.')
    add_grid_argument(subparser)

    subparser = add_subcommand('emd', emd, 'Earth Mover\'s Distance between two signature JSON files.')
    subparser.add_argument('-a', '--a', required=True, help='First signature JSON.')
    subparser.add_argument('-b', '--b', required=True, help='Second signature JSON.')
    add_solver_arguments(subparser)
    add_output_argument(subparser)

    subparser = add_subcommand('intra', intra, 'Intra-dependence distance between two panel CSVs.')
    subparser.add_argument('--x1', required=True, help='First panel CSV.')
    subparser.add_argument('--x2', required=True, help='Second panel CSV.')
    add_grid_argument(subparser)
    add_solver_arguments(subparser)
    add_output_argument(subparser)

    subparser = add_subcommand('tdc', tdc, 'Target Dependencies Coefficient between two panel CSVs.')
    subparser.add_argument('--x', required=True, help='Panel CSV of X.')
    subparser.add_argument('--y', required=True, help='Panel CSV of Y.')
    subparser.add_argument('-t', '--targets', default=None,
                           help='Target set JSON (see targets_example.json); comonotone and countermonotone targets when omitted.')
    add_grid_argument(subparser)
    add_seed_argument(subparser)
    add_solver_arguments(subparser)
    add_output_argument(subparser)

    subparser = add_subcommand('matrix', matrix, 'Pairwise D_intra or 1 - TDC distance matrix of the panels of a manifest.')
    subparser.add_argument('-m', '--manifest', required=True, help='Manifest JSON (see manifest_example.json).')
    subparser.add_argument('--mode', default=None, choices=dependence.MODES, help='Distance (default: the manifest\'s, else intra).')
    subparser.add_argument('-t', '--targets', default=None, help='Target set JSON for tdc mode (overrides the manifest\'s).')
    add_grid_argument(subparser)
    add_seed_argument(subparser)
    add_jobs_argument(subparser)
    add_solver_arguments(subparser)
    add_output_argument(subparser, required=True, help='Distance matrix CSV.')

    subparser = add_subcommand('cluster', clustering, 'Agglomerative clustering of a distance matrix CSV.')
    subparser.add_argument('-i', '--input', required=True, help='Distance matrix CSV written by the matrix command.')
    subparser.add_argument('-l', '--linkage', default=cluster.DEFAULT_LINKAGE, choices=cluster.LINKAGES, help='Linkage criterion.')
    subparser.add_argument('-k', '--k', type=int, default=None, help='Number of clusters of the flat partition.')
    subparser.add_argument('--truth', default=None, help='Manifest whose panel labels are the true classes (reports the adjusted Rand index).')
    add_output_argument(subparser)

    subparser = add_subcommand('power', benchmark, 'Power versus noise of dependence estimators on the synthetic patterns.')
    subparser.add_argument('-e', '--estimators', default='tdc,dcor,rdc,pearson',
                           help=f'Comma separated estimators among {", ".join(baselines.ESTIMATORS)}.')
    subparser.add_argument('-p', '--patterns', default=None, help=f'Comma separated patterns (default all of {", ".join(synth.PATTERNS)}).')
    subparser.add_argument('-nl', '--noise_levels', default=None, help='Comma separated noise levels (default 0, 1/3, ..., 3).')
    subparser.add_argument('-B', '--trials', type=int, default=power.DEFAULT_TRIALS, help='Null and dependent trials per noise level.')
    subparser.add_argument('-a', '--alpha', type=float, default=power.DEFAULT_ALPHA, help='Significance level.')
    subparser.add_argument('-n', '--sample_size', type=int, default=synth.DEFAULT_SAMPLE_SIZE, help='Observations per trial.')
    subparser.add_argument('--null_mode', default='independent', choices=power.NULL_MODES, help='How null samples are drawn.')
    subparser.add_argument('--projections', type=int, default=baselines.RDC_PROJECTIONS, help='RDC random projections k.')
    subparser.add_argument('--scale', type=float, default=baselines.RDC_SCALE, help='RDC projection scale s.')
    add_grid_argument(subparser)
    subparser.add_argument('--solver', default=None, choices=transport.SOLVERS, help='EMD solver of the tdc estimator (default exact).')
    add_seed_argument(subparser)
    add_jobs_argument(subparser)
    add_output_argument(subparser, required=True, help='Power CSV (one row per estimator, pattern and noise level).')

    subparser = add_subcommand('gen', gen, 'Synthetic panels: a noisy pattern, a Gaussian pair or a labelled multivariate dataset.')
    subparser.add_argument('-p', '--pattern', default=None, choices=synth.KINDS, help='Pattern of a single bivariate panel.')
    subparser.add_argument('-nl', '--noise', type=float, default=0.0, help='Noise level of the pattern.')
    subparser.add_argument('-r', '--rho', type=float, default=None, help='Correlation of a bivariate Gaussian panel.')
    subparser.add_argument('-c', '--classes', default=None,
                           help='Comma separated classes "kind:d[:sign[:noise]]" of a labelled dataset, e.g. "linear:2,linear:2:-1".')
    subparser.add_argument('-npc', '--n_per_class', type=int, default=5, help='Panels per class of the dataset.')
    subparser.add_argument('-n', '--sample_size', type=int, default=synth.DEFAULT_SAMPLE_SIZE, help='Observations per panel.')
    add_seed_argument(subparser)
    add_output_argument(subparser, required=True, help='Panel CSV, or the dataset folder with --classes.')

    return subparsers


def main(argv=None):
    parser = create_arg_parser()
    add_subcommands(parser)
    args = parser.parse_args(argv)

    try:
        config = initialize(args)
        args.function(args, config)
    except CopulaTransportError as e:
        logger.error(f'Error: {e}')
        return e.exit_code
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
