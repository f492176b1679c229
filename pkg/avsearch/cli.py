"""Command-line interface for avsearch.

Subcommands
-----------
run
    Run the episode grid of a scenario file and write CSV/JSON results.
genmap
    Generate a synthetic map from a difficulty preset.
metrics
    Recompute metrics from a stored episode CSV.
"""
import argparse
import logging
import sys

from avsearch.configuration import (AvsConfig, ConfigFileDoesNotExistError,
                                    InvalidConfigError, parse_seeds)
from avsearch.domain import PlannerVariant
from avsearch.harness import run_suite
from avsearch.mapgen import (PRESETS, GenerationFailed, generate_preset,
                             save_map)
from avsearch.metrics import (compute_metrics, read_results_csv, summarize,
                              summary_frame)


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2

LOG_FORMAT = '%(asctime)s %(name)s %(levelname)s: %(message)s'


def parse_args(args=None):
    """Parse command line arguments.

    Parameters
    ----------
    args : list of str, optional
        Command line arguments to process. If not supplied, reads from
        `sys.argv`.

    Returns
    -------
    args : argparse.Namespace
        The processed command line arguments.
    """
    p = argparse.ArgumentParser(prog='avsearch',
                                description=sys.modules[__name__].__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest='command', required=True)

    run = sub.add_parser('run', help='run a search suite')
    run.add_argument('--config', type=str,
        help='scenario file; defaults to $AVSEARCHRC')
    run.add_argument('--out', type=str,
        help='output directory; overrides [global] output')
    run.add_argument('--dump-heatmaps', action='store_true', default=None,
        help='write the probability field after every step as PGM')
    run.add_argument('--variant', type=str, action='append',
        choices=[v.value for v in PlannerVariant],
        help='planner variant to run; may be repeated')
    run.add_argument('--seeds', type=str,
        help='seed range a..b (inclusive) or a comma separated list')
    run.add_argument('--jobs', type=int,
        help='number of worker processes')
    run.add_argument('--sequential-planner', action='store_true',
        help='plan with a single search tree')
    run.add_argument('--progress', action='store_true',
        help='show a progress bar')
    run.add_argument('--log-level', type=str,
        help='overrides [logging] level')

    genmap = sub.add_parser('genmap', help='generate a synthetic map')
    genmap.add_argument('--preset', type=str, required=True,
        choices=sorted(PRESETS))
    genmap.add_argument('--seed', type=int, default=0)
    genmap.add_argument('--out', type=str, required=True,
        help='map file to write')

    metrics = sub.add_parser('metrics', help='recompute metrics from a CSV')
    metrics.add_argument('--csv', type=str, required=True)

    return p.parse_args(args)


def configure_logging(level='WARNING', logfile=''):
    """Configure the root logger from the ``[logging]`` settings."""
    handlers = [logging.StreamHandler()]
    if logfile:
        handlers.append(logging.FileHandler(logfile))
    logging.basicConfig(level=getattr(logging, str(level).upper(), logging.WARNING),
                        format=LOG_FORMAT, handlers=handlers, force=True)


def run(args):
    config = AvsConfig(path=args.config)
    configure_logging(args.log_level or config.logging.level,
                      config.logging.logfile)
    seeds = parse_seeds(args.seeds) if args.seeds else None
    reports = run_suite(config,
                        output_dir=args.out,
                        variants=args.variant,
                        seeds=seeds,
                        jobs=args.jobs,
                        dump_heatmaps=args.dump_heatmaps,
                        sequential_planner=args.sequential_planner,
                        progress=args.progress)
    for (scenario, variant), report in sorted(reports.items()):
        apl = '{:.2f}'.format(report.apl) if report.apl is not None else '-'
        print('{:<20} {:<12} N={:<4d} SR={:.3f} APL={} SPL={:.3f}'.format(
            scenario, variant, report.episodes, report.sr, apl, report.spl))
    return EXIT_OK


def genmap(args):
    configure_logging()
    grid = generate_preset(args.preset, args.seed)
    save_map(grid, args.out)
    print('Wrote {} ({}x{}, k={})'.format(args.out, grid.width, grid.height, grid.k))
    return EXIT_OK


def metrics(args):
    configure_logging()
    results = read_results_csv(args.csv)
    if not results:
        print('No episodes in {}'.format(args.csv))
        return EXIT_OK
    overall = compute_metrics(results)
    print(summary_frame(summarize(results)).to_string(index=False))
    apl = '{:.2f}'.format(overall.apl) if overall.apl is not None else '-'
    print('all: N={} SR={:.3f} APL={} SPL={:.3f}'.format(
        overall.episodes, overall.sr, apl, overall.spl))
    return EXIT_OK


COMMANDS = {'run': run, 'genmap': genmap, 'metrics': metrics}


def main(argv=None):
    args = parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigFileDoesNotExistError, InvalidConfigError, GenerationFailed,
            ValueError) as e:
        logger.error('%s', e)
        print('Error: {}'.format(e), file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        logger.error('%s', e)
        print('Error: {}'.format(e), file=sys.stderr)
        return EXIT_IO


if __name__ == '__main__':
    sys.exit(main())
