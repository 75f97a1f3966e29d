'''----------------------------------------------------------------------------------------------------------------------------------
# Copyright (C) 2026
#
# This file is part of keymesh.
#
# keymesh is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# keymesh is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License. If not, see http://www.gnu.org/licenses/
---------------------------------------------------------------------------------------------------------------------------------'''


import argparse
import logging
import sys

from keymesh.analysis import SettingSpec
from keymesh.attack import RandomCapture
from keymesh.config import parse_bool, parse_config_file, parse_range
from keymesh.core import ChannelParams, GeoParams, RegionKind, SchemeParams
from keymesh.errors import InvalidParameterError, KeymeshError, SelfTestError
from keymesh.harness import (DEFAULT_TRIALS, DESIGN_COLUMNS, PQ_COLUMNS, SELFTEST_COLUMNS, SPLIT_COLUMNS,
                             ExperimentConfig, design_guidelines, figure_preset, pq_rows, records_frame, run_selftest,
                             run_split, run_sweep, write_csv)
from keymesh.log import get_logger, setup_logging
from keymesh.regions import parse_region

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILURE = 2

_FLOAT_VARIABLES = ('r', 't', 'target')


class ArgumentParser(argparse.ArgumentParser):
    '''
    argparse parser that raises instead of exiting, so usage errors share the exit-code mapping of main
    '''

    def error(self, message):
        raise InvalidParameterError(message)


def _common_options():
    common = ArgumentParser(add_help=False)
    common.add_argument('--out', default=None, help="write the CSV to this file instead of standard output")
    common.add_argument('--config', default=None, help="key = value file, command-line flags override it")
    common.add_argument('--verbose', action='store_true', help="debug diagnostics on standard error")
    common.add_argument('--quiet', action='store_true', help="errors only on standard error")
    return common


def _trial_options():
    trials = ArgumentParser(add_help=False)
    trials.add_argument('--trials', type=int, default=DEFAULT_TRIALS)
    trials.add_argument('--seed', type=int, default=0, help="master seed (64-bit unsigned)")
    trials.add_argument('--progress', action='store_true', help="progress bar on standard error")
    return trials


def _network_options():
    network = ArgumentParser(add_help=False)
    network.add_argument('--region', default='torus', help="torus, square or full (visibility)")
    network.add_argument('--n', type=int, default=1000)
    network.add_argument('--K', type=int, default=40)
    network.add_argument('--P', type=int, default=5000)
    network.add_argument('--q', type=int, default=2)
    network.add_argument('--r', type=float, default=None, help="transmission radius (disk model)")
    network.add_argument('--t', type=float, default=None, help="link-active probability, enables unreliable links")
    network.add_argument('--pq-target', type=float, default=None, help="solve P so that p_q stays at this value")
    network.add_argument('--range', default=None, help="sweep values, lo:hi:step (inclusive) or a comma list")
    return network


def build_parser():
    '''
    :return: (parser, {command: subparser})
    '''
    parser = ArgumentParser(prog='keymesh', description="q-composite key predistribution network experiments")
    commands = parser.add_subparsers(dest='command', metavar='command')
    commands.required = True
    common, trials, network = _common_options(), _trial_options(), _network_options()

    subparsers = {}
    pq = commands.add_parser('pq', parents=[common], help="exact and asymptotic key-setup probability")
    pq.add_argument('--K', default=None, help="ring size(s)")
    pq.add_argument('--P', default=None, help="pool size(s)")
    pq.add_argument('--q', default=None, help="key overlap(s)")
    subparsers['pq'] = pq

    connectivity = commands.add_parser('connectivity', parents=[common, trials, network],
                                       help="Monte Carlo probability of secure connectivity")
    connectivity.add_argument('--m', type=int, default=None, help="random capture of m nodes before the test")
    connectivity.add_argument('--sweep', default='K', help="swept variable: K, P, q, n, m, r or t")
    subparsers['connectivity'] = connectivity

    resilience = commands.add_parser('resilience', parents=[common, trials, network],
                                     help="Monte Carlo fraction of compromised secure links")
    resilience.add_argument('--m', type=int, default=10, help="number of randomly captured nodes")
    resilience.add_argument('--sweep', default='m', help="swept variable: K, P, q, n, m, r or t")
    subparsers['resilience'] = resilience

    mobility = commands.add_parser('mobility', parents=[common, trials, network],
                                   help="probability of T consecutive connected time slots")
    mobility.add_argument('--T', type=int, default=10, help="largest slot count, the sweep runs T = 1..T")
    subparsers['mobility'] = mobility

    split = commands.add_parser('split', parents=[common], help="band attack separating two chunks")
    split.add_argument('--region', default='square')
    split.add_argument('--n', type=int, default=2000)
    split.add_argument('--r', type=float, default=0.05)
    split.add_argument('--ell', type=float, default=0.4)
    split.add_argument('--trials', type=int, default=DEFAULT_TRIALS)
    split.add_argument('--seed', type=int, default=0)
    subparsers['split'] = split

    design = commands.add_parser('design', parents=[common], help="(K, P, r) design guideline calculator")
    design.add_argument('--n', type=int, default=None)
    design.add_argument('--q', type=int, default=None)
    design.add_argument('--c', type=float, default=None)
    design.add_argument('--c1', type=float, default=1.0)
    design.add_argument('--eps1', type=float, default=0.1)
    design.add_argument('--c2', type=float, default=1.0)
    design.add_argument('--eps2', type=float, default=0.3)
    subparsers['design'] = design

    fig = commands.add_parser('fig', parents=[common, trials], help="data of a figure preset")
    fig.add_argument('figure', help="con1, con2, mobility, res, res2 or res3")
    fig.add_argument('--range', default=None, help="sweep values replacing the preset range")
    subparsers['fig'] = fig

    subparsers['selftest'] = commands.add_parser('selftest', parents=[common], help="exact-oracle battery")
    return parser, subparsers


def _config_defaults(subparser, values):
    actions = {action.dest: action for action in subparser._actions}
    defaults = {}
    for key, text in values.items():
        action = actions.get(key)
        if action is None or key in ('help', 'config'):
            raise InvalidParameterError("unknown config key '%s'" % key)
        try:
            if action.nargs == 0:
                defaults[key] = parse_bool(text)
            else:
                defaults[key] = action.type(text) if action.type else text
        except ValueError:
            raise InvalidParameterError("config key '%s': cannot read '%s'" % (key, text))
    return defaults


def parse_arguments(argv):
    '''
    Parse the command line, then again with the config file values as defaults so that flags win.

    :return: argparse Namespace
    '''
    parser, subparsers = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, 'config', None):
        subparser = subparsers[args.command]
        subparser.set_defaults(**_config_defaults(subparser, parse_config_file(args.config)))
        args = parser.parse_args(argv)
    return args


def _required(args, *names):
    missing = [name for name in names if getattr(args, name) is None]
    if missing:
        raise InvalidParameterError("%s needs --%s" % (args.command, ", --".join(missing)))


def _sweep_values(args, variable, current):
    if args.range is not None:
        return parse_range(args.range, float if variable in _FLOAT_VARIABLES else int)
    if current is None:
        raise InvalidParameterError("give --%s or a --range for the sweep" % variable)
    return [current]


def _experiment(args, measure):
    region = parse_region(args.region)
    setting = SettingSpec(region, unreliable=args.t is not None, mobile=measure == 'mobility')
    geo = GeoParams(region, args.r) if setting.disk_model else None
    if geo is None and args.r is not None:
        raise InvalidParameterError("full visibility takes no --r")
    chan = ChannelParams(args.t) if args.t is not None else None
    m = getattr(args, 'm', None)
    strategy = RandomCapture(m) if m is not None else None

    variable = 'T' if measure == 'mobility' else args.sweep
    current = {'K': args.K, 'P': args.P, 'q': args.q, 'n': args.n, 'm': m, 'r': args.r, 't': args.t,
               'T': getattr(args, 'T', None)}.get(variable)
    if measure == 'mobility' and args.range is None:
        values = list(range(1, args.T + 1))
    else:
        values = _sweep_values(args, variable, current)

    # a solved pool replaces P, the base only has to hold K
    base_P = max(args.P, args.K) if args.pq_target is not None else args.P
    scheme = SchemeParams(args.n, args.K, base_P, args.q)
    return ExperimentConfig(setting=setting, scheme=scheme, geo=geo, chan=chan, capture=strategy, measure=measure,
                            sweep_variable=variable, sweep_values=values, trials=args.trials, master_seed=args.seed,
                            pool_from_pq=args.pq_target)


def _run_experiment(args, measure):
    config = _experiment(args, measure)
    return records_frame(run_sweep(config, progress=args.progress), config.columns()), None


def command_pq(args):
    _required(args, 'K', 'P', 'q')
    rows = pq_rows(parse_range(args.K), parse_range(args.P), parse_range(args.q))
    return records_frame(rows, PQ_COLUMNS), None


def command_connectivity(args):
    return _run_experiment(args, 'connectivity')


def command_resilience(args):
    return _run_experiment(args, 'resilience')


def command_mobility(args):
    return _run_experiment(args, 'mobility')


def command_split(args):
    region = parse_region(args.region)
    if region == RegionKind.FullVisibility:
        raise InvalidParameterError("the band attack needs node positions (torus or square)")
    rows = run_split(region, args.n, args.r, args.ell, args.trials, args.seed)
    broken = sum(row['cross_edges'] for row in rows)
    failure = KeymeshError("band attack left %d cross edges between the chunks" % broken) if broken else None
    return records_frame(rows, SPLIT_COLUMNS), failure


def command_design(args):
    _required(args, 'n', 'q', 'c')
    result = design_guidelines(args.n, args.q, args.c, args.c1, args.eps1, args.c2, args.eps2)
    return records_frame([result], DESIGN_COLUMNS), None


def command_fig(args):
    values = None
    if args.range is not None:
        values = parse_range(args.range)
    config = figure_preset(args.figure, values, args.trials, args.seed)
    return records_frame(run_sweep(config, progress=args.progress), config.columns()), None


def command_selftest(args):
    rows = run_selftest()
    failed = [row['check'] for row in rows if row['status'] != 'pass']
    failure = SelfTestError("failed checks: %s" % ", ".join(failed)) if failed else None
    return records_frame(rows, SELFTEST_COLUMNS), failure


COMMANDS = {
    'pq': command_pq,
    'connectivity': command_connectivity,
    'resilience': command_resilience,
    'mobility': command_mobility,
    'split': command_split,
    'design': command_design,
    'fig': command_fig,
    'selftest': command_selftest,
}


def _emit(frame, out):
    if out is None:
        write_csv(frame, sys.stdout)
        return
    with open(out, 'w', newline='') as file:
        write_csv(frame, file)


def main(argv=None):
    '''
    :return: exit status, 0 success, 1 usage error, 2 invariant or self-test failure
    '''
    argv = sys.argv[1:] if argv is None else list(argv)
    setup_logging(logging.INFO)
    try:
        args = parse_arguments(argv)
    except InvalidParameterError as error:
        logger.error("%s", error)
        return EXIT_USAGE
    except SystemExit as exit:
        # --help
        return exit.code if isinstance(exit.code, int) else EXIT_OK

    setup_logging(logging.DEBUG if args.verbose else logging.ERROR if args.quiet else logging.INFO)
    try:
        frame, failure = COMMANDS[args.command](args)
        _emit(frame, args.out)
    except InvalidParameterError as error:
        logger.error("%s", error)
        return EXIT_USAGE
    except KeymeshError as error:
        logger.error("%s: %s", type(error).__name__, error)
        return EXIT_FAILURE
    if failure is not None:
        logger.error("%s: %s", type(failure).__name__, failure)
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
