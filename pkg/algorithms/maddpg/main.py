"""
Command line entry point for training, evaluating and transitioning MADDPG slice agents and for
comparing them with the baselines.

Example of use:
`python -m algorithms.maddpg.main train --config config_files/comparison_4_slices.json --seed 0`
`python -m algorithms.maddpg.main eval --config config_files/comparison_4_slices.json --seed 0 \
    --policy maddpg --policy random --policy over --policy static --long-horizon`
`python -m algorithms.maddpg.main compare --config config_files/comparison_4_slices.json --seed 0`
`python -m algorithms.maddpg.main increment --config config_files/transition_4_to_5.json \
    --base results/base_4 --seed 0`

Every subcommand exits with 0 on success and with the exit code of the error category otherwise.
"""
import argparse
import functools
import logging
import sys

from algorithms.maddpg import experiment
from gym_mec_slicing.utils import CountError, SlicingError, setup_logging

logger = logging.getLogger('algorithms.maddpg.main')


def build_parser():
    parser = argparse.ArgumentParser(description='MADDPG for MEC network slicing')
    subparsers = parser.add_subparsers(dest='command', required=True)
    for command in ('train', 'eval', 'increment', 'decrement', 'compare'):
        sub = subparsers.add_parser(command)
        sub.add_argument('--config', type=str, required=True,
                         help='Experiment config file (JSON)')
        sub.add_argument('--seed', type=int, action='append', default=None,
                         help='Root seed, may be repeated. Defaults to the seeds of the config')
        sub.add_argument('--out', type=str, default=None,
                         help='Output directory, defaults to output_dir of the config')
        sub.add_argument('--log-level', type=str, default='INFO',
                         help='Logging level')
        sub.add_argument('--num-processes', type=int, default=1, metavar='N',
                         help='Number of seeds run in parallel')
        if command == 'eval':
            sub.add_argument('--policy', type=str, action='append', default=None,
                             choices=experiment.POLICIES,
                             help='Policy to evaluate, may be repeated. Defaults to the config')
            sub.add_argument('--long-horizon', action='store_true',
                             help='Evaluate over long_horizon slots instead of eval_horizon')
            sub.add_argument('--checkpoints', type=str, default=None,
                             help='Directory with agent_<i>.json files for the maddpg policy')
        if command in ('increment', 'decrement'):
            sub.add_argument('--base', type=str, required=True,
                             help='Output directory of the run holding the base agents')
            sub.add_argument('--target-slices', type=int, default=None,
                             help='Slice count after the transition, defaults to the config')
    return parser


def _eval_policies(config, seed, output_dir, policies, horizon, checkpoint_dir):
    return [experiment.run_eval(config, seed, output_dir, policy, horizon, checkpoint_dir)
            for policy in policies]


def run(args):
    config = experiment.ExperimentConfig.from_file(args.config).validate()
    seeds = args.seed or config.seeds
    output_dir = args.out or config['output_dir']
    cells = functools.partial(experiment.run_cells, seeds=seeds,
                              num_processes=args.num_processes)

    if args.command == 'train':
        cells(experiment.run_train, config=config, output_dir=output_dir)
    elif args.command == 'eval':
        horizon = config['long_horizon'] if args.long_horizon else config['eval_horizon']
        cells(_eval_policies, config=config, output_dir=output_dir,
              policies=args.policy or [config['policy']], horizon=horizon,
              checkpoint_dir=args.checkpoints)
    elif args.command in ('increment', 'decrement'):
        target = args.target_slices if args.target_slices is not None \
            else config['incremental']['target_slices']
        if target is not None:
            growing = target > config.num_slices
            if growing != (args.command == 'increment'):
                raise CountError('{} cannot move from {} to {} slices'.format(
                    args.command, config.num_slices, target))
        cells(experiment.run_incremental, config=config, base_dir=args.base,
              output_dir=output_dir, target_slices=target)
    else:
        for seed in seeds:
            table = experiment.run_compare(config, seed, output_dir)
            print('seed {}'.format(seed))
            print(table.to_string(index=False))
        if len(seeds) > 1:
            table = experiment.run_compare_seeds(config, seeds, output_dir)
            print('seeds {}'.format(', '.join(str(seed) for seed in seeds)))
            print(table.to_string(index=False))


def main(argv=None):
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level.upper())
    try:
        run(args)
    except SlicingError as e:
        print('{}: {}'.format(e.category, e), file=sys.stderr)
        return e.exit_code
    return 0


if __name__ == '__main__':
    sys.exit(main())
