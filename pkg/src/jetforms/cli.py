"""Command-line entry point: ``jetforms <subcommand> <model> [options]``.

Exit status is 0 when every requested verification passes, 1 when one fails and
2 for usage, model-file or parse errors.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .model import ModelError, bundled_models, load_model
from .report import ANALYSES, UnknownAnalysis, run_report


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='jetforms', description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest='command', metavar='<subcommand>')
    sub.required = True

    def common(p, with_analyses=False):
        p.add_argument('model', help='model file (bundled names such as wave.model also work)')
        if with_analyses:
            p.add_argument('--analyses', help='comma-separated analyses; default: the [analyses] run list')
        p.add_argument('--format', choices=('text', 'latex'), default='text')
        p.add_argument('--seed', type=int, default=0, help='seed for sampled checks (default 0)')
        p.add_argument('--samples', type=int, default=10_000, help='points for sampled sign checks')
        p.add_argument('--out', help='write the report here instead of stdout')

    common(sub.add_parser('report', help='run several analyses'), with_analyses=True)
    for name in ANALYSES:
        common(sub.add_parser(name, help=f'run the {name} analysis only'))
    sub.add_parser('models', help='list bundled model files')
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    if args.command == 'models':
        print('\n'.join(bundled_models()))
        return 0
    if args.command == 'report':
        analyses = None
        if args.analyses is not None:
            analyses = [a.strip() for a in args.analyses.split(',') if a.strip()]
    else:
        analyses = [args.command]
    if args.samples < 1:
        print('jetforms: --samples must be positive', file=sys.stderr)
        return 2
    try:
        model = load_model(args.model)
        rep = run_report(model, analyses, args.format, args.seed, args.samples)
    except (ModelError, UnknownAnalysis) as exc:
        print(f'jetforms: {exc}', file=sys.stderr)
        return 2
    if args.out:
        Path(args.out).write_text(rep.text)
    else:
        sys.stdout.write(rep.text)
    return 0 if rep.passed else 1


if __name__ == '__main__':
    sys.exit(main())
