"""
Підкоманда make-surface
"""

import argparse

from services.experiment_service import make_surface


async def write_surface(args: argparse.Namespace) -> int:
    make_surface(
        args.out,
        kind=args.kind,
        atm_vols=args.atm_vols,
        pillar_days=args.pillar_days,
        skew_per_5pct=args.skew,
        flat_vol=args.vol,
    )
    return 0


def register(subparsers: argparse._SubParsersAction):
    parser = subparsers.add_parser("make-surface", help="синтетичний файл SVI-поверхні")
    parser.add_argument("--kind", choices=["flat", "equity"], default="equity")
    parser.add_argument("--out", required=True, help="шлях до JSON-файлу")
    parser.add_argument("--vol", type=float, default=0.2, help="рівень пласкої поверхні")
    parser.add_argument("--atm-vols", type=float, nargs="+", help="ATM волатильності на стовпах")
    parser.add_argument("--pillar-days", type=float, nargs="+", help="строки стовпів у днях")
    parser.add_argument("--skew", type=float, default=-0.025, help="нахил на 5%% грошовості")
    parser.set_defaults(handler=write_surface)
