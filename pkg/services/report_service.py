"""
Сервіс звітів: CSV-артефакти навчання та оцінювання
"""

import os
from dataclasses import asdict, fields
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy import stats

from database.models import TrainingHistoryRow
from game.rewards import RunRewards
from game.specs import BermudanSpec
from market.black_scholes import implied_vol_or_edge
from market.surface import DAYS_PER_YEAR, MarketSurface, VanillaQuote, surface_implied_vol
from pricing.bermudan import BermudanResult
from pricing.vanilla import mc_vanilla_price
from utils.io import write_csv_atomic
from utils.logger import setup_logger

logger = setup_logger()

HISTORY_COLUMNS = [
    "iteration", "game_value", "game_value_se", "kl", "clip_fraction",
    "policy_loss", "value_loss", "wallclock_s", "switch_value", "kl_coef", "n_clamped",
]
HEATMAP_BINS = 10


class ReportService:
    """Запис звітів у теку запуску"""

    def __init__(self, output_dir: str):
        self.output_dir = output_dir

    def path(self, name: str) -> str:
        return os.path.join(self.output_dir, name)

    def write(self, frame: pd.DataFrame, name: str) -> str:
        path = write_csv_atomic(frame, self.path(name))
        logger.info(f"💾 Записано {path} ({len(frame)} рядків)")
        return path

    def write_history(self, rows: List[dict], name: str = "history.csv") -> str:
        frame = pd.DataFrame(rows, columns=HISTORY_COLUMNS)
        return self.write(frame, name)

    def write_switch_values(self, rows: List[dict], name: str = "switch_value.csv") -> str:
        frame = pd.DataFrame(rows, columns=HISTORY_COLUMNS)[["iteration", "switch_value", "game_value"]]
        return self.write(frame, name)

    def write_registry_history(self, rows: Sequence[TrainingHistoryRow], name: str = "registry_history.csv") -> str:
        columns = [f.name for f in fields(TrainingHistoryRow)]
        return self.write(pd.DataFrame([asdict(row) for row in rows], columns=columns), name)

    def write_reward_trace(self, runs: Sequence[RunRewards], iteration: int, name: str = "reward_trace.csv") -> str:
        rows = []
        for run, run_rewards in enumerate(runs):
            rows.extend(run_rewards.trace_rows(iteration, run))
        columns = ["iteration", "run", "step", "option_id", "model_value", "target", "reward_component"]
        return self.write(pd.DataFrame(rows, columns=columns), name)

    def write_pricing(self, results: Sequence[BermudanResult], seed: int, name: str = "pricing_report.csv") -> str:
        rows = [{"seed": seed, "run": run, **result.as_row()} for run, result in enumerate(results)]
        return self.write(pd.DataFrame(rows), name)


def smile_table(
    spots: np.ndarray,
    quotes: Sequence[VanillaQuote],
    steps_per_day: int = 1,
    forward: float = 1.0,
) -> pd.DataFrame:
    """
    Модельна та цільова IV на сітці котирувань.

    spots (B, n, T+1) об'єднуються по прогонах; error = model_iv − target_iv.
    """

    pooled = np.asarray(spots, dtype=float).reshape(-1, spots.shape[-1])
    rows = []
    for quote in quotes:
        step = int(quote.t_days * steps_per_day)
        price, se = mc_vanilla_price(pooled[:, step], quote.strike * forward)
        model_iv, at_edge = implied_vol_or_edge(price, forward, quote.strike * forward, quote.maturity)
        rows.append({
            "t_days": quote.t_days,
            "strike": quote.strike,
            "model_iv": model_iv,
            "target_iv": quote.target_vol,
            "error": model_iv - quote.target_vol,
            "price": price,
            "price_se": se,
            "at_edge": at_edge,
        })
    return pd.DataFrame(rows)


def sanity_quotes(surface: MarketSurface, spec: BermudanSpec, strikes: Sequence[float], steps_per_day: int = 1) -> List[VanillaQuote]:
    """Котирування на t1 та t2 для перевірки посмішки після локалізації"""

    quotes = []
    for step in (spec.t1, spec.t2):
        days = step / steps_per_day
        for strike in strikes:
            vol = surface_implied_vol(surface, days / DAYS_PER_YEAR, strike)
            quotes.append(VanillaQuote(int(round(days)), float(strike), float(vol)))
    return quotes


def volatility_heatmap(
    spots: np.ndarray,
    raw_vols: np.ndarray,
    vols: np.ndarray,
    t1: int,
    t2: Optional[int] = None,
    n_bins: int = HEATMAP_BINS,
) -> pd.DataFrame:
    """
    Середня навчена σ_t (t > t1) у клітинках (ln S_{t1}) × (ln S_t) з рівною заповненістю.

    raw - вихід політики, local - після локалізації.
    """

    spots = np.asarray(spots, dtype=float).reshape(-1, spots.shape[-1])
    raw_vols = np.asarray(raw_vols, dtype=float).reshape(-1, raw_vols.shape[-1])
    vols = np.asarray(vols, dtype=float).reshape(-1, vols.shape[-1])
    last = vols.shape[1] if t2 is None else t2
    steps = np.arange(t1 + 1, last)
    if steps.size == 0:
        return pd.DataFrame(columns=["bin_s1", "bin_st", "ln_s1", "ln_st", "raw_vol", "local_vol", "count"])

    frame = pd.DataFrame({
        "ln_s1": np.repeat(np.log(spots[:, t1]), steps.size),
        "ln_st": np.log(spots[:, steps]).ravel(),
        "raw_vol": raw_vols[:, steps].ravel(),
        "local_vol": vols[:, steps].ravel(),
    })
    frame["bin_s1"] = pd.qcut(frame["ln_s1"], n_bins, labels=False, duplicates="drop")
    frame["bin_st"] = pd.qcut(frame["ln_st"], n_bins, labels=False, duplicates="drop")
    grouped = frame.groupby(["bin_s1", "bin_st"], observed=True).agg(
        ln_s1=("ln_s1", "mean"),
        ln_st=("ln_st", "mean"),
        raw_vol=("raw_vol", "mean"),
        local_vol=("local_vol", "mean"),
        count=("raw_vol", "size"),
    )
    return grouped.reset_index()


def heatmap_monotonicity(heatmap: pd.DataFrame, column: str = "raw_vol") -> Dict[str, float]:
    """Кореляція Спірмена середньої σ з ln S_{t1} та ln S_t по маргінальних бінах"""

    result = {}
    weighted = heatmap.assign(weighted=heatmap[column] * heatmap["count"])
    for axis in ("s1", "st"):
        sums = weighted.groupby(f"bin_{axis}")[["weighted", "count"]].sum()
        marginal = sums["weighted"] / sums["count"]
        if marginal.size < 2:
            result[f"spearman_{axis}"] = float("nan")
            continue
        rho, _ = stats.spearmanr(marginal.index.to_numpy(), marginal.to_numpy())
        result[f"spearman_{axis}"] = float(rho)
    return result
