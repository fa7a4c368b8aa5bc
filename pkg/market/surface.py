"""
Синтетична поверхня неявної волатильності SVI та набір цільових котирувань

Повна дисперсія w(t, y) задається SVI-коефіцієнтами на стовпах (pillars) і
інтерполюється лінійно за t при фіксованій лог-грошовості y = ln(K/S0).
"""

import json
import os
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, ValidationError, field_validator

from market.black_scholes import bs_vega
from utils.errors import ArbitrageError, ConfigError, DomainError
from utils.io import write_atomic, write_csv_atomic
from utils.logger import setup_logger

logger = setup_logger()

DAYS_PER_YEAR = 252.0
_CALENDAR_GRID = np.linspace(-1.0, 1.0, 81)


class SviPillar(BaseModel):
    """SVI-зріз на одному строку"""
    t_days: float = Field(gt=0)
    a: float
    b: float = Field(ge=0)
    rho: float
    m: float = 0.0
    s: float = Field(gt=0)

    @field_validator("rho")
    @classmethod
    def _rho_in_range(cls, value: float) -> float:
        if not -1.0 < value < 1.0:
            raise ValueError("|rho| має бути < 1")
        return value

    @property
    def maturity(self) -> float:
        return self.t_days / DAYS_PER_YEAR

    def total_variance(self, y):
        y = np.asarray(y, dtype=float)
        return self.a + self.b * (self.rho * (y - self.m) + np.sqrt((y - self.m) ** 2 + self.s ** 2))


class SurfaceFile(BaseModel):
    """Формат файлу поверхні (JSON)"""
    spot: float = Field(default=1.0, gt=0)
    allow_extrapolation: bool = False
    pillars: List[SviPillar] = Field(min_length=1)


class MarketSurface:
    """Поверхня повної дисперсії; незмінна після створення"""

    def __init__(self, pillars: Sequence[SviPillar], spot: float = 1.0, allow_extrapolation: bool = False):
        if not pillars:
            raise ConfigError("Поверхня потребує хоча б одного стовпа")
        self.pillars = sorted(pillars, key=lambda p: p.t_days)
        self.spot = float(spot)
        self.allow_extrapolation = allow_extrapolation
        self._times = np.array([p.maturity for p in self.pillars])
        if len(np.unique(self._times)) != len(self._times):
            raise ConfigError("Дублікати строків стовпів")
        self._validate()

    def _validate(self):
        previous = None
        for pillar in self.pillars:
            w = pillar.total_variance(_CALENDAR_GRID)
            if np.any(w < 0):
                bad = _CALENDAR_GRID[np.argmax(w < 0)]
                raise ArbitrageError("Від'ємна повна дисперсія", pillar.maturity, float(bad))
            if previous is not None:
                w_prev = previous.total_variance(_CALENDAR_GRID)
                if np.any(w < w_prev - 1e-14):
                    bad = _CALENDAR_GRID[np.argmax(w < w_prev - 1e-14)]
                    raise ArbitrageError("Календарний арбітраж", pillar.maturity, float(bad))
            previous = pillar

    # --- конструктори -------------------------------------------------------

    @classmethod
    def flat(cls, vol: float, pillar_days: Sequence[float] = (21, 51), allow_extrapolation: bool = True):
        """Пласка поверхня w = σ²t"""
        pillars = [
            SviPillar(t_days=d, a=vol ** 2 * d / DAYS_PER_YEAR, b=0.0, rho=0.0, m=0.0, s=0.1)
            for d in pillar_days
        ]
        return cls(pillars, allow_extrapolation=allow_extrapolation)

    @classmethod
    def equity_like(
        cls,
        atm_vols: Sequence[float] = (0.14, 0.135),
        pillar_days: Sequence[float] = (21, 51),
        skew_per_5pct: float = -0.025,
        rho: float = -0.7,
        s: float = 0.1,
        allow_extrapolation: bool = True,
    ):
        """
        SVI-стовпи з заданим ATM рівнем та нахилом (у частках волатильності на 5% грошовості).

        При m=0: w(0) = a + b·s, ∂w/∂y(0) = b·ρ = 2σt·∂σ/∂y.
        """
        pillars = []
        for vol, days in zip(atm_vols, pillar_days):
            t = days / DAYS_PER_YEAR
            slope = 2.0 * vol * t * skew_per_5pct / np.log(1.05)
            b = slope / rho
            a = vol ** 2 * t - b * s
            pillars.append(SviPillar(t_days=days, a=a, b=b, rho=rho, m=0.0, s=s))
        return cls(pillars, allow_extrapolation=allow_extrapolation)

    @classmethod
    def from_file(cls, path: str) -> "MarketSurface":
        if not os.path.exists(path):
            raise ConfigError(f"Файл поверхні не знайдено: {path}")
        try:
            with open(path, "r", encoding="utf-8") as handle:
                data = SurfaceFile.model_validate_json(handle.read())
        except ValidationError as e:
            raise ConfigError(f"Невалідний файл поверхні {path}: {e}") from e
        return cls(data.pillars, spot=data.spot, allow_extrapolation=data.allow_extrapolation)

    def to_file(self, path: str) -> None:
        payload = SurfaceFile(spot=self.spot, allow_extrapolation=self.allow_extrapolation, pillars=self.pillars)

        def _write(tmp_path: str) -> None:
            with open(tmp_path, "w", encoding="utf-8") as handle:
                json.dump(payload.model_dump(), handle, indent=2)

        write_atomic(path, _write)

    # --- обчислення ---------------------------------------------------------

    @property
    def first_maturity(self) -> float:
        return float(self._times[0])

    @property
    def last_maturity(self) -> float:
        return float(self._times[-1])

    def covers(self, t: float) -> bool:
        return self.allow_extrapolation or self.first_maturity <= t <= self.last_maturity

    def total_variance(self, t: float, y):
        """
        w(t, y), лінійно за t між стовпами.

        До першого стовпа w спадає лінійно до w(0) = 0, після останнього повна дисперсія стала.
        Обидві гілки потребують allow_extrapolation.
        """

        if t < 0:
            raise DomainError(f"Час має бути невід'ємним: {t}")
        if not self.covers(t):
            raise DomainError(
                f"t={t:.6f} поза діапазоном стовпів [{self.first_maturity:.6f}, {self.last_maturity:.6f}]"
            )

        y = np.asarray(y, dtype=float)
        if t <= self.first_maturity:
            w = self.pillars[0].total_variance(y)
            return w if t == self.first_maturity else w * (t / self.first_maturity)
        if t >= self.last_maturity:
            return self.pillars[-1].total_variance(y)

        right = int(np.searchsorted(self._times, t, side="left"))
        if self._times[right] == t:
            return self.pillars[right].total_variance(y)
        left = right - 1
        weight = (t - self._times[left]) / (self._times[right] - self._times[left])
        w_left = self.pillars[left].total_variance(y)
        w_right = self.pillars[right].total_variance(y)
        return w_left + weight * (w_right - w_left)


def surface_implied_vol(surface: MarketSurface, t: float, k):
    """σ(t, k) = sqrt(w(t, ln k)/t), k - частка спота"""

    if t <= 0:
        raise DomainError("surface_implied_vol: t > 0")
    k = np.asarray(k, dtype=float)
    if np.any(k <= 0):
        raise DomainError("surface_implied_vol: k > 0")
    vol = np.sqrt(surface.total_variance(t, np.log(k / surface.spot)) / t)
    return float(vol) if vol.ndim == 0 else vol


@dataclass(frozen=True)
class VanillaQuote:
    """Цільовий кол: строк у днях, страйк (частка спота), цільова IV та вага"""
    t_days: int
    strike: float
    target_vol: float
    weight: float = 1.0

    def __post_init__(self):
        if self.t_days <= 0 or self.strike <= 0 or self.target_vol <= 0 or self.weight < 0:
            raise ConfigError(f"Невалідне котирування: {self}")

    @property
    def maturity(self) -> float:
        return self.t_days / DAYS_PER_YEAR

    @property
    def option_id(self) -> str:
        return f"call_{self.t_days}d_{self.strike:.4f}"


def make_target_set(
    surface: MarketSurface,
    maturities_days: Sequence[int],
    strikes: Sequence[float],
    vega_weighted: bool = False,
) -> List[VanillaQuote]:
    """Сітка цільових колів з поверхні; ω=1 або нормована вега"""

    rows = []
    for days in maturities_days:
        t = days / DAYS_PER_YEAR
        for strike in strikes:
            rows.append((int(days), float(strike), surface_implied_vol(surface, t, strike)))

    weights = np.ones(len(rows))
    if vega_weighted and rows:
        weights = np.array([bs_vega(1.0, k, d / DAYS_PER_YEAR, vol) for d, k, vol in rows])
        weights = weights / weights.mean()

    quotes = [VanillaQuote(d, k, vol, float(w)) for (d, k, vol), w in zip(rows, weights)]
    logger.debug(f"📋 Сформовано {len(quotes)} цільових котирувань")
    return quotes


def export_target_set(quotes: Sequence[VanillaQuote], path: str) -> None:
    """CSV: t_days, strike, target_iv, weight"""
    frame = pd.DataFrame(
        [(q.t_days, q.strike, q.target_vol, q.weight) for q in quotes],
        columns=["t_days", "strike", "target_iv", "weight"],
    )
    write_csv_atomic(frame, path)
