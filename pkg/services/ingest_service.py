import csv
import logging
import os
from datetime import datetime
from functools import reduce
from typing import List

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from errors import AlignmentError, DataError, ParseError
from helpers import format_float, write_text
from models import AlignedPair, ManifestEntry, PriceSeries, ReturnSeries

logger = logging.getLogger(__name__)

PRICE_FORMATS = ('two-column', 'yahoo-ohlc')
ALIGNMENT_MODES = ('pairwise-intersection', 'global-intersection')
YAHOO_HEADER = ['Date', 'Open', 'High', 'Low', 'Close', 'Adj Close', 'Volume']
TWO_COLUMN_HEADER = ['date', 'close']
MISSING_TOKENS = {'', 'null', 'nan', 'na', 'n/a', '-'}
MANIFEST_COLUMNS = ['symbol', 'path', 'region']
# ISO first; the others are what Yahoo and spreadsheet exports have used
DATE_FORMATS = ('%Y-%m-%d', '%m/%d/%Y', '%d-%b-%Y', '%Y%m%d')


def _parse_date(text):
    text = text.strip()
    for fmt in DATE_FORMATS:
        try:
            return np.datetime64(datetime.strptime(text, fmt).date(), 'D')
        except ValueError:
            continue
    return None


def _read_rows(path):
    try:
        return pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except FileNotFoundError:
        raise DataError(f"{path}: file not found")
    except (OSError, UnicodeDecodeError) as e:
        raise DataError(f"{path}: unreadable file ({e})")
    except pd.errors.EmptyDataError:
        raise ParseError(path, "file is empty")
    except pd.errors.ParserError as e:
        raise ParseError(path, f"malformed CSV ({e})")


def _check_field_counts(path, width):
    """Short rows would read as empty prices; report them as malformed instead"""
    with open(path, newline='', encoding='utf-8-sig') as f:
        reader = csv.reader(f)
        next(reader, None)
        for row in reader:
            if row and len(row) < width:
                raise ParseError(path, f"expected {width} fields, found {len(row)}", line=reader.line_num)


def _price_column_name(frame, path, price_format, price_column):
    columns = [c.strip() for c in frame.columns]
    frame.columns = columns
    if price_format == 'two-column':
        if [c.lower() for c in columns] != TWO_COLUMN_HEADER:
            raise ParseError(path, f"expected header 'date,close', found '{','.join(columns)}'", line=1)
        return columns[0], columns[1]
    if price_format == 'yahoo-ohlc':
        if 'Date' not in columns or price_column not in columns:
            raise ParseError(path, f"yahoo-ohlc header needs 'Date' and '{price_column}', "
                                   f"found '{','.join(columns)}'", line=1)
        if columns != YAHOO_HEADER:
            logger.warning(f"{path}: non-standard Yahoo header {columns}")
        return 'Date', price_column
    raise DataError(f"unknown price format '{price_format}', expected one of {PRICE_FORMATS}")


def parse_price_csv(path, price_format='two-column', price_column='Close', symbol=None) -> PriceSeries:
    """
    Parse one daily price file.

    Rows whose price is empty or 'null' are dropped and counted; every other
    problem is fatal and reported with its 1-based line number.
    """
    symbol = symbol or os.path.splitext(os.path.basename(str(path)))[0]
    frame = _read_rows(path)
    date_column, close_column = _price_column_name(frame, path, price_format, price_column)
    _check_field_counts(path, len(frame.columns))

    dates, closes = [], []
    dropped = 0
    seen = {}
    for offset, (raw_date, raw_close) in enumerate(zip(frame[date_column], frame[close_column])):
        line = offset + 2
        if raw_close.strip().lower() in MISSING_TOKENS:
            dropped += 1
            continue
        date = _parse_date(raw_date)
        if date is None:
            raise ParseError(path, f"unparseable date '{raw_date}'", line=line)
        try:
            close = float(raw_close)
        except ValueError:
            raise ParseError(path, f"unparseable price '{raw_close}'", line=line)
        if not close > 0:
            raise ParseError(path, f"non-positive price {raw_close}", line=line)
        if date in seen:
            raise ParseError(path, f"duplicate date {date} (first seen on line {seen[date]})", line=line)
        if dates and date < dates[-1]:
            raise ParseError(path, f"date {date} is out of order", line=line)
        seen[date] = line
        dates.append(date)
        closes.append(close)

    if dropped:
        logger.warning(f"{symbol}: dropped {dropped} row(s) with missing prices")
    return PriceSeries(symbol, np.array(dates, dtype='datetime64[D]'), closes, dropped=dropped)


def write_price_csv(series: PriceSeries, path):
    """Serialize in two-column format; parse_price_csv reads it back unchanged"""
    lines = ['date,close']
    lines += [f"{date},{format_float(close)}" for date, close in zip(series.dates, series.closes)]
    write_text(path, '\n'.join(lines) + '\n')


def write_returns_csv(series: ReturnSeries, path):
    lines = ['date,return']
    lines += [f"{date},{format_float(value)}" for date, value in zip(series.dates, series.values)]
    write_text(path, '\n'.join(lines) + '\n')


def read_returns_csv(path, symbol=None) -> ReturnSeries:
    symbol = symbol or os.path.splitext(os.path.basename(str(path)))[0]
    frame = _read_rows(path)
    if [c.strip().lower() for c in frame.columns] != ['date', 'return']:
        raise ParseError(path, "expected header 'date,return'", line=1)
    try:
        values = frame.iloc[:, 1].astype(float).to_numpy()
    except ValueError as e:
        raise ParseError(path, f"unparseable return ({e})")
    dates = [_parse_date(d) for d in frame.iloc[:, 0]]
    if any(d is None for d in dates):
        raise ParseError(path, f"unparseable date on line {dates.index(None) + 2}")
    return ReturnSeries(symbol, np.array(dates, dtype='datetime64[D]'), values)


def log_returns(prices: PriceSeries) -> ReturnSeries:
    """x(n) = ln(close[n+1] / close[n]), stamped with the later date"""
    if len(prices) < 2:
        raise DataError(f"{prices.symbol}: need at least 2 prices for a return, got {len(prices)}")
    closes = prices.closes
    return ReturnSeries(prices.symbol, prices.dates[1:], np.log(closes[1:] / closes[:-1]))


def align(a: ReturnSeries, b: ReturnSeries, mode='pairwise-intersection', lag=0) -> AlignedPair:
    """
    Restrict two return series to their common trading days.

    With ``lag`` > 0 the right series is delayed by that many common days:
    the left sample on day n is paired with the right sample on day n - lag,
    and the pair carries the left series' dates.
    """
    if mode not in ALIGNMENT_MODES:
        raise DataError(f"unknown alignment mode '{mode}'")
    if len(a) == 0 or len(b) == 0:
        raise AlignmentError(f"cannot align empty series ({a.symbol}, {b.symbol})")
    if lag < 0:
        raise DataError(f"lag must be non-negative, got {lag}")

    dates, left_index, right_index = align_indices(a.dates, b.dates, lag, names=(a.symbol, b.symbol))
    return AlignedPair(ReturnSeries(a.symbol, dates, a.values[left_index]),
                       ReturnSeries(b.symbol, dates, b.values[right_index]),
                       dates)


def align_indices(left_dates, right_dates, lag=0, names=('left', 'right')):
    """Positions of the common dates in both (sorted, unique) date vectors"""
    common = np.intersect1d(left_dates, right_dates, assume_unique=True)
    if len(common) <= lag:
        raise AlignmentError(f"{names[0]} and {names[1]} share {len(common)} dates, need more than {lag}")
    left_index = np.searchsorted(left_dates, common)
    right_index = np.searchsorted(right_dates, common)
    if lag:
        return common[lag:], left_index[lag:], right_index[:-lag]
    return common, left_index, right_index


def align_panel(series: List[ReturnSeries], mode='pairwise-intersection') -> List[ReturnSeries]:
    """For global mode, restrict every series to the dates all of them share"""
    if mode == 'pairwise-intersection' or len(series) < 2:
        return list(series)
    if mode != 'global-intersection':
        raise DataError(f"unknown alignment mode '{mode}'")
    common = reduce(np.intersect1d, [s.dates for s in series])
    if len(common) == 0:
        raise AlignmentError("the panel has no trading day common to every market")
    logger.info(f"Global calendar: {len(common)} common dates across {len(series)} markets")
    return [ReturnSeries(s.symbol, common, s.values[np.isin(s.dates, common)]) for s in series]


def load_manifest(path) -> List[ManifestEntry]:
    """Read a market manifest (symbol, path, region[, format]); paths are relative to it"""
    frame = _read_rows(path)
    frame.columns = [c.strip().lower() for c in frame.columns]
    missing = [c for c in MANIFEST_COLUMNS[:2] if c not in frame.columns]
    if missing:
        raise ParseError(path, f"manifest lacks column(s) {', '.join(missing)}", line=1)

    base = os.path.dirname(os.path.abspath(str(path)))
    entries, seen = [], set()
    for offset, row in frame.iterrows():
        symbol = row['symbol'].strip()
        if not symbol:
            raise ParseError(path, "empty symbol", line=offset + 2)
        if symbol in seen:
            raise ParseError(path, f"duplicate symbol '{symbol}'", line=offset + 2)
        seen.add(symbol)
        file_path = row['path'].strip()
        if not os.path.isabs(file_path):
            file_path = os.path.join(base, file_path)
        fmt = row.get('format', '').strip() or None
        entries.append(ManifestEntry(symbol, file_path, row.get('region', '').strip(), fmt))
    return entries


class PriceLoader:
    """Loads every market of a manifest with one format and price column"""

    def __init__(self, price_format='two-column', price_column='Close', jobs=1):
        if price_format not in PRICE_FORMATS:
            raise DataError(f"unknown price format '{price_format}', expected one of {PRICE_FORMATS}")
        self.price_format = price_format
        self.price_column = price_column
        self.jobs = jobs

    def parse(self, entry: ManifestEntry) -> PriceSeries:
        return parse_price_csv(entry.path, entry.format or self.price_format,
                               self.price_column, symbol=entry.symbol)

    def load_panel(self, entries: List[ManifestEntry]) -> List[PriceSeries]:
        logger.info(f"Loading {len(entries)} price file(s)")
        panel = Parallel(n_jobs=self.jobs, prefer='threads')(delayed(self.parse)(e) for e in entries)
        for series in panel:
            logger.info(f"  {series.symbol}: {len(series)} prices "
                        f"({series.dates[0] if len(series) else '-'} .. {series.dates[-1] if len(series) else '-'})")
        return panel

    def load_returns(self, entries: List[ManifestEntry]) -> List[ReturnSeries]:
        return [log_returns(series) for series in self.load_panel(entries)]
