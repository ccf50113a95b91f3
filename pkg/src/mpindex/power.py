"""NASA POWER daily point client.

Fetches temperature at 2 m, relative humidity at 2 m, wind speed at 10 m and
all-sky surface shortwave irradiance. AOD is not a POWER product: the column
is filled with NaN and must be merged from CSV (:func:`mpindex.ingest.merge_aod`)
before the series can pass validation.
"""

from __future__ import annotations

import math
import time
from datetime import date, datetime

import requests

from .ingest import EnvRecord, EnvSeries

POWER_URL = "https://power.larc.nasa.gov/api/temporal/daily/point"

PARAMETERS = {
    "T2M": "temperature",
    "RH2M": "humidity",
    "WS10M": "wind_speed",
    "ALLSKY_SFC_SW_DWN": "solar_irradiance",
}

FILL_VALUE = -999.0


class PowerError(Exception):
    """Base class for POWER client failures."""


class TransportError(PowerError):
    """Network-level failure; safe to retry."""

    retryable = True


class PowerDataError(PowerError):
    """The service answered but the payload is unusable."""

    retryable = False


def fetch_power(
    lat: float,
    lon: float,
    start: date,
    end: date,
    session: requests.Session | None = None,
    retries: int = 3,
    timeout: float = 30.0,
) -> EnvSeries:
    """Fetch a daily series from the POWER API.

    Days carrying the service fill value (-999) in any parameter are omitted
    from the result, so they show up as gaps in the validation report.
    """
    if end < start:
        raise ValueError(f"end {end.isoformat()} before start {start.isoformat()}")
    params = {
        "community": "RE",
        "parameters": ",".join(PARAMETERS),
        "latitude": lat,
        "longitude": lon,
        "start": start.strftime("%Y%m%d"),
        "end": end.strftime("%Y%m%d"),
        "format": "JSON",
    }
    sess = session or requests.Session()
    last_exc: Exception | None = None
    for attempt in range(retries):
        try:
            resp = sess.get(POWER_URL, params=params, timeout=timeout)
            resp.raise_for_status()
            payload = resp.json()
            break
        except (requests.ConnectionError, requests.Timeout) as exc:
            last_exc = exc
            if attempt + 1 < retries:
                time.sleep(2.0**attempt)
        except requests.HTTPError as exc:
            status = exc.response.status_code if exc.response is not None else 0
            if status >= 500 and attempt + 1 < retries:
                last_exc = exc
                time.sleep(2.0**attempt)
                continue
            raise PowerDataError(f"POWER returned HTTP {status}") from exc
        except ValueError as exc:  # not JSON
            raise PowerDataError(f"POWER returned non-JSON payload: {exc}") from exc
    else:
        raise TransportError(f"POWER unreachable after {retries} attempts: {last_exc}") from last_exc
    return parse_power_payload(payload, lat=lat, lon=lon)


def parse_power_payload(payload: dict, lat: float = 0.0, lon: float = 0.0) -> EnvSeries:
    """Turn a POWER daily-point JSON payload into an :class:`EnvSeries`."""
    try:
        by_param = payload["properties"]["parameter"]
    except (KeyError, TypeError):
        raise PowerDataError("payload missing properties.parameter") from None
    missing = [p for p in PARAMETERS if p not in by_param]
    if missing:
        raise PowerDataError(f"payload missing parameters: {', '.join(missing)}")
    day_keys = sorted(by_param["T2M"])
    if not day_keys:
        raise PowerDataError("payload contains no days")
    records = []
    for key in day_keys:
        try:
            day = datetime.strptime(key, "%Y%m%d").date()
        except ValueError:
            raise PowerDataError(f"bad day key {key!r}") from None
        values = {}
        fill = False
        for param, field in PARAMETERS.items():
            value = float(by_param[param].get(key, FILL_VALUE))
            if value == FILL_VALUE:
                fill = True
                break
            values[field] = value
        if fill:
            continue  # becomes a gap
        records.append(EnvRecord(date=day, aod=math.nan, **values))
    return EnvSeries(records, lat=lat, lon=lon)
