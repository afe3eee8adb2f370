//! Raw data ingestion: scale readings and hourly weather-grid CSVs into a
//! daily per-hive panel.
//!
//! Weather is attached to each hive by inverse distance weighting over all grid
//! cells within a fixed radius, with an altitude penalty:
//! `w_k = 1 / (d_k + lambda * |alt_hive - alt_k| + epsilon)` where `d_k` is the
//! great-circle distance in km and the altitude difference is in km.

use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};
use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{
    vars, HiveId, HiveLocation, HiveObservation, HiveSeries, HourlyWeather, PanelError,
    WeatherCell,
};

/// Mean Earth radius used by the great-circle distance, in km.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

const HIVE_HEADER: [&str; 6] =
    ["hive_id", "timestamp", "latitude", "longitude", "altitude_m", "weight_kg"];
const WEATHER_HEADER: [&str; 11] = [
    "cell_id",
    "latitude",
    "longitude",
    "altitude_m",
    "timestamp",
    "temperature_2m_c",
    "dewpoint_c",
    "precipitation_m",
    "wind_speed_ms",
    "solar_radiation_jm2",
    "surface_pressure_pa",
];

/// One day of weather for a location, aggregated from hourly records.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DailyWeather {
    pub temp_avg: f64,
    pub temp_min: f64,
    pub temp_max: f64,
    pub rain_max: f64,
    pub rain_total: f64,
    pub dewpoint_avg: f64,
    pub wind_avg: f64,
    pub radiation_avg: f64,
    pub pressure_avg: f64,
}

impl DailyWeather {
    /// Values in the canonical [`vars::WEATHER`] order.
    pub fn to_array(self) -> [f64; 9] {
        [
            self.temp_avg,
            self.temp_min,
            self.temp_max,
            self.rain_max,
            self.rain_total,
            self.dewpoint_avg,
            self.wind_avg,
            self.radiation_avg,
            self.pressure_avg,
        ]
    }

    pub fn from_array(v: [f64; 9]) -> Self {
        DailyWeather {
            temp_avg: v[0],
            temp_min: v[1],
            temp_max: v[2],
            rain_max: v[3],
            rain_total: v[4],
            dewpoint_avg: v[5],
            wind_avg: v[6],
            radiation_avg: v[7],
            pressure_avg: v[8],
        }
    }
}

/// Weather cell reduced to daily aggregates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DailyCell {
    pub cell_id: String,
    pub latitude: f64,
    pub longitude: f64,
    pub altitude_m: f64,
    pub days: BTreeMap<NaiveDate, DailyWeather>,
}

/// Parameters of the hive-to-weather spatial join.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JoinParams {
    /// Cells farther than this are ignored (km).
    pub radius_km: f64,
    /// Weight of the altitude difference (km of distance per km of altitude).
    pub altitude_lambda: f64,
    /// Small constant keeping weights finite for co-located cells (km).
    pub epsilon_km: f64,
}

impl Default for JoinParams {
    fn default() -> Self {
        JoinParams { radius_km: 20.0, altitude_lambda: 10.0, epsilon_km: 1e-6 }
    }
}

/// A hive's daily series together with its fixed location.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocatedSeries {
    pub series: HiveSeries,
    pub location: HiveLocation,
}

/// Parse result carrying the rows that survived and a malformed-row count.
#[derive(Clone, Debug)]
pub struct ParsedHives {
    pub observations: Vec<HiveObservation>,
    pub malformed_rows: usize,
}

#[derive(Clone, Debug)]
pub struct ParsedWeather {
    pub cells: Vec<WeatherCell>,
    pub malformed_rows: usize,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("header mismatch: expected `{expected}`, found `{found}`")]
    SchemaMismatch { expected: String, found: String },
    #[error("input contains no usable rows")]
    EmptyInput,
    #[error("observations for resampling span more than one hive id")]
    MixedHiveIds,
    #[error("no weather cell within {radius_km} km (nearest at {nearest_km:.2} km)")]
    NoCellWithinRadius { radius_km: f64, nearest_km: f64 },
    #[error(transparent)]
    Panel(#[from] PanelError),
}

/// Great-circle distance between two (lat, lon) points in degrees, in km.
pub fn haversine_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (phi1, phi2) = (lat1.to_radians(), lat2.to_radians());
    let d_phi = (lat2 - lat1).to_radians();
    let d_lambda = (lon2 - lon1).to_radians();
    let a = (d_phi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (d_lambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * a.sqrt().min(1.0).asin()
}

fn parse_timestamp(raw: &str) -> Option<DateTime<Utc>> {
    if let Ok(t) = DateTime::parse_from_rfc3339(raw) {
        return Some(t.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S"] {
        if let Ok(naive) = NaiveDateTime::parse_from_str(raw, fmt) {
            return Some(naive.and_utc());
        }
    }
    None
}

fn check_header(found: &csv::StringRecord, expected: &[&str]) -> Result<(), IngestError> {
    let found_cols: Vec<&str> = found.iter().map(|c| c.trim()).collect();
    if found_cols != expected {
        return Err(IngestError::SchemaMismatch {
            expected: expected.join(","),
            found: found_cols.join(","),
        });
    }
    Ok(())
}

fn parse_f64(field: &str) -> Option<f64> {
    field.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

fn valid_lat_lon(lat: f64, lon: f64) -> bool {
    (-90.0..=90.0).contains(&lat) && (-180.0..=180.0).contains(&lon)
}

/// Parses the hive readings CSV. Malformed rows (bad timestamp, non-finite
/// numbers, out-of-range coordinates) are skipped, logged, and counted; a
/// wrong header is a hard error.
pub fn parse_hive_csv<R: io::Read>(reader: R) -> Result<ParsedHives, IngestError> {
    let mut rdr = csv::Reader::from_reader(reader);
    check_header(rdr.headers()?, &HIVE_HEADER)?;
    let mut observations = Vec::new();
    let mut malformed = 0usize;
    for (idx, record) in rdr.records().enumerate() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                warn!("hive csv row {}: unreadable record: {e}", idx + 2);
                malformed += 1;
                continue;
            }
        };
        let parsed = (|| {
            let timestamp = parse_timestamp(record.get(1)?)?;
            let latitude = parse_f64(record.get(2)?)?;
            let longitude = parse_f64(record.get(3)?)?;
            let altitude_m = parse_f64(record.get(4)?)?;
            let weight_kg = parse_f64(record.get(5)?)?;
            if !valid_lat_lon(latitude, longitude) {
                return None;
            }
            Some(HiveObservation {
                hive_id: HiveId::from(record.get(0)?),
                timestamp,
                latitude,
                longitude,
                altitude_m,
                weight_kg,
            })
        })();
        match parsed {
            Some(obs) => observations.push(obs),
            None => {
                warn!("hive csv row {}: malformed row skipped", idx + 2);
                malformed += 1;
            }
        }
    }
    if observations.is_empty() {
        return Err(IngestError::EmptyInput);
    }
    Ok(ParsedHives { observations, malformed_rows: malformed })
}

pub fn read_hive_csv(path: &Path) -> Result<ParsedHives, IngestError> {
    parse_hive_csv(std::fs::File::open(path)?)
}

/// Parses the hourly weather-grid CSV into per-cell record streams, sorted by
/// timestamp. Malformed rows are skipped and counted; a wrong header is a hard
/// error.
pub fn parse_weather_csv<R: io::Read>(reader: R) -> Result<ParsedWeather, IngestError> {
    let mut rdr = csv::Reader::from_reader(reader);
    check_header(rdr.headers()?, &WEATHER_HEADER)?;
    let mut cells: BTreeMap<String, WeatherCell> = BTreeMap::new();
    let mut malformed = 0usize;
    for (idx, record) in rdr.records().enumerate() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                warn!("weather csv row {}: unreadable record: {e}", idx + 2);
                malformed += 1;
                continue;
            }
        };
        let parsed = (|| {
            let cell_id = record.get(0)?.to_owned();
            let latitude = parse_f64(record.get(1)?)?;
            let longitude = parse_f64(record.get(2)?)?;
            let altitude_m = parse_f64(record.get(3)?)?;
            let timestamp = parse_timestamp(record.get(4)?)?;
            if !valid_lat_lon(latitude, longitude) {
                return None;
            }
            let hour = HourlyWeather {
                timestamp,
                temperature_2m_c: parse_f64(record.get(5)?)?,
                dewpoint_c: parse_f64(record.get(6)?)?,
                precipitation_m: parse_f64(record.get(7)?)?,
                wind_speed_ms: parse_f64(record.get(8)?)?,
                solar_radiation_jm2: parse_f64(record.get(9)?)?,
                surface_pressure_pa: parse_f64(record.get(10)?)?,
            };
            Some((cell_id, latitude, longitude, altitude_m, hour))
        })();
        match parsed {
            Some((cell_id, latitude, longitude, altitude_m, hour)) => {
                cells
                    .entry(cell_id.clone())
                    .or_insert_with(|| WeatherCell {
                        cell_id,
                        latitude,
                        longitude,
                        altitude_m,
                        hours: Vec::new(),
                    })
                    .hours
                    .push(hour);
            }
            None => {
                warn!("weather csv row {}: malformed row skipped", idx + 2);
                malformed += 1;
            }
        }
    }
    if cells.is_empty() {
        return Err(IngestError::EmptyInput);
    }
    let mut cells: Vec<WeatherCell> = cells.into_values().collect();
    for cell in &mut cells {
        cell.hours.sort_by_key(|h| h.timestamp);
    }
    Ok(ParsedWeather { cells, malformed_rows: malformed })
}

pub fn read_weather_csv(path: &Path) -> Result<ParsedWeather, IngestError> {
    parse_weather_csv(std::fs::File::open(path)?)
}

/// Groups observations by hive id, preserving input order within each hive.
pub fn group_by_hive(observations: Vec<HiveObservation>) -> BTreeMap<HiveId, Vec<HiveObservation>> {
    let mut groups: BTreeMap<HiveId, Vec<HiveObservation>> = BTreeMap::new();
    for obs in observations {
        groups.entry(obs.hive_id.clone()).or_default().push(obs);
    }
    groups
}

/// Collapses one hive's readings to a daily series: the weight on a day is the
/// mean of that day's readings (UTC dates); days without readings are absent.
/// The hive location is the mean of the per-reading coordinates.
pub fn resample_daily(observations: &[HiveObservation]) -> Result<LocatedSeries, IngestError> {
    let first = observations.first().ok_or(IngestError::EmptyInput)?;
    if observations.iter().any(|o| o.hive_id != first.hive_id) {
        return Err(IngestError::MixedHiveIds);
    }
    let mut by_day: BTreeMap<NaiveDate, (f64, usize)> = BTreeMap::new();
    let (mut lat, mut lon, mut alt) = (0.0, 0.0, 0.0);
    for obs in observations {
        let entry = by_day.entry(obs.timestamp.date_naive()).or_insert((0.0, 0));
        entry.0 += obs.weight_kg;
        entry.1 += 1;
        lat += obs.latitude;
        lon += obs.longitude;
        alt += obs.altitude_m;
    }
    let n = observations.len() as f64;
    let location = HiveLocation { latitude: lat / n, longitude: lon / n, altitude_m: alt / n };
    let days: Vec<NaiveDate> = by_day.keys().copied().collect();
    let weights: Vec<Option<f64>> =
        by_day.values().map(|(sum, count)| Some(sum / *count as f64)).collect();
    let mut series = HiveSeries::with_days(first.hive_id.clone(), days)?;
    series.insert_column(vars::WEIGHT, weights)?;
    Ok(LocatedSeries { series, location })
}

/// Reduces a cell's hourly records to daily aggregates: mean/min/max for
/// temperature, max and sum for precipitation, means for the rest.
pub fn aggregate_weather_daily(cell: &WeatherCell) -> DailyCell {
    struct Acc {
        n: f64,
        temp_sum: f64,
        temp_min: f64,
        temp_max: f64,
        rain_max: f64,
        rain_sum: f64,
        dew_sum: f64,
        wind_sum: f64,
        rad_sum: f64,
        pres_sum: f64,
    }
    let mut acc: BTreeMap<NaiveDate, Acc> = BTreeMap::new();
    for h in &cell.hours {
        let a = acc.entry(h.timestamp.date_naive()).or_insert(Acc {
            n: 0.0,
            temp_sum: 0.0,
            temp_min: f64::INFINITY,
            temp_max: f64::NEG_INFINITY,
            rain_max: f64::NEG_INFINITY,
            rain_sum: 0.0,
            dew_sum: 0.0,
            wind_sum: 0.0,
            rad_sum: 0.0,
            pres_sum: 0.0,
        });
        a.n += 1.0;
        a.temp_sum += h.temperature_2m_c;
        a.temp_min = a.temp_min.min(h.temperature_2m_c);
        a.temp_max = a.temp_max.max(h.temperature_2m_c);
        a.rain_max = a.rain_max.max(h.precipitation_m);
        a.rain_sum += h.precipitation_m;
        a.dew_sum += h.dewpoint_c;
        a.wind_sum += h.wind_speed_ms;
        a.rad_sum += h.solar_radiation_jm2;
        a.pres_sum += h.surface_pressure_pa;
    }
    let days = acc
        .into_iter()
        .map(|(date, a)| {
            (
                date,
                DailyWeather {
                    temp_avg: a.temp_sum / a.n,
                    temp_min: a.temp_min,
                    temp_max: a.temp_max,
                    rain_max: a.rain_max,
                    rain_total: a.rain_sum,
                    dewpoint_avg: a.dew_sum / a.n,
                    wind_avg: a.wind_sum / a.n,
                    radiation_avg: a.rad_sum / a.n,
                    pressure_avg: a.pres_sum / a.n,
                },
            )
        })
        .collect();
    DailyCell {
        cell_id: cell.cell_id.clone(),
        latitude: cell.latitude,
        longitude: cell.longitude,
        altitude_m: cell.altitude_m,
        days,
    }
}

pub fn aggregate_cells(cells: &[WeatherCell]) -> Vec<DailyCell> {
    cells.iter().map(aggregate_weather_daily).collect()
}

/// Inverse-distance weight of one cell for one hive.
fn cell_weight(distance_km: f64, altitude_diff_km: f64, params: &JoinParams) -> f64 {
    1.0 / (distance_km + params.altitude_lambda * altitude_diff_km.abs() + params.epsilon_km)
}

/// Weather for one hive location: weighted average of every in-radius cell's
/// daily aggregates. Days covered by only some cells are averaged over the
/// cells that have them.
pub fn join_weather_to_hive(
    location: &HiveLocation,
    cells: &[DailyCell],
    params: &JoinParams,
) -> Result<BTreeMap<NaiveDate, DailyWeather>, IngestError> {
    let mut nearest = f64::INFINITY;
    let mut in_range: Vec<(&DailyCell, f64)> = Vec::new();
    for cell in cells {
        let d = haversine_km(location.latitude, location.longitude, cell.latitude, cell.longitude);
        nearest = nearest.min(d);
        if d <= params.radius_km {
            let alt_diff_km = (location.altitude_m - cell.altitude_m) / 1000.0;
            in_range.push((cell, cell_weight(d, alt_diff_km, params)));
        }
    }
    if in_range.is_empty() {
        return Err(IngestError::NoCellWithinRadius {
            radius_km: params.radius_km,
            nearest_km: nearest,
        });
    }
    let mut out: BTreeMap<NaiveDate, ([f64; 9], f64)> = BTreeMap::new();
    for (cell, w) in &in_range {
        for (date, daily) in &cell.days {
            let entry = out.entry(*date).or_insert(([0.0; 9], 0.0));
            for (slot, v) in entry.0.iter_mut().zip(daily.to_array()) {
                *slot += w * v;
            }
            entry.1 += w;
        }
    }
    Ok(out
        .into_iter()
        .map(|(date, (sums, total_w))| {
            let mut vals = sums;
            for v in &mut vals {
                *v /= total_w;
            }
            (date, DailyWeather::from_array(vals))
        })
        .collect())
}

/// Merges a hive's weight series with its joined weather into one daily panel.
///
/// The date axis is the union of hive days and weather days, so weather history
/// stays available across gaps in the scale readings.
pub fn attach_weather(
    located: &LocatedSeries,
    cells: &[DailyCell],
    params: &JoinParams,
) -> Result<HiveSeries, IngestError> {
    let weather = join_weather_to_hive(&located.location, cells, params)?;
    let series = &located.series;
    let mut days: Vec<NaiveDate> = series.days.iter().copied().chain(weather.keys().copied()).collect();
    days.sort_unstable();
    days.dedup();

    let weight_in = series.column(vars::WEIGHT).unwrap_or(&[]);
    let weight: Vec<Option<f64>> = days
        .iter()
        .map(|d| series.day_index(*d).and_then(|i| weight_in.get(i).copied().flatten()))
        .collect();

    let mut out = HiveSeries::with_days(series.hive_id.clone(), days.clone())?;
    out.insert_column(vars::WEIGHT, weight)?;
    for (k, name) in vars::WEATHER.iter().enumerate() {
        let column: Vec<Option<f64>> =
            days.iter().map(|d| weather.get(d).map(|w| w.to_array()[k])).collect();
        out.insert_column(*name, column)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ts(s: &str) -> DateTime<Utc> {
        parse_timestamp(s).unwrap()
    }

    fn obs(id: &str, t: &str, w: f64) -> HiveObservation {
        HiveObservation {
            hive_id: HiveId::from(id),
            timestamp: ts(t),
            latitude: 45.0,
            longitude: 8.0,
            altitude_m: 220.0,
            weight_kg: w,
        }
    }

    fn hour(t: &str, temp: f64, rain: f64) -> HourlyWeather {
        HourlyWeather {
            timestamp: ts(t),
            temperature_2m_c: temp,
            dewpoint_c: temp - 3.0,
            precipitation_m: rain,
            wind_speed_ms: 2.0,
            solar_radiation_jm2: 150.0,
            surface_pressure_pa: 96000.0,
        }
    }

    /// Cell placed `km_north` km due north of (45, 8), with constant values.
    fn cell_at(id: &str, km_north: f64, altitude_m: f64, value: f64) -> DailyCell {
        let mut days = BTreeMap::new();
        days.insert(
            "2021-05-01".parse().unwrap(),
            DailyWeather {
                temp_avg: value,
                temp_min: value,
                temp_max: value,
                rain_max: value,
                rain_total: value,
                dewpoint_avg: value,
                wind_avg: value,
                radiation_avg: value,
                pressure_avg: value,
            },
        );
        DailyCell {
            cell_id: id.into(),
            latitude: 45.0 + km_north / (EARTH_RADIUS_KM * std::f64::consts::PI / 180.0),
            longitude: 8.0,
            altitude_m,
            days,
        }
    }

    fn hive_loc() -> HiveLocation {
        HiveLocation { latitude: 45.0, longitude: 8.0, altitude_m: 0.0 }
    }

    #[test]
    fn haversine_matches_known_values() {
        assert_eq!(haversine_km(45.0, 8.0, 45.0, 8.0), 0.0);
        // One degree of latitude along a meridian.
        let one_deg = EARTH_RADIUS_KM * std::f64::consts::PI / 180.0;
        assert_relative_eq!(haversine_km(0.0, 0.0, 1.0, 0.0), one_deg, epsilon = 1e-9);
        assert_relative_eq!(haversine_km(45.0, 8.0, 45.0, 9.0), one_deg * 45f64.to_radians().cos(), epsilon = 0.05);
    }

    #[test]
    fn resample_averages_within_a_day() {
        let readings = vec![
            obs("h1", "2021-05-01T06:00:00Z", 30.0),
            obs("h1", "2021-05-01T18:00:00Z", 32.0),
            obs("h1", "2021-05-03T06:00:00Z", 33.0),
        ];
        let located = resample_daily(&readings).unwrap();
        let w = located.series.column(vars::WEIGHT).unwrap();
        assert_eq!(located.series.len(), 2);
        assert_eq!(w[0], Some(31.0));
        assert_eq!(w[1], Some(33.0));
        // 2021-05-02 has no readings and is simply absent from the axis.
        assert!(located.series.day_index("2021-05-02".parse().unwrap()).is_none());
    }

    #[test]
    fn resample_keeps_edge_of_day_readings_together() {
        let readings = vec![
            obs("h1", "2021-05-01T00:30:00Z", 30.0),
            obs("h1", "2021-05-01T23:30:00Z", 30.0),
        ];
        let located = resample_daily(&readings).unwrap();
        assert_eq!(located.series.len(), 1);
        assert_eq!(located.series.column(vars::WEIGHT).unwrap()[0], Some(30.0));
    }

    #[test]
    fn resample_rejects_mixed_hives() {
        let readings =
            vec![obs("h1", "2021-05-01T06:00:00Z", 30.0), obs("h2", "2021-05-01T06:00:00Z", 31.0)];
        assert!(matches!(resample_daily(&readings), Err(IngestError::MixedHiveIds)));
    }

    #[test]
    fn daily_aggregation_uses_the_right_statistic_per_variable() {
        let cell = WeatherCell {
            cell_id: "c1".into(),
            latitude: 45.0,
            longitude: 8.0,
            altitude_m: 200.0,
            hours: vec![
                hour("2021-05-01T06:00:00Z", 5.0, 0.001),
                hour("2021-05-01T12:00:00Z", 15.0, 0.001),
                hour("2021-05-01T18:00:00Z", 10.0, 0.001),
            ],
        };
        let daily = aggregate_weather_daily(&cell);
        let day = daily.days[&"2021-05-01".parse().unwrap()];
        assert_relative_eq!(day.temp_avg, 10.0);
        assert_eq!(day.temp_min, 5.0);
        assert_eq!(day.temp_max, 15.0);
        assert_relative_eq!(day.rain_max, 0.001);
        assert_relative_eq!(day.rain_total, 0.003, epsilon = 1e-15);
        assert!(day.temp_min <= day.temp_avg && day.temp_avg <= day.temp_max);
        assert!(day.rain_total >= day.rain_max);
    }

    #[test]
    fn join_weights_cells_by_inverse_distance() {
        // Values 10 at 5 km and 20 at 15 km: (10/5 + 20/15) / (1/5 + 1/15) = 12.5.
        let cells = vec![cell_at("a", 5.0, 0.0, 10.0), cell_at("b", 15.0, 0.0, 20.0)];
        let joined = join_weather_to_hive(&hive_loc(), &cells, &JoinParams::default()).unwrap();
        let day = joined[&"2021-05-01".parse().unwrap()];
        assert_relative_eq!(day.temp_avg, 12.5, epsilon = 1e-6);
    }

    #[test]
    fn join_penalizes_altitude_difference() {
        // 300 m difference with lambda 10 adds 3 km of effective distance.
        let cells = vec![cell_at("a", 5.0, 300.0, 10.0), cell_at("b", 15.0, 0.0, 20.0)];
        let joined = join_weather_to_hive(&hive_loc(), &cells, &JoinParams::default()).unwrap();
        let day = joined[&"2021-05-01".parse().unwrap()];
        let expected = (10.0 / 8.0 + 20.0 / 15.0) / (1.0 / 8.0 + 1.0 / 15.0);
        assert_relative_eq!(day.temp_avg, expected, epsilon = 1e-6);
    }

    #[test]
    fn join_requires_a_cell_in_radius() {
        let cells = vec![cell_at("far", 25.0, 0.0, 10.0)];
        let err = join_weather_to_hive(&hive_loc(), &cells, &JoinParams::default()).unwrap_err();
        match err {
            IngestError::NoCellWithinRadius { nearest_km, .. } => {
                assert_relative_eq!(nearest_km, 25.0, epsilon = 0.01)
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn attach_weather_unions_the_date_axes() {
        let readings = vec![
            obs("h1", "2021-04-30T06:00:00Z", 30.0),
            obs("h1", "2021-05-02T06:00:00Z", 31.0),
        ];
        let located = resample_daily(&readings).unwrap();
        let cells = vec![cell_at("a", 5.0, 0.0, 10.0)];
        let panel = attach_weather(&located, &cells, &JoinParams::default()).unwrap();
        // Axis: 04-30 and 05-02 from the hive, 05-01 from the weather.
        assert_eq!(panel.len(), 3);
        let w = panel.column(vars::WEIGHT).unwrap();
        assert_eq!(w, &[Some(30.0), None, Some(31.0)]);
        let t = panel.column(vars::TEMP_AVG).unwrap();
        assert_eq!(t, &[None, Some(10.0), None]);
    }

    #[test]
    fn hive_csv_parses_and_counts_malformed_rows() {
        let data = "hive_id,timestamp,latitude,longitude,altitude_m,weight_kg\n\
                    h1,2021-05-01T06:00:00Z,45.0,8.0,220,30.5\n\
                    h1,not-a-time,45.0,8.0,220,30.5\n\
                    h1,2021-05-02T06:00:00Z,95.0,8.0,220,30.5\n\
                    h1,2021-05-02T06:00:00Z,45.0,8.0,220,NaN\n\
                    h2,2021-05-01T06:00:00Z,45.1,8.1,300,28.0\n";
        let parsed = parse_hive_csv(data.as_bytes()).unwrap();
        assert_eq!(parsed.observations.len(), 2);
        assert_eq!(parsed.malformed_rows, 3);
    }

    #[test]
    fn hive_csv_rejects_wrong_header() {
        let data = "id,timestamp,latitude,longitude,altitude_m,weight_kg\n";
        assert!(matches!(
            parse_hive_csv(data.as_bytes()),
            Err(IngestError::SchemaMismatch { .. })
        ));
    }

    #[test]
    fn weather_csv_groups_rows_into_cells() {
        let data = "cell_id,latitude,longitude,altitude_m,timestamp,temperature_2m_c,dewpoint_c,precipitation_m,wind_speed_ms,solar_radiation_jm2,surface_pressure_pa\n\
                    c1,45.0,8.0,200,2021-05-01T06:00:00Z,10,7,0.0,2.0,150,96000\n\
                    c1,45.0,8.0,200,2021-05-01T05:00:00Z,9,6,0.0,2.0,140,96000\n\
                    c2,45.1,8.0,250,2021-05-01T06:00:00Z,11,8,0.0,2.5,160,95500\n\
                    c2,45.1,8.0,250,bad,11,8,0.0,2.5,160,95500\n";
        let parsed = parse_weather_csv(data.as_bytes()).unwrap();
        assert_eq!(parsed.cells.len(), 2);
        assert_eq!(parsed.malformed_rows, 1);
        // Hours are sorted by timestamp after parsing.
        let c1 = &parsed.cells[0];
        assert!(c1.hours[0].timestamp < c1.hours[1].timestamp);
    }
}
