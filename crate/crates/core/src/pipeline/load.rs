//! CSV ingestion: energy (wide) and weather (long, pivoted per city), the
//! timestamp inner join, and calendar feature derivation.

use std::collections::HashMap;
use std::path::Path;

use chrono::{DateTime, Datelike, FixedOffset, NaiveDateTime, TimeZone, Timelike, Utc};

use super::table::{Column, Provenance, TimeTable};
use super::PipelineError;

const TIMESTAMP_CANDIDATES: [&str; 6] = ["time", "timestamp", "datetime", "dt_iso", "dt", "date"];
const CITY_CANDIDATES: [&str; 2] = ["city_name", "city"];

/// Calendar columns appended by [`derive_time_features`].
pub const TIME_FEATURE_NAMES: [&str; 4] = ["hour", "day_of_week", "month", "day_of_month"];

#[derive(Debug, Clone)]
pub struct LoadOptions {
    /// UTC offset applied to offset-less timestamps before converting to UTC.
    pub source_tz_offset_hours: i32,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            source_tz_offset_hours: 0,
        }
    }
}

fn parse_timestamp(raw: &str, opts: &LoadOptions) -> Option<DateTime<Utc>> {
    let s = raw.trim();
    if s.is_empty() {
        return None;
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.with_timezone(&Utc));
    }
    if let Ok(dt) = DateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S%:z") {
        return Some(dt.with_timezone(&Utc));
    }
    for fmt in [
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
    ] {
        if let Ok(naive) = NaiveDateTime::parse_from_str(s, fmt) {
            let offset = FixedOffset::east_opt(opts.source_tz_offset_hours * 3600)?;
            return offset
                .from_local_datetime(&naive)
                .single()
                .map(|dt| dt.with_timezone(&Utc));
        }
    }
    None
}

fn parse_cell(raw: &str) -> Option<f64> {
    let s = raw.trim();
    if s.is_empty() {
        return None;
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Some(v),
        _ => None,
    }
}

fn open_reader(path: &Path) -> Result<csv::Reader<std::fs::File>, PipelineError> {
    csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| PipelineError::Csv {
            path: path.display().to_string(),
            source: e,
        })
}

fn read_header(
    rdr: &mut csv::Reader<std::fs::File>,
    path: &Path,
) -> Result<Vec<String>, PipelineError> {
    let headers = rdr.headers().map_err(|e| PipelineError::Csv {
        path: path.display().to_string(),
        source: e,
    })?;
    let names: Vec<String> = headers.iter().map(|h| h.trim().to_string()).collect();
    if names.iter().any(String::is_empty) {
        return Err(PipelineError::MalformedHeader {
            path: path.display().to_string(),
            detail: "empty column name".into(),
        });
    }
    let mut seen = std::collections::HashSet::new();
    for n in &names {
        if !seen.insert(n.clone()) {
            return Err(PipelineError::MalformedHeader {
                path: path.display().to_string(),
                detail: format!("duplicate column name {n:?}"),
            });
        }
    }
    Ok(names)
}

fn find_column(names: &[String], candidates: &[&str]) -> Option<usize> {
    candidates
        .iter()
        .find_map(|c| names.iter().position(|n| n.eq_ignore_ascii_case(c)))
}

/// Load a wide energy CSV: one timestamp column plus numeric series.
///
/// Unparseable numeric cells become missing; rows with unparseable timestamps
/// are dropped; duplicate timestamps collapse keeping the last occurrence.
pub fn load_energy_csv(path: &Path, opts: &LoadOptions) -> Result<TimeTable, PipelineError> {
    let mut rdr = open_reader(path)?;
    let names = read_header(&mut rdr, path)?;
    let ts_idx = find_column(&names, &TIMESTAMP_CANDIDATES).ok_or_else(|| {
        PipelineError::MissingTimestampColumn {
            path: path.display().to_string(),
            candidates: TIMESTAMP_CANDIDATES.iter().map(|s| s.to_string()).collect(),
        }
    })?;

    let value_cols: Vec<usize> = (0..names.len()).filter(|&i| i != ts_idx).collect();
    let mut rows: Vec<(DateTime<Utc>, Vec<Option<f64>>)> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| PipelineError::Csv {
            path: path.display().to_string(),
            source: e,
        })?;
        let Some(ts) = record.get(ts_idx).and_then(|s| parse_timestamp(s, opts)) else {
            continue;
        };
        let values = value_cols
            .iter()
            .map(|&i| record.get(i).and_then(parse_cell))
            .collect();
        rows.push((ts, values));
    }
    if rows.is_empty() {
        return Err(PipelineError::EmptyFile {
            path: path.display().to_string(),
        });
    }

    // Stable sort, then keep the last record of each timestamp run: later
    // rows in the source feed are corrections.
    rows.sort_by_key(|(ts, _)| *ts);
    let mut deduped: Vec<(DateTime<Utc>, Vec<Option<f64>>)> = Vec::with_capacity(rows.len());
    for row in rows {
        match deduped.last_mut() {
            Some(last) if last.0 == row.0 => *last = row,
            _ => deduped.push(row),
        }
    }

    let timestamps: Vec<DateTime<Utc>> = deduped.iter().map(|(ts, _)| *ts).collect();
    let columns = value_cols
        .iter()
        .enumerate()
        .map(|(j, &i)| Column {
            name: names[i].clone(),
            provenance: Provenance::Energy,
            values: deduped.iter().map(|(_, v)| v[j]).collect(),
        })
        .collect();
    TimeTable::new(timestamps, columns)
}

/// Load a long weather CSV (timestamp, city, variables...) and pivot it wide:
/// one `<city>_<variable>` column per city/variable pair, cities sorted.
///
/// Only columns with at least one numeric cell survive the pivot; text
/// columns such as weather descriptions are dropped.
pub fn load_weather_csv(path: &Path, opts: &LoadOptions) -> Result<TimeTable, PipelineError> {
    let mut rdr = open_reader(path)?;
    let names = read_header(&mut rdr, path)?;
    let ts_idx = find_column(&names, &TIMESTAMP_CANDIDATES).ok_or_else(|| {
        PipelineError::MissingTimestampColumn {
            path: path.display().to_string(),
            candidates: TIMESTAMP_CANDIDATES.iter().map(|s| s.to_string()).collect(),
        }
    })?;
    let city_idx = find_column(&names, &CITY_CANDIDATES).ok_or_else(|| {
        PipelineError::MissingCityColumn {
            path: path.display().to_string(),
        }
    })?;
    let var_cols: Vec<usize> = (0..names.len())
        .filter(|&i| i != ts_idx && i != city_idx)
        .collect();

    struct Record {
        ts: DateTime<Utc>,
        city: String,
        values: Vec<Option<f64>>,
    }
    let mut records: Vec<Record> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| PipelineError::Csv {
            path: path.display().to_string(),
            source: e,
        })?;
        let Some(ts) = record.get(ts_idx).and_then(|s| parse_timestamp(s, opts)) else {
            continue;
        };
        let city = record.get(city_idx).unwrap_or("").trim().to_string();
        if city.is_empty() {
            continue;
        }
        records.push(Record {
            ts,
            city,
            values: var_cols
                .iter()
                .map(|&i| record.get(i).and_then(parse_cell))
                .collect(),
        });
    }
    if records.is_empty() {
        return Err(PipelineError::EmptyFile {
            path: path.display().to_string(),
        });
    }

    let numeric_vars: Vec<usize> = (0..var_cols.len())
        .filter(|&j| records.iter().any(|r| r.values[j].is_some()))
        .collect();

    let mut cities: Vec<String> = records.iter().map(|r| r.city.clone()).collect();
    cities.sort();
    cities.dedup();
    let city_index: HashMap<&str, usize> = cities
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();

    let mut timestamps: Vec<DateTime<Utc>> = records.iter().map(|r| r.ts).collect();
    timestamps.sort();
    timestamps.dedup();
    let ts_index: HashMap<DateTime<Utc>, usize> = timestamps
        .iter()
        .enumerate()
        .map(|(i, t)| (*t, i))
        .collect();

    let wide_cols = cities.len() * numeric_vars.len();
    let mut grid: Vec<Vec<Option<f64>>> = vec![vec![None; timestamps.len()]; wide_cols];
    // File order, so a later duplicate (city, timestamp) record wins.
    for r in &records {
        let row = ts_index[&r.ts];
        let c = city_index[r.city.as_str()];
        for (k, &j) in numeric_vars.iter().enumerate() {
            if let Some(v) = r.values[j] {
                grid[c * numeric_vars.len() + k][row] = Some(v);
            }
        }
    }

    let mut columns = Vec::with_capacity(wide_cols);
    for (c, city) in cities.iter().enumerate() {
        for (k, &j) in numeric_vars.iter().enumerate() {
            columns.push(Column {
                name: format!("{}_{}", city, names[var_cols[j]]),
                provenance: Provenance::Weather(city.clone()),
                values: std::mem::take(&mut grid[c * numeric_vars.len() + k]),
            });
        }
    }
    TimeTable::new(timestamps, columns)
}

/// Inner join on exact timestamp equality; energy columns first.
pub fn merge_on_timestamp(
    energy: &TimeTable,
    weather: &TimeTable,
) -> Result<TimeTable, PipelineError> {
    let mut shared: Vec<(usize, usize)> = Vec::new();
    let (mut i, mut j) = (0, 0);
    let (e_ts, w_ts) = (energy.timestamps(), weather.timestamps());
    while i < e_ts.len() && j < w_ts.len() {
        match e_ts[i].cmp(&w_ts[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                shared.push((i, j));
                i += 1;
                j += 1;
            }
        }
    }
    if shared.is_empty() {
        return Err(PipelineError::EmptyIntersection);
    }

    let timestamps: Vec<DateTime<Utc>> = shared.iter().map(|&(i, _)| e_ts[i]).collect();
    let mut columns = Vec::with_capacity(energy.n_cols() + weather.n_cols());
    for col in energy.columns() {
        columns.push(Column {
            name: col.name.clone(),
            provenance: col.provenance.clone(),
            values: shared.iter().map(|&(i, _)| col.values[i]).collect(),
        });
    }
    for col in weather.columns() {
        columns.push(Column {
            name: col.name.clone(),
            provenance: col.provenance.clone(),
            values: shared.iter().map(|&(_, j)| col.values[j]).collect(),
        });
    }
    TimeTable::new(timestamps, columns)
}

/// Append integer-valued calendar columns: `hour` (0-23), `day_of_week`
/// (0-6, Monday = 0), `month` (1-12), `day_of_month` (1-31).
pub fn derive_time_features(table: &TimeTable) -> TimeTable {
    let timestamps = table.timestamps().to_vec();
    let mut columns: Vec<Column> = table
        .columns()
        .iter()
        .filter(|c| !TIME_FEATURE_NAMES.contains(&c.name.as_str()))
        .cloned()
        .collect();
    let derived: [(&str, fn(&DateTime<Utc>) -> f64); 4] = [
        ("hour", |t| t.hour() as f64),
        ("day_of_week", |t| t.weekday().num_days_from_monday() as f64),
        ("month", |t| t.month() as f64),
        ("day_of_month", |t| t.day() as f64),
    ];
    for (name, f) in derived {
        columns.push(Column {
            name: name.to_string(),
            provenance: Provenance::Derived,
            values: timestamps.iter().map(|t| Some(f(t))).collect(),
        });
    }
    TimeTable::new(timestamps, columns).expect("derive preserves table shape")
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;
    use std::io::Write;

    fn write_file(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn ts(h: u32) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2015, 1, 1, h, 0, 0).unwrap()
    }

    #[test]
    fn energy_direct_parse() {
        let f = write_file(
            "time,total load actual,price actual\n\
             2015-01-01T00:00:00Z,25000,50.1\n\
             2015-01-01T01:00:00Z,24000,48.2\n\
             2015-01-01T02:00:00Z,23500,47.0\n",
        );
        let t = load_energy_csv(f.path(), &LoadOptions::default()).unwrap();
        assert_eq!(t.n_rows(), 3);
        assert_eq!(t.n_cols(), 2);
        assert_eq!(t.column("price actual").unwrap().values[1], Some(48.2));
    }

    #[test]
    fn empty_cell_becomes_missing_row_retained() {
        let f = write_file(
            "time,load\n2015-01-01T00:00:00Z,\n2015-01-01T01:00:00Z,5\n",
        );
        let t = load_energy_csv(f.path(), &LoadOptions::default()).unwrap();
        assert_eq!(t.n_rows(), 2);
        assert_eq!(t.column("load").unwrap().values[0], None);
    }

    #[test]
    fn duplicate_timestamp_keeps_last() {
        // Oracle: replaying the file and keeping the final value per
        // timestamp gives load = 120 for the duplicated hour.
        let f = write_file(
            "time,load\n\
             2015-01-01T00:00:00Z,100\n\
             2015-01-01T00:00:00Z,120\n\
             2015-01-01T01:00:00Z,90\n",
        );
        let t = load_energy_csv(f.path(), &LoadOptions::default()).unwrap();
        assert_eq!(t.n_rows(), 2);
        assert_eq!(t.column("load").unwrap().values[0], Some(120.0));
    }

    #[test]
    fn offsets_convert_to_utc() {
        let f = write_file(
            "time,load\n2015-01-01 01:00:00+01:00,10\n2015-01-01 02:00:00+01:00,11\n",
        );
        let t = load_energy_csv(f.path(), &LoadOptions::default()).unwrap();
        assert_eq!(t.timestamps()[0], ts(0));
        // Offset-less stamps honor the configured source timezone.
        let f = write_file("time,load\n2015-01-01 01:00:00,10\n");
        let opts = LoadOptions {
            source_tz_offset_hours: 1,
        };
        let t = load_energy_csv(f.path(), &opts).unwrap();
        assert_eq!(t.timestamps()[0], ts(0));
    }

    #[test]
    fn missing_timestamp_column_rejected() {
        let f = write_file("load,price\n1,2\n");
        let err = load_energy_csv(f.path(), &LoadOptions::default()).unwrap_err();
        assert!(matches!(err, PipelineError::MissingTimestampColumn { .. }));
    }

    #[test]
    fn header_only_file_is_empty() {
        let f = write_file("time,load\n");
        let err = load_energy_csv(f.path(), &LoadOptions::default()).unwrap_err();
        assert!(matches!(err, PipelineError::EmptyFile { .. }));
    }

    #[test]
    fn duplicate_header_rejected() {
        let f = write_file("time,load,load\n2015-01-01T00:00:00Z,1,2\n");
        let err = load_energy_csv(f.path(), &LoadOptions::default()).unwrap_err();
        assert!(matches!(err, PipelineError::MalformedHeader { .. }));
    }

    #[test]
    fn weather_pivot_two_cities() {
        let f = write_file(
            "dt_iso,city_name,temp\n\
             2015-01-01T00:00:00Z,Madrid,5.0\n\
             2015-01-01T00:00:00Z,Valencia,11.0\n\
             2015-01-01T01:00:00Z,Madrid,4.5\n\
             2015-01-01T01:00:00Z,Valencia,10.5\n",
        );
        let t = load_weather_csv(f.path(), &LoadOptions::default()).unwrap();
        assert_eq!(t.n_rows(), 2);
        assert_eq!(t.column_names(), vec!["Madrid_temp", "Valencia_temp"]);
        assert_eq!(t.column("Madrid_temp").unwrap().values[1], Some(4.5));
        assert_eq!(
            t.column("Valencia_temp").unwrap().provenance,
            Provenance::Weather("Valencia".into())
        );
    }

    #[test]
    fn weather_city_absent_yields_missing() {
        let f = write_file(
            "dt_iso,city_name,temp\n\
             2015-01-01T00:00:00Z,Madrid,5.0\n\
             2015-01-01T00:00:00Z,Valencia,11.0\n\
             2015-01-01T01:00:00Z,Madrid,4.5\n",
        );
        let t = load_weather_csv(f.path(), &LoadOptions::default()).unwrap();
        assert_eq!(t.column("Valencia_temp").unwrap().values[1], None);
    }

    #[test]
    fn weather_five_cities_four_vars_is_twenty_columns() {
        // Column count = cities x variables.
        let mut content = String::from("dt_iso,city_name,temp,humidity,rain_3h,wind_speed\n");
        for city in ["A", "B", "C", "D", "E"] {
            content.push_str(&format!("2015-01-01T00:00:00Z,{city},1,2,3,4\n"));
        }
        let f = write_file(&content);
        let t = load_weather_csv(f.path(), &LoadOptions::default()).unwrap();
        assert_eq!(t.n_cols(), 20);
    }

    #[test]
    fn weather_text_columns_dropped() {
        let f = write_file(
            "dt_iso,city_name,temp,weather_description\n\
             2015-01-01T00:00:00Z,Madrid,5.0,clear sky\n",
        );
        let t = load_weather_csv(f.path(), &LoadOptions::default()).unwrap();
        assert_eq!(t.column_names(), vec!["Madrid_temp"]);
    }

    #[test]
    fn weather_missing_city_column_rejected() {
        let f = write_file("dt_iso,temp\n2015-01-01T00:00:00Z,5.0\n");
        let err = load_weather_csv(f.path(), &LoadOptions::default()).unwrap_err();
        assert!(matches!(err, PipelineError::MissingCityColumn { .. }));
    }

    fn table(hours: &[u32], name: &str, prov: Provenance) -> TimeTable {
        let col = Column {
            name: name.into(),
            provenance: prov,
            values: hours.iter().map(|&h| Some(h as f64)).collect(),
        };
        TimeTable::new(hours.iter().map(|&h| ts(h)).collect(), vec![col]).unwrap()
    }

    #[test]
    fn merge_intersects() {
        let e = table(&[1, 2, 3], "load", Provenance::Energy);
        let w = table(&[2, 3, 4], "Madrid_temp", Provenance::Weather("Madrid".into()));
        let m = merge_on_timestamp(&e, &w).unwrap();
        assert_eq!(m.timestamps(), &[ts(2), ts(3)]);
        assert_eq!(m.column_names(), vec!["load", "Madrid_temp"]);
        assert_eq!(m.column("load").unwrap().values, vec![Some(2.0), Some(3.0)]);
    }

    #[test]
    fn merge_identical_sets_preserves_rows() {
        let e = table(&[0, 1, 2], "load", Provenance::Energy);
        let w = table(&[0, 1, 2], "t", Provenance::Weather("X".into()));
        let m = merge_on_timestamp(&e, &w).unwrap();
        assert_eq!(m.n_rows(), 3);
    }

    #[test]
    fn merge_disjoint_errors() {
        let e = table(&[0, 1], "load", Provenance::Energy);
        let w = table(&[2, 3], "t", Provenance::Weather("X".into()));
        assert!(matches!(
            merge_on_timestamp(&e, &w).unwrap_err(),
            PipelineError::EmptyIntersection
        ));
    }

    #[test]
    fn merge_join_oracle_24_vs_20_hours() {
        // Independent oracle: intersection of {0..23} and {4..23} is the 20
        // hours {4..23}; column count is the sum of both sides.
        let e_hours: Vec<u32> = (0..24).collect();
        let w_hours: Vec<u32> = (4..24).collect();
        let e = table(&e_hours, "load", Provenance::Energy);
        let w = table(&w_hours, "t", Provenance::Weather("X".into()));
        let m = merge_on_timestamp(&e, &w).unwrap();
        assert_eq!(m.n_rows(), 20);
        assert_eq!(m.n_cols(), e.n_cols() + w.n_cols());
        assert_eq!(m.timestamps()[0], ts(4));
    }

    #[test]
    fn time_features_calendar_values() {
        let stamps = vec![
            Utc.with_ymd_and_hms(2015, 6, 15, 13, 0, 0).unwrap(),
            Utc.with_ymd_and_hms(2015, 6, 15, 14, 0, 0).unwrap(),
        ];
        let t = TimeTable::new(stamps, vec![]).unwrap();
        let d = derive_time_features(&t);
        assert_eq!(d.column("hour").unwrap().values[0], Some(13.0));
        assert_eq!(d.column("month").unwrap().values[0], Some(6.0));
        // 2015-06-15 is a Monday.
        assert_eq!(d.column("day_of_week").unwrap().values[0], Some(0.0));
    }

    #[test]
    fn time_features_boundaries() {
        let t = TimeTable::new(
            vec![Utc.with_ymd_and_hms(2015, 1, 1, 0, 0, 0).unwrap()],
            vec![],
        )
        .unwrap();
        let d = derive_time_features(&t);
        assert_eq!(d.column("hour").unwrap().values[0], Some(0.0));
        assert_eq!(d.column("day_of_month").unwrap().values[0], Some(1.0));
        assert_eq!(d.column("month").unwrap().values[0], Some(1.0));

        // Calendar oracle: 2018-12-31 is a Monday in the proleptic Gregorian
        // calendar, so day_of_week = 0 at 23:00.
        let t = TimeTable::new(
            vec![Utc.with_ymd_and_hms(2018, 12, 31, 23, 0, 0).unwrap()],
            vec![],
        )
        .unwrap();
        let d = derive_time_features(&t);
        assert_eq!(d.column("hour").unwrap().values[0], Some(23.0));
        assert_eq!(d.column("month").unwrap().values[0], Some(12.0));
        assert_eq!(d.column("day_of_week").unwrap().values[0], Some(0.0));
    }
}
