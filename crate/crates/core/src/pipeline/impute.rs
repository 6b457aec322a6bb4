//! Hourly grid completion and per-source missing-value imputation.

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use super::table::{Column, Provenance, TimeTable};
use super::PipelineError;

/// Per-source imputation policy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImputePolicy {
    /// Weather gaps up to this many hours are linearly interpolated;
    /// longer gaps fall back to forward filling.
    pub max_interp_gap: usize,
}

impl Default for ImputePolicy {
    fn default() -> Self {
        ImputePolicy { max_interp_gap: 6 }
    }
}

/// Cells filled per column, in table column order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImputationReport {
    pub per_column: Vec<(String, usize)>,
    pub inserted_rows: usize,
}

impl ImputationReport {
    pub fn total_filled(&self) -> usize {
        self.per_column.iter().map(|(_, n)| n).sum()
    }
}

/// Insert all-missing rows for absent hours so the table spans a contiguous
/// hourly grid from its first to its last timestamp.
pub fn complete_hourly_grid(table: &TimeTable) -> Result<TimeTable, PipelineError> {
    let old = table.timestamps();
    if old.is_empty() {
        return Ok(table.clone());
    }
    let first = old[0];
    let last = old[old.len() - 1];
    let total = ((last - first).num_hours() + 1) as usize;

    let mut timestamps = Vec::with_capacity(total);
    let mut source_row: Vec<Option<usize>> = Vec::with_capacity(total);
    let mut i = 0usize;
    let mut t = first;
    while t <= last {
        if i < old.len() && old[i] == t {
            source_row.push(Some(i));
            i += 1;
        } else {
            source_row.push(None);
        }
        timestamps.push(t);
        t += Duration::hours(1);
    }

    let columns = table
        .columns()
        .iter()
        .map(|c| Column {
            name: c.name.clone(),
            provenance: c.provenance.clone(),
            values: source_row
                .iter()
                .map(|r| r.and_then(|i| c.values[i]))
                .collect(),
        })
        .collect();
    TimeTable::new(timestamps, columns)
}

fn fill_column(
    values: &[Option<f64>],
    provenance: &Provenance,
    policy: &ImputePolicy,
    name: &str,
) -> Result<(Vec<f64>, usize), PipelineError> {
    let observed: Vec<f64> = values.iter().filter_map(|v| *v).collect();
    if observed.is_empty() {
        return Err(PipelineError::AllMissingColumn {
            column: name.to_string(),
        });
    }
    let mean = observed.iter().sum::<f64>() / observed.len() as f64;
    let interpolate = matches!(provenance, Provenance::Weather(_));

    let n = values.len();
    let mut out = vec![0.0; n];
    let mut filled = 0usize;
    let mut i = 0usize;
    while i < n {
        if let Some(v) = values[i] {
            out[i] = v;
            i += 1;
            continue;
        }
        // Maximal missing run [i, end].
        let mut end = i;
        while end + 1 < n && values[end + 1].is_none() {
            end += 1;
        }
        let run = end - i + 1;
        let left = if i > 0 { values[i - 1] } else { None };
        let right = if end + 1 < n { values[end + 1] } else { None };
        match (left, right) {
            (Some(l), Some(r)) if interpolate && run <= policy.max_interp_gap => {
                for j in 0..run {
                    out[i + j] = l + (r - l) * (j + 1) as f64 / (run + 1) as f64;
                }
            }
            (Some(l), _) => {
                for j in 0..run {
                    out[i + j] = l;
                }
            }
            // Leading gap: no value to carry forward, fall back to the mean
            // of the observed cells.
            (None, _) => {
                for j in 0..run {
                    out[i + j] = mean;
                }
            }
        }
        filled += run;
        i = end + 1;
    }
    Ok((out, filled))
}

/// Close every gap: completes the hourly grid, then fills per source.
/// Weather: short interior gaps interpolated, longer ones forward filled.
/// Energy and derived: forward fill, remaining leading cells get the mean.
pub fn impute_missing(
    table: &TimeTable,
    policy: &ImputePolicy,
) -> Result<(TimeTable, ImputationReport), PipelineError> {
    let before = table.n_rows();
    let gridded = complete_hourly_grid(table)?;
    let inserted_rows = gridded.n_rows() - before;

    let mut per_column = Vec::with_capacity(gridded.n_cols());
    let mut columns = Vec::with_capacity(gridded.n_cols());
    for c in gridded.columns() {
        let (values, filled) = fill_column(&c.values, &c.provenance, policy, &c.name)?;
        per_column.push((c.name.clone(), filled));
        columns.push(Column {
            name: c.name.clone(),
            provenance: c.provenance.clone(),
            values: values.into_iter().map(Some).collect(),
        });
    }
    let out = TimeTable::new(gridded.timestamps().to_vec(), columns)?;
    debug_assert_eq!(out.missing_cells(), 0);
    Ok((
        out,
        ImputationReport {
            per_column,
            inserted_rows,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn ts(h: u32) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2015, 1, 1, h, 0, 0).unwrap()
    }

    fn tbl(hours: &[u32], values: Vec<Option<f64>>, prov: Provenance) -> TimeTable {
        TimeTable::new(
            hours.iter().map(|&h| ts(h)).collect(),
            vec![Column {
                name: "x".into(),
                provenance: prov,
                values,
            }],
        )
        .unwrap()
    }

    #[test]
    fn weather_midpoint_interpolation() {
        let t = tbl(
            &[0, 1, 2],
            vec![Some(10.0), None, Some(20.0)],
            Provenance::Weather("M".into()),
        );
        let (out, rep) = impute_missing(&t, &ImputePolicy::default()).unwrap();
        let vals: Vec<f64> = out.column("x").unwrap().values.iter().map(|v| v.unwrap()).collect();
        assert_eq!(vals, vec![10.0, 15.0, 20.0]);
        assert_eq!(rep.per_column[0].1, 1);
    }

    #[test]
    fn weather_long_gap_forward_fills() {
        let policy = ImputePolicy { max_interp_gap: 2 };
        let t = tbl(
            &[0, 1, 2, 3, 4],
            vec![Some(10.0), None, None, None, Some(50.0)],
            Provenance::Weather("M".into()),
        );
        let (out, _) = impute_missing(&t, &policy).unwrap();
        let vals: Vec<f64> = out.column("x").unwrap().values.iter().map(|v| v.unwrap()).collect();
        assert_eq!(vals, vec![10.0, 10.0, 10.0, 10.0, 50.0]);
    }

    #[test]
    fn energy_policy_oracle_by_hand() {
        // [missing, 5, missing, missing]: only observation is 5, so the
        // column mean is 5; leading cell takes the mean, trailing cells
        // forward fill -> [5, 5, 5, 5].
        let t = tbl(
            &[0, 1, 2, 3],
            vec![None, Some(5.0), None, None],
            Provenance::Energy,
        );
        let (out, rep) = impute_missing(&t, &ImputePolicy::default()).unwrap();
        let vals: Vec<f64> = out.column("x").unwrap().values.iter().map(|v| v.unwrap()).collect();
        assert_eq!(vals, vec![5.0, 5.0, 5.0, 5.0]);
        assert_eq!(rep.total_filled(), 3);
    }

    #[test]
    fn energy_never_interpolates() {
        let t = tbl(
            &[0, 1, 2],
            vec![Some(10.0), None, Some(20.0)],
            Provenance::Energy,
        );
        let (out, _) = impute_missing(&t, &ImputePolicy::default()).unwrap();
        assert_eq!(out.column("x").unwrap().values[1], Some(10.0));
    }

    #[test]
    fn all_missing_column_errors() {
        let t = tbl(&[0, 1], vec![None, None], Provenance::Energy);
        let err = impute_missing(&t, &ImputePolicy::default()).unwrap_err();
        assert!(matches!(err, PipelineError::AllMissingColumn { .. }));
    }

    #[test]
    fn grid_completion_inserts_missing_hours() {
        let t = tbl(&[0, 3], vec![Some(1.0), Some(4.0)], Provenance::Energy);
        let g = complete_hourly_grid(&t).unwrap();
        assert_eq!(g.n_rows(), 4);
        assert_eq!(g.column("x").unwrap().values[1], None);

        let (out, rep) = impute_missing(&t, &ImputePolicy::default()).unwrap();
        assert_eq!(out.n_rows(), 4);
        assert_eq!(out.missing_cells(), 0);
        assert_eq!(rep.inserted_rows, 2);
    }

    #[test]
    fn weather_boundary_gaps() {
        // Leading gap takes the column mean, trailing gap forward fills.
        let t = tbl(
            &[0, 1, 2, 3],
            vec![None, Some(2.0), Some(4.0), None],
            Provenance::Weather("M".into()),
        );
        let (out, _) = impute_missing(&t, &ImputePolicy::default()).unwrap();
        let vals: Vec<f64> = out.column("x").unwrap().values.iter().map(|v| v.unwrap()).collect();
        assert_eq!(vals, vec![3.0, 2.0, 4.0, 4.0]);
    }
}
