//! Timestamp-indexed columnar table for the raw and merged hourly records.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::PipelineError;

/// Where a column came from; drives the per-source imputation policy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "city", rename_all = "snake_case")]
pub enum Provenance {
    Energy,
    Weather(String),
    Derived,
}

/// Named numeric series with value-or-missing cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub provenance: Provenance,
    pub values: Vec<Option<f64>>,
}

/// Hourly table: strictly increasing timestamps, equal-length columns.
/// Gaps in the hourly grid are allowed until imputation closes them.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeTable {
    timestamps: Vec<DateTime<Utc>>,
    columns: Vec<Column>,
}

impl TimeTable {
    pub fn new(
        timestamps: Vec<DateTime<Utc>>,
        columns: Vec<Column>,
    ) -> Result<Self, PipelineError> {
        for w in timestamps.windows(2) {
            let delta = w[1] - w[0];
            if delta <= chrono::Duration::zero() {
                return Err(PipelineError::UnsortedTimestamps { row: 0 });
            }
            if delta.num_seconds() % 3600 != 0 {
                return Err(PipelineError::NonHourlyTimestamp {
                    timestamp: w[1].to_rfc3339(),
                });
            }
        }
        for c in &columns {
            if c.values.len() != timestamps.len() {
                return Err(PipelineError::ColumnLengthMismatch {
                    column: c.name.clone(),
                    got: c.values.len(),
                    expected: timestamps.len(),
                });
            }
        }
        Ok(TimeTable {
            timestamps,
            columns,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.timestamps.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn timestamps(&self) -> &[DateTime<Utc>] {
        &self.timestamps
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    /// Count of missing cells across the whole table.
    pub fn missing_cells(&self) -> usize {
        self.columns
            .iter()
            .map(|c| c.values.iter().filter(|v| v.is_none()).count())
            .sum()
    }

    pub(crate) fn into_parts(self) -> (Vec<DateTime<Utc>>, Vec<Column>) {
        (self.timestamps, self.columns)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn ts(h: u32) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2015, 1, 1, h, 0, 0).unwrap()
    }

    #[test]
    fn rejects_unsorted_timestamps() {
        let err = TimeTable::new(vec![ts(2), ts(1)], vec![]).unwrap_err();
        assert!(matches!(err, PipelineError::UnsortedTimestamps { .. }));
    }

    #[test]
    fn allows_gaps_before_imputation() {
        let t = TimeTable::new(vec![ts(0), ts(3)], vec![]).unwrap();
        assert_eq!(t.n_rows(), 2);
    }

    #[test]
    fn rejects_off_grid_timestamps() {
        let half = Utc.with_ymd_and_hms(2015, 1, 1, 0, 30, 0).unwrap();
        let err = TimeTable::new(vec![ts(0), half], vec![]).unwrap_err();
        assert!(matches!(err, PipelineError::NonHourlyTimestamp { .. }));
    }

    #[test]
    fn rejects_ragged_columns() {
        let col = Column {
            name: "x".into(),
            provenance: Provenance::Energy,
            values: vec![Some(1.0)],
        };
        let err = TimeTable::new(vec![ts(0), ts(1)], vec![col]).unwrap_err();
        assert!(matches!(err, PipelineError::ColumnLengthMismatch { .. }));
    }
}
