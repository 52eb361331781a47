//! Column-named tables of continuous or category-coded records, with the
//! per-dataset moment cache shared by the independence tests and the
//! Gaussian score.

use std::io::{self, BufRead, Write};
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("dataset must have at least one record and one variable")]
    Empty,
    #[error("row {line} has {got} fields, expected {expected}")]
    RaggedRow {
        line: usize,
        got: usize,
        expected: usize,
    },
    #[error("could not parse '{token}' on line {line}")]
    Parse { line: usize, token: String },
    #[error("column {column} contains a non-finite value")]
    NonFinite { column: usize },
    #[error("header has an empty variable name")]
    EmptyName,
    #[error("discrete code {code} out of range for column {column} ({levels} levels)")]
    CodeOutOfRange {
        column: usize,
        code: u32,
        levels: u32,
    },
    #[error("io: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataKind {
    Continuous,
    Discrete,
}

enum Storage {
    Continuous(Vec<Vec<f64>>),
    Discrete { columns: Vec<Vec<u32>>, levels: Vec<u32> },
}

/// First and second moments of a continuous dataset, computed once and
/// shared read-only afterwards. Covariances use the 1/N (maximum-likelihood)
/// normalization.
pub struct Moments {
    pub means: Vec<f64>,
    /// n x n row-major covariance matrix.
    pub cov: Vec<f64>,
    /// n x n row-major correlation matrix; rows of zero-variance columns are 0.
    pub corr: Vec<f64>,
    pub std: Vec<f64>,
}

/// A table of records over named variables, either continuous or
/// category-coded discrete.
pub struct Dataset {
    names: Vec<String>,
    n_records: usize,
    storage: Storage,
    moments: OnceLock<Moments>,
}

impl Dataset {
    /// Builds a continuous dataset from column-major values.
    pub fn continuous(names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self, DataError> {
        if names.is_empty() || columns.is_empty() || columns[0].is_empty() {
            return Err(DataError::Empty);
        }
        assert_eq!(names.len(), columns.len(), "one name per column");
        let n_records = columns[0].len();
        for (i, c) in columns.iter().enumerate() {
            if c.len() != n_records {
                return Err(DataError::RaggedRow {
                    line: i,
                    got: c.len(),
                    expected: n_records,
                });
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(DataError::NonFinite { column: i });
            }
        }
        Ok(Dataset {
            names,
            n_records,
            storage: Storage::Continuous(columns),
            moments: OnceLock::new(),
        })
    }

    /// Builds a discrete dataset from column-major category codes; each code
    /// must lie in `[0, levels[column])`.
    pub fn discrete(
        names: Vec<String>,
        columns: Vec<Vec<u32>>,
        levels: Vec<u32>,
    ) -> Result<Self, DataError> {
        if names.is_empty() || columns.is_empty() || columns[0].is_empty() {
            return Err(DataError::Empty);
        }
        assert_eq!(names.len(), columns.len(), "one name per column");
        assert_eq!(levels.len(), columns.len(), "one level count per column");
        let n_records = columns[0].len();
        for (j, c) in columns.iter().enumerate() {
            if c.len() != n_records {
                return Err(DataError::RaggedRow {
                    line: j,
                    got: c.len(),
                    expected: n_records,
                });
            }
            for &code in c {
                if code >= levels[j] {
                    return Err(DataError::CodeOutOfRange {
                        column: j,
                        code,
                        levels: levels[j],
                    });
                }
            }
        }
        Ok(Dataset {
            names,
            n_records,
            storage: Storage::Discrete { columns, levels },
            moments: OnceLock::new(),
        })
    }

    pub fn n_vars(&self) -> usize {
        self.names.len()
    }

    pub fn n_records(&self) -> usize {
        self.n_records
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn kind(&self) -> DataKind {
        match self.storage {
            Storage::Continuous(_) => DataKind::Continuous,
            Storage::Discrete { .. } => DataKind::Discrete,
        }
    }

    pub fn continuous_columns(&self) -> Option<&[Vec<f64>]> {
        match &self.storage {
            Storage::Continuous(c) => Some(c),
            _ => None,
        }
    }

    pub fn discrete_columns(&self) -> Option<(&[Vec<u32>], &[u32])> {
        match &self.storage {
            Storage::Discrete { columns, levels } => Some((columns, levels)),
            _ => None,
        }
    }

    /// Moment cache for continuous data; `None` on discrete datasets.
    pub fn moments(&self) -> Option<&Moments> {
        let cols = self.continuous_columns()?;
        Some(self.moments.get_or_init(|| compute_moments(cols)))
    }

    /// Writes the CSV form: a header of variable names, then one numeric row
    /// per record. Floats use the shortest round-trip representation, so the
    /// bytes are a pure function of the values.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", self.names.join(","))?;
        let mut line = String::new();
        for r in 0..self.n_records {
            line.clear();
            for j in 0..self.n_vars() {
                if j > 0 {
                    line.push(',');
                }
                match &self.storage {
                    Storage::Continuous(cols) => {
                        line.push_str(&format!("{}", cols[j][r]));
                    }
                    Storage::Discrete { columns, .. } => {
                        line.push_str(&format!("{}", columns[j][r]));
                    }
                }
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    /// Reads CSV as continuous values.
    pub fn read_csv_continuous<R: BufRead>(r: R) -> Result<Self, DataError> {
        let (names, rows) = read_rows(r)?;
        let mut columns = vec![Vec::with_capacity(rows.len()); names.len()];
        for (lineno, row) in rows.iter().enumerate() {
            for (j, tok) in row.iter().enumerate() {
                let v: f64 = tok.parse().map_err(|_| DataError::Parse {
                    line: lineno + 2,
                    token: tok.clone(),
                })?;
                columns[j].push(v);
            }
        }
        Dataset::continuous(names, columns)
    }

    /// Reads CSV as discrete category codes; level counts are inferred as
    /// `max code + 1` per column.
    pub fn read_csv_discrete<R: BufRead>(r: R) -> Result<Self, DataError> {
        let (names, rows) = read_rows(r)?;
        let mut columns = vec![Vec::with_capacity(rows.len()); names.len()];
        for (lineno, row) in rows.iter().enumerate() {
            for (j, tok) in row.iter().enumerate() {
                let v: u32 = tok.parse().map_err(|_| DataError::Parse {
                    line: lineno + 2,
                    token: tok.clone(),
                })?;
                columns[j].push(v);
            }
        }
        let levels: Vec<u32> = columns
            .iter()
            .map(|c| c.iter().copied().max().unwrap_or(0) + 1)
            .collect();
        Dataset::discrete(names, columns, levels)
    }
}

fn read_rows<R: BufRead>(r: R) -> Result<(Vec<String>, Vec<Vec<String>>), DataError> {
    let mut lines = r.lines();
    let header = lines.next().ok_or(DataError::Empty)??;
    let names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    if names.iter().any(|n| n.is_empty()) {
        return Err(DataError::EmptyName);
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<String> = line.split(',').map(|s| s.trim().to_string()).collect();
        if row.len() != names.len() {
            return Err(DataError::RaggedRow {
                line: i + 2,
                got: row.len(),
                expected: names.len(),
            });
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(DataError::Empty);
    }
    Ok((names, rows))
}

fn compute_moments(columns: &[Vec<f64>]) -> Moments {
    let p = columns.len();
    let n = columns[0].len() as f64;
    let means: Vec<f64> = columns.iter().map(|c| c.iter().sum::<f64>() / n).collect();
    let mut cov = vec![0.0; p * p];
    for i in 0..p {
        for j in i..p {
            let mut s = 0.0;
            for r in 0..columns[0].len() {
                s += (columns[i][r] - means[i]) * (columns[j][r] - means[j]);
            }
            let c = s / n;
            cov[i * p + j] = c;
            cov[j * p + i] = c;
        }
    }
    let std: Vec<f64> = (0..p).map(|i| cov[i * p + i].max(0.0).sqrt()).collect();
    let mut corr = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..p {
            let denom = std[i] * std[j];
            corr[i * p + j] = if denom > 0.0 {
                (cov[i * p + j] / denom).clamp(-1.0, 1.0)
            } else {
                0.0
            };
        }
    }
    Moments {
        means,
        cov,
        corr,
        std,
    }
}
