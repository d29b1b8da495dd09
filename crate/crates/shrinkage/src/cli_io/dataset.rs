use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Regression data after ingestion. When `standardized`, columns of `x` have
/// zero mean and unit sample standard deviation; when `demeaned`, `y` has
/// zero mean. The original location/scale is kept to map coefficients back.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub y: DVector<f64>,
    pub x: DMatrix<f64>,
    pub column_names: Vec<String>,
    pub col_means: DVector<f64>,
    pub col_sds: DVector<f64>,
    pub y_mean: f64,
    pub standardized: bool,
    pub demeaned: bool,
    /// Names of zero-variance columns dropped at ingestion.
    pub dropped: Vec<String>,
}

impl Dataset {
    /// Wrap already-prepared arrays without touching them.
    pub fn from_arrays(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        let p = x.ncols();
        let names = (1..=p).map(|j| format!("x{j}")).collect();
        let ds = Self {
            col_means: DVector::zeros(p),
            col_sds: DVector::from_element(p, 1.0),
            y,
            x,
            column_names: names,
            y_mean: 0.0,
            standardized: false,
            demeaned: false,
            dropped: Vec::new(),
        };
        ds.check()?;
        Ok(ds)
    }

    /// Drop zero-variance columns, then optionally standardise X and demean y.
    pub fn prepare(
        x: DMatrix<f64>,
        y: DVector<f64>,
        names: Vec<String>,
        standardize: bool,
        demean: bool,
    ) -> Result<Self> {
        let n = x.nrows();
        if n < 2 {
            return Err(Error::Data(format!("need at least 2 observations, got {n}")));
        }
        if y.len() != n || names.len() != x.ncols() {
            return Err(Error::Data("response/design dimensions disagree".into()));
        }
        let mut keep = Vec::new();
        let mut dropped = Vec::new();
        let mut means = Vec::new();
        let mut sds = Vec::new();
        for j in 0..x.ncols() {
            let col = x.column(j);
            let m = col.mean();
            let sd = (col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
            if sd > 0.0 {
                keep.push(j);
                means.push(m);
                sds.push(sd);
            } else {
                log::warn!("dropping zero-variance column '{}'", names[j]);
                dropped.push(names[j].clone());
            }
        }
        let mut xs = x.select_columns(&keep);
        let col_means = DVector::from_vec(means);
        let col_sds = DVector::from_vec(sds);
        if standardize {
            for (k, mut col) in xs.column_iter_mut().enumerate() {
                col.add_scalar_mut(-col_means[k]);
                col /= col_sds[k];
            }
        }
        let y_mean = y.mean();
        let y = if demean { y.add_scalar(-y_mean) } else { y };
        let ds = Self {
            y,
            x: xs,
            column_names: keep.iter().map(|&j| names[j].clone()).collect(),
            col_means,
            col_sds,
            y_mean,
            standardized: standardize,
            demeaned: demean,
            dropped,
        };
        ds.check()?;
        Ok(ds)
    }

    fn check(&self) -> Result<()> {
        if self.x.nrows() != self.y.len() {
            return Err(Error::Data("response/design dimensions disagree".into()));
        }
        if self.y.len() < 2 {
            return Err(Error::Data("need at least 2 observations".into()));
        }
        if self.x.iter().chain(self.y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite value in data".into()));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Sample variance of y (n-1 denominator).
    pub fn var_y(&self) -> f64 {
        let m = self.y.mean();
        self.y.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (self.n() as f64 - 1.0)
    }

    /// Map standardised-scale coefficients to the original scale:
    /// β_orig = β/sd, intercept = ȳ - Σ β_orig x̄.
    pub fn destandardize(&self, beta: &DVector<f64>) -> (DVector<f64>, f64) {
        if !self.standardized {
            let intercept = if self.demeaned { self.y_mean } else { 0.0 };
            return (beta.clone(), intercept);
        }
        let b = beta.component_div(&self.col_sds);
        let y_loc = if self.demeaned { self.y_mean } else { 0.0 };
        let intercept = y_loc - b.dot(&self.col_means);
        (b, intercept)
    }
}

/// Read a headed numeric CSV; `response` names the y column.
pub fn load_csv(path: &Path, response: &str, standardize: bool, demean: bool) -> Result<Dataset> {
    if !path.exists() {
        return Err(Error::Data(format!("file not found: {}", path.display())));
    }
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_path(path)?;
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let ycol = headers
        .iter()
        .position(|h| h == response)
        .ok_or_else(|| Error::Data(format!("response column '{response}' not found in {}", path.display())))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let mut row = Vec::with_capacity(rec.len());
        for (j, cell) in rec.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                Error::Data(format!("non-numeric cell '{cell}' at row {}, column '{}'", i + 1, headers[j]))
            })?;
            if !v.is_finite() {
                return Err(Error::Data(format!("non-finite cell at row {}, column '{}'", i + 1, headers[j])));
            }
            row.push(v);
        }
        rows.push(row);
    }
    let n = rows.len();
    let xcols: Vec<usize> = (0..headers.len()).filter(|&j| j != ycol).collect();
    let y = DVector::from_fn(n, |i, _| rows[i][ycol]);
    let x = DMatrix::from_fn(n, xcols.len(), |i, k| rows[i][xcols[k]]);
    let names = xcols.iter().map(|&j| headers[j].clone()).collect();
    Dataset::prepare(x, y, names, standardize, demean)
}
