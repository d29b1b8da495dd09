//! Draw archives, posterior summaries and run manifests.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::DrawFormat;
use crate::error::{Error, Result};
use crate::gibbs_engine::DrawStore;
use crate::simulation_harness::quantile_sorted;

pub const BINARY_MAGIC: &[u8; 4] = b"SHRK";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub q2_5: f64,
    pub q50: f64,
    pub q97_5: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pip: Option<f64>,
    /// In the median-probability model (PIP above one half).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub median_model: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosteriorSummary {
    pub draws: usize,
    pub chains: usize,
    pub coefficients: Vec<ParamSummary>,
    pub sigma2: ParamSummary,
}

fn summarize_column(name: &str, values: &mut [f64]) -> ParamSummary {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 { values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    values.sort_by(f64::total_cmp);
    ParamSummary {
        name: name.to_string(),
        mean,
        sd: var.sqrt(),
        q2_5: quantile_sorted(values, 0.025),
        q50: quantile_sorted(values, 0.5),
        q97_5: quantile_sorted(values, 0.975),
        pip: None,
        median_model: None,
    }
}

/// Per-coefficient summaries; `names` defaults to beta_1..beta_p.
pub fn summarize(store: &DrawStore, names: Option<&[String]>) -> Result<PosteriorSummary> {
    if store.is_empty() {
        return Err(Error::Config("no retained draws to summarize".into()));
    }
    let p = store.p();
    let pip = store.inclusion_probs();
    let coefficients = (0..p)
        .map(|j| {
            let name = names.and_then(|n| n.get(j).cloned()).unwrap_or_else(|| format!("beta_{}", j + 1));
            let mut col: Vec<f64> = store.beta.column(j).iter().copied().collect();
            let mut s = summarize_column(&name, &mut col);
            if let Some(pip) = &pip {
                s.pip = Some(pip[j]);
                s.median_model = Some(pip[j] > 0.5);
            }
            s
        })
        .collect();
    let mut s2 = store.sigma2.clone();
    let mut chains: Vec<usize> = store.chain.clone();
    chains.dedup();
    Ok(PosteriorSummary { draws: store.len(), chains: chains.len(), coefficients, sigma2: summarize_column("sigma2", &mut s2) })
}

/// Sweep index of each retained row, restarting per chain.
fn sweep_indices(store: &DrawStore, burn_in: usize, thin: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(store.len());
    let mut k = 0;
    for (i, c) in store.chain.iter().enumerate() {
        if i > 0 && store.chain[i - 1] != *c {
            k = 0;
        }
        out.push(burn_in + k * thin);
        k += 1;
    }
    out
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    let f = fs::File::create(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    Ok(BufWriter::new(f))
}

/// Columns chain, iter, beta_1..beta_p, sigma2 and gamma_1..gamma_p when present.
pub fn write_draws_csv(store: &DrawStore, burn_in: usize, thin: usize, path: &Path) -> Result<()> {
    let p = store.p();
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut header = vec!["chain".to_string(), "iter".to_string()];
    header.extend((1..=p).map(|j| format!("beta_{j}")));
    header.push("sigma2".into());
    if store.gamma.is_some() {
        header.extend((1..=p).map(|j| format!("gamma_{j}")));
    }
    w.write_record(&header)?;
    let iters = sweep_indices(store, burn_in, thin);
    let mut rec: Vec<String> = Vec::with_capacity(header.len());
    for i in 0..store.len() {
        rec.clear();
        rec.push(store.chain[i].to_string());
        rec.push(iters[i].to_string());
        rec.extend(store.beta.row(i).iter().map(|v| v.to_string()));
        rec.push(store.sigma2[i].to_string());
        if let Some(g) = &store.gamma {
            rec.extend(g.row(i).iter().map(|v| format!("{v}")));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Raw dump: "SHRK", u32 rows, u32 cols, 4 reserved bytes, then row-major
/// little-endian f64 in the same column order as the CSV archive.
pub fn write_draws_binary(store: &DrawStore, burn_in: usize, thin: usize, path: &Path) -> Result<()> {
    let p = store.p();
    let cols = 3 + p + store.gamma.as_ref().map_or(0, |_| p);
    let rows = u32::try_from(store.len()).map_err(|_| Error::Config("too many draws for the binary format".into()))?;
    let mut w = create(path)?;
    w.write_all(BINARY_MAGIC)?;
    w.write_all(&rows.to_le_bytes())?;
    w.write_all(&(cols as u32).to_le_bytes())?;
    w.write_all(&[0u8; 4])?;
    let iters = sweep_indices(store, burn_in, thin);
    for i in 0..store.len() {
        w.write_all(&(store.chain[i] as f64).to_le_bytes())?;
        w.write_all(&(iters[i] as f64).to_le_bytes())?;
        for v in store.beta.row(i).iter() {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&store.sigma2[i].to_le_bytes())?;
        if let Some(g) = &store.gamma {
            for v in g.row(i).iter() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Read a dump written by [`write_draws_binary`] as (rows, cols, values).
pub fn read_draws_binary(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let mut buf = Vec::new();
    fs::File::open(path)?.read_to_end(&mut buf)?;
    if buf.len() < 16 || &buf[0..4] != BINARY_MAGIC {
        return Err(Error::Data(format!("{}: not a SHRK draw file", path.display())));
    }
    let rows = u32::from_le_bytes(buf[4..8].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(buf[8..12].try_into().unwrap()) as usize;
    let body = &buf[16..];
    if body.len() != rows * cols * 8 {
        return Err(Error::Data(format!("{}: truncated SHRK body", path.display())));
    }
    let values = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok((rows, cols, values))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// The manifest is itself a loadable config: provenance sits in comments
/// above the canonical key/value lines.
pub fn write_manifest(dir: &Path, command: &str, config_text: &str, extra: &[(&str, String)]) -> Result<PathBuf> {
    let path = dir.join("run_manifest.cfg");
    let mut w = create(&path)?;
    writeln!(w, "# shrinkage run manifest")?;
    writeln!(w, "# command = {command}")?;
    writeln!(w, "# version = {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(w, "# config_sha256 = {}", sha256_hex(config_text.as_bytes()))?;
    for (k, v) in extra {
        writeln!(w, "# {k} = {v}")?;
    }
    w.write_all(config_text.as_bytes())?;
    w.flush()?;
    Ok(path)
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Draw archive(s) plus summary.json into `dir`; returns the files written.
pub fn write_outputs(
    store: &DrawStore,
    names: Option<&[String]>,
    burn_in: usize,
    thin: usize,
    formats: &[DrawFormat],
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    if store.is_empty() {
        return Err(Error::Config("no retained draws to write".into()));
    }
    fs::create_dir_all(dir).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", dir.display()))))?;
    let mut written = Vec::new();
    for f in formats {
        let path = match f {
            DrawFormat::Csv => {
                let p = dir.join("draws.csv");
                write_draws_csv(store, burn_in, thin, &p)?;
                p
            }
            DrawFormat::Binary => {
                let p = dir.join("draws.bin");
                write_draws_binary(store, burn_in, thin, &p)?;
                p
            }
        };
        written.push(path);
    }
    let summary = dir.join("summary.json");
    write_json(&summarize(store, names)?, &summary)?;
    written.push(summary);
    Ok(written)
}
