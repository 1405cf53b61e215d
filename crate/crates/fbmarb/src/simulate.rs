//! Path dumps for debugging: `t,value` CSV files.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use fbmarb_core::cholesky::cholesky_path;
use fbmarb_core::driver::sample_driver;
use fbmarb_core::fbm::{history_length, mvn_path, FbmPath, DEFAULT_TAIL_TOLERANCE};
use fbmarb_core::{HurstParam, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Method {
    /// Moving-average synthesis from a two-sided Brownian driver.
    Mvn,
    /// Exact law by Cholesky factorization of the node covariance.
    Cholesky,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateOptions {
    pub hurst: HurstParam,
    pub grid: TimeGrid,
    /// History length; the truncation rule picks one when `None`.
    pub history: Option<f64>,
    pub seed: u64,
    pub count: usize,
    pub method: Method,
}

/// Path `k` uses stream id `k`.
pub fn simulate_paths(opts: &SimulateOptions) -> fbmarb_core::Result<Vec<FbmPath>> {
    let l = match opts.history {
        Some(l) => l,
        None => history_length(opts.hurst, opts.grid.horizon(), DEFAULT_TAIL_TOLERANCE)?,
    };
    (0..opts.count as u64)
        .map(|k| match opts.method {
            Method::Mvn => Ok(mvn_path(&sample_driver(&opts.grid, l, opts.seed, k)?, opts.hurst)),
            Method::Cholesky => cholesky_path(opts.hurst, &opts.grid, opts.seed, k),
        })
        .collect()
}

pub fn path_csv(path: &FbmPath) -> String {
    let mut out = String::from("t,value\n");
    for (i, v) in path.values().iter().enumerate() {
        out.push_str(&format!("{},{}\n", path.grid().node(i), v));
    }
    out
}

/// Writes `path_<k>.csv` for every path into `dir`.
pub fn write_paths(paths: &[FbmPath], dir: &Path) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for (k, p) in paths.iter().enumerate() {
        let file = dir.join(format!("path_{k}.csv"));
        fs::File::create(&file)?.write_all(path_csv(p).as_bytes())?;
        written.push(file);
    }
    Ok(written)
}
