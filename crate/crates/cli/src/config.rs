//! Flags, the optional JSON config file, and their merge into a [`RunConfig`].

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use num_complex::Complex64;
use serde::Deserialize;
use tandyn_core::family::normalize_lambda;
use tandyn_core::{Alpha, GridSpec, IterationBudget, MapParams, Palette};

use crate::error::{CliError, Result};

/// Options shared by every subcommand. The config file uses the same keys
/// with underscores; flags win over the file.
#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// Base parameter as "RE,IM".
    #[arg(long, value_name = "RE,IM", allow_hyphen_values = true, conflicts_with_all = ["alpha", "alpha_golden"])]
    pub lambda: Option<String>,

    /// Rational rotation number "P/Q"; lambda solves 2 + lambda^2 = e^{2 pi i P/Q}.
    #[arg(long, value_name = "P/Q", conflicts_with = "alpha_golden")]
    pub alpha: Option<String>,

    /// Golden-mean rotation number.
    #[arg(long)]
    pub alpha_golden: bool,

    /// Shift count: the map is lambda + m pi + z + tan z.
    #[arg(long, allow_hyphen_values = true)]
    pub m: Option<i64>,

    /// Window and resolution as "RE0,RE1,IM0,IM1,NX,NY".
    #[arg(long, value_name = "RE0,RE1,IM0,IM1,NX,NY", allow_hyphen_values = true)]
    pub grid: Option<String>,

    #[arg(long)]
    pub max_iter: Option<usize>,

    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Worker threads for grid classification.
    #[arg(long)]
    pub workers: Option<usize>,

    /// classic or mono.
    #[arg(long)]
    pub palette: Option<String>,

    /// JSON file with any of the keys above.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    lambda: Option<String>,
    alpha: Option<String>,
    #[serde(default)]
    alpha_golden: bool,
    m: Option<i64>,
    grid: Option<String>,
    max_iter: Option<usize>,
    out: Option<PathBuf>,
    workers: Option<usize>,
    palette: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MapInput {
    Lambda(Complex64),
    Alpha(Alpha),
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub map: Option<MapInput>,
    pub m: Option<i64>,
    pub grid: Option<GridSpec>,
    pub max_iter: Option<usize>,
    pub out: PathBuf,
    pub workers: Option<usize>,
    pub palette: Palette,
}

pub fn parse_complex(s: &str) -> Result<Complex64> {
    let bad = || CliError::Usage(format!("expected \"RE,IM\", got {s:?}"));
    let (re, im) = s.split_once(',').ok_or_else(bad)?;
    let re: f64 = re.trim().parse().map_err(|_| bad())?;
    let im: f64 = im.trim().parse().map_err(|_| bad())?;
    if !(re.is_finite() && im.is_finite()) {
        return Err(bad());
    }
    Ok(Complex64::new(re, im))
}

fn map_input(lambda: Option<&str>, alpha: Option<&str>, golden: bool) -> Result<Option<MapInput>> {
    match (lambda, alpha, golden) {
        (None, None, false) => Ok(None),
        (Some(l), None, false) => Ok(Some(MapInput::Lambda(parse_complex(l)?))),
        (None, Some(a), false) => Ok(Some(MapInput::Alpha(a.parse()?))),
        (None, None, true) => Ok(Some(MapInput::Alpha(Alpha::golden()))),
        _ => Err(CliError::Usage(
            "lambda, alpha and alpha_golden are mutually exclusive".into(),
        )),
    }
}

fn read_file(path: &Path) -> Result<FileConfig> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

impl RunConfig {
    pub fn from_args(args: &CommonArgs) -> Result<Self> {
        let file = match &args.config {
            Some(path) => read_file(path)?,
            None => FileConfig::default(),
        };
        let flag_map = map_input(args.lambda.as_deref(), args.alpha.as_deref(), args.alpha_golden)?;
        let map = match flag_map {
            Some(m) => Some(m),
            None => map_input(file.lambda.as_deref(), file.alpha.as_deref(), file.alpha_golden)?,
        };
        let grid = match args.grid.as_ref().or(file.grid.as_ref()) {
            Some(g) => Some(g.parse::<GridSpec>()?),
            None => None,
        };
        let palette = match args.palette.as_ref().or(file.palette.as_ref()) {
            Some(p) => p.parse()?,
            None => Palette::default(),
        };
        let workers = args.workers.or(file.workers);
        if workers == Some(0) {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        Ok(Self {
            map,
            m: args.m.or(file.m),
            grid,
            max_iter: args.max_iter.or(file.max_iter),
            out: args.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from(".")),
            workers,
            palette,
        })
    }

    /// Map parameters, normalized to `Im lambda > 0`.
    pub fn params(&self) -> Result<MapParams> {
        let m = self.m.unwrap_or(0);
        match self.map {
            Some(MapInput::Lambda(l)) => {
                let (l, m) = normalize_lambda(l, m)?;
                Ok(MapParams::new(l, m, None)?)
            }
            Some(MapInput::Alpha(a)) => Ok(MapParams::from_alpha(a, m)?),
            None => Err(CliError::Usage(
                "one of --lambda, --alpha, --alpha-golden is required".into(),
            )),
        }
    }

    pub fn budget(&self, p: &MapParams) -> Result<IterationBudget> {
        let mut b = IterationBudget::for_regime(&p.regime());
        if let Some(n) = self.max_iter {
            b.max_iter = n;
        }
        b.validate()?;
        Ok(b)
    }

    pub fn create_out(&self) -> Result<&Path> {
        fs::create_dir_all(&self.out).map_err(CliError::io(&self.out))?;
        Ok(&self.out)
    }
}
