//! Synthetic factor datasets: four uniform factors observed through either a
//! random linear map or a frozen random tanh network, both into 14 dimensions.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::nn::{init_lecun_scaled, Activation, Mlp};
use crate::numkit::{matmul, sample, Distribution, Matrix, RngState};
use crate::textio::{decode_hex_list, decode_mlp, encode_hex_list, encode_mlp};

pub const FACTOR_DIM: usize = 4;
pub const OBSERVED_DIM: usize = 14;
pub const DEFAULT_SAMPLES: usize = 10_000;
pub const DEFAULT_TRAIN_RATIO: f64 = 0.9;

/// Weight scale of the non-linear generator relative to `1/sqrt(fan_in)`.
pub const NONLINEAR_GAIN: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GeneratorKind {
    Linear,
    Nonlinear,
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GeneratorKind::Linear => "linear",
            GeneratorKind::Nonlinear => "nonlinear",
        })
    }
}

impl FromStr for GeneratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(GeneratorKind::Linear),
            "nonlinear" => Ok(GeneratorKind::Nonlinear),
            other => Err(Error::arg(format!("unknown dataset kind `{other}` (expected linear|nonlinear)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum GeneratorParams {
    /// `X = Y · W` with `W` of shape `4 × 14`.
    Linear { weights: Matrix },
    /// `X = net(Y)`.
    Nonlinear { net: Mlp },
}

impl GeneratorParams {
    pub fn kind(&self) -> GeneratorKind {
        match self {
            GeneratorParams::Linear { .. } => GeneratorKind::Linear,
            GeneratorParams::Nonlinear { .. } => GeneratorKind::Nonlinear,
        }
    }

    pub fn apply(&self, factors: &Matrix) -> Result<Matrix> {
        match self {
            GeneratorParams::Linear { weights } => matmul(factors, weights),
            GeneratorParams::Nonlinear { net } => net.predict(factors),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FactorDataset {
    pub factors: Matrix,
    pub observations: Matrix,
    pub params: GeneratorParams,
    pub seed: u64,
}

impl FactorDataset {
    pub fn kind(&self) -> GeneratorKind {
        self.params.kind()
    }

    pub fn len(&self) -> usize {
        self.factors.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Rows `idx` of both matrices, same generator.
    pub fn subset(&self, idx: &[usize]) -> FactorDataset {
        FactorDataset {
            factors: self.factors.select_rows(idx),
            observations: self.observations.select_rows(idx),
            params: self.params.clone(),
            seed: self.seed,
        }
    }

    /// Recomputes the observations from the stored factors and generator.
    pub fn regenerate(&self) -> Result<Matrix> {
        self.params.apply(&self.factors)
    }
}

fn uniform_factors(rng: &mut RngState, n: usize) -> Result<Matrix> {
    sample(rng, Distribution::Uniform01, n, FACTOR_DIM)
}

pub fn gen_linear(rng: &mut RngState, n: usize) -> Result<FactorDataset> {
    let seed = rng.seed();
    let factors = uniform_factors(rng, n)?;
    let weights = sample(rng, Distribution::StandardNormal, FACTOR_DIM, OBSERVED_DIM)?;
    let params = GeneratorParams::Linear { weights };
    let observations = params.apply(&factors)?;
    Ok(FactorDataset {
        factors,
        observations,
        params,
        seed,
    })
}

/// Three tanh layers `4 → 14 → 14 → 14`, weights `N(0, gain²/fan_in)`, zero bias.
pub fn gen_nonlinear(rng: &mut RngState, n: usize) -> Result<FactorDataset> {
    gen_nonlinear_with_gain(rng, n, NONLINEAR_GAIN)
}

pub fn gen_nonlinear_with_gain(rng: &mut RngState, n: usize, gain: f64) -> Result<FactorDataset> {
    let seed = rng.seed();
    let factors = uniform_factors(rng, n)?;
    let net = init_lecun_scaled(
        rng,
        &[FACTOR_DIM, OBSERVED_DIM, OBSERVED_DIM, OBSERVED_DIM],
        &[Activation::Tanh; 3],
        gain,
    )?;
    let params = GeneratorParams::Nonlinear { net };
    let observations = params.apply(&factors)?;
    Ok(FactorDataset {
        factors,
        observations,
        params,
        seed,
    })
}

pub fn generate(kind: GeneratorKind, seed: u64, n: usize) -> Result<FactorDataset> {
    if n == 0 {
        return Err(Error::arg("dataset size must be positive"));
    }
    let mut rng = RngState::new(seed);
    match kind {
        GeneratorKind::Linear => gen_linear(&mut rng, n),
        GeneratorKind::Nonlinear => gen_nonlinear(&mut rng, n),
    }
}

#[derive(Clone, Debug)]
pub struct SplitDataset {
    pub train: FactorDataset,
    pub test: FactorDataset,
    pub ratio: f64,
    pub train_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
}

/// Shuffled row-disjoint split; `round(ratio · n)` rows go to train.
pub fn split(ds: &FactorDataset, ratio: f64, rng: &mut RngState) -> Result<SplitDataset> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::arg(format!("split ratio must be in (0, 1), got {ratio}")));
    }
    let n = ds.len();
    let n_train = (ratio * n as f64).round() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::arg(format!(
            "split ratio {ratio} leaves an empty side for {n} rows"
        )));
    }
    let perm = rng.permutation(n);
    let train_idx = perm[..n_train].to_vec();
    let test_idx = perm[n_train..].to_vec();
    Ok(SplitDataset {
        train: ds.subset(&train_idx),
        test: ds.subset(&test_idx),
        ratio,
        train_idx,
        test_idx,
    })
}

const DATA_COLUMNS: usize = FACTOR_DIM + OBSERVED_DIM;

fn header() -> String {
    let mut cols: Vec<String> = (0..FACTOR_DIM).map(|i| format!("y{i}")).collect();
    cols.extend((0..OBSERVED_DIM).map(|i| format!("x{i}")));
    cols.join(",")
}

/// Writes the CSV form: one `#` metadata line, a header row, then
/// `y0..y3,x0..x13` per sample in shortest round-trip decimal.
pub fn save(ds: &FactorDataset, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    write!(w, "# kind={} seed={} n={}", ds.kind(), ds.seed, ds.len())?;
    match &ds.params {
        GeneratorParams::Linear { weights } => {
            write!(
                w,
                " weights={}x{} params={}",
                weights.rows(),
                weights.cols(),
                encode_hex_list(weights.data())
            )?;
        }
        GeneratorParams::Nonlinear { net } => {
            let (shapes, values) = encode_mlp(net);
            write!(w, " layers={shapes} params={values}")?;
        }
    }
    writeln!(w)?;
    writeln!(w, "{}", header())?;
    let mut line = String::new();
    for i in 0..ds.len() {
        line.clear();
        for (k, v) in ds.factors.row(i).iter().chain(ds.observations.row(i)).enumerate() {
            if k > 0 {
                line.push(',');
            }
            line.push_str(&v.to_string());
        }
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn load(path: &Path) -> Result<FactorDataset> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (ln, meta) = lines.next().ok_or_else(|| Error::parse(path, 1, "empty file"))?;
    let meta = meta
        .strip_prefix('#')
        .ok_or_else(|| Error::parse(path, ln, "expected `#` metadata line"))?;
    let field = |key: &str| -> Result<&str> {
        meta.split_whitespace()
            .find_map(|kv| kv.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
            .ok_or_else(|| Error::parse(path, ln, format!("metadata is missing `{key}`")))
    };
    let kind: GeneratorKind = field("kind")?.parse().map_err(|e: Error| Error::parse(path, ln, e.to_string()))?;
    let seed: u64 = field("seed")?
        .parse()
        .map_err(|_| Error::parse(path, ln, "seed is not an unsigned integer"))?;
    let n: usize = field("n")?
        .parse()
        .map_err(|_| Error::parse(path, ln, "n is not an unsigned integer"))?;
    let params = match kind {
        GeneratorKind::Linear => {
            let dims = field("weights")?;
            if dims != format!("{FACTOR_DIM}x{OBSERVED_DIM}") {
                return Err(Error::parse(path, ln, format!("unexpected weight shape `{dims}`")));
            }
            let values = decode_hex_list(field("params")?)
                .ok_or_else(|| Error::parse(path, ln, "malformed hex parameters"))?;
            let weights = Matrix::from_vec(FACTOR_DIM, OBSERVED_DIM, values)
                .map_err(|e| Error::parse(path, ln, e.to_string()))?;
            GeneratorParams::Linear { weights }
        }
        GeneratorKind::Nonlinear => {
            let net = decode_mlp(field("layers")?, field("params")?).map_err(|e| Error::parse(path, ln, e))?;
            if net.input_dim() != FACTOR_DIM || net.output_dim() != OBSERVED_DIM {
                return Err(Error::parse(path, ln, "generator network has wrong input/output width"));
            }
            GeneratorParams::Nonlinear { net }
        }
    };

    let (ln, head) = lines
        .next()
        .ok_or_else(|| Error::parse(path, 2, "missing header row"))?;
    if head.trim() != header() {
        return Err(Error::parse(path, ln, format!("expected header `{}`", header())));
    }

    let mut y = Vec::with_capacity(n * FACTOR_DIM);
    let mut x = Vec::with_capacity(n * OBSERVED_DIM);
    let mut rows = 0;
    for (ln, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != DATA_COLUMNS {
            return Err(Error::parse(
                path,
                ln,
                format!(
                    "expected {DATA_COLUMNS} data columns ({FACTOR_DIM} Y + {OBSERVED_DIM} X), found {}",
                    fields.len()
                ),
            ));
        }
        for (k, f) in fields.iter().enumerate() {
            let v: f64 = f
                .trim()
                .parse()
                .map_err(|_| Error::parse(path, ln, format!("column {k}: `{f}` is not a number")))?;
            if !v.is_finite() {
                return Err(Error::parse(path, ln, format!("column {k} is not finite")));
            }
            if k < FACTOR_DIM {
                y.push(v);
            } else {
                x.push(v);
            }
        }
        rows += 1;
    }
    if rows != n {
        return Err(Error::parse(path, 1, format!("metadata declares n={n} but file has {rows} rows")));
    }
    Ok(FactorDataset {
        factors: Matrix::from_vec(rows, FACTOR_DIM, y)?,
        observations: Matrix::from_vec(rows, OBSERVED_DIM, x)?,
        params,
        seed,
    })
}
