//! Dataset ingestion, excitation-signal generation, and synthetic
//! ground-truth systems used by the desk-scale benchmarks.

use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Deserialize;

use crate::error::DataError;
use crate::model::{ModelStructure, Source, Term, Wrapper};

/// How a dataset participates in a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Estimation,
    Validation,
    Test,
}

impl Role {
    pub fn parse(s: &str) -> Option<Role> {
        match s.to_ascii_lowercase().as_str() {
            "estimation" => Some(Role::Estimation),
            "validation" => Some(Role::Validation),
            "test" => Some(Role::Test),
            _ => None,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::Estimation => write!(f, "estimation"),
            Role::Validation => write!(f, "validation"),
            Role::Test => write!(f, "test"),
        }
    }
}

/// A sampled input/output record.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub u: Vec<f64>,
    pub y: Vec<f64>,
    pub sample_rate_hz: f64,
    /// Transient samples excluded from every metric sum.
    pub n_t: usize,
    pub role: Role,
}

impl Dataset {
    pub fn new(
        u: Vec<f64>,
        y: Vec<f64>,
        sample_rate_hz: f64,
        n_t: usize,
        role: Role,
    ) -> Result<Self, DataError> {
        if u.len() != y.len() {
            return Err(DataError::InvalidDataset(format!(
                "input length {} differs from output length {}",
                u.len(),
                y.len()
            )));
        }
        if u.is_empty() {
            return Err(DataError::InvalidDataset("empty dataset".into()));
        }
        if n_t >= u.len() {
            return Err(DataError::InvalidDataset(format!(
                "transient count {} must be smaller than the record length {}",
                n_t,
                u.len()
            )));
        }
        if let Some(i) = u.iter().chain(&y).position(|v| !v.is_finite()) {
            return Err(DataError::InvalidDataset(format!(
                "non-finite sample at flat index {i}"
            )));
        }
        Ok(Self {
            u,
            y,
            sample_rate_hz,
            n_t,
            role,
        })
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }
}

/// The datasets a run operates on. `fitness` may be a copy of `estimation`
/// when no separate validation record exists.
#[derive(Debug, Clone)]
pub struct DatasetBundle {
    pub estimation: Dataset,
    pub fitness: Dataset,
    pub test: Option<Dataset>,
}

impl DatasetBundle {
    pub fn new(estimation: Dataset, fitness: Option<Dataset>, test: Option<Dataset>) -> Self {
        let fitness = fitness.unwrap_or_else(|| estimation.clone());
        Self {
            estimation,
            fitness,
            test,
        }
    }
}

#[derive(Debug, Deserialize, Default)]
struct Sidecar {
    role: Option<String>,
    #[serde(rename = "N_t")]
    n_t: Option<usize>,
    sample_rate_hz: Option<f64>,
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".meta.toml");
    p.into()
}

/// Loads a `k,u,y` (or `u,y`) CSV. A sidecar `<file>.meta.toml` with keys
/// `role`, `N_t` and `sample_rate_hz` supplies metadata; absent entries
/// default to role=estimation, N_t=0, 1 Hz.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    let show = path.display().to_string();
    let file = std::fs::File::open(path)?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| DataError::Parse {
            path: show.clone(),
            line: 1,
            message: "empty file".into(),
        })?
        .map_err(DataError::Io)?;
    let cols: Vec<String> = header
        .split(',')
        .map(|c| c.trim().to_ascii_lowercase())
        .collect();
    let (has_index, u_col, y_col) = match cols.as_slice() {
        [k, u, y] if k == "k" && u == "u" && y == "y" => (true, 1usize, 2usize),
        [u, y] if u == "u" && y == "y" => (false, 0usize, 1usize),
        _ => {
            return Err(DataError::Parse {
                path: show,
                line: 1,
                message: format!("expected header `k,u,y` or `u,y`, found {header:?}"),
            })
        }
    };
    let want = if has_index { 3 } else { 2 };
    let mut u = Vec::new();
    let mut y = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line.map_err(DataError::Io)?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != want {
            return Err(DataError::Parse {
                path: show,
                line: line_no,
                message: format!("expected {want} fields, found {}", fields.len()),
            });
        }
        let parse = |field: &str| -> Result<f64, DataError> {
            let v: f64 = field.parse().map_err(|_| DataError::Parse {
                path: show.clone(),
                line: line_no,
                message: format!("bad number {field:?}"),
            })?;
            if !v.is_finite() {
                return Err(DataError::NonFiniteSample {
                    path: show.clone(),
                    line: line_no,
                });
            }
            Ok(v)
        };
        u.push(parse(fields[u_col])?);
        y.push(parse(fields[y_col])?);
    }

    let mut role = Role::Estimation;
    let mut n_t = 0usize;
    let mut rate = 1.0f64;
    let sc_path = sidecar_path(path);
    if sc_path.exists() {
        let text = std::fs::read_to_string(&sc_path)?;
        let sc: Sidecar = toml::from_str(&text).map_err(|e| DataError::Sidecar {
            path: sc_path.display().to_string(),
            message: e.to_string(),
        })?;
        if let Some(r) = sc.role {
            role = Role::parse(&r).ok_or_else(|| DataError::Sidecar {
                path: sc_path.display().to_string(),
                message: format!("unknown role {r:?}"),
            })?;
        }
        n_t = sc.n_t.unwrap_or(0);
        rate = sc.sample_rate_hz.unwrap_or(1.0);
    }
    Dataset::new(u, y, rate, n_t, role)
}

/// Writes a dataset as `k,u,y` CSV with shortest round-trip floats.
pub fn save_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<(), DataError> {
    let mut f = std::fs::File::create(path.as_ref())?;
    writeln!(f, "k,u,y")?;
    for k in 0..ds.len() {
        writeln!(f, "{},{},{}", k, ds.u[k], ds.y[k])?;
    }
    Ok(())
}

/// Writes the metadata sidecar next to `csv_path`.
pub fn save_sidecar(
    csv_path: impl AsRef<Path>,
    role: Role,
    n_t: usize,
    sample_rate_hz: f64,
) -> Result<(), DataError> {
    let p = sidecar_path(csv_path.as_ref());
    let mut f = std::fs::File::create(p)?;
    writeln!(f, "role = \"{role}\"")?;
    writeln!(f, "N_t = {n_t}")?;
    writeln!(f, "sample_rate_hz = {sample_rate_hz}")?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExcitationKind {
    /// I.i.d. uniform on [-A, A] shaped by the first-order low-pass
    /// x[k] = 0.9 x[k-1] + 0.1 w[k-1] (unit DC gain).
    FilteredUniform,
    /// Two-level pseudo-random binary sequence in {0, A} from a 16-bit
    /// maximal-length LFSR.
    Prbs,
}

impl ExcitationKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "filtered-uniform" | "filtered" => Some(Self::FilteredUniform),
            "prbs" => Some(Self::Prbs),
            _ => None,
        }
    }
}

impl fmt::Display for ExcitationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::FilteredUniform => write!(f, "filtered-uniform"),
            Self::Prbs => write!(f, "prbs"),
        }
    }
}

/// Applies the excitation low-pass x[k] = 0.9 x[k-1] + 0.1 w[k-1].
pub fn apply_excitation_filter(w: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; w.len()];
    for k in 1..w.len() {
        x[k] = 0.9 * x[k - 1] + 0.1 * w[k - 1];
    }
    x
}

/// Generates an excitation sequence. The first `zero_first` samples are
/// forced to zero to keep the record transient-free.
pub fn generate_excitation(
    n: usize,
    amplitude: f64,
    kind: ExcitationKind,
    seed: u64,
    zero_first: usize,
) -> Vec<f64> {
    let mut out = match kind {
        ExcitationKind::FilteredUniform => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w: Vec<f64> = (0..n)
                .map(|_| {
                    if amplitude == 0.0 {
                        0.0
                    } else {
                        rng.random_range(-amplitude..=amplitude)
                    }
                })
                .collect();
            apply_excitation_filter(&w)
        }
        ExcitationKind::Prbs => {
            let mut state: u16 = (seed as u16) | ((seed >> 16) as u16);
            if state == 0 {
                state = 0xACE1;
            }
            (0..n)
                .map(|_| {
                    // taps 16, 15, 13, 4 (maximal length)
                    let bit = ((state >> 15) ^ (state >> 14) ^ (state >> 12) ^ (state >> 3)) & 1;
                    state = (state << 1) | bit;
                    amplitude * f64::from(state & 1)
                })
                .collect()
        }
    };
    for v in out.iter_mut().take(zero_first) {
        *v = 0.0;
    }
    out
}

/// A known ground-truth system used to manufacture benchmark records.
#[derive(Debug, Clone)]
pub struct SyntheticSystem {
    pub name: String,
    pub structure: ModelStructure,
    pub true_coefficients: Vec<f64>,
    pub noise_std: f64,
    /// Default excitation recipe for `generate` and the acceptance runs.
    pub excitation: ExcitationKind,
    pub amplitude: f64,
}

pub const BUILTIN_SYSTEM_NAMES: [&str; 4] = ["s1", "s2", "s3", "s4"];

/// Returns one of the shipped benchmark systems.
pub fn builtin_system(name: &str) -> Result<SyntheticSystem, DataError> {
    use Source::{Input, Noise, Output};
    let sys = match name.to_ascii_lowercase().as_str() {
        // y[k] = 0.7 y[k-1] - 0.1 y[k-2] + 0.5 u[k-1] + 0.2 u[k-1] y[k-1] + e[k]
        "s1" => SyntheticSystem {
            name: "s1".into(),
            structure: ModelStructure::new(vec![
                Term::monomial(&[(Output, 1, 1)]),
                Term::monomial(&[(Output, 2, 1)]),
                Term::monomial(&[(Input, 1, 1)]),
                Term::monomial(&[(Input, 1, 1), (Output, 1, 1)]),
            ]),
            true_coefficients: vec![0.7, -0.1, 0.5, 0.2],
            noise_std: 0.01,
            excitation: ExcitationKind::FilteredUniform,
            amplitude: 1.0,
        },
        // y[k] = 0.8 y[k-1] + u[k-1] + 0.5 e[k-1] + e[k]
        "s2" => SyntheticSystem {
            name: "s2".into(),
            structure: ModelStructure::new(vec![
                Term::monomial(&[(Output, 1, 1)]),
                Term::monomial(&[(Input, 1, 1)]),
                Term::monomial(&[(Noise, 1, 1)]),
            ]),
            true_coefficients: vec![0.8, 1.0, 0.5],
            noise_std: 0.05,
            excitation: ExcitationKind::FilteredUniform,
            amplitude: 1.0,
        },
        // y[k] = 1.7 y[k-1] - 0.8 y[k-2] + 0.05 u[k-1] - 0.1 sin(y[k-1]) + e[k]
        "s3" => SyntheticSystem {
            name: "s3".into(),
            structure: ModelStructure::new(vec![
                Term::monomial(&[(Output, 1, 1)]),
                Term::monomial(&[(Output, 2, 1)]),
                Term::monomial(&[(Input, 1, 1)]),
                Term::wrapped(Wrapper::Sin, &[(Output, 1, 1)]),
            ]),
            true_coefficients: vec![1.7, -0.8, 0.05, -0.1],
            noise_std: 0.01,
            excitation: ExcitationKind::FilteredUniform,
            amplitude: 10.0,
        },
        // y[k] = 0.9 y[k-1] + 0.3 u[k-12] + e[k]
        "s4" => SyntheticSystem {
            name: "s4".into(),
            structure: ModelStructure::new(vec![
                Term::monomial(&[(Output, 1, 1)]),
                Term::monomial(&[(Input, 12, 1)]),
            ]),
            true_coefficients: vec![0.9, 0.3],
            noise_std: 0.01,
            excitation: ExcitationKind::FilteredUniform,
            amplitude: 1.0,
        },
        other => return Err(DataError::UnknownSystem(other.to_string())),
    };
    Ok(sys)
}

/// Runs the exact ground-truth recursion over an excitation, drawing the
/// noise sequence from a seeded Gaussian. Out-of-range (negative-time)
/// samples read as zero, so the record starts from rest.
pub fn simulate_truth(
    sys: &SyntheticSystem,
    u: &[f64],
    seed: u64,
) -> Result<Dataset, DataError> {
    let n = u.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise: Vec<f64> = if sys.noise_std > 0.0 {
        let dist = Normal::new(0.0, sys.noise_std).expect("valid std");
        (0..n).map(|_| dist.sample(&mut rng)).collect()
    } else {
        vec![0.0; n]
    };
    let mut y = vec![0.0; n];
    let at = |v: &[f64], k: usize, lag: usize| if lag > k { 0.0 } else { v[k - lag] };
    for k in 0..n {
        let mut acc = 0.0;
        for (c, t) in sys.true_coefficients.iter().zip(&sys.structure.terms) {
            let mut prod = 1.0;
            for f in &t.factors {
                let v = match f.source {
                    Source::Input => at(u, k, f.lag),
                    Source::Output => at(&y, k, f.lag),
                    Source::Noise => at(&noise, k, f.lag),
                };
                prod *= v.powi(f.exponent as i32);
            }
            acc += c * match t.wrapper {
                Wrapper::None => prod,
                Wrapper::Sin => prod.sin(),
                Wrapper::Cos => prod.cos(),
                Wrapper::Abs => prod.abs(),
            };
        }
        acc += noise[k];
        if !acc.is_finite() || acc.abs() > 1e9 {
            return Err(DataError::Divergence { at: k });
        }
        y[k] = acc;
    }
    Dataset::new(u.to_vec(), y, 1.0, 0, Role::Estimation)
}

/// Excitation + truth simulation with the system's default recipe.
pub fn generate_benchmark(
    sys: &SyntheticSystem,
    n: usize,
    seed: u64,
    zero_first: usize,
    noise_std_override: Option<f64>,
) -> Result<Dataset, DataError> {
    let u = generate_excitation(n, sys.amplitude, sys.excitation, seed, zero_first);
    let sys = SyntheticSystem {
        noise_std: noise_std_override.unwrap_or(sys.noise_std),
        ..sys.clone()
    };
    // distinct stream for the noise so excitation and noise stay independent
    let mut ds = simulate_truth(&sys, &u, seed ^ 0x9E3779B97F4A7C15)?;
    ds.n_t = zero_first;
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filter_reaches_unit_dc_gain() {
        let x = apply_excitation_filter(&vec![1.0; 400]);
        assert!((x[399] - 1.0).abs() < 1e-4);
        assert_eq!(x[0], 0.0);
    }

    #[test]
    fn excitation_is_seed_deterministic_and_amplitude_scaled() {
        let a = generate_excitation(256, 2.0, ExcitationKind::FilteredUniform, 9, 10);
        let b = generate_excitation(256, 2.0, ExcitationKind::FilteredUniform, 9, 10);
        assert_eq!(a, b);
        assert!(a[..10].iter().all(|&v| v == 0.0));
        let z = generate_excitation(64, 0.0, ExcitationKind::FilteredUniform, 9, 0);
        assert!(z.iter().all(|&v| v == 0.0));
        let p = generate_excitation(512, 2.0, ExcitationKind::Prbs, 3, 0);
        assert!(p.iter().all(|&v| v == 0.0 || v == 2.0));
        assert!(p.contains(&0.0) && p.contains(&2.0));
    }

    #[test]
    fn filtered_uniform_variance_matches_closed_form() {
        // var = (A^2/3) * 0.01 / (1 - 0.81)
        let a = 1.5;
        let x = generate_excitation(100_000, a, ExcitationKind::FilteredUniform, 11, 0);
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / x.len() as f64;
        let expect = (a * a / 3.0) * 0.01 / (1.0 - 0.81);
        assert!(
            (var - expect).abs() < 0.05 * expect,
            "var {var} vs {expect}"
        );
    }

    #[test]
    fn truth_simulation_follows_the_recurrence() {
        let sys = SyntheticSystem {
            name: "step".into(),
            structure: ModelStructure::new(vec![
                Term::monomial(&[(Source::Output, 1, 1)]),
                Term::monomial(&[(Source::Input, 1, 1)]),
            ]),
            true_coefficients: vec![0.5, 1.0],
            noise_std: 0.0,
            excitation: ExcitationKind::FilteredUniform,
            amplitude: 1.0,
        };
        let ds = simulate_truth(&sys, &vec![1.0; 6], 0).unwrap();
        assert_eq!(&ds.y[..5], &[0.0, 1.0, 1.5, 1.75, 1.875]);
        // zero input, zero noise: all-zero output
        let z = simulate_truth(&sys, &vec![0.0; 6], 0).unwrap();
        assert!(z.y.iter().all(|&v| v == 0.0));
        // seeded determinism with noise
        let sys2 = SyntheticSystem {
            noise_std: 0.1,
            ..sys
        };
        let a = simulate_truth(&sys2, &vec![1.0; 64], 42).unwrap();
        let b = simulate_truth(&sys2, &vec![1.0; 64], 42).unwrap();
        assert_eq!(a.y, b.y);
    }

    #[test]
    fn builtin_systems_simulate_stably_for_5000_samples() {
        for name in BUILTIN_SYSTEM_NAMES {
            let sys = builtin_system(name).unwrap();
            let ds = generate_benchmark(&sys, 5000, 1234, 50, None).unwrap();
            assert_eq!(ds.len(), 5000);
            assert!(ds.y.iter().all(|v| v.is_finite()));
        }
        assert!(matches!(
            builtin_system("s9"),
            Err(DataError::UnknownSystem(_))
        ));
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let dir = std::env::temp_dir().join(format!("tagid-data-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for i in 0..50 {
            let n = rng.random_range(1..200);
            let u: Vec<f64> = (0..n).map(|_| rng.random_range(-1e3..1e3)).collect();
            let y: Vec<f64> = (0..n)
                .map(|_| rng.random_range(-1.0..1.0) * 10f64.powi(rng.random_range(-9..9)))
                .collect();
            let ds = Dataset::new(u, y, 1.0, 0, Role::Estimation).unwrap();
            let path = dir.join(format!("rt{i}.csv"));
            save_csv(&ds, &path).unwrap();
            let back = load_csv(&path).unwrap();
            assert_eq!(back.u, ds.u);
            assert_eq!(back.y, ds.y);
        }
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        let dir = std::env::temp_dir().join(format!("tagid-data-err-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let bad = dir.join("bad.csv");
        std::fs::write(&bad, "k,u,y\n0,0.0,1.0\n1,NaN,2.0\n").unwrap();
        match load_csv(&bad) {
            Err(DataError::NonFiniteSample { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected NonFiniteSample, got {other:?}"),
        }
        std::fs::write(&bad, "w,z\n1,2\n").unwrap();
        assert!(matches!(load_csv(&bad), Err(DataError::Parse { line: 1, .. })));
        std::fs::write(&bad, "k,u,y\n0,oops,1\n").unwrap();
        assert!(matches!(load_csv(&bad), Err(DataError::Parse { line: 2, .. })));
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn sidecar_metadata_is_applied() {
        let dir = std::env::temp_dir().join(format!("tagid-data-sc-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("d.csv");
        let ds = Dataset::new(vec![0.0; 80], vec![1.0; 80], 50.0, 50, Role::Validation).unwrap();
        save_csv(&ds, &path).unwrap();
        save_sidecar(&path, Role::Validation, 50, 50.0).unwrap();
        let back = load_csv(&path).unwrap();
        assert_eq!(back.role, Role::Validation);
        assert_eq!(back.n_t, 50);
        assert_eq!(back.sample_rate_hz, 50.0);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
