use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Result, VbError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Design {
    /// `X = I`; needs `n = p`.
    Identity,
    /// Entries iid `N(0, tau^2)`.
    IidGaussian { tau: f64 },
    /// Rows iid `N_p(0, Sigma)` with unit diagonal and off-diagonal `rho`.
    Equicorrelated { rho: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalAmp {
    Const(f64),
    Uniform { lo: f64, hi: f64 },
    /// One value per support coordinate, in ascending index order.
    Values(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    Begin,
    /// Block starting at 0-based index `floor((p - s) / 2)`.
    Middle,
    End,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseFamily {
    Gaussian { sd: f64 },
    Laplace { scale: f64 },
    Uniform { half_width: f64 },
    StudentT3,
}

fn default_lambda() -> f64 {
    1.0
}

/// Generative description of one benchmark experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub n: usize,
    pub p: usize,
    pub s: usize,
    pub design: Design,
    pub signal_amp: SignalAmp,
    pub placement: Placement,
    pub noise: NoiseFamily,
    pub known_variance: bool,
    pub replicates: usize,
    pub seed: u64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    /// Defaults to 1.
    #[serde(default)]
    pub a0: Option<f64>,
    /// Defaults to `p`.
    #[serde(default)]
    pub b0: Option<f64>,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(VbError::InvalidParameter(m));
        if self.n == 0 || self.p == 0 || self.replicates == 0 {
            return bad("n, p and replicates must be positive".into());
        }
        if self.s > self.p {
            return bad(format!("s = {} exceeds p = {}", self.s, self.p));
        }
        match self.design {
            Design::Identity if self.n != self.p => {
                return bad(format!("identity design needs n = p, got n = {}, p = {}", self.n, self.p))
            }
            Design::IidGaussian { tau } if !(tau.is_finite() && tau >= 0.0) => return bad(format!("tau = {tau}")),
            Design::Equicorrelated { rho } if !(0.0..1.0).contains(&rho) => {
                return bad(format!("rho = {rho} must lie in [0, 1)"))
            }
            _ => {}
        }
        match &self.signal_amp {
            SignalAmp::Uniform { lo, hi } if !(lo.is_finite() && hi.is_finite() && lo <= hi) => {
                return bad(format!("uniform amplitude range [{lo}, {hi}]"));
            }
            SignalAmp::Values(v) if v.len() != self.s => {
                return bad(format!("{} amplitude values for s = {}", v.len(), self.s));
            }
            _ => {}
        }
        let scale = match self.noise {
            NoiseFamily::Gaussian { sd } => sd,
            NoiseFamily::Laplace { scale } => scale,
            NoiseFamily::Uniform { half_width } => half_width,
            NoiseFamily::StudentT3 => 1.0,
        };
        if !(scale.is_finite() && scale >= 0.0) {
            return bad(format!("noise scale {scale} must be non-negative"));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return bad(format!("lambda = {} must be positive", self.lambda));
        }
        Ok(())
    }

    pub fn a0(&self) -> f64 {
        self.a0.unwrap_or(1.0)
    }

    pub fn b0(&self) -> f64 {
        self.b0.unwrap_or(self.p as f64)
    }
}

/// Generator for replicate `k`: a pure function of `(seed, k)`, independent of
/// the order in which replicates run.
pub fn replicate_rng(seed: u64, k: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    rng
}

pub fn generate_design<R: Rng + ?Sized>(spec: &ScenarioSpec, rng: &mut R) -> Result<DMatrix<f64>> {
    let (n, p) = (spec.n, spec.p);
    match spec.design {
        Design::Identity => {
            if n != p {
                return Err(VbError::InvalidParameter(format!("identity design needs n = p, got {n} x {p}")));
            }
            Ok(DMatrix::identity(n, p))
        }
        Design::IidGaussian { tau } => {
            // row-major fill so the stream maps to entries in reading order
            let vals: Vec<f64> = (0..n * p).map(|_| tau * rng.sample::<f64, _>(StandardNormal)).collect();
            Ok(DMatrix::from_row_slice(n, p, &vals))
        }
        Design::Equicorrelated { rho } => {
            let (a, b) = (rho.sqrt(), (1.0 - rho).sqrt());
            let mut x = DMatrix::zeros(n, p);
            for i in 0..n {
                let shared: f64 = rng.sample(StandardNormal);
                for j in 0..p {
                    let e: f64 = rng.sample(StandardNormal);
                    x[(i, j)] = a * shared + b * e;
                }
            }
            Ok(x)
        }
    }
}

/// True coefficient vector and its support (0-based, ascending).
pub fn generate_signal<R: Rng + ?Sized>(spec: &ScenarioSpec, rng: &mut R) -> (Vec<f64>, Vec<usize>) {
    let (p, s) = (spec.p, spec.s.min(spec.p));
    let support: Vec<usize> = match spec.placement {
        Placement::Begin => (0..s).collect(),
        Placement::End => (p - s..p).collect(),
        Placement::Middle => {
            let start = (p - s) / 2;
            (start..start + s).collect()
        }
        Placement::Random => {
            let mut idx = sample(rng, p, s).into_vec();
            idx.sort_unstable();
            idx
        }
    };
    let mut theta = vec![0.0; p];
    for (k, &i) in support.iter().enumerate() {
        theta[i] = match spec.signal_amp {
            SignalAmp::Const(a) => a,
            SignalAmp::Uniform { lo, hi } => {
                if lo == hi {
                    lo
                } else {
                    rng.random_range(lo..hi)
                }
            }
            SignalAmp::Values(ref v) => v.get(k).copied().unwrap_or(0.0),
        };
    }
    (theta, support)
}

pub fn generate_noise<R: Rng + ?Sized>(spec: &ScenarioSpec, rng: &mut R, n: usize) -> Vec<f64> {
    match spec.noise {
        NoiseFamily::Gaussian { sd } => (0..n).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect(),
        NoiseFamily::Laplace { scale } => (0..n)
            .map(|_| {
                // inverse cdf on u in (-1/2, 1/2)
                let u: f64 = rng.random::<f64>() - 0.5;
                -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            })
            .collect(),
        NoiseFamily::Uniform { half_width } => (0..n)
            .map(|_| half_width * (2.0 * rng.random::<f64>() - 1.0))
            .collect(),
        NoiseFamily::StudentT3 => {
            let t = StudentT::new(3.0).expect("3 degrees of freedom is valid");
            (0..n).map(|_| t.sample(rng)).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: usize, p: usize, s: usize) -> ScenarioSpec {
        ScenarioSpec {
            n,
            p,
            s,
            design: Design::IidGaussian { tau: 1.0 },
            signal_amp: SignalAmp::Const(5.0),
            placement: Placement::Begin,
            noise: NoiseFamily::Gaussian { sd: 1.0 },
            known_variance: true,
            replicates: 1,
            seed: 3,
            lambda: 1.0,
            a0: None,
            b0: None,
        }
    }

    fn variance(v: &[f64]) -> f64 {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
    }

    #[test]
    fn identity_design() {
        let mut sp = spec(3, 3, 1);
        sp.design = Design::Identity;
        let x = generate_design(&sp, &mut replicate_rng(1, 0)).unwrap();
        assert_eq!(x, DMatrix::identity(3, 3));
        sp.n = 4;
        assert!(generate_design(&sp, &mut replicate_rng(1, 0)).is_err());
        assert!(sp.validate().is_err());
    }

    #[test]
    fn gaussian_design_variance() {
        let mut sp = spec(100, 100, 1);
        sp.design = Design::IidGaussian { tau: 2.0 };
        let x = generate_design(&sp, &mut replicate_rng(11, 0)).unwrap();
        let v = variance(x.as_slice());
        assert!((3.8..=4.2).contains(&v), "{v}");
    }

    #[test]
    fn equicorrelated_design_correlation() {
        let mut sp = spec(10_000, 2, 1);
        sp.design = Design::Equicorrelated { rho: 0.7 };
        let x = generate_design(&sp, &mut replicate_rng(5, 0)).unwrap();
        let a: Vec<f64> = x.column(0).iter().cloned().collect();
        let b: Vec<f64> = x.column(1).iter().cloned().collect();
        let (ma, mb) = (a.iter().sum::<f64>() / 1e4, b.iter().sum::<f64>() / 1e4);
        let cov: f64 = a.iter().zip(&b).map(|(u, v)| (u - ma) * (v - mb)).sum::<f64>() / 9999.0;
        let r = cov / (variance(&a) * variance(&b)).sqrt();
        assert!((0.68..=0.72).contains(&r), "{r}");
    }

    #[test]
    fn placements() {
        let mut sp = spec(10, 10, 3);
        let (theta, support) = generate_signal(&sp, &mut replicate_rng(0, 0));
        assert_eq!(theta, vec![5.0, 5.0, 5.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(support, vec![0, 1, 2]);

        sp.s = 4;
        sp.placement = Placement::Middle;
        sp.signal_amp = SignalAmp::Const(1.0);
        let (_, support) = generate_signal(&sp, &mut replicate_rng(0, 0));
        // 1-based positions 4..=7
        assert_eq!(support, vec![3, 4, 5, 6]);

        sp.placement = Placement::End;
        assert_eq!(generate_signal(&sp, &mut replicate_rng(0, 0)).1, vec![6, 7, 8, 9]);

        sp.s = 3;
        sp.placement = Placement::Begin;
        sp.signal_amp = SignalAmp::Values(vec![1.0, 2.0, 3.0]);
        assert!(sp.validate().is_ok());
        assert_eq!(&generate_signal(&sp, &mut replicate_rng(0, 0)).0[..4], &[1.0, 2.0, 3.0, 0.0]);
        sp.s = 2;
        assert!(sp.validate().is_err());
        sp.s = 4;
        sp.signal_amp = SignalAmp::Const(1.0);

        sp.placement = Placement::Random;
        let a = generate_signal(&sp, &mut replicate_rng(9, 2));
        let b = generate_signal(&sp, &mut replicate_rng(9, 2));
        assert_eq!(a, b);
        assert_eq!(a.1.len(), 4);
    }

    #[test]
    fn noise_moments() {
        let mut sp = spec(1, 1, 0);
        sp.noise = NoiseFamily::Gaussian { sd: 0.0 };
        assert!(generate_noise(&sp, &mut replicate_rng(1, 0), 50).iter().all(|&z| z == 0.0));

        sp.noise = NoiseFamily::Laplace { scale: 1.0 };
        let v = variance(&generate_noise(&sp, &mut replicate_rng(2, 0), 100_000));
        assert!((1.9..=2.1).contains(&v), "laplace {v}");

        sp.noise = NoiseFamily::StudentT3;
        let v = variance(&generate_noise(&sp, &mut replicate_rng(3, 0), 100_000));
        assert!((2.7..=3.3).contains(&v), "t3 {v}");

        sp.noise = NoiseFamily::Uniform { half_width: 2.0 };
        let z = generate_noise(&sp, &mut replicate_rng(4, 0), 100_000);
        assert!(z.iter().all(|v| v.abs() <= 2.0));
        let v = variance(&z);
        assert!((v - 4.0 / 3.0).abs() < 0.03, "uniform {v}");
    }

    #[test]
    fn replicate_streams_differ() {
        let a: f64 = replicate_rng(1, 0).random();
        let b: f64 = replicate_rng(1, 1).random();
        assert_ne!(a, b);
    }

    #[test]
    fn spec_json_shape() {
        let sp = spec(100, 200, 20);
        let json = serde_json::to_string(&sp).unwrap();
        let back: ScenarioSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, sp);
        let minimal = r#"{"n":4,"p":4,"s":1,"design":"identity","signal_amp":{"const":2.0},
            "placement":"middle","noise":"student_t3","known_variance":false,"replicates":2,"seed":0}"#;
        let parsed: ScenarioSpec = serde_json::from_str(minimal).unwrap();
        assert_eq!(parsed.lambda, 1.0);
        assert_eq!(parsed.b0(), 4.0);
    }
}
