use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::seeding;
use crate::{Error, Result};

pub const MIN_CITIES: usize = 3;
pub const MAX_CITIES: usize = 20;

pub const UNIFORM_LOW: f64 = 0.1;
pub const UNIFORM_HIGH: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    /// Complete graph, every edge weight i.i.d. uniform on `[0.1, 2.0]`.
    RandomUniform,
    /// Cities i.i.d. uniform in the unit square, Euclidean distances.
    EuclideanUnitSquare,
}

impl Generator {
    pub fn as_str(&self) -> &'static str {
        match self {
            Generator::RandomUniform => "random_uniform",
            Generator::EuclideanUnitSquare => "euclidean_unit_square",
        }
    }

    /// Largest possible edge weight, used as `‖A‖_op` for weighted ZZ layers.
    pub fn max_weight(&self) -> f64 {
        match self {
            Generator::RandomUniform => UNIFORM_HIGH,
            Generator::EuclideanUnitSquare => std::f64::consts::SQRT_2,
        }
    }
}

impl std::str::FromStr for Generator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random_uniform" | "uniform" => Ok(Generator::RandomUniform),
            "euclidean_unit_square" | "euclidean" => Ok(Generator::EuclideanUnitSquare),
            other => Err(Error::InvalidArgument(format!("unknown generator {other:?}"))),
        }
    }
}

/// Symmetric TSP instance with provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TspInstance {
    k: usize,
    generator: Option<Generator>,
    seed: Option<u64>,
    weights: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coords: Option<Vec<[f64; 2]>>,
}

/// Sample a `k`-city instance. Deterministic in `(k, generator, seed)`.
pub fn gen_instance(k: usize, generator: Generator, seed: u64) -> Result<TspInstance> {
    if !(MIN_CITIES..=MAX_CITIES).contains(&k) {
        return Err(Error::CityCount {
            k,
            min: MIN_CITIES,
            max: MAX_CITIES,
        });
    }
    let mut rng = seeding::rng(seed);
    let mut weights = vec![vec![0.0; k]; k];
    let coords = match generator {
        Generator::RandomUniform => {
            for i in 0..k {
                for j in i + 1..k {
                    let w = UNIFORM_LOW + (UNIFORM_HIGH - UNIFORM_LOW) * rng.random::<f64>();
                    weights[i][j] = w;
                    weights[j][i] = w;
                }
            }
            None
        }
        Generator::EuclideanUnitSquare => {
            let pts: Vec<[f64; 2]> = (0..k).map(|_| [rng.random(), rng.random()]).collect();
            for i in 0..k {
                for j in i + 1..k {
                    let d = (pts[i][0] - pts[j][0]).hypot(pts[i][1] - pts[j][1]);
                    weights[i][j] = d;
                    weights[j][i] = d;
                }
            }
            Some(pts)
        }
    };
    Ok(TspInstance {
        k,
        generator: Some(generator),
        seed: Some(seed),
        weights,
        coords,
    })
}

impl TspInstance {
    /// Instance from an explicit weight matrix (no provenance).
    pub fn from_weights(weights: Vec<Vec<f64>>) -> Result<Self> {
        let inst = TspInstance {
            k: weights.len(),
            generator: None,
            seed: None,
            weights,
            coords: None,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.k;
        if k < 2 || k > MAX_CITIES {
            return Err(Error::CityCount {
                k,
                min: 2,
                max: MAX_CITIES,
            });
        }
        if self.weights.len() != k || self.weights.iter().any(|r| r.len() != k) {
            return Err(Error::SizeMismatch(format!("weight matrix is not {k}x{k}")));
        }
        for i in 0..k {
            if self.weights[i][i] != 0.0 {
                return Err(Error::InvalidArgument(format!("non-zero diagonal at {i}")));
            }
            for j in i + 1..k {
                let w = self.weights[i][j];
                if w != self.weights[j][i] {
                    return Err(Error::InvalidArgument(format!("asymmetric weight ({i},{j})")));
                }
                if !(w.is_finite() && w > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "weight ({i},{j}) = {w} is not positive"
                    )));
                }
            }
        }
        if let Some(c) = &self.coords {
            if c.len() != k {
                return Err(Error::SizeMismatch("coordinate count".into()));
            }
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i][j]
    }

    pub fn generator(&self) -> Option<Generator> {
        self.generator
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn coords(&self) -> Option<&[[f64; 2]]> {
        self.coords.as_deref()
    }

    pub fn max_weight(&self) -> f64 {
        self.weights
            .iter()
            .flat_map(|r| r.iter().copied())
            .fold(0.0, f64::max)
    }

    /// Relabel cities: old city `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<TspInstance> {
        check_permutation(perm, self.k)?;
        let mut weights = vec![vec![0.0; self.k]; self.k];
        for i in 0..self.k {
            for j in 0..self.k {
                weights[perm[i]][perm[j]] = self.weights[i][j];
            }
        }
        let coords = self.coords.as_ref().map(|c| {
            let mut out = vec![[0.0; 2]; self.k];
            for (i, p) in c.iter().enumerate() {
                out[perm[i]] = *p;
            }
            out
        });
        Ok(TspInstance {
            k: self.k,
            generator: self.generator,
            seed: self.seed,
            weights,
            coords,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let inst: TspInstance = serde_json::from_str(s)?;
        inst.validate()?;
        Ok(inst)
    }
}

pub(crate) fn check_permutation(perm: &[usize], k: usize) -> Result<()> {
    if perm.len() != k {
        return Err(Error::SizeMismatch(format!(
            "permutation of length {} for {k} cities",
            perm.len()
        )));
    }
    let mut seen = vec![false; k];
    for &p in perm {
        if p >= k || std::mem::replace(&mut seen[p], true) {
            return Err(Error::InvalidArgument(format!("{perm:?} is not a permutation")));
        }
    }
    Ok(())
}
