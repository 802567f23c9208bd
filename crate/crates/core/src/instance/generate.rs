use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CompatArc, CompatibilityInstance, VertexId};
use crate::error::{KepError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightMode {
    /// Every transplant is worth 1 (maximize the number of transplants).
    Unit,
    /// Weights drawn uniformly in [0, 1).
    Uniform,
}

/// Parameters of the simplified Saidman-style pool generator.
///
/// Blood types are indexed O, A, B, AB. Sensitization bands are indexed
/// low, medium, high; `crossmatch_failure[b]` is the probability that a
/// blood-compatible donor still fails the crossmatch for a patient in band `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub num_pairs: usize,
    pub altruist_fraction: f64,
    pub seed: u64,
    pub blood_type_freq: [f64; 4],
    pub pra_band_prob: [f64; 3],
    pub crossmatch_failure: [f64; 3],
    /// Redraw a pair until its own donor is incompatible with its patient.
    pub incompatible_pairs_only: bool,
    pub weights: WeightMode,
    pub max_cycle: usize,
    pub max_chain: usize,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        Self {
            num_pairs: 50,
            altruist_fraction: 0.04,
            seed: 0,
            blood_type_freq: [0.44, 0.42, 0.10, 0.04],
            pra_band_prob: [0.70, 0.20, 0.10],
            crossmatch_failure: [0.05, 0.45, 0.90],
            incompatible_pairs_only: true,
            weights: WeightMode::Unit,
            max_cycle: 3,
            max_chain: 4,
        }
    }
}

const PROB_TOL: f64 = 1e-9;

impl GeneratorParams {
    pub fn validate(&self) -> Result<()> {
        if self.num_pairs == 0 {
            return Err(KepError::Parameter("num_pairs must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.altruist_fraction) {
            return Err(KepError::Parameter(format!(
                "altruist_fraction {} outside [0, 1]",
                self.altruist_fraction
            )));
        }
        check_distribution("blood_type_freq", &self.blood_type_freq)?;
        check_distribution("pra_band_prob", &self.pra_band_prob)?;
        if self
            .crossmatch_failure
            .iter()
            .any(|p| !(0.0..=1.0).contains(p))
        {
            return Err(KepError::Parameter(
                "crossmatch_failure entries must lie in [0, 1]".into(),
            ));
        }
        if self.incompatible_pairs_only {
            let bt = &self.blood_type_freq;
            let fail: f64 = (0..3)
                .map(|b| self.pra_band_prob[b] * self.crossmatch_failure[b])
                .sum();
            let p_blood = blood_incompatibility_probability(bt);
            if p_blood + (1.0 - p_blood) * fail <= 0.0 {
                return Err(KepError::Parameter(
                    "incompatible_pairs_only requested but no pair can be incompatible".into(),
                ));
            }
        }
        Ok(())
    }
}

fn check_distribution(name: &str, p: &[f64]) -> Result<()> {
    if p.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
        return Err(KepError::Parameter(format!("{name} has an entry outside [0, 1]")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > PROB_TOL {
        return Err(KepError::Parameter(format!("{name} sums to {s}, expected 1")));
    }
    Ok(())
}

/// ABO compatibility, types indexed O, A, B, AB.
fn blood_compatible(donor: usize, patient: usize) -> bool {
    match donor {
        0 => true,
        1 => patient == 1 || patient == 3,
        2 => patient == 2 || patient == 3,
        _ => patient == 3,
    }
}

fn blood_incompatibility_probability(freq: &[f64; 4]) -> f64 {
    let mut p = 0.0;
    for d in 0..4 {
        for q in 0..4 {
            if !blood_compatible(d, q) {
                p += freq[d] * freq[q];
            }
        }
    }
    p
}

fn sample_categorical<R: Rng>(rng: &mut R, probs: &[f64]) -> usize {
    let x: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if x < acc {
            return i;
        }
    }
    probs.len() - 1
}

struct Patient {
    blood: usize,
    band: usize,
}

/// Draws a pool. The first `num_pairs` ids are pairs, the rest altruists.
pub fn generate(params: &GeneratorParams) -> Result<CompatibilityInstance> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let num_altruists = (params.altruist_fraction * params.num_pairs as f64).round() as usize;
    let n = params.num_pairs + num_altruists;

    let mut patients = Vec::with_capacity(params.num_pairs);
    let mut donor_blood = Vec::with_capacity(n);
    for _ in 0..params.num_pairs {
        loop {
            let blood = sample_categorical(&mut rng, &params.blood_type_freq);
            let band = sample_categorical(&mut rng, &params.pra_band_prob);
            let donor = sample_categorical(&mut rng, &params.blood_type_freq);
            let own_match = blood_compatible(donor, blood)
                && rng.gen::<f64>() >= params.crossmatch_failure[band];
            if !params.incompatible_pairs_only || !own_match {
                patients.push(Patient { blood, band });
                donor_blood.push(donor);
                break;
            }
        }
    }
    for _ in 0..num_altruists {
        donor_blood.push(sample_categorical(&mut rng, &params.blood_type_freq));
    }

    let mut arcs = Vec::new();
    for (u, &donor) in donor_blood.iter().enumerate() {
        for (v, patient) in patients.iter().enumerate() {
            if u == v || !blood_compatible(donor, patient.blood) {
                continue;
            }
            if rng.gen::<f64>() < params.crossmatch_failure[patient.band] {
                continue;
            }
            let weight = match params.weights {
                WeightMode::Unit => 1.0,
                WeightMode::Uniform => rng.gen::<f64>(),
            };
            arcs.push(CompatArc {
                from: VertexId::from(u),
                to: VertexId::from(v),
                weight,
            });
        }
    }
    let altruist = (0..n).map(|v| v >= params.num_pairs).collect();
    CompatibilityInstance::new(altruist, arcs, params.max_cycle, params.max_chain)
}
