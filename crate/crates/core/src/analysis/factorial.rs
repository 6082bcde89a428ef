use rand::seq::index::sample;
use rand::Rng;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::offspring::{sample_generation_law, GenerationLaw, ModelSpec};
use crate::pedigree::TimeScale;

/// Cap on random distinct index tuples averaged per draw.
pub const MAX_TUPLES: usize = 1_000;

/// The multi-indices of one mixed factorial moment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixedMomentIndex {
    /// Factorial exponents k_{v,1..j_v} for each deme; j_v is the length.
    pub k: Vec<Vec<u32>>,
    /// Power r_e of every migration fraction.
    pub r: Vec<u32>,
}

impl MixedMomentIndex {
    pub fn validate(&self, spec: &ModelSpec) -> Result<()> {
        if self.k.len() != spec.graph.num_demes() || self.r.len() != spec.graph.num_edges() {
            return Err(crate::Error::MismatchedGraph);
        }
        if self.k.iter().flatten().any(|&k| k < 2) {
            return Err(invalid("every factorial exponent must be at least 2"));
        }
        if self.k.iter().all(Vec::is_empty) && self.r.iter().all(|&r| r == 0) {
            return Err(invalid("at least one index must be nonzero"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixedMomentEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub time_scale: f64,
}

fn falling(x: u32, k: u32) -> f64 {
    (0..k).map(|i| x as f64 - i as f64).product()
}

fn draw_value<R: Rng + ?Sized>(law: &GenerationLaw, index: &MixedMomentIndex, rng: &mut R) -> f64 {
    let mut value: f64 = index.r.iter().zip(&law.migration).map(|(&r, &m)| m.powi(r as i32)).product();
    for (v, ks) in index.k.iter().enumerate() {
        if ks.is_empty() || value == 0.0 {
            continue;
        }
        let n = law.deme_size[v] as f64;
        let star = law.post_size[v] as f64;
        let big_k: u32 = ks.iter().sum();
        let j = ks.len();
        let totals = crate::offspring::offspring_totals(law, v, rng);
        let tuple_mean = if j == 1 {
            totals.iter().map(|&x| falling(x, ks[0])).sum::<f64>() / totals.len() as f64
        } else {
            let reps = totals.len().checked_pow(j as u32).map_or(MAX_TUPLES, |c| c.min(MAX_TUPLES));
            (0..reps)
                .map(|_| sample(rng, totals.len(), j).iter().zip(ks).map(|(a, &k)| falling(totals[a], k)).product::<f64>())
                .sum::<f64>()
                / reps as f64
        };
        let rho = n / star;
        value *= rho.powi(big_k as i32) * tuple_mean / (n.powi(big_k as i32 - j as i32) * 2f64.powi(big_k as i32));
    }
    value
}

/// (1/c_N^{v0}) E[∏ m_e^{r_e} ∏_v ρ(v)^{K_v} ∏_a (𝒱_a^v)_{k_{v,a}} / (N(v)^{K_v − j_v} 2^{K_v})].
///
/// Individual indices are averaged over the whole deme when j_v = 1 and over
/// random distinct tuples otherwise.
pub fn mixed_factorial_moment(spec: &ModelSpec, index: &MixedMomentIndex, replicates: u64, seed: u64) -> Result<MixedMomentEstimate> {
    index.validate(spec)?;
    let scale = TimeScale::for_spec(spec, 0, seed)?.value;
    let acc = crate::offspring::replicate_vectors(replicates, seed, 1, |rng| {
        let law = sample_generation_law(spec, rng)?;
        Ok(vec![draw_value(&law, index, rng)])
    })?;
    Ok(MixedMomentEstimate { estimate: acc[0].mean() / scale, std_error: acc[0].std_error() / scale, time_scale: scale })
}

/// Exact finite-N value for two_deme_wf with only migration indices: E[m_e^r]/c_N with
/// m_e = B/N, B ~ Binomial(N, σ/(2N)), from the binomial raw moments.
pub fn wright_fisher_migration_moment(n: u64, sigma: f64, r: u32) -> f64 {
    let p = sigma / (2.0 * n as f64);
    // Raw moments via Stirling numbers of the second kind: E[B^r] = Σ_k S(r,k) (N)_k p^k.
    let stirling = crate::model::stirling2_row(r as usize);
    let raw: f64 = (0..=r as usize).map(|k| stirling[k] as f64 * falling(n as u32, k as u32) * p.powi(k as i32)).sum();
    raw / (n as f64).powi(r as i32) * 2.0 * n as f64
}
