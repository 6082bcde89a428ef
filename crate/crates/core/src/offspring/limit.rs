use super::spec::{FitnessLaw, ModelSpec, Preset};
use crate::error::{Error, Result};
use crate::limit::{Embedding, Phi, PhiComponent, RateSpec};
use crate::model::{EnvironmentPoint, SimplexPoint};

/// (Φ, κ, μ) of the limiting process in units of 1/c_N.
///
/// Φ is expressed at the level of individual offspring fractions; the
/// generator applies the halving map itself.
pub fn limit_measure(spec: &ModelSpec) -> Result<RateSpec> {
    let g = &spec.graph;
    let k = g.num_demes();
    let rate = match &spec.preset {
        Preset::TwoDemeWf { sigma } => RateSpec::neutral(vec![1.0; k], vec![*sigma; g.num_edges()]),
        Preset::LargeOffspring { sigma, phi, psi, gamma } => {
            let (weight, kappa, mu) = if *gamma > 1.0 {
                (0.0, 1.0, *sigma)
            } else if *gamma < 1.0 {
                (4.0 / (psi * psi), 0.0, 0.0)
            } else {
                let scale = 1.0 + phi * psi * psi;
                (4.0 * phi / scale, 1.0 / scale, sigma / scale)
            };
            let mut phi_measure = Phi::zero();
            if weight > 0.0 {
                for v in 0..k {
                    let mut off = vec![SimplexPoint::zero(); k];
                    off[v] = SimplexPoint::new(vec![psi / 2.0, psi / 2.0])?;
                    let point = EnvironmentPoint::new(g, off, vec![0.0; g.num_edges()])?;
                    phi_measure.components.push(PhiComponent::Atom { weight, point });
                }
            }
            RateSpec { phi: phi_measure, kappa: vec![kappa; k], mu: vec![mu; g.num_edges()] }
        }
        Preset::BetaFitness { alpha, a, b, fitness } => {
            if *fitness == FitnessLaw::Constant {
                return Err(Error::Unavailable("constant fitness converges to Kingman on an unknown time scale".into()));
            }
            let mut components: Vec<PhiComponent> = (0..k)
                .map(|deme| PhiComponent::Beta {
                    weight: 8.0,
                    a: 2.0 - alpha,
                    b: *alpha,
                    power: 2.0,
                    embedding: Embedding::Offspring { deme, shape: SimplexPoint::new(vec![0.5]).expect("valid shape") },
                })
                .collect();
            components.push(PhiComponent::Beta {
                weight: 1.0,
                a: *a,
                b: *b,
                power: 0.0,
                embedding: Embedding::Migration { edges: (0..g.num_edges()).collect() },
            });
            RateSpec { phi: Phi { components }, kappa: vec![0.0; k], mu: vec![0.0; g.num_edges()] }
        }
        Preset::FvTorus(p) => {
            let scale = 1.0 + p.big_lambda();
            let mut mu = vec![0.0; g.num_edges()];
            for (v, w) in p.neighbour_pairs() {
                for (x, y) in [(v, w), (w, v)] {
                    mu[g.edge_id(x, y).expect("complete graph")] = p.sigma / scale;
                }
            }
            let radius_total: f64 = p.radii.iter().map(|r| r.1).sum();
            let xi_total: f64 = p.xi.iter().map(|a| a.weight).sum();
            let mut components = Vec::new();
            for centre in 0..k {
                for &(r, nu) in &p.radii {
                    let ball = p.ball(centre, r);
                    for &focal in &ball {
                        for atom in &p.xi {
                            let weight = p.lambda / scale / k as f64 * (nu / radius_total) / ball.len() as f64 * (atom.weight / xi_total);
                            let mut offspring = vec![SimplexPoint::zero(); k];
                            offspring[focal] = SimplexPoint::new(atom.families.iter().flat_map(|&f| [f / 2.0, f / 2.0]).collect())?;
                            let migration = ball
                                .iter()
                                .filter(|&&w| w != focal)
                                .map(|&w| {
                                    let (a, b) = p.source_params(w);
                                    (g.edge_id(w, focal).expect("complete graph"), a, b)
                                })
                                .collect();
                            components.push(PhiComponent::ProductBeta { weight, offspring, migration });
                        }
                    }
                }
            }
            RateSpec { phi: Phi { components }, kappa: vec![1.0 / scale; k], mu }
        }
        Preset::Custom { .. } => return Err(Error::Unavailable("custom models have no closed-form limit".into())),
    };
    rate.validate(g)?;
    Ok(rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::offspring::FvTorusParams;

    #[test]
    fn two_deme_wf_is_kingman_with_migration() {
        let rate = limit_measure(&ModelSpec::two_deme_wf(100, 2.0).unwrap()).unwrap();
        assert!(rate.phi.is_zero());
        assert_eq!(rate.kappa, vec![1.0, 1.0]);
        assert_eq!(rate.mu, vec![2.0, 2.0]);
    }

    #[test]
    fn large_offspring_weights() {
        let rate = limit_measure(&ModelSpec::large_offspring(100, 1.0, 1.0, 0.5, 1.0).unwrap()).unwrap();
        assert_eq!(rate.phi.components.len(), 2);
        for (v, c) in rate.phi.halved().components.iter().enumerate() {
            let PhiComponent::Atom { weight, point } = c else { panic!("atom expected") };
            assert!((weight - 3.2).abs() < 1e-12);
            assert_eq!(point.offspring(v).masses(), &[0.125; 4]);
        }
        let heavy = limit_measure(&ModelSpec::large_offspring(100, 1.0, 1.0, 0.5, 2.0).unwrap()).unwrap();
        assert!(heavy.phi.is_zero());
        assert_eq!(heavy.kappa, vec![1.0, 1.0]);
    }

    /// κ + ∫⟨h(x),h(x)⟩ dΦ summed over a deme's components equals one.
    fn pair_rate(rate: &RateSpec, v: usize) -> f64 {
        let driving = rate.phi.halved();
        let mut total = rate.kappa[v];
        for c in &driving.components {
            match c {
                PhiComponent::Atom { weight, point } => total += weight * point.offspring(v).self_dot(),
                PhiComponent::ProductBeta { weight, offspring, .. } => total += weight * offspring[v].self_dot(),
                PhiComponent::Beta { weight, a, b, power, embedding: Embedding::Offspring { deme, shape } } if *deme == v => {
                    // ∫ y^{2−power} Beta(a,b)(dy) for power = 2 is 1.
                    assert_eq!(*power, 2.0);
                    let _ = (a, b);
                    total += weight * shape.self_dot();
                }
                _ => {}
            }
        }
        total
    }

    #[test]
    fn pair_rates_are_normalized() {
        let specs = [
            ModelSpec::large_offspring(100, 1.0, 1.0, 0.5, 1.0).unwrap(),
            ModelSpec::large_offspring(100, 1.0, 1.0, 0.5, 0.5).unwrap(),
            ModelSpec::beta_fitness(100, 1.5, 1.0, 2.0, FitnessLaw::Pareto).unwrap(),
            ModelSpec::fv_torus(100, FvTorusParams::default_3x3()).unwrap(),
        ];
        for spec in &specs {
            let rate = limit_measure(spec).unwrap();
            for v in 0..spec.graph.num_demes() {
                assert!((pair_rate(&rate, v) - 1.0).abs() < 1e-12, "{} deme {v}", spec.preset.name());
            }
        }
    }
}
