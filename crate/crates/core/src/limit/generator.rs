use nalgebra::DMatrix;

use super::phi::{Embedding, Phi, PhiComponent, RateSpec};
use super::quadrature::BetaRule;
use crate::error::{invalid, Error, Result};
use crate::model::{DemeGraph, EnvironmentPoint, StateSpace, TypedPartition};
use crate::paintbox::{kronecker_power, paintbox_kernel_exact};

/// Largest dense generator dimension we are willing to build and exponentiate.
pub const MAX_DENSE_DIM: usize = 4096;

/// Default Gauss–Jacobi order for one-dimensional densities.
pub const QUADRATURE_NODES: usize = 64;

/// Quadrature error tolerance relative to the row mass.
pub const QUADRATURE_TOL: f64 = 1e-8;

/// Neutral transitions out of a state: within-deme pair mergers at rate κ_v
/// and single-block moves along each edge at rate μ_e.
pub fn neutral_transitions(state: &TypedPartition, graph: &DemeGraph, kappa: &[f64], mu: &[f64]) -> Vec<(TypedPartition, f64)> {
    let nb = state.num_blocks();
    let mut out = Vec::new();
    for a in 0..nb {
        for b in a + 1..nb {
            let v = state.deme_of(a);
            if v == state.deme_of(b) && kappa[v] > 0.0 {
                out.push((state.merged(a, b), kappa[v]));
            }
        }
    }
    for b in 0..nb {
        for &e in graph.out_edges(state.deme_of(b)) {
            if mu[e] > 0.0 {
                out.push((state.moved(b, graph.edge(e).1), mu[e]));
            }
        }
    }
    out
}

fn from_transitions(space: &StateSpace, f: impl Fn(&TypedPartition) -> Vec<(TypedPartition, f64)>) -> DMatrix<f64> {
    let n = space.len();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut total = 0.0;
        for (eta, rate) in f(space.state(i)) {
            let j = space.index_of(&eta).expect("transition stays in the state space");
            g[(i, j)] += rate;
            total += rate;
        }
        g[(i, i)] -= total;
    }
    g
}

/// K_n(κ).
pub fn kingman_generator(space: &StateSpace, graph: &DemeGraph, kappa: &[f64]) -> DMatrix<f64> {
    let mu = vec![0.0; graph.num_edges()];
    from_transitions(space, |s| neutral_transitions(s, graph, kappa, &mu))
}

/// M_n(μ).
pub fn migration_generator(space: &StateSpace, graph: &DemeGraph, mu: &[f64]) -> DMatrix<f64> {
    let kappa = vec![0.0; graph.num_demes()];
    from_transitions(space, |s| neutral_transitions(s, graph, &kappa, mu))
}

/// ∫ f dΦ for a matrix-valued f vanishing at the origin at the rates the
/// component's power requires. Returns the integral and an error estimate.
pub(crate) fn phi_integral(
    phi: &Phi,
    graph: &DemeGraph,
    dim: usize,
    degree: usize,
    f: &dyn Fn(&EnvironmentPoint) -> Result<DMatrix<f64>>,
) -> Result<(DMatrix<f64>, f64)> {
    let mut total = DMatrix::zeros(dim, dim);
    let mut error = 0.0f64;
    for comp in &phi.components {
        if comp.weight() == 0.0 {
            continue;
        }
        match comp {
            PhiComponent::Atom { weight, point } => total += f(point)? * *weight,
            PhiComponent::Beta { weight, a, b, power, embedding } => {
                let eval = |k: usize| -> Result<DMatrix<f64>> {
                    let rule = BetaRule::new(*a, *b, k)?;
                    let mut acc = DMatrix::zeros(dim, dim);
                    for (&y, &w) in rule.nodes.iter().zip(&rule.weights) {
                        acc += f(&embedding.point(graph, y)?)? * (w * y.powf(-power));
                    }
                    Ok(acc * *weight)
                };
                let coarse = eval(QUADRATURE_NODES)?;
                let fine = eval(2 * QUADRATURE_NODES)?;
                error = error.max((&fine - &coarse).abs().max());
                total += fine;
            }
            PhiComponent::ProductBeta { weight, offspring, migration } => {
                // f is a polynomial of degree ≤ `degree` in each m_e, so this tensor rule is exact.
                let k = degree / 2 + 1;
                let rules = migration.iter().map(|&(_, a, b)| BetaRule::new(a, b, k)).collect::<Result<Vec<_>>>()?;
                let mut idx = vec![0usize; rules.len()];
                loop {
                    let m: Vec<f64> = idx.iter().zip(&rules).map(|(&i, r)| r.nodes[i]).collect();
                    let w: f64 = idx.iter().zip(&rules).map(|(&i, r)| r.weights[i]).product();
                    total += f(&PhiComponent::product_point(graph, offspring, migration, &m)?)? * (w * weight);
                    let mut pos = rules.len();
                    let advanced = loop {
                        if pos == 0 {
                            break false;
                        }
                        pos -= 1;
                        idx[pos] += 1;
                        if idx[pos] < k {
                            break true;
                        }
                        idx[pos] = 0;
                    };
                    if !advanced {
                        break;
                    }
                }
            }
        }
    }
    Ok((total, error))
}

/// Resets each diagonal entry to minus its row's off-diagonal sum. Quadrature
/// against y^{-power} amplifies rounding in the diagonal of q − I near y = 0.
fn balance_diagonal(g: &mut DMatrix<f64>) {
    for i in 0..g.nrows() {
        let off: f64 = g.row(i).iter().enumerate().filter(|&(j, _)| j != i).map(|(_, x)| x).sum();
        g[(i, i)] = -off;
    }
}

fn check_quadrature(g: &DMatrix<f64>, error: f64) -> Result<()> {
    let row_mass = (0..g.nrows()).map(|i| g[(i, i)].abs()).fold(0.0, f64::max).max(1.0);
    if error > QUADRATURE_TOL * row_mass {
        return Err(Error::QuadratureFailure { estimate: error, tolerance: QUADRATURE_TOL * row_mass });
    }
    Ok(())
}

/// Q_n(Φ) = ∫ (q_n(x,m) − I) dΦ, with Φ taken as given (no halving).
pub fn large_event_generator(space: &StateSpace, graph: &DemeGraph, phi: &Phi) -> Result<DMatrix<f64>> {
    phi.validate(graph)?;
    let n = space.len();
    let id = DMatrix::<f64>::identity(n, n);
    let (mut g, err) = phi_integral(phi, graph, n, space.sample_size(), &|p| Ok(paintbox_kernel_exact(p, graph, space) - &id))?;
    check_quadrature(&g, err)?;
    balance_diagonal(&mut g);
    Ok(g)
}

/// Σ_i I ⊗ … ⊗ G ⊗ … ⊗ I over l copies.
pub fn kronecker_sum(g: &DMatrix<f64>, l: usize) -> Result<DMatrix<f64>> {
    let n = g.nrows();
    let dim = (n as u128).pow(l as u32);
    if dim > MAX_DENSE_DIM as u128 {
        return Err(Error::StateSpaceTooLarge { states: dim, limit: MAX_DENSE_DIM as u128 });
    }
    let mut out = DMatrix::zeros(dim as usize, dim as usize);
    for i in 0..l {
        let left = DMatrix::<f64>::identity(n.pow(i as u32), n.pow(i as u32));
        let right = DMatrix::<f64>::identity(n.pow((l - 1 - i) as u32), n.pow((l - 1 - i) as u32));
        out += left.kronecker(g).kronecker(&right);
    }
    Ok(out)
}

/// 𝓛 = R + ∫ (H_l ∘ h_V − I) dΦ over ℰ_n(V)^l.
pub fn joint_generator(space: &StateSpace, graph: &DemeGraph, rate: &RateSpec, loci: usize) -> Result<DMatrix<f64>> {
    rate.validate(graph)?;
    if loci == 0 {
        return Err(invalid("at least one locus copy required"));
    }
    let neutral = kingman_generator(space, graph, &rate.kappa) + migration_generator(space, graph, &rate.mu);
    let mut l = kronecker_sum(&neutral, loci)?;
    let dim = l.nrows();
    let id = DMatrix::<f64>::identity(dim, dim);
    let driving = rate.phi.halved();
    let (mut jumps, err) = phi_integral(&driving, graph, dim, space.sample_size() * loci, &|p| {
        Ok(kronecker_power(&paintbox_kernel_exact(p, graph, space), loci)? - &id)
    })?;
    check_quadrature(&jumps, err)?;
    balance_diagonal(&mut jumps);
    l += jumps;
    Ok(l)
}

/// ∫ (1 − q(ξ,ξ)) dΦ for every ξ: the total jump rate out of each state.
pub fn effective_rates(space: &StateSpace, graph: &DemeGraph, phi: &Phi) -> Result<Vec<f64>> {
    let g = large_event_generator(space, graph, phi)?;
    Ok((0..space.len()).map(|i| -g[(i, i)]).collect())
}

/// exp(t G) for a rate matrix G.
pub fn transition_kernel(generator: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    if !generator.is_square() {
        return Err(invalid("generator must be square"));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(invalid(format!("time {t} must be finite and nonnegative")));
    }
    let n = generator.nrows();
    for i in 0..n {
        let row = generator.row(i);
        if row.iter().enumerate().any(|(j, &r)| !r.is_finite() || (j != i && r < -1e-12)) {
            return Err(invalid(format!("row {i} is not a rate row")));
        }
        let scale = row.iter().map(|r| r.abs()).sum::<f64>().max(1.0);
        if row.sum().abs() > 1e-9 * scale {
            return Err(invalid(format!("row {i} sums to {}", row.sum())));
        }
    }
    if t == 0.0 {
        return Ok(DMatrix::identity(n, n));
    }
    let mut p = (generator * t).exp();
    if p.iter().any(|x| !x.is_finite()) {
        return Err(Error::NumericalOverflow("non-finite entries in exp(tQ)".into()));
    }
    for x in p.iter_mut() {
        if *x < 0.0 {
            if *x < -1e-9 {
                return Err(Error::NumericalOverflow(format!("entry {x} is significantly negative")));
            }
            *x = 0.0;
        }
    }
    for i in 0..n {
        let s = p.row(i).sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::NumericalOverflow(format!("row {i} of exp(tQ) sums to {s}")));
        }
    }
    Ok(p)
}

/// The one-dimensional Beta component lying over a given embedding (convenience for presets).
pub fn beta_component(weight: f64, a: f64, b: f64, power: f64, embedding: Embedding) -> PhiComponent {
    PhiComponent::Beta { weight, a, b, power, embedding }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SimplexPoint;

    #[test]
    fn kingman_examples() {
        let g = DemeGraph::single();
        let space = StateSpace::new(2, &g).unwrap();
        let k = kingman_generator(&space, &g, &[1.0]);
        // states: {12} then {1}{2}
        assert_eq!(k, DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, -1.0]));
        let space3 = StateSpace::new(3, &g).unwrap();
        let k3 = kingman_generator(&space3, &g, &[0.7]);
        let i = space3.index_of(&TypedPartition::singletons(&[0, 0, 0])).unwrap();
        assert!((k3[(i, i)] + 2.1).abs() < 1e-15);
        assert_eq!(kingman_generator(&space3, &g, &[0.0]), DMatrix::zeros(5, 5));
    }

    #[test]
    fn migration_examples() {
        let g = DemeGraph::complete(2).unwrap();
        let space = StateSpace::new(1, &g).unwrap();
        let m = migration_generator(&space, &g, &[0.4, 1.5]);
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[-0.4, 0.4, 1.5, -1.5]));
        let space2 = StateSpace::new(2, &g).unwrap();
        let m2 = migration_generator(&space2, &g, &[0.3, 0.0]);
        let i = space2.index_of(&TypedPartition::singletons(&[0, 0])).unwrap();
        assert!((m2[(i, i)] + 0.6).abs() < 1e-15);
    }

    #[test]
    fn two_state_closed_form_and_semigroup() {
        let g = DemeGraph::complete(2).unwrap();
        let space = StateSpace::new(1, &g).unwrap();
        let (a, b) = (0.7, 1.9);
        let m = migration_generator(&space, &g, &[a, b]);
        for &t in &[0.1, 1.0, 3.0] {
            let p = transition_kernel(&m, t).unwrap();
            let exact = a * (1.0 - (-(a + b) * t).exp()) / (a + b);
            assert!((p[(0, 1)] - exact).abs() < 1e-12);
        }
        let ps = transition_kernel(&m, 0.4).unwrap();
        let pt = transition_kernel(&m, 1.1).unwrap();
        let pst = transition_kernel(&m, 1.5).unwrap();
        assert!((ps * pt - pst).abs().max() < 1e-8);
        assert_eq!(transition_kernel(&m, 0.0).unwrap(), DMatrix::identity(2, 2));
    }

    #[test]
    fn single_atom_generator() {
        let g = DemeGraph::single();
        let space = StateSpace::new(3, &g).unwrap();
        let p = EnvironmentPoint::new(&g, vec![SimplexPoint::new(vec![0.5, 0.2]).unwrap()], vec![]).unwrap();
        let q = large_event_generator(&space, &g, &Phi::atoms([(2.5, p.clone())])).unwrap();
        let expected = (paintbox_kernel_exact(&p, &g, &space) - DMatrix::identity(5, 5)) * 2.5;
        assert!((q - expected).abs().max() < 1e-15);
        assert_eq!(large_event_generator(&space, &g, &Phi::zero()).unwrap(), DMatrix::zeros(5, 5));
    }

    #[test]
    fn beta_density_matches_closed_form_pair_rate() {
        // pair rate ∫ y² s² y^{-2} Beta(a,b)(dy) w = w s² for shape (s)
        let g = DemeGraph::single();
        let space = StateSpace::new(2, &g).unwrap();
        let shape = SimplexPoint::new(vec![0.5]).unwrap();
        let phi = Phi { components: vec![beta_component(3.0, 0.6, 1.4, 2.0, Embedding::Offspring { deme: 0, shape })] };
        let q = large_event_generator(&space, &g, &phi).unwrap();
        let i = space.index_of(&TypedPartition::singletons(&[0, 0])).unwrap();
        assert!((q[(i, 1 - i)] - 0.75).abs() < 1e-10, "{}", q[(i, 1 - i)]);
    }

    #[test]
    fn joint_generator_reduces_and_factorizes() {
        let g = DemeGraph::complete(2).unwrap();
        let space = StateSpace::new(2, &g).unwrap();
        let rate = RateSpec::neutral(vec![1.0, 0.5], vec![0.3, 0.2]);
        let neutral = kingman_generator(&space, &g, &rate.kappa) + migration_generator(&space, &g, &rate.mu);
        assert!((joint_generator(&space, &g, &rate, 1).unwrap() - &neutral).abs().max() < 1e-15);
        let two = joint_generator(&space, &g, &rate, 2).unwrap();
        assert!((two - kronecker_sum(&neutral, 2).unwrap()).abs().max() < 1e-15);

        let p = EnvironmentPoint::new(&g, vec![SimplexPoint::new(vec![0.6]).unwrap(), SimplexPoint::zero()], vec![0.1, 0.0]).unwrap();
        let lambda = 1.7;
        let atom = RateSpec { phi: Phi::atoms([(lambda, p.clone())]), kappa: vec![0.0; 2], mu: vec![0.0; 2] };
        let l = joint_generator(&space, &g, &atom, 2).unwrap();
        let q = paintbox_kernel_exact(&p.halved(), &g, &space);
        let n = space.len();
        for (a1, b1, a2, b2) in [(2, 0, 2, 1), (3, 1, 2, 0), (5, 4, 5, 1)] {
            if a1 == b1 && a2 == b2 {
                continue;
            }
            let expected = lambda * q[(a1, b1)] * q[(a2, b2)];
            assert!((l[(a1 * n + a2, b1 * n + b2)] - expected).abs() < 1e-14);
        }
        for i in 0..l.nrows() {
            assert!(l.row(i).sum().abs() < 1e-12);
        }
    }
}
