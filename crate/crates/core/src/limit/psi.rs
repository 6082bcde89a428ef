use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Beta, Distribution, Exp1, Poisson};
use serde::{Deserialize, Serialize};

use super::generator::{joint_generator, neutral_transitions, transition_kernel};
use super::phi::{Embedding, Phi, PhiComponent, RateSpec};
use crate::error::{invalid, Error, Result};
use crate::model::{DemeGraph, EnvironmentPoint, StateSpace, TypedPartition};
use crate::paintbox::{stay_probability, KernelCache};
use crate::trajectory::Trajectory;

/// Auxiliary marks of one atom for one copy: u^ξ for every state and the jump uniform v.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CopyMarks {
    pub u: Vec<f64>,
    pub v: f64,
}

/// A retained atom of the driving process, already on the (h_V)_*Φ scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiAtom {
    pub time: f64,
    pub point: EnvironmentPoint,
    pub marks: Vec<CopyMarks>,
}

/// The atoms of Ψ* on [0, T] with their marks, for a fixed number of copies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiRealization {
    pub horizon: f64,
    pub copies: usize,
    pub num_states: usize,
    pub atoms: Vec<PsiAtom>,
}

impl PsiRealization {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| invalid(format!("bad Psi realization: {e}")))
    }
}

/// A limit coalescent on a fixed graph and sample size: the enumerated state
/// space, the rates, the driving measure (h_V)_*Φ and a kernel cache.
#[derive(Debug)]
pub struct LimitModel {
    graph: DemeGraph,
    space: StateSpace,
    rate: RateSpec,
    driving: Phi,
    cache: KernelCache,
}

impl LimitModel {
    pub fn new(graph: DemeGraph, n: usize, rate: RateSpec) -> Result<Self> {
        rate.validate(&graph)?;
        let space = StateSpace::new(n, &graph)?;
        let driving = rate.phi.halved();
        Ok(Self { graph, space, rate, driving, cache: KernelCache::new() })
    }

    pub fn graph(&self) -> &DemeGraph {
        &self.graph
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn rate(&self) -> &RateSpec {
        &self.rate
    }

    pub fn driving_measure(&self) -> &Phi {
        &self.driving
    }

    pub fn joint_generator(&self, loci: usize) -> Result<DMatrix<f64>> {
        joint_generator(&self.space, &self.graph, &self.rate, loci)
    }

    pub fn transition_kernel(&self, loci: usize, t: f64) -> Result<DMatrix<f64>> {
        transition_kernel(&self.joint_generator(loci)?, t)
    }

    fn stay_vector(&self, p: &EnvironmentPoint) -> Vec<f64> {
        self.space.states().iter().map(|s| stay_probability(p, &self.graph, s)).collect()
    }

    /// Upper bound M with R(y) ≤ M y^power for the retention probability R of a Beta component.
    fn proposal_bound(&self, power: f64, embedding: &Embedding, copies: usize) -> Result<f64> {
        if power <= 0.0 {
            return Ok(1.0);
        }
        let per_state: f64 = match embedding {
            Embedding::Offspring { deme, shape } => self
                .space
                .states()
                .iter()
                .map(|s| {
                    let b = s.counts_per_deme(self.graph.num_demes())[*deme] as f64;
                    b * (b - 1.0) / 2.0 * shape.self_dot()
                })
                .sum(),
            Embedding::Migration { edges } => self
                .space
                .states()
                .iter()
                .map(|s| s.demes().filter(|&v| edges.iter().any(|&e| self.graph.edge(e).0 == v)).count() as f64)
                .sum(),
        };
        let bound = copies as f64 * per_state;
        if !bound.is_finite() {
            return Err(Error::NotSimulatable("unbounded thinning rate".into()));
        }
        Ok(bound.max(f64::MIN_POSITIVE))
    }

    /// Draws the marks of an atom conditionally on it being retained by at least
    /// one (copy, state) thinning. Returns None when retention has probability 0.
    fn conditional_marks<R: Rng + ?Sized>(&self, stay: &[f64], copies: usize, rng: &mut R) -> Option<Vec<CopyMarks>> {
        let ns = stay.len();
        let miss: f64 = stay.iter().map(|s| s.powi(copies as i32)).product();
        let retain = 1.0 - miss;
        if retain <= 0.0 {
            return None;
        }
        let target = rng.random::<f64>() * retain;
        let mut none_yet = 1.0;
        let mut first = copies * ns - 1;
        for k in 0..copies * ns {
            let pi = 1.0 - stay[k % ns];
            if 1.0 - none_yet * (1.0 - pi) >= target {
                first = k;
                break;
            }
            none_yet *= 1.0 - pi;
        }
        let marks = (0..copies)
            .map(|c| {
                let u = (0..ns)
                    .map(|s| {
                        let k = c * ns + s;
                        let pi = 1.0 - stay[s];
                        let r: f64 = rng.random();
                        match k.cmp(&first) {
                            std::cmp::Ordering::Less => pi + (1.0 - pi) * r,
                            std::cmp::Ordering::Equal => pi * r,
                            std::cmp::Ordering::Greater => r,
                        }
                    })
                    .collect();
                CopyMarks { u, v: rng.random() }
            })
            .collect();
        Some(marks)
    }

    fn retained_atom<R: Rng + ?Sized>(
        &self,
        point: EnvironmentPoint,
        stay: &[f64],
        time: f64,
        copies: usize,
        rng: &mut R,
    ) -> Option<PsiAtom> {
        self.conditional_marks(stay, copies, rng).map(|marks| PsiAtom { time, point, marks })
    }

    /// Samples Ψ* on [0, horizon] for `copies` conditionally independent copies.
    pub fn sample_psi<R: Rng + ?Sized>(&self, horizon: f64, copies: usize, rng: &mut R) -> Result<PsiRealization> {
        if !(horizon.is_finite() && horizon >= 0.0) || copies == 0 {
            return Err(invalid("horizon must be finite and nonnegative, copies at least 1"));
        }
        let mut atoms = Vec::new();
        for comp in &self.driving.components {
            let weight = comp.weight();
            if weight == 0.0 || horizon == 0.0 {
                continue;
            }
            match comp {
                PhiComponent::Atom { point, .. } => {
                    let stay = self.stay_vector(point);
                    let retain = 1.0 - stay.iter().map(|s| s.powi(copies as i32)).product::<f64>();
                    for _ in 0..poisson(weight * retain * horizon, rng) {
                        let t = rng.random::<f64>() * horizon;
                        if let Some(marks) = self.conditional_marks(&stay, copies, rng) {
                            atoms.push(PsiAtom { time: t, point: point.clone(), marks });
                        }
                    }
                }
                PhiComponent::Beta { a, b, power, embedding, .. } => {
                    let bound = self.proposal_bound(*power, embedding, copies)?;
                    let beta = Beta::new(*a, *b).map_err(|e| invalid(e.to_string()))?;
                    for _ in 0..poisson(weight * bound * horizon, rng) {
                        let t = rng.random::<f64>() * horizon;
                        let y: f64 = beta.sample(rng);
                        if y <= 0.0 {
                            continue;
                        }
                        let point = embedding.point(&self.graph, y)?;
                        let stay = self.stay_vector(&point);
                        let retain = 1.0 - stay.iter().map(|s| s.powi(copies as i32)).product::<f64>();
                        let accept = retain / (bound * y.powf(*power));
                        if accept > 1.0 + 1e-9 {
                            return Err(Error::NotSimulatable(format!("thinning bound violated: ratio {accept}")));
                        }
                        if rng.random::<f64>() < accept {
                            atoms.extend(self.retained_atom(point, &stay, t, copies, rng));
                        }
                    }
                }
                PhiComponent::ProductBeta { offspring, migration, .. } => {
                    let betas = migration
                        .iter()
                        .map(|&(_, a, b)| Beta::new(a, b).map_err(|e| invalid(e.to_string())))
                        .collect::<Result<Vec<_>>>()?;
                    for _ in 0..poisson(weight * horizon, rng) {
                        let t = rng.random::<f64>() * horizon;
                        let m: Vec<f64> = betas.iter().map(|d| d.sample(rng)).collect();
                        let point = PhiComponent::product_point(&self.graph, offspring, migration, &m)?;
                        let stay = self.stay_vector(&point);
                        let retain = 1.0 - stay.iter().map(|s| s.powi(copies as i32)).product::<f64>();
                        if rng.random::<f64>() < retain {
                            atoms.extend(self.retained_atom(point, &stay, t, copies, rng));
                        }
                    }
                }
            }
        }
        atoms.sort_by(|x, y| x.time.total_cmp(&y.time));
        Ok(PsiRealization { horizon, copies, num_states: self.space.len(), atoms })
    }

    /// Evolves one copy with K + M between `from` and `to`, appending to the trajectory.
    fn evolve_neutral<R: Rng + ?Sized>(&self, traj: &mut Trajectory, from: f64, to: f64, rng: &mut R) {
        let mut t = from;
        loop {
            let state = traj.last().clone();
            let moves = neutral_transitions(&state, &self.graph, &self.rate.kappa, &self.rate.mu);
            let total: f64 = moves.iter().map(|m| m.1).sum();
            if total <= 0.0 {
                return;
            }
            let wait: f64 = Exp1.sample(rng);
            t += wait / total;
            if t >= to {
                return;
            }
            let mut u = rng.random::<f64>() * total;
            let next = moves
                .into_iter()
                .find(|(_, r)| {
                    if u < *r {
                        true
                    } else {
                        u -= r;
                        false
                    }
                })
                .map(|m| m.0)
                .unwrap_or_else(|| state.clone());
            traj.record(t, next);
        }
    }

    /// Runs all copies of the Ψ-driven coalescent through one realization.
    pub fn run_psi_driven<R: Rng + ?Sized>(&self, psi: &PsiRealization, initial: &TypedPartition, rng: &mut R) -> Result<Vec<Trajectory>> {
        if psi.num_states != self.space.len() {
            return Err(Error::InconsistentRealization(format!("{} marks per copy, {} states", psi.num_states, self.space.len())));
        }
        if self.space.index_of(initial).is_none() {
            return Err(Error::InconsistentRealization(format!("initial state {initial} not in the state space")));
        }
        if psi.atoms.iter().any(|a| a.marks.len() != psi.copies || a.marks.iter().any(|m| m.u.len() != psi.num_states)) {
            return Err(Error::InconsistentRealization("atom marks have the wrong shape".into()));
        }
        (0..psi.copies)
            .map(|c| {
                let mut traj = Trajectory::new(initial.clone(), psi.horizon);
                let mut t = 0.0;
                for atom in &psi.atoms {
                    self.evolve_neutral(&mut traj, t, atom.time, rng);
                    t = atom.time;
                    let s = self.space.index_of(traj.last()).expect("state space is closed");
                    let row = self.cache.row(&atom.point, &self.graph, &self.space, s);
                    if let Some(next) = jump(&row, s, &atom.marks[c]) {
                        traj.record(t, self.space.state(next).clone());
                    }
                }
                self.evolve_neutral(&mut traj, t, psi.horizon, rng);
                Ok(traj)
            })
            .collect()
    }
}

/// F_{x,m,u,v}: stay unless u^ξ ≤ 1 − q(ξ,ξ), otherwise the least state index whose
/// cumulative normalized off-diagonal mass reaches v.
fn jump(row: &[(usize, f64)], s: usize, marks: &CopyMarks) -> Option<usize> {
    let stay = row.iter().find(|e| e.0 == s).map_or(0.0, |e| e.1);
    let leave = 1.0 - stay;
    if marks.u[s] > leave || leave <= 0.0 {
        return None;
    }
    let mut cum = 0.0;
    let mut last = None;
    for &(j, p) in row.iter().filter(|e| e.0 != s) {
        cum += p / leave;
        last = Some(j);
        if cum >= marks.v {
            return Some(j);
        }
    }
    last
}

fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map(|d| d.sample(rng) as u64).unwrap_or(0)
}
