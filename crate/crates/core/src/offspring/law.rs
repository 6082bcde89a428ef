use std::collections::HashSet;
use std::sync::Arc;

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Beta, Binomial, Distribution, Pareto};

use super::spec::{CustomReproduction, FitnessLaw, ModelSpec, Preset};
use crate::error::{invalid, Result};
use crate::model::Deme;

const MAX_REJECTIONS: u32 = 10_000;

/// A couple (i < j) with a prescribed number of children.
#[derive(Debug, Clone, PartialEq)]
pub struct Family {
    pub couple: (u32, u32),
    pub children: u64,
}

/// How the children of one deme pick their parental couples in one generation.
#[derive(Debug, Clone)]
pub enum DemeReproduction {
    /// Every child picks a uniform couple.
    Uniform,
    /// Prescribed families first; every other child picks a uniform couple outside them.
    Families(Vec<Family>),
    /// Couple {i,j} has probability proportional to W_i W_j.
    Weighted(Arc<WeightedAliasIndex<f64>>),
    /// Children sit on distinct couples.
    DistinctCouples,
}

/// The O(N)-sized part of one generation: migration, post-migration sizes and
/// the reproduction rule per deme. Children are drawn from it on demand.
#[derive(Debug, Clone)]
pub struct GenerationLaw {
    pub migration: Vec<f64>,
    pub migrants: Vec<u64>,
    pub deme_size: Vec<u64>,
    pub post_size: Vec<u64>,
    pub reproduction: Vec<DemeReproduction>,
    /// Migration draws rejected because a deme would have sent away more than it holds.
    pub rejections: u32,
}

pub(crate) fn uniform_couple<R: Rng + ?Sized>(n: u32, rng: &mut R) -> (u32, u32) {
    let i = rng.random_range(0..n);
    let mut j = rng.random_range(0..n - 1);
    if j >= i {
        j += 1;
    }
    (i.min(j), i.max(j))
}

impl DemeReproduction {
    /// Couple of a child outside any prescribed family.
    pub fn background_couple<R: Rng + ?Sized>(&self, n: u32, rng: &mut R) -> (u32, u32) {
        match self {
            DemeReproduction::Uniform | DemeReproduction::DistinctCouples => uniform_couple(n, rng),
            DemeReproduction::Families(fams) => loop {
                let c = uniform_couple(n, rng);
                if fams.iter().all(|f| f.couple != c) {
                    return c;
                }
            },
            DemeReproduction::Weighted(alias) => {
                let i = alias.sample(rng) as u32;
                loop {
                    let j = alias.sample(rng) as u32;
                    if j != i {
                        return (i.min(j), i.max(j));
                    }
                }
            }
        }
    }

    pub fn family_children(&self) -> u64 {
        match self {
            DemeReproduction::Families(f) => f.iter().map(|f| f.children).sum(),
            _ => 0,
        }
    }
}

/// Distinct individuals paired into `count` disjoint couples.
fn disjoint_couples<R: Rng + ?Sized>(n: u32, count: usize, rng: &mut R) -> Vec<(u32, u32)> {
    let mut seen = HashSet::new();
    let mut picks = Vec::with_capacity(2 * count);
    while picks.len() < 2 * count {
        let i = rng.random_range(0..n);
        if seen.insert(i) {
            picks.push(i);
        }
    }
    picks.chunks(2).map(|c| (c[0].min(c[1]), c[0].max(c[1]))).collect()
}

/// Index drawn proportionally to the given nonnegative weights.
fn pick_weighted<R: Rng + ?Sized>(weights: impl Iterator<Item = f64> + Clone, rng: &mut R) -> usize {
    let total: f64 = weights.clone().sum();
    let mut u = rng.random::<f64>() * total;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        last = i;
        if u < w {
            return i;
        }
        u -= w;
    }
    last
}

struct Extreme {
    focal: Deme,
    atom: usize,
}

fn binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    if p <= 0.0 {
        return 0;
    }
    Binomial::new(n, p.min(1.0)).expect("valid binomial").sample(rng)
}

/// Draws migration fractions and counts; conservative presets use one count per unordered pair.
fn sample_migration<R: Rng + ?Sized>(spec: &ModelSpec, rng: &mut R) -> Result<(Vec<f64>, Vec<u64>, Option<Extreme>)> {
    let g = &spec.graph;
    let n = spec.population_scale;
    let mut m = vec![0.0; g.num_edges()];
    let mut c = vec![0u64; g.num_edges()];
    let mut extreme = None;
    let set_pair = |m: &mut Vec<f64>, c: &mut Vec<u64>, v: Deme, w: Deme, count: u64| {
        for (a, b) in [(v, w), (w, v)] {
            let e = g.edge_id(a, b).expect("edge present");
            c[e] = count;
            m[e] = count as f64 / spec.deme_size(a) as f64;
        }
    };
    match &spec.preset {
        Preset::TwoDemeWf { sigma } | Preset::LargeOffspring { sigma, .. } => {
            let count = binomial(n, sigma / (2.0 * n as f64), rng);
            set_pair(&mut m, &mut c, 0, 1, count);
        }
        Preset::BetaFitness { a, b, .. } => {
            let p = super::scale::beta_fitness_event_probability(spec);
            if rng.random::<f64>() < p {
                let y: f64 = Beta::new(*a, *b).map_err(|e| invalid(e.to_string()))?.sample(rng);
                let count = (y * n as f64).floor() as u64;
                for e in 0..2 {
                    m[e] = y;
                    c[e] = count;
                }
            }
        }
        Preset::FvTorus(p) => {
            if rng.random::<f64>() < p.lambda / (2.0 * n as f64) {
                let k = g.num_demes();
                let centre = rng.random_range(0..k);
                let r = p.radii[pick_weighted(p.radii.iter().map(|r| r.1), rng)].0;
                let ball = p.ball(centre, r);
                let focal = ball[rng.random_range(0..ball.len())];
                for &w in ball.iter().filter(|&&w| w != focal) {
                    let (a, b) = p.source_params(w);
                    let y: f64 = Beta::new(a, b).map_err(|e| invalid(e.to_string()))?.sample(rng);
                    let e = g.edge_id(w, focal).expect("complete graph");
                    m[e] = y;
                    c[e] = (y * spec.deme_size(w) as f64).floor() as u64;
                }
                let atom = pick_weighted(p.xi.iter().map(|a| a.weight), rng);
                extreme = Some(Extreme { focal, atom });
            } else {
                for (v, w) in p.neighbour_pairs() {
                    let count = binomial(n, p.sigma / (2.0 * n as f64), rng);
                    set_pair(&mut m, &mut c, v, w, count);
                }
            }
        }
        Preset::Custom { migration, .. } => {
            for (e, &(v, _)) in g.edges().iter().enumerate() {
                m[e] = migration[e];
                c[e] = (migration[e] * spec.deme_size(v) as f64).floor() as u64;
            }
        }
    }
    Ok((m, c, extreme))
}

/// Samples the law of one generation.
pub fn sample_generation_law<R: Rng + ?Sized>(spec: &ModelSpec, rng: &mut R) -> Result<GenerationLaw> {
    let g = &spec.graph;
    let k = g.num_demes();
    let deme_size: Vec<u64> = (0..k).map(|v| spec.deme_size(v)).collect();
    let mut rejections = 0;
    let (migration, migrants, extreme) = loop {
        let (m, c, ext) = sample_migration(spec, rng)?;
        let fits = (0..k).all(|v| g.out_edges(v).iter().map(|&e| c[e]).sum::<u64>() <= deme_size[v]);
        if fits {
            break (m, c, ext);
        }
        rejections += 1;
        if rejections >= MAX_REJECTIONS {
            return Err(invalid("migration sampler keeps emptying a deme"));
        }
    };
    let post_size: Vec<u64> = (0..k)
        .map(|v| {
            let inflow: u64 = g.in_edges(v).iter().map(|&e| migrants[e]).sum();
            let outflow: u64 = g.out_edges(v).iter().map(|&e| migrants[e]).sum();
            deme_size[v] + inflow - outflow
        })
        .collect();

    let reproduction = (0..k)
        .map(|v| -> Result<DemeReproduction> {
            let n = deme_size[v] as u32;
            Ok(match &spec.preset {
                Preset::TwoDemeWf { .. } => DemeReproduction::Uniform,
                Preset::LargeOffspring { phi, psi, gamma, .. } => {
                    let eps = (2.0 * phi / (spec.population_scale as f64).powf(*gamma)).min(1.0);
                    if rng.random::<f64>() < eps {
                        let couple = uniform_couple(n, rng);
                        let children = (psi * post_size[v] as f64).floor() as u64;
                        DemeReproduction::Families(vec![Family { couple, children }])
                    } else {
                        DemeReproduction::Uniform
                    }
                }
                Preset::BetaFitness { alpha, fitness, .. } => match fitness {
                    FitnessLaw::Constant => DemeReproduction::Uniform,
                    FitnessLaw::Pareto => {
                        let law = Pareto::new(1.0, *alpha).map_err(|e| invalid(e.to_string()))?;
                        let w: Vec<f64> = (0..n).map(|_| law.sample(rng)).collect();
                        DemeReproduction::Weighted(Arc::new(WeightedAliasIndex::new(w).map_err(|e| invalid(e.to_string()))?))
                    }
                },
                Preset::FvTorus(p) => match &extreme {
                    Some(ext) if ext.focal == v => {
                        let fams = &p.xi[ext.atom].families;
                        let families = disjoint_couples(n, fams.len(), rng)
                            .into_iter()
                            .zip(fams)
                            .map(|(couple, f)| Family { couple, children: (f * post_size[v] as f64).floor() as u64 })
                            .collect();
                        DemeReproduction::Families(families)
                    }
                    _ => DemeReproduction::Uniform,
                },
                Preset::Custom { reproduction, .. } => match reproduction {
                    CustomReproduction::WrightFisher => DemeReproduction::Uniform,
                    CustomReproduction::DistinctCouples => {
                        let couples = deme_size[v] * (deme_size[v] - 1) / 2;
                        if post_size[v] > couples {
                            return Err(invalid(format!("deme {v} has more children than couples")));
                        }
                        DemeReproduction::DistinctCouples
                    }
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GenerationLaw { migration, migrants, deme_size, post_size, reproduction, rejections })
}

/// Calls `f` with the couple of every child of deme `v`.
pub fn for_each_child<R: Rng + ?Sized>(law: &GenerationLaw, v: Deme, rng: &mut R, mut f: impl FnMut((u32, u32))) {
    let n = law.deme_size[v] as u32;
    let total = law.post_size[v];
    let rule = &law.reproduction[v];
    match rule {
        DemeReproduction::DistinctCouples => {
            let mut used = HashSet::with_capacity(total as usize);
            while (used.len() as u64) < total {
                let c = uniform_couple(n, rng);
                if used.insert(c) {
                    f(c);
                }
            }
        }
        _ => {
            if let DemeReproduction::Families(fams) = rule {
                for fam in fams {
                    (0..fam.children).for_each(|_| f(fam.couple));
                }
            }
            (rule.family_children()..total).for_each(|_| f(rule.background_couple(n, rng)));
        }
    }
}
