use nalgebra::DVector;

use crate::error::{invalid, Result};
use crate::limit::{transition_kernel, LimitModel};
use crate::model::TypedPartition;
use crate::trajectory::Cylinder;

/// P(all l copies hit the cylinder) under exp(t𝓛) from (initial, …, initial).
pub fn exact_cylinder_moment(model: &LimitModel, initial: &TypedPartition, cylinder: &Cylinder, loci: usize) -> Result<f64> {
    let space = model.space();
    let start = space.index_of(initial).ok_or_else(|| invalid(format!("{initial} not in the state space")))?;
    let generator = model.joint_generator(loci)?;
    let m = space.len();
    let dim = generator.nrows();
    let start_joint = (0..loci).fold(0, |acc, _| acc * m + start);
    let mut mass = DVector::<f64>::zeros(dim);
    mass[start_joint] = 1.0;
    let mut now = 0.0;
    for (t, target) in &cylinder.points {
        if *t > now {
            mass = transition_kernel(&generator, t - now)?.transpose() * mass;
            now = *t;
        }
        let hit: Vec<bool> = space.states().iter().map(|s| target.matches(s)).collect();
        for j in 0..dim {
            let mut rest = j;
            let mut all = true;
            for _ in 0..loci {
                all &= hit[rest % m];
                rest /= m;
            }
            if !all {
                mass[j] = 0.0;
            }
        }
    }
    Ok(mass.sum())
}
