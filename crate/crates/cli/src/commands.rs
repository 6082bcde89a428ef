use pedcoal::analysis::{
    annealed_check, annealed_coalescence_time, expected_absorption_times, moment_of_moments, sfs_summary, MeanEstimate, MomentConfig,
};
use pedcoal::limit::{joint_generator, transition_kernel, LimitModel};
use pedcoal::model::{Deme, StateSpace, TypedPartition};
use pedcoal::offspring::ModelSpec;
use pedcoal::pedigree::{
    generate_pedigree_lazily, locus_seed, pedigree_seed, run_quenched_replicates, QuenchedConfig, QuenchedTrajectory, TimeScale,
};
use pedcoal::seeds::{self, label};
use pedcoal::trajectory::{Cylinder, Target, Trajectory};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{preset_defaults, Config, SfsSource, PRESET_NAMES};
use crate::error::CliError;
use crate::output::RunOutput;

fn seed_for(config: &Config, stream: &str) -> u64 {
    seeds::derive(config.seed, &[label(stream)])
}

fn sampling(config: &Config, spec: &ModelSpec) -> Result<Vec<Deme>, CliError> {
    let demes = config.experiment.sampling()?;
    match demes.iter().find(|&&v| v >= spec.graph.num_demes()) {
        Some(v) => Err(CliError::Validation(format!("sampled deme {v} does not exist; the graph has {} demes", spec.graph.num_demes()))),
        None => Ok(demes),
    }
}

fn cylinder(config: &Config) -> Result<Cylinder, CliError> {
    let blocks = config.experiment.block_targets()?;
    let points = config.experiment.times.iter().zip(blocks).map(|(&t, b)| (t, Target::BlockCount(b))).collect();
    Ok(Cylinder::new(points)?)
}

pub fn presets() -> Value {
    let describe = |name: &str| match name {
        "two_deme_wf" => json!({
            "description": "Two demes of N diploids; every child picks a uniform couple; Binomial(N, sigma/(2N)) migrants each way per generation.",
            "parameters": { "sigma": "migration rate on the coalescent time scale (>= 0)" },
        }),
        "large_offspring" => json!({
            "description": "Two-deme Wright-Fisher with, per deme and generation, probability phi/N^gamma of one couple producing a fraction psi of the children.",
            "parameters": {
                "sigma": "migration rate (>= 0)",
                "phi": "event intensity (> 0)",
                "psi": "family fraction in (0, 1)",
                "gamma": "event probability exponent (> 0); gamma = 1 balances events against pairwise coalescence",
            },
        }),
        "beta_fitness" => json!({
            "description": "Two demes with Pareto(alpha) couple fitness and Beta(a, b) migration fractions once per coalescent time unit.",
            "parameters": {
                "alpha": "fitness tail index in (1, 2)",
                "a": "migration Beta first shape (> 0)",
                "b": "migration Beta second shape (> 0)",
                "fitness": "\"pareto\" or \"constant\"",
            },
        }),
        "fv_torus" => json!({
            "description": "l1 x l2 torus of demes with nearest-neighbour migration and rare spatial reproduction events drawn from (nu, Xi).",
            "parameters": {
                "l1": "torus width", "l2": "torus height", "rho": "radius scale", "sigma": "neighbour migration rate",
                "lambda": "event intensity", "radii": "nu as [radius, probability] pairs",
                "source_beta": "[a, b] migration Beta parameters, one pair or one per deme",
                "xi": "Xi as a list of {weight, families} atoms",
            },
        }),
        _ => unreachable!("only the listed presets are described"),
    };
    let list: Vec<Value> = PRESET_NAMES
        .iter()
        .map(|&name| {
            let mut entry = describe(name);
            entry["name"] = json!(name);
            entry["defaults"] = serde_json::to_value(preset_defaults(name).expect("known preset")).expect("preset serializes");
            entry
        })
        .collect();
    json!({ "presets": list, "population_scale": "N, the reference deme size (>= 2)" })
}

#[derive(Serialize)]
struct KernelRow {
    t: f64,
    from_index: usize,
    from: String,
    to_index: usize,
    to: String,
    probability: f64,
}

pub fn kernel(config: &Config, out: &mut RunOutput) -> Result<Value, CliError> {
    let spec = config.model_spec()?;
    let rate = config.rate_spec(&spec)?;
    let n = sampling(config, &spec)?.len();
    let space = StateSpace::new(n, &spec.graph)?;
    let generator = joint_generator(&space, &spec.graph, &rate, 1)?;
    let mut rows = Vec::new();
    let mut worst_row = 0.0f64;
    for &t in &config.experiment.times {
        let p = transition_kernel(&generator, t)?;
        for i in 0..space.len() {
            worst_row = worst_row.max((p.row(i).sum() - 1.0).abs());
            for j in (0..space.len()).filter(|&j| p[(i, j)] != 0.0) {
                rows.push(KernelRow {
                    t,
                    from_index: i,
                    from: space.state(i).to_string(),
                    to_index: j,
                    to: space.state(j).to_string(),
                    probability: p[(i, j)],
                });
            }
        }
    }
    out.csv("kernel.csv", rows)?;
    Ok(json!({ "states": space.len(), "times": config.experiment.times, "max_row_sum_error": worst_row }))
}

#[derive(Serialize)]
struct GenerationRecord {
    generation: u64,
    migration: Vec<f64>,
    migrants: Vec<u64>,
    post_migration_size: Vec<u64>,
    family_children: Vec<u64>,
}

#[derive(Serialize)]
struct ChildRecord {
    generation: u64,
    child: pedcoal::pedigree::Individual,
    parentage: pedcoal::pedigree::Parentage,
}

pub fn simulate_pedigree(config: &Config, out: &mut RunOutput) -> Result<Value, CliError> {
    let spec = config.model_spec()?;
    let generations: Vec<_> = generate_pedigree_lazily(&spec, seed_for(config, "pedigree"))
        .take(config.experiment.generations as usize)
        .collect::<Result<_, _>>()?;
    let summary: Vec<GenerationRecord> = generations
        .iter()
        .map(|g| GenerationRecord {
            generation: g.index,
            migration: g.law.migration.clone(),
            migrants: g.law.migrants.clone(),
            post_migration_size: g.law.post_size.clone(),
            family_children: g.law.reproduction.iter().map(|r| r.family_children()).collect(),
        })
        .collect();
    out.json_lines("generations.jsonl", &summary)?;
    let children = generations.iter().flat_map(|g| {
        g.materialize(&spec.graph).into_iter().map(move |(child, parentage)| ChildRecord { generation: g.index, child, parentage })
    });
    out.json_lines("pedigree.jsonl", children)?;
    Ok(
        json!({ "generations": generations.len(), "deme_sizes": (0..spec.graph.num_demes()).map(|v| spec.deme_size(v)).collect::<Vec<_>>() }),
    )
}

#[derive(Serialize)]
struct PathRecord<'a> {
    replicate: u64,
    copy: usize,
    trajectory: &'a Trajectory,
}

#[derive(Serialize)]
struct PathSummary {
    replicate: u64,
    copy: usize,
    absorption_time: Option<f64>,
    final_blocks: usize,
}

fn path_tables<'a>(runs: impl IntoIterator<Item = (u64, &'a [Trajectory])>) -> (Vec<PathRecord<'a>>, Vec<PathSummary>) {
    let mut records = Vec::new();
    let mut summaries = Vec::new();
    for (replicate, paths) in runs {
        for (copy, trajectory) in paths.iter().enumerate() {
            summaries.push(PathSummary {
                replicate,
                copy,
                absorption_time: trajectory.absorption_time(),
                final_blocks: trajectory.last().num_blocks(),
            });
            records.push(PathRecord { replicate, copy, trajectory });
        }
    }
    (records, summaries)
}

fn quenched_runs(config: &Config, spec: &ModelSpec, sampling: &[Deme]) -> Result<(TimeScale, Vec<QuenchedTrajectory>), CliError> {
    let seed = seed_for(config, "quenched");
    let scale = TimeScale::for_spec(spec, sampling[0], seed_for(config, "scale"))?;
    let qc = QuenchedConfig { sampling: sampling.to_vec(), horizon: config.experiment.horizon, time_scale: scale, diagnostics: true };
    let runs = (0..config.experiment.pedigrees)
        .into_par_iter()
        .map(|p| {
            let loci: Vec<u64> = (0..config.experiment.loci).map(|j| locus_seed(seed, p, j)).collect();
            run_quenched_replicates(spec, &qc, pedigree_seed(seed, p), &loci)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((scale, runs))
}

pub fn simulate_quenched(config: &Config, out: &mut RunOutput) -> Result<Value, CliError> {
    let spec = config.model_spec()?;
    let sampling = sampling(config, &spec)?;
    let (scale, runs) = quenched_runs(config, &spec, &sampling)?;
    let (records, summaries) = path_tables(runs.iter().enumerate().map(|(p, r)| (p as u64, r.loci.as_slice())));
    out.json_lines("trajectories.jsonl", &records)?;
    out.csv("quenched.csv", &summaries)?;
    let outside: Vec<f64> = runs.iter().filter_map(|r| r.diagnostics.map(|d| d.rescaled_outside_time)).collect();
    Ok(json!({
        "time_scale": scale,
        "pedigrees": runs.len(),
        "loci_per_pedigree": config.experiment.loci,
        "absorbed_fraction": summaries.iter().filter(|s| s.absorption_time.is_some()).count() as f64 / summaries.len().max(1) as f64,
        "mean_rescaled_outside_time": outside.iter().sum::<f64>() / outside.len().max(1) as f64,
    }))
}

fn limit_runs(
    config: &Config,
    model: &LimitModel,
    initial: &TypedPartition,
) -> Result<Vec<(pedcoal::limit::PsiRealization, Vec<Trajectory>)>, CliError> {
    let seed = seed_for(config, "limit");
    let copies = config.experiment.loci as usize;
    (0..config.experiment.realizations)
        .into_par_iter()
        .map(|r| {
            let mut rng = seeds::stream(seed, &[r]);
            let psi = model.sample_psi(config.experiment.horizon, copies, &mut rng)?;
            let paths = model.run_psi_driven(&psi, initial, &mut rng)?;
            Ok((psi, paths))
        })
        .collect()
}

pub fn simulate_limit(config: &Config, out: &mut RunOutput) -> Result<Value, CliError> {
    let spec = config.model_spec()?;
    let sampling = sampling(config, &spec)?;
    let model = LimitModel::new(spec.graph.clone(), sampling.len(), config.rate_spec(&spec)?)?;
    let runs = limit_runs(config, &model, &TypedPartition::singletons(&sampling))?;
    out.json_lines("psi.jsonl", runs.iter().enumerate().map(|(r, (psi, _))| json!({ "realization": r, "psi": psi })))?;
    let (records, summaries) = path_tables(runs.iter().enumerate().map(|(r, (_, paths))| (r as u64, paths.as_slice())));
    out.json_lines("trajectories.jsonl", &records)?;
    out.csv("limit.csv", &summaries)?;
    Ok(json!({
        "realizations": runs.len(),
        "copies": config.experiment.loci,
        "absorbed_fraction": summaries.iter().filter(|s| s.absorption_time.is_some()).count() as f64 / summaries.len().max(1) as f64,
    }))
}

#[derive(Serialize)]
struct EstimateRow {
    quantity: String,
    t: Option<f64>,
    source: &'static str,
    value: f64,
    std_error: Option<f64>,
    ci_low: Option<f64>,
    ci_high: Option<f64>,
}

impl EstimateRow {
    fn estimate(quantity: &str, t: Option<f64>, source: &'static str, e: &MeanEstimate) -> Self {
        Self {
            quantity: quantity.into(),
            t,
            source,
            value: e.mean,
            std_error: Some(e.std_error),
            ci_low: Some(e.ci_low),
            ci_high: Some(e.ci_high),
        }
    }

    fn exact(quantity: &str, t: Option<f64>, source: &'static str, value: f64) -> Self {
        Self { quantity: quantity.into(), t, source, value, std_error: None, ci_low: None, ci_high: None }
    }
}

pub fn moments(config: &Config, out: &mut RunOutput) -> Result<Value, CliError> {
    let spec = config.model_spec()?;
    let rate = config.rate_spec(&spec)?;
    let mc = MomentConfig {
        sampling: sampling(config, &spec)?,
        cylinder: cylinder(config)?,
        moment: config.experiment.moment,
        pedigrees: config.experiment.pedigrees,
        loci_per_pedigree: config.experiment.loci,
        psi_realizations: config.experiment.realizations,
        copies_per_psi: config.experiment.loci,
        seed: seed_for(config, "moments"),
    };
    let result = moment_of_moments(&spec, &rate, &mc)?;
    let quantity = format!("E[P(C)^{}]", result.moment);
    let mut rows = vec![
        EstimateRow::estimate(&quantity, None, "finite", &result.finite),
        EstimateRow::estimate(&quantity, None, "limit_mc", &result.limit_mc),
    ];
    rows.extend(result.limit_exact.map(|v| EstimateRow::exact(&quantity, None, "limit_exact", v)));
    out.csv("moments.csv", &rows)?;
    Ok(serde_json::to_value(&result)?)
}

pub fn compare(config: &Config, out: &mut RunOutput) -> Result<Value, CliError> {
    let spec = config.model_spec()?;
    let rate = config.rate_spec(&spec)?;
    let sampling = sampling(config, &spec)?;
    let seed = seed_for(config, "compare");
    let mut rows = Vec::new();
    for (i, &t) in config.experiment.times.iter().enumerate() {
        let c = annealed_check(
            &spec,
            &rate,
            &sampling,
            &Cylinder::merged_by(t),
            config.experiment.pedigrees,
            config.experiment.loci,
            seeds::derive(seed, &[i as u64]),
        )?;
        rows.push(EstimateRow::estimate("P(merged by t)", Some(t), "finite", &c.finite));
        rows.push(EstimateRow::exact("P(merged by t)", Some(t), "limit_exact", c.exact));
    }
    let time = annealed_coalescence_time(
        &spec,
        &sampling,
        config.experiment.pedigrees,
        config.experiment.loci,
        config.experiment.horizon,
        seeds::derive(seed, &[label("tmrca")]),
    )?;
    let model = LimitModel::new(spec.graph.clone(), sampling.len(), rate)?;
    let exact = expected_absorption_times(&model)?
        [model.space().index_of(&TypedPartition::singletons(&sampling)).expect("sampled state is enumerated")];
    rows.push(EstimateRow {
        quantity: "mean T_MRCA".into(),
        t: None,
        source: "finite",
        value: time.mean,
        std_error: Some(time.std_error),
        ci_low: None,
        ci_high: None,
    });
    rows.push(EstimateRow::exact("mean T_MRCA", None, "limit_exact", exact));
    out.csv("compare.csv", &rows)?;
    Ok(json!({ "rows": rows.len(), "truncated_tmrca_replicates": time.truncated }))
}

pub fn sfs(config: &Config, out: &mut RunOutput) -> Result<Value, CliError> {
    let spec = config.model_spec()?;
    let sampling = sampling(config, &spec)?;
    let paths: Vec<Trajectory> = match config.experiment.sfs_source {
        SfsSource::Limit => {
            let model = LimitModel::new(spec.graph.clone(), sampling.len(), config.rate_spec(&spec)?)?;
            limit_runs(config, &model, &TypedPartition::singletons(&sampling))?.into_iter().flat_map(|(_, p)| p).collect()
        }
        SfsSource::Quenched => quenched_runs(config, &spec, &sampling)?.1.into_iter().flat_map(|r| r.loci).collect(),
    };
    let rows: Vec<_> = (1..sampling.len()).map(|r| sfs_summary(&paths, r)).collect();
    out.csv("sfs.csv", &rows)?;
    Ok(json!({ "source": config.experiment.sfs_source, "paths": paths.len() }))
}
