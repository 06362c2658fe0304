use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use congestion_core::congestion::{self, CoreOptions, PairDistances};
use congestion_core::conjecture::{self, ConjectureOptions};
use congestion_core::domain::{ConvexDomain, DEFAULT_SAMPLES};
use congestion_core::faircut::{self, FairCutOptions, FairCutResult};
use congestion_core::graph::{self, TrafficMode};
use congestion_core::marching::{self, Threshold};
use congestion_core::rng::derive_seed;
use congestion_core::{Error, TangentVector};
use serde_json::{json, Value};

use crate::config::{self, Loaded};
use crate::report::{coord_header, envelope, nums, write_csv, write_json};
use crate::{Common, ConjectureArgs, CoreArgs, FaircutArgs, GraphArgs, MarchArgs};

pub enum Outcome {
    Success,
    /// Budget exhausted or nothing found.
    Incomplete,
}

impl Outcome {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            Outcome::Success => ExitCode::SUCCESS,
            Outcome::Incomplete => ExitCode::from(2),
        }
    }
}

pub fn error_exit_code(e: &anyhow::Error) -> ExitCode {
    match e.downcast_ref::<Error>() {
        Some(Error::EmptyRegion(_)) => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

struct Run {
    loaded: Loaded,
    samples: usize,
    seed: u64,
    out: PathBuf,
    threads: usize,
    direction_search: Option<String>,
}

fn setup(common: &Common) -> Result<Run> {
    let loaded = config::load(common.config.as_deref())?;
    if let Some(t) = common.threads {
        if t == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().context("cannot size the thread pool")?;
    }
    let c = &loaded.config;
    let out = match (&common.out, &c.out) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => loaded.resolve(p),
        (None, None) => PathBuf::from("out"),
    };
    fs::create_dir_all(&out).with_context(|| format!("cannot create {}", out.display()))?;
    Ok(Run {
        samples: common.samples.or(c.samples).unwrap_or(DEFAULT_SAMPLES),
        seed: common.seed.or(c.seed).unwrap_or(0),
        direction_search: common.direction_search.clone().or_else(|| c.direction_search.clone()),
        threads: rayon::current_num_threads(),
        out,
        loaded,
    })
}

fn vecs(v: &[TangentVector]) -> Vec<Vec<f64>> {
    v.iter().map(|t| t.vec().to_vec()).collect()
}

fn faircut_json(fc: &FairCutResult, m: usize) -> Value {
    let lo = 1.0 / (m as f64 + 1.0) - 4.0 * fc.phi.std_error;
    let hi = 0.5 + 4.0 * fc.phi.std_error;
    json!({
        "center": fc.center.coords(),
        "phi": fc.phi,
        "argmin": fc.argmin.vec(),
        "minimizing_directions": vecs(&fc.minimizing_directions),
        "minimizing_fractions": fc.minimizing_fractions,
        "tol_dir": fc.tol_dir,
        "covering": fc.covering,
        "selected": vecs(&fc.selected),
        "converged": fc.converged,
        "on_boundary": fc.on_boundary,
        "evaluations": fc.evaluations,
        "search": fc.search,
        "start": fc.start.coords(),
        "marched_half_spaces": fc.region.as_ref().map_or(0, |r| r.marches.len()),
        "within_bounds": fc.phi.fraction >= lo && fc.phi.fraction <= hi,
        "plateau": fc.plateau,
        "trace": fc.trace,
    })
}

fn write_faircut_csv(run: &Run, fc: &FairCutResult, ambient: usize) -> Result<()> {
    let mut header = coord_header("x", ambient);
    header.extend(["phi", "step", "accepted"].map(String::from));
    let rows: Vec<Vec<String>> = fc
        .trace
        .iter()
        .map(|t| {
            let mut r = nums(&t.point);
            r.extend([t.phi.to_string(), t.step.to_string(), t.accepted.to_string()]);
            r
        })
        .collect();
    write_csv(&run.out, "phi_grid.csv", &header, &rows)?;
    let m = fc.scan.first().map_or(0, |s| s.0.len());
    let mut header = coord_header("c", m);
    header.extend(["fraction", "minimizing"].map(String::from));
    let rows: Vec<Vec<String>> = fc
        .scan
        .iter()
        .map(|(c, f)| {
            let mut r = nums(c);
            r.extend([f.to_string(), (*f <= fc.phi.fraction + fc.tol_dir).to_string()]);
            r
        })
        .collect();
    write_csv(&run.out, "directions.csv", &header, &rows)
}

fn faircut_options(run: &Run, max_evals: Option<usize>) -> FairCutOptions {
    FairCutOptions {
        samples: run.samples,
        seed: run.seed,
        max_evals: max_evals.or(run.loaded.config.max_evals).unwrap_or(FairCutOptions::default().max_evals),
        search: run.direction_search.clone(),
        march_probes: run.loaded.config.probes,
    }
}

fn base_parameters(run: &Run, domain: &ConvexDomain, opts: &FairCutOptions) -> serde_json::Map<String, Value> {
    let mut p = serde_json::Map::new();
    p.insert("domain".into(), serde_json::to_value(domain.description()).expect("description serializes"));
    p.insert("samples".into(), json!(run.samples));
    p.insert("seed".into(), json!(run.seed));
    p.insert("max_evals".into(), json!(opts.max_evals));
    p.insert("direction_search".into(), json!(opts.search));
    p.insert("probes".into(), json!(opts.march_probes));
    p
}

pub fn faircut(args: &FaircutArgs) -> Result<Outcome> {
    let run = setup(&args.common)?;
    let domain = run.loaded.domain()?;
    let opts = faircut_options(&run, args.max_evals);
    let params = Value::Object(base_parameters(&run, &domain, &opts));
    let fc = faircut::fair_cut_search(&domain, &opts)?;
    let report = envelope("faircut", params, run.threads, faircut_json(&fc, domain.dim()));
    write_json(&run.out, "report.json", &report)?;
    write_faircut_csv(&run, &fc, domain.space().ambient_dim())?;
    println!(
        "fair-cut index {:.5} ± {:.5} at {:?} ({})",
        fc.phi.fraction,
        fc.phi.std_error,
        fc.center.coords(),
        if fc.converged { "converged" } else { "budget exhausted" }
    );
    Ok(if fc.converged { Outcome::Success } else { Outcome::Incomplete })
}

pub fn core(args: &CoreArgs) -> Result<Outcome> {
    let run = setup(&args.common)?;
    let domain = run.loaded.domain()?;
    if domain.space().is_flat() {
        bail!("the congestion core needs k > 0: the blocking radius ln(1+√2)/k diverges when k = 0");
    }
    let opts = faircut_options(&run, args.max_evals);
    let n_pairs = args.pairs.or(run.loaded.config.pairs).unwrap_or(run.samples);
    let r0 = congestion_core::blocking_radius(domain.space().k())?;
    let radii = match args.radii.clone().or_else(|| run.loaded.config.radii.clone()) {
        Some(r) => r,
        None => (1..=10).map(|i| 0.25 * i as f64 * r0).collect(),
    };
    let mut params = base_parameters(&run, &domain, &opts);
    params.insert("pairs".into(), json!(n_pairs));
    params.insert("radii".into(), json!(radii));
    let core = congestion::congestion_core(&domain, &CoreOptions { faircut: opts.clone(), n_pairs })?;
    let pairs = PairDistances::new(&domain, &core.x0, n_pairs, derive_seed(run.seed, "core.traffic"))?;
    let profile: Vec<_> = radii.iter().map(|&r| pairs.report(r)).collect();
    let m = domain.dim();
    let bound = 1.0 / (m as f64 + 1.0);
    let results = json!({
        "x0": core.x0.coords(),
        "r0": core.r0,
        "density": core.report.density,
        "n_pairs": core.report.n_pairs,
        "lower_bound": bound,
        "meets_lower_bound": core.report.density.fraction >= bound - 4.0 * core.report.density.std_error,
        "faircut": faircut_json(&core.faircut, m),
    });
    write_json(&run.out, "report.json", &envelope("core", Value::Object(params), run.threads, results))?;
    let rows: Vec<Vec<String>> = profile
        .iter()
        .map(|t| vec![t.r.to_string(), t.density.fraction.to_string(), t.density.std_error.to_string()])
        .collect();
    write_csv(&run.out, "density_profile.csv", &["r", "density", "std_error"].map(String::from), &rows)?;
    println!(
        "congestion core: D(x0, r0 = {:.5}) = {:.5} ± {:.5} (bound {:.5})",
        core.r0, core.report.density.fraction, core.report.density.std_error, bound
    );
    Ok(if core.faircut.converged { Outcome::Success } else { Outcome::Incomplete })
}

pub fn march(args: &MarchArgs) -> Result<Outcome> {
    let run = setup(&args.common)?;
    let domain = run.loaded.domain()?;
    let m = domain.dim();
    let probes = args.probes.or(run.loaded.config.probes).unwrap_or(8);
    if probes < m + 1 {
        eprintln!("warning: {probes} probes is fewer than m + 1 = {}; the region may be loose", m + 1);
    }
    let threshold = match args.threshold.clone().or(run.loaded.threshold()?) {
        Some(s) => Threshold::parse(&s)?,
        None => Threshold::FairCut,
    };
    let th = threshold.value(m);
    let mut params = serde_json::Map::new();
    params.insert("domain".into(), serde_json::to_value(domain.description())?);
    params.insert("samples".into(), json!(run.samples));
    params.insert("seed".into(), json!(run.seed));
    params.insert("probes".into(), json!(probes));
    params.insert("threshold".into(), json!(th));
    let region = marching::march_region(&domain, probes, th, run.samples, run.seed)?;
    let samples = domain.samples(run.samples, derive_seed(run.seed, "march.summary"))?;
    let summary = marching::region_summary_with(&region, &samples)?;
    let excluded: Vec<Value> = region
        .marches
        .iter()
        .map(|h| {
            json!({
                "base": h.half_space.base().coords(),
                "direction": h.half_space.normal().vec(),
                "fraction": h.fraction,
                "t_star": h.t_star,
                "chord": h.chord,
                "saturated": h.saturated,
            })
        })
        .collect();
    let results = json!({
        "threshold": th,
        "excluded": excluded,
        "volume_fraction": summary.volume_fraction,
        "centroid": summary.sample_centroid.coords(),
        "diameter_estimate": summary.diameter_estimate,
        "accepted": summary.accepted,
    });
    write_json(&run.out, "report.json", &envelope("march", Value::Object(params), run.threads, results))?;
    let rows: Vec<Vec<String>> =
        samples.points().iter().filter(|p| region.contains(p)).map(|p| nums(p.coords())).collect();
    write_csv(&run.out, "region_points.csv", &coord_header("x", domain.space().ambient_dim()), &rows)?;
    println!(
        "march region: {} half-spaces, volume fraction {:.5}, centroid {:?}",
        region.marches.len(),
        summary.volume_fraction.fraction,
        summary.sample_centroid.coords()
    );
    Ok(Outcome::Success)
}

pub fn graph(args: &GraphArgs) -> Result<Outcome> {
    let run = setup(&args.common)?;
    let c = &run.loaded.config;
    let path = match (&args.graph, &c.graph) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => run.loaded.resolve(p),
        (None, None) => bail!("no graph given: use --graph PATH or \"graph\" in the config"),
    };
    let mode: TrafficMode = args.mode.clone().or_else(|| c.mode.clone()).as_deref().unwrap_or("any-geodesic").parse()?;
    let radii = args.radii.clone().or_else(|| c.radii.clone()).unwrap_or_default();
    let delta_samples = args.delta_samples.or(c.delta_samples).unwrap_or(0);
    let g = graph::load_graph(&path).with_context(|| format!("graph {}", path.display()))?;
    let params = json!({
        "graph": path.display().to_string(),
        "edges": g.edges(),
        "mode": mode,
        "radii": radii,
        "delta_samples": delta_samples,
        "seed": run.seed,
    });
    let rep = graph::core_report(&g, &radii, mode, delta_samples, run.seed)?;
    write_json(&run.out, "report.json", &envelope("graph", params, run.threads, serde_json::to_value(&rep)?))?;
    let mut header = vec!["vertex".to_string(), "D".to_string()];
    header.extend(radii.iter().map(|r| format!("D_r{r}")));
    let rows: Vec<Vec<String>> = (0..g.n_vertices())
        .map(|x| {
            let mut r = vec![x.to_string(), rep.density[x].to_string()];
            r.extend(rep.density_r.iter().map(|col| col[x].to_string()));
            r
        })
        .collect();
    write_csv(&run.out, "densities.csv", &header, &rows)?;
    println!(
        "core vertex {} with D = {:.5}; δ = {}",
        rep.core_vertex,
        rep.density[rep.core_vertex],
        rep.delta.map_or("not computed".to_string(), |d| d.to_string())
    );
    Ok(Outcome::Success)
}

pub fn conjecture(args: &ConjectureArgs) -> Result<Outcome> {
    let run = setup(&args.common)?;
    let c = &run.loaded.config;
    let defaults = ConjectureOptions::default();
    let opts = ConjectureOptions {
        dims: args.dims.clone().or_else(|| c.dims.clone()).unwrap_or(defaults.dims),
        k: args.k.or(c.k).unwrap_or(defaults.k),
        size: c.size.unwrap_or(defaults.size),
        random_simplices: c.random_simplices.unwrap_or(defaults.random_simplices),
        samples: run.samples,
        seed: run.seed,
        max_evals: args.max_evals.or(c.max_evals).unwrap_or(defaults.max_evals),
    };
    let params = json!({
        "dims": opts.dims,
        "k": opts.k,
        "size": opts.size,
        "random_simplices": opts.random_simplices,
        "samples": opts.samples,
        "seed": opts.seed,
        "max_evals": opts.max_evals,
    });
    let findings = conjecture::conjecture_sweep(&opts)?;
    let results = json!({ "findings": findings });
    write_json(&run.out, "report.json", &envelope("conjecture", params, run.threads, results))?;
    let header = ["dim", "k", "label", "method", "phi", "std_error", "simplex_formula", "inverse_e", "matches_simplex_formula", "consistent_with_inverse_e"]
        .map(String::from);
    let rows: Vec<Vec<String>> = findings
        .iter()
        .map(|f| {
            vec![
                f.dim.to_string(),
                f.k.to_string(),
                f.label.clone(),
                f.method.to_string(),
                f.phi.to_string(),
                f.std_error.to_string(),
                f.simplex_formula.to_string(),
                f.inverse_e.to_string(),
                f.matches_simplex_formula.to_string(),
                f.consistent_with_inverse_e.to_string(),
            ]
        })
        .collect();
    write_csv(&run.out, "findings.csv", &header, &rows)?;
    for f in &findings {
        println!(
            "m={} {:<9} Φ̂ = {:.5} ± {:.5}  (m/(m+1))^m = {:.5}  1/e = {:.5}",
            f.dim, f.label, f.phi, f.std_error, f.simplex_formula, f.inverse_e
        );
    }
    Ok(Outcome::Success)
}
