//! Subcommand implementations. Each returns its rendered output and an
//! exit code; nothing here touches the process environment.

use std::fs;
use std::path::Path as FsPath;

use anyhow::{anyhow, bail, Context, Result};
use dunkl::densities::{check_quad_config, normalization_check, DensityEvaluator, DensityFamily, DensitySpec};
use dunkl::experiments::{exit_code, preset, run_experiment, McReport, RunContext, SamplerKind};
use dunkl::kernels1d::{bessel_j_1d, sph_bessel_imag, DunklQuadrature};
use dunkl::kernels_nd::{bessel_j_nd, dunkl_e_nd, moments, KernelFamily};
use dunkl::rng::stream;
use dunkl::simulate::{
    girsanov_weight, OracleDims, Path, ProcessFamily, ProcessSpec, SimConfig, Simulator, StepRule, SystemDescriptor,
};
use dunkl::{LogValue, Multiplicity, RootKind, RootSystemSpec};
use rayon::prelude::*;
use serde_json::{Map, Value};

use crate::config::*;

/// One table cell. Numbers use Rust's shortest round-trip formatting.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:?}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) => serde_json::Number::from_f64(*v).map_or(Value::String(format!("{v:?}")), Value::Number),
            Cell::Int(v) => Value::from(*v),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Empty => Value::Null,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(headers: Vec<String>) -> Self {
        Self { headers, rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut out = self.headers.join(",");
                out.push('\n');
                for r in &self.rows {
                    out.push_str(&r.iter().map(Cell::csv).collect::<Vec<_>>().join(","));
                    out.push('\n');
                }
                out
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| {
                        let m: Map<String, Value> = self.headers.iter().cloned().zip(r.iter().map(Cell::json)).collect();
                        Value::Object(m)
                    })
                    .collect();
                let mut s = serde_json::to_string_pretty(&rows).expect("tables serialize");
                s.push('\n');
                s
            }
        }
    }
}

pub struct Outcome {
    pub text: String,
    pub code: i32,
}

fn indexed(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}_{i}")).collect()
}

fn nums(v: &[f64]) -> Vec<Cell> {
    v.iter().map(|&x| Cell::Num(x)).collect()
}

fn root_system(kind: Option<KindArg>, rank: Option<usize>, k: Option<KArg>) -> Result<RootSystemSpec> {
    let kind = kind.map_or(RootKind::Rank1, |k| k.0);
    let rank = match (kind, rank) {
        (_, Some(r)) => r,
        (RootKind::Rank1, None) => 1,
        (other, None) => bail!("--rank is required for {other}"),
    };
    let k = k.map_or(Multiplicity::Single(1.0), |k| k.0);
    Ok(RootSystemSpec::new(kind, rank, k)?)
}

fn check_len(what: &str, v: &[f64], n: usize) -> Result<()> {
    if v.len() != n {
        bail!("{what} has {} components, the system has rank {n}", v.len());
    }
    Ok(())
}

/// Explicit points, else a rank-one grid, else `default` (rank one only).
fn points(explicit: &Option<Vec<Vector>>, grid: &Option<Grid>, n: usize, default: Grid, what: &str) -> Result<Vec<Vec<f64>>> {
    if let Some(xs) = explicit {
        for x in xs {
            check_len(what, &x.0, n)?;
        }
        return Ok(xs.iter().map(|x| x.0.clone()).collect());
    }
    if n != 1 {
        bail!("--{what} is required when the rank is {n}");
    }
    Ok(grid.unwrap_or(default).points().into_iter().map(|v| vec![v]).collect())
}

pub fn kernel(o: &KernelOpts) -> Result<Table> {
    let spec = root_system(o.kind, o.rank, o.k)?;
    let n = spec.rank();
    let lambda = o.lambda.as_ref().map_or(vec![1.0; n], |l| l.0.clone());
    check_len("lambda", &lambda, n)?;
    let xs = points(&o.x, &o.x_grid, n, Grid { lo: -10.0, hi: 10.0, n: 21 }, "x")?;
    let function = o.function.unwrap_or(KernelFunction::E);
    let mut headers = indexed("x", n);
    headers.extend(indexed("lambda", n));
    let k = spec.k_scalar();
    // second route for rank one: the integral representation
    let quad = if n == 1 && spec.kind() == RootKind::Rank1 && k > 0.0 {
        Some(DunklQuadrature::new(k)?)
    } else {
        None
    };
    match function {
        KernelFunction::E | KernelFunction::J | KernelFunction::Jalpha => {
            headers.extend(["sign", "log_abs", "value", "route_residual"].map(String::from));
            let mut t = Table::new(headers);
            for x in &xs {
                let (v, residual) = match function {
                    KernelFunction::E => {
                        let v = dunkl_e_nd(&spec, x, &lambda)?;
                        (v, quad.as_ref().map(|q| rel_diff(v, q.eval(x[0], lambda[0]))))
                    }
                    KernelFunction::J => {
                        let v = if n == 1 && spec.kind() == RootKind::Rank1 {
                            bessel_j_1d(k, x[0], lambda[0])?
                        } else {
                            bessel_j_nd(&spec, x, &lambda)?
                        };
                        let r = quad.as_ref().map(|q| {
                            let even = (q.eval(x[0], lambda[0]) + q.eval(-x[0], lambda[0])) * LogValue::from_f64(0.5);
                            rel_diff(v, even)
                        });
                        (v, r)
                    }
                    _ => {
                        let alpha = o.alpha.ok_or_else(|| anyhow!("--function jalpha needs --alpha"))?;
                        if n != 1 {
                            bail!("j_alpha is a rank-one function");
                        }
                        (sph_bessel_imag(alpha, x[0] * lambda[0])?, None)
                    }
                };
                let mut row = nums(x);
                row.extend(nums(&lambda));
                row.push(Cell::Int(v.sign().into()));
                row.push(Cell::Num(v.log_abs()));
                row.push(Cell::Num(v.to_f64()));
                row.push(residual.map_or(Cell::Empty, Cell::Num));
                t.push(row);
            }
            Ok(t)
        }
        KernelFunction::M1 | KernelFunction::M2 => {
            let family = match o.moment_kernel.unwrap_or(MomentKernel::Dunkl) {
                MomentKernel::Dunkl => KernelFamily::Dunkl,
                MomentKernel::Bessel => KernelFamily::Bessel,
            };
            if function == KernelFunction::M1 {
                headers.extend(indexed("m1", n));
            } else {
                headers.extend((1..=n).flat_map(|i| (1..=n).map(move |j| format!("m2_{i}{j}"))));
            }
            let mut t = Table::new(headers);
            for x in &xs {
                let m = moments(&spec, family, &lambda, x)?;
                let mut row = nums(x);
                row.extend(nums(&lambda));
                if function == KernelFunction::M1 {
                    row.extend(nums(&m.m1));
                } else {
                    let full = m
                        .m2_full
                        .ok_or_else(|| anyhow!("off-diagonal second moments need a product system"))?;
                    row.extend(nums(&full));
                }
                t.push(row);
            }
            Ok(t)
        }
    }
}

fn rel_diff(a: LogValue, b: LogValue) -> f64 {
    if a.sign() != b.sign() {
        return f64::INFINITY;
    }
    (a.log_abs() - b.log_abs()).exp_m1().abs()
}

fn density_family(f: Option<Family>) -> Result<DensityFamily> {
    Ok(match f.unwrap_or(Family::Dunkl) {
        Family::Bessel => DensityFamily::BesselDrift,
        Family::Dunkl => DensityFamily::DunklDrift,
        Family::Hybrid => DensityFamily::HybridDrift,
        other => bail!("{other:?} has no transition density; use bessel, dunkl or hybrid"),
    })
}

pub fn density(o: &DensityOpts) -> Result<Table> {
    let spec = root_system(o.kind, o.rank, o.k)?;
    let n = spec.rank();
    let family = density_family(o.family)?;
    let lambda = o.lambda.as_ref().map_or(vec![1.0; n], |l| l.0.clone());
    check_len("lambda", &lambda, n)?;
    let x = o.x.as_ref().map_or(vec![0.0; n], |x| x.0.clone());
    check_len("x", &x, n)?;
    let t = o.t.unwrap_or(1.0);
    if !(t > 0.0 && t.is_finite()) {
        bail!("--t must be positive, got {t}");
    }
    let ds = DensitySpec::new(family, spec, lambda)?;
    if o.normalization.unwrap_or(false) {
        let mass = normalization_check(&ds, t, &x, &check_quad_config())?;
        let mut headers = vec!["t".to_string()];
        headers.extend(indexed("x", n));
        headers.extend(["mass", "deviation"].map(String::from));
        let mut table = Table::new(headers);
        let mut row = vec![Cell::Num(t)];
        row.extend(nums(&x));
        row.extend([Cell::Num(mass), Cell::Num((mass - 1.0).abs())]);
        table.push(row);
        return Ok(table);
    }
    let default = if ds.on_chamber() {
        Grid { lo: 0.0, hi: 5.0, n: 21 }
    } else {
        Grid { lo: -5.0, hi: 5.0, n: 21 }
    };
    let ys = points(&o.y, &o.y_grid, n, default, "y")?;
    let eval = DensityEvaluator::new(&ds, t, &x)?;
    let mut headers = indexed("y", n);
    headers.extend(["log_density", "density"].map(String::from));
    let mut table = Table::new(headers);
    for y in &ys {
        let p = eval.log_density(y)?;
        let mut row = nums(y);
        row.push(Cell::Num(p.ln()));
        row.push(Cell::Num(p.to_f64()));
        table.push(row);
    }
    Ok(table)
}

fn process_spec(o: &SimulateOpts) -> Result<ProcessSpec> {
    let family = o.family.unwrap_or(Family::Dunkl);
    let (pf, system) = match family {
        Family::Bessel | Family::Dunkl | Family::Hybrid => {
            let pf = match family {
                Family::Bessel => ProcessFamily::BesselDrift,
                Family::Dunkl => ProcessFamily::DunklDrift,
                _ => ProcessFamily::HybridDrift,
            };
            (pf, SystemDescriptor::Roots(root_system(o.kind, o.rank, o.k)?))
        }
        Family::Chi | Family::Dyson | Family::SingularB => {
            let n = o.oracle_n.ok_or_else(|| anyhow!("--oracle-n is required for {family:?}"))?;
            let (pf, dims) = match family {
                Family::Chi => (ProcessFamily::OracleChi, OracleDims { m: None, n, d: None }),
                Family::Dyson => (
                    ProcessFamily::OracleDysonA,
                    OracleDims {
                        m: None,
                        n,
                        d: Some(o.oracle_d.unwrap_or(1)),
                    },
                ),
                _ => (
                    ProcessFamily::OracleSingularB,
                    OracleDims {
                        m: Some(o.oracle_m.ok_or_else(|| anyhow!("--oracle-m is required for singular-b"))?),
                        n,
                        d: Some(o.oracle_d.unwrap_or(1)),
                    },
                ),
            };
            (pf, SystemDescriptor::Oracle(dims))
        }
    };
    let dim = match &system {
        SystemDescriptor::Roots(rs) => rs.rank(),
        SystemDescriptor::Oracle(_) if pf == ProcessFamily::OracleChi => 1,
        SystemDescriptor::Oracle(d) => d.n,
    };
    let lambda = o.lambda.as_ref().map_or(vec![0.0; dim], |l| l.0.clone());
    let x0 = o.x0.as_ref().map_or(vec![0.0; dim], |x| x.0.clone());
    Ok(ProcessSpec::new(pf, system, lambda, x0)?)
}

pub fn simulate(o: &SimulateOpts, seed: u64) -> Result<Table> {
    let ps = process_spec(o)?;
    let dim = ps.dim()?;
    let terminal = o.terminal.unwrap_or(false);
    let with_weight = o.weight.unwrap_or(false);
    let defaults = SimConfig::default();
    let cfg = SimConfig {
        dt0: o.dt0.unwrap_or(defaults.dt0),
        horizon: o.horizon.unwrap_or(defaults.horizon),
        step_rule: match o.step_rule {
            Some(StepRuleArg::Fixed) => StepRule::Fixed,
            _ => StepRule::Adaptive,
        },
        boundary_eps: o.boundary_eps.unwrap_or(defaults.boundary_eps),
        rate_cap_factor: o.rate_cap_factor.unwrap_or(defaults.rate_cap_factor),
        seed,
        path_index: 0,
        record_path: !terminal,
        with_weight,
    };
    cfg.validate()?;
    let paths = o.paths.unwrap_or(1);
    if paths == 0 {
        bail!("--paths must be at least 1");
    }
    let first = o.path_index.unwrap_or(0);
    let sim = Simulator::new(&ps, &cfg)?;
    let results: Vec<(u64, Path)> = (0..paths as u64)
        .into_par_iter()
        .map(|i| {
            let idx = first + i;
            let mut rng = stream(seed, "simulate", idx);
            sim.run(&mut rng).map(|p| (idx, p))
        })
        .collect::<dunkl::Result<_>>()?;

    let mut headers = vec!["path_index".to_string()];
    if !terminal {
        headers.push("time".into());
    }
    headers.extend(indexed("x", dim));
    if !terminal {
        headers.push("jump_root".into());
    }
    if with_weight {
        headers.push("weight".into());
    }
    let mut table = Table::new(headers);
    for (idx, path) in &results {
        let weight = match (with_weight, path.terminal_weight) {
            (false, _) => None,
            (true, Some(w)) => Some(w),
            (true, None) => Some(girsanov_weight(&ps, path.terminal(), cfg.horizon)?.to_f64()),
        };
        if terminal {
            let mut row = vec![Cell::Int(*idx as i64)];
            row.extend(nums(path.terminal()));
            row.extend(weight.map(Cell::Num));
            table.push(row);
            continue;
        }
        let mut jumps = path.jumps.iter().peekable();
        let last = path.times.len() - 1;
        for (j, (time, state)) in path.times.iter().zip(&path.states).enumerate() {
            // a jump is reported on the first grid time at or after it
            let mut root = None;
            while let Some(jp) = jumps.peek() {
                if jp.time <= *time {
                    root = Some(jp.root + 1);
                    jumps.next();
                } else {
                    break;
                }
            }
            let mut row = vec![Cell::Int(*idx as i64), Cell::Num(*time)];
            row.extend(nums(state));
            row.push(Cell::Int(root.unwrap_or(0) as i64));
            if with_weight {
                row.push(if j == last { weight.map_or(Cell::Empty, Cell::Num) } else { Cell::Empty });
            }
            table.push(row);
        }
    }
    Ok(table)
}

pub fn constants(o: &ConstantsOpts) -> Result<Table> {
    let spec = root_system(o.kind, o.rank, o.k)?;
    let k = match spec.multiplicity() {
        Multiplicity::Single(k) => format!("{k:?}"),
        Multiplicity::Pair([a, b]) => format!("{a:?};{b:?}"),
    };
    let log_c = spec.norm_constant_log()?;
    let log_d = spec.sphere_constant_log()?;
    let mut t = Table::new(
        ["kind", "rank", "k", "gamma", "weyl_order", "log_c_k", "c_k", "log_d_k", "d_k"]
            .map(String::from)
            .to_vec(),
    );
    t.push(vec![
        Cell::Text(spec.kind().to_string()),
        Cell::Int(spec.rank() as i64),
        Cell::Text(k),
        Cell::Num(spec.gamma_exponent()),
        Cell::Int(spec.weyl_order() as i64),
        Cell::Num(log_c),
        Cell::Num(log_c.exp()),
        Cell::Num(log_d),
        Cell::Num(log_d.exp()),
    ]);
    Ok(t)
}

fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect()
}

/// Runs the selected experiments; the exit code follows the verdicts.
pub fn experiment(o: &ExperimentOpts, seed: u64, format: Format) -> Result<Outcome> {
    let which = o.which.unwrap_or(Which::All);
    let mut list = match &o.experiments {
        Some(list) => list.clone(),
        None => preset(o.preset.as_deref().unwrap_or("acceptance"))?,
    };
    list.retain(|e| which.matches(e.spec.kind()));
    if list.is_empty() {
        bail!("no {which:?} experiments in the selected list");
    }
    if let Some(n) = o.paths {
        if n < 2 {
            bail!("--paths must be at least 2");
        }
        for e in &mut list {
            *e.spec.n_paths_mut() = n;
        }
    }
    let ctx = RunContext {
        seed,
        sampler: match o.sampler {
            Some(SamplerArg::Scheme) => SamplerKind::Scheme,
            _ => SamplerKind::Exact,
        },
        timing: o.timing.unwrap_or(false),
        ..RunContext::default()
    };
    let reports: Vec<McReport> = list
        .iter()
        .map(|e| run_experiment(e, &ctx).with_context(|| format!("experiment {}", e.name)))
        .collect::<Result<_>>()?;
    if let Some(dir) = &o.out_dir {
        write_reports(dir, &reports)?;
    }
    let text = match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&reports)?;
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut t = Table::new(
                ["experiment_id", "kind", "verdict", "sampler", "n_paths"]
                    .map(String::from)
                    .to_vec(),
            );
            for r in &reports {
                t.push(vec![
                    Cell::Text(r.experiment_id.clone()),
                    Cell::Text(r.kind.clone()),
                    Cell::Text(serde_json::to_value(r.verdict)?.as_str().unwrap_or_default().to_string()),
                    Cell::Text(r.sampler.clone()),
                    Cell::Int(r.n_paths as i64),
                ]);
            }
            t.render(Format::Csv)
        }
    };
    Ok(Outcome {
        text,
        code: exit_code(&reports),
    })
}

fn write_reports(dir: &FsPath, reports: &[McReport]) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for r in reports {
        let stem = file_stem(&r.experiment_id);
        fs::write(dir.join(format!("{stem}.json")), r.to_json() + "\n")?;
        fs::write(dir.join(format!("{stem}.csv")), r.to_csv())?;
    }
    Ok(())
}

/// Dispatches a resolved command.
pub fn run(r: &Resolved) -> Result<Outcome> {
    let table = match &r.command {
        Command::Kernel(o) => kernel(o)?,
        Command::Density(o) => density(o)?,
        Command::Simulate(o) => simulate(o, r.seed)?,
        Command::Constants(o) => constants(o)?,
        Command::Experiment(o) => return experiment(o, r.seed, r.format),
    };
    Ok(Outcome {
        text: table.render(r.format),
        code: 0,
    })
}
