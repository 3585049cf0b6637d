//! Command-line options and the JSON run configuration.
//!
//! Every option is an `Option` so that a config file can fill whatever the
//! command line leaves unset: explicit flags win, then the file, then the
//! built-in defaults applied by the commands.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dunkl::experiments::NamedExperiment;
use dunkl::{Multiplicity, RootKind};
use serde::{Deserialize, Serialize};

/// Comma-separated list of reals; a JSON array in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector(pub Vec<f64>);

impl FromStr for Vector {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
            .collect::<Result<Vec<_>, _>>()
            .map(Vector)
    }
}

/// `k` or `k1,k2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct KArg(pub Multiplicity);

impl FromStr for KArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match Vector::from_str(s)?.0.as_slice() {
            [k] => Ok(KArg(Multiplicity::Single(*k))),
            [k1, k2] => Ok(KArg(Multiplicity::Pair([*k1, *k2]))),
            _ => Err(format!("expected `k` or `k1,k2`, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct KindArg(pub RootKind);

impl FromStr for KindArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map(KindArg)
            .map_err(|_| format!("unknown root system `{s}` (A, B, D, Rank1, ProductZ2)"))
    }
}

/// `lo:hi:n`, `n ≥ 2` equally spaced points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        let step = (self.hi - self.lo) / (self.n - 1) as f64;
        (0..self.n).map(|i| self.lo + step * i as f64).collect()
    }
}

impl FromStr for Grid {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, n] = parts.as_slice() else {
            return Err(format!("expected `lo:hi:n`, got `{s}`"));
        };
        let num = |p: &str| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}"));
        let g = Grid {
            lo: num(lo)?,
            hi: num(hi)?,
            n: n.trim().parse().map_err(|e| format!("`{n}`: {e}"))?,
        };
        if g.n < 2 || !(g.hi > g.lo) {
            return Err(format!("grid `{s}` needs hi > lo and n >= 2"));
        }
        Ok(g)
    }
}

impl TryFrom<String> for Grid {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<Grid> for String {
    fn from(g: Grid) -> String {
        format!("{:?}:{:?}:{}", g.lo, g.hi, g.n)
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&String::from(*self))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum KernelFunction {
    /// Dunkl kernel E_k(x, λ).
    E,
    /// Generalized Bessel function J_k(x, λ).
    J,
    /// Modified spherical Bessel j_α(i·xλ) (rank one).
    Jalpha,
    /// First modified moments ∇_λ log F.
    M1,
    /// Second modified moments H_λ F / F.
    M2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MomentKernel {
    Dunkl,
    Bessel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Bessel,
    Dunkl,
    Hybrid,
    Chi,
    Dyson,
    SingularB,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum StepRuleArg {
    Fixed,
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SamplerArg {
    Exact,
    Scheme,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    Slln,
    Clt,
    Moments,
    Girsanov,
    Radial,
    Density,
    All,
}

impl Which {
    pub fn matches(self, kind: &str) -> bool {
        match self {
            Which::All => true,
            w => w.to_possible_value().is_some_and(|v| v.get_name() == kind),
        }
    }
}

/// Fills every `None` field of `$s` from `$b`.
macro_rules! merge_fields {
    ($s:ident, $b:ident; $($f:ident),* $(,)?) => {
        $( if $s.$f.is_none() { $s.$f = $b.$f; } )*
    };
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelOpts {
    /// Root system: A, B, D, Rank1 or ProductZ2.
    #[arg(long)]
    pub kind: Option<KindArg>,
    #[arg(long)]
    pub rank: Option<usize>,
    /// Multiplicity `k`, or `k1,k2` for B.
    #[arg(long)]
    pub k: Option<KArg>,
    /// Spectral parameter (comma-separated).
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<Vector>,
    /// Evaluation point (comma-separated); repeat for several points.
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<Vec<Vector>>,
    /// Rank-one grid `lo:hi:n`.
    #[arg(long, allow_hyphen_values = true)]
    pub x_grid: Option<Grid>,
    #[arg(long, value_enum)]
    pub function: Option<KernelFunction>,
    /// Kernel underlying m1/m2.
    #[arg(long, value_enum)]
    pub moment_kernel: Option<MomentKernel>,
    /// Index α of j_α.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
}

impl KernelOpts {
    pub fn merge_under(&mut self, b: Self) {
        merge_fields!(self, b; kind, rank, k, lambda, x, x_grid, function, moment_kernel, alpha);
    }
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensityOpts {
    /// bessel, dunkl or hybrid.
    #[arg(long, value_enum)]
    pub family: Option<Family>,
    #[arg(long)]
    pub kind: Option<KindArg>,
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long)]
    pub k: Option<KArg>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<Vector>,
    /// Time.
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<f64>,
    /// Starting point (defaults to the origin).
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<Vector>,
    /// Target point; repeat for several.
    #[arg(long, allow_hyphen_values = true)]
    pub y: Option<Vec<Vector>>,
    /// Rank-one grid `lo:hi:n` of target points.
    #[arg(long, allow_hyphen_values = true)]
    pub y_grid: Option<Grid>,
    /// Report the total mass instead of pointwise values.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub normalization: Option<bool>,
}

impl DensityOpts {
    pub fn merge_under(&mut self, b: Self) {
        merge_fields!(self, b; family, kind, rank, k, lambda, t, x, y, y_grid, normalization);
    }
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateOpts {
    #[arg(long, value_enum)]
    pub family: Option<Family>,
    #[arg(long)]
    pub kind: Option<KindArg>,
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long)]
    pub k: Option<KArg>,
    /// Matrix size n of an oracle.
    #[arg(long)]
    pub oracle_n: Option<usize>,
    /// Row count m of the singular-value oracle.
    #[arg(long)]
    pub oracle_m: Option<usize>,
    /// Field dimension d ∈ {1, 2, 4} of an oracle.
    #[arg(long)]
    pub oracle_d: Option<u8>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<Vector>,
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<Vector>,
    /// Horizon.
    #[arg(long = "T")]
    #[serde(rename = "T")]
    pub horizon: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub dt0: Option<f64>,
    #[arg(long, value_enum)]
    pub step_rule: Option<StepRuleArg>,
    #[arg(long, allow_hyphen_values = true)]
    pub boundary_eps: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub rate_cap_factor: Option<f64>,
    /// Number of paths.
    #[arg(long)]
    pub paths: Option<usize>,
    /// Index of the first path.
    #[arg(long)]
    pub path_index: Option<u64>,
    /// Print terminal states only.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub terminal: Option<bool>,
    /// Add the Girsanov weight of each terminal state.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub weight: Option<bool>,
}

impl SimulateOpts {
    pub fn merge_under(&mut self, b: Self) {
        merge_fields!(self, b; family, kind, rank, k, oracle_n, oracle_m, oracle_d, lambda, x0, horizon,
            dt0, step_rule, boundary_eps, rate_cap_factor, paths, path_index, terminal, weight);
    }
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentOpts {
    /// Experiment kind to run from the preset, or `all`.
    #[arg(value_enum)]
    #[serde(skip)]
    pub which: Option<Which>,
    /// Preset name: acceptance, rank1-dunkl-k1, boundary-counterexample.
    #[arg(long, visible_alias = "presets")]
    pub preset: Option<String>,
    /// Override the path count of every experiment.
    #[arg(long)]
    pub paths: Option<usize>,
    /// Write one JSON and one CSV report per experiment here.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Record wall-clock time in the reports.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub timing: Option<bool>,
    #[arg(long, value_enum)]
    pub sampler: Option<SamplerArg>,
    /// Explicit experiment list (config file only); replaces the preset.
    #[arg(skip)]
    pub experiments: Option<Vec<NamedExperiment>>,
}

impl ExperimentOpts {
    pub fn merge_under(&mut self, b: Self) {
        merge_fields!(self, b; which, preset, paths, out_dir, timing, sampler, experiments);
    }
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstantsOpts {
    #[arg(long)]
    pub kind: Option<KindArg>,
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long)]
    pub k: Option<KArg>,
}

impl ConstantsOpts {
    pub fn merge_under(&mut self, b: Self) {
        merge_fields!(self, b; kind, rank, k);
    }
}

/// Contents of a `--config` file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    /// Output file; standard output when absent.
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
    pub kernel: Option<KernelOpts>,
    pub density: Option<DensityOpts>,
    pub simulate: Option<SimulateOpts>,
    pub experiment: Option<ExperimentOpts>,
    pub constants: Option<ConstantsOpts>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn emit(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs serialize")
    }
}

#[derive(Debug, Parser)]
#[command(name = "dunkl", version, about = "Dunkl kernels, transition densities and Monte Carlo checks")]
pub struct Cli {
    /// JSON run configuration; explicit flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: $DUNKL_WORKERS, else all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output file (default: standard output).
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand)]
pub enum Command {
    /// Evaluate E_k, J_k, j_α or the modified moments.
    Kernel(KernelOpts),
    /// Evaluate transition densities.
    Density(DensityOpts),
    /// Simulate sample paths.
    Simulate(SimulateOpts),
    /// Run Monte Carlo experiments and write reports.
    Experiment(ExperimentOpts),
    /// Print the normalization constants of a root system.
    Constants(ConstantsOpts),
}

/// Global settings after merging flags, config and environment.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub seed: u64,
    pub workers: Option<usize>,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub command: Command,
}

pub const WORKERS_ENV: &str = "DUNKL_WORKERS";

/// Merges the command line over the config file; the worker count falls
/// back to `env_workers` (the value of [`WORKERS_ENV`]).
pub fn resolve(cli: Cli, cfg: RunConfig, env_workers: Option<&str>) -> Result<Resolved, String> {
    let env = match env_workers {
        Some(s) => Some(
            s.trim()
                .parse::<usize>()
                .map_err(|e| format!("{WORKERS_ENV}=`{s}`: {e}"))?,
        ),
        None => None,
    };
    let workers = cli.workers.or(cfg.workers).or(env);
    if workers == Some(0) {
        return Err("workers must be at least 1".into());
    }
    let mut command = cli.command;
    match &mut command {
        Command::Kernel(o) => o.merge_under(cfg.kernel.unwrap_or_default()),
        Command::Density(o) => o.merge_under(cfg.density.unwrap_or_default()),
        Command::Simulate(o) => o.merge_under(cfg.simulate.unwrap_or_default()),
        Command::Experiment(o) => o.merge_under(cfg.experiment.unwrap_or_default()),
        Command::Constants(o) => o.merge_under(cfg.constants.unwrap_or_default()),
    }
    Ok(Resolved {
        seed: cli.seed.or(cfg.seed).unwrap_or(0),
        workers,
        output: cli.output.or(cfg.output),
        format: cli.format.or(cfg.format).unwrap_or_default(),
        command,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cli(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("dunkl").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn value_parsers() {
        assert_eq!("1, 2.5".parse::<Vector>().unwrap().0, vec![1.0, 2.5]);
        assert!("1,x".parse::<Vector>().is_err());
        assert_eq!("0.5".parse::<KArg>().unwrap().0, Multiplicity::Single(0.5));
        assert_eq!("1,2".parse::<KArg>().unwrap().0, Multiplicity::Pair([1.0, 2.0]));
        assert!("1,2,3".parse::<KArg>().is_err());
        assert_eq!("ProductZ2".parse::<KindArg>().unwrap().0, RootKind::ProductZ2);
        assert!("E8".parse::<KindArg>().is_err());
        let g: Grid = "-1:1:5".parse().unwrap();
        assert_eq!(g.points(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert!("1:0:5".parse::<Grid>().is_err());
        assert!("0:1:1".parse::<Grid>().is_err());
    }

    #[test]
    fn flags_override_config() {
        let cfg = RunConfig::parse(
            r#"{"seed": 7, "format": "json", "workers": 3,
                "kernel": {"k": 2, "lambda": [1.5], "function": "j"}}"#,
        )
        .unwrap();
        let r = resolve(cli(&["--seed", "9", "kernel", "--k", "1"]), cfg, Some("5")).unwrap();
        assert_eq!(r.seed, 9);
        assert_eq!(r.format, Format::Json);
        assert_eq!(r.workers, Some(3));
        let Command::Kernel(o) = r.command else { panic!() };
        assert_eq!(o.k, Some(KArg(Multiplicity::Single(1.0))));
        assert_eq!(o.lambda, Some(Vector(vec![1.5])));
        assert_eq!(o.function, Some(KernelFunction::J));
    }

    #[test]
    fn environment_is_the_last_resort() {
        let r = resolve(cli(&["constants"]), RunConfig::default(), Some("4")).unwrap();
        assert_eq!(r.workers, Some(4));
        assert_eq!(r.seed, 0);
        assert_eq!(r.format, Format::Csv);
        assert!(resolve(cli(&["constants"]), RunConfig::default(), Some("four")).is_err());
        assert!(resolve(cli(&["--workers", "0", "constants"]), RunConfig::default(), None).is_err());
    }

    #[test]
    fn unknown_keys_are_rejected_with_their_name() {
        let e = RunConfig::parse(r#"{"seed": 1, "sede": 2}"#).unwrap_err();
        assert!(e.to_string().contains("sede"), "{e}");
        let e = RunConfig::parse("{\n \"kernel\": {\"lamda\": [1]}\n}").unwrap_err();
        assert!(e.to_string().contains("lamda"), "{e}");
        assert_eq!(e.line(), 2);
    }

    #[test]
    fn short_flags_do_not_exist() {
        assert!(Cli::try_parse_from(["dunkl", "-s", "1", "constants"]).is_err());
        assert!(Cli::try_parse_from(["dunkl", "kernel", "-k", "1"]).is_err());
    }

    #[test]
    fn presets_alias() {
        let Command::Experiment(o) = cli(&["experiment", "all", "--presets", "acceptance"]).command else {
            panic!()
        };
        assert_eq!(o.preset.as_deref(), Some("acceptance"));
        assert_eq!(o.which, Some(Which::All));
    }

    fn opt<T: std::fmt::Debug + Clone + 'static>(s: impl Strategy<Value = T> + 'static) -> BoxedStrategy<Option<T>> {
        proptest::option::of(s).boxed()
    }

    fn finite() -> impl Strategy<Value = f64> {
        prop_oneof![-1e6..1e6f64, any::<f64>().prop_filter("finite", |v| v.is_finite())]
    }

    fn vector() -> impl Strategy<Value = Vector> {
        proptest::collection::vec(finite(), 1..4).prop_map(Vector)
    }

    fn karg() -> impl Strategy<Value = KArg> {
        prop_oneof![
            (0.0..5.0f64).prop_map(|k| KArg(Multiplicity::Single(k))),
            (0.0..5.0f64, 0.0..5.0f64).prop_map(|(a, b)| KArg(Multiplicity::Pair([a, b]))),
        ]
    }

    fn kind() -> impl Strategy<Value = KindArg> {
        prop_oneof![
            Just(RootKind::A),
            Just(RootKind::B),
            Just(RootKind::D),
            Just(RootKind::Rank1),
            Just(RootKind::ProductZ2)
        ]
        .prop_map(KindArg)
    }

    fn grid() -> impl Strategy<Value = Grid> {
        (-1e6..1e6f64, 1e-3..1e3f64, 2usize..500).prop_map(|(lo, w, n)| Grid { lo, hi: lo + w, n })
    }

    prop_compose! {
        fn kernel_opts()(kind in opt(kind()), rank in opt(1usize..9), k in opt(karg()),
                         lambda in opt(vector()), x in opt(proptest::collection::vec(vector(), 0..3)),
                         x_grid in opt(grid()),
                         function in opt(prop_oneof![Just(KernelFunction::E), Just(KernelFunction::M2)]),
                         alpha in opt(finite())) -> KernelOpts {
            KernelOpts { kind, rank, k, lambda, x, x_grid, function, moment_kernel: None, alpha }
        }
    }

    prop_compose! {
        fn simulate_opts()(family in opt(prop_oneof![Just(Family::Dunkl), Just(Family::SingularB)]),
                           k in opt(karg()), x0 in opt(vector()), horizon in opt(1e-3..1e3f64),
                           dt0 in opt(1e-6..1.0f64), paths in opt(1usize..100000),
                           path_index in opt(any::<u64>()), terminal in opt(any::<bool>()),
                           oracle_d in opt(prop_oneof![Just(1u8), Just(2), Just(4)])) -> SimulateOpts {
            SimulateOpts { family, k, x0, horizon, dt0, paths, path_index, terminal, oracle_d, ..Default::default() }
        }
    }

    prop_compose! {
        fn run_config()(seed in opt(any::<u64>()), workers in opt(1usize..64),
                        output in opt("[a-z]{1,8}(/[a-z]{1,8})?\\.csv".prop_map(PathBuf::from)),
                        format in opt(prop_oneof![Just(Format::Csv), Just(Format::Json)]),
                        kernel in opt(kernel_opts()), simulate in opt(simulate_opts()),
                        preset in opt("[a-z0-9-]{1,20}"), paths in opt(1usize..100000),
                        timing in opt(any::<bool>()),
                        constants in opt((opt(kind()), opt(1usize..9), opt(karg()))
                            .prop_map(|(kind, rank, k)| ConstantsOpts { kind, rank, k })),
                        t in opt(1e-3..10.0f64), y in opt(proptest::collection::vec(vector(), 1..3)))
                        -> RunConfig {
            RunConfig {
                seed, workers, output, format, kernel, simulate, constants,
                density: t.map(|t| DensityOpts { t: Some(t), y, family: Some(Family::Hybrid), ..Default::default() }),
                experiment: preset.map(|p| ExperimentOpts {
                    preset: Some(p), paths, timing, sampler: Some(SamplerArg::Scheme), ..Default::default()
                }),
            }
        }
    }

    proptest! {
        #[test]
        fn config_round_trip(cfg in run_config()) {
            prop_assert_eq!(RunConfig::parse(&cfg.emit()).unwrap(), cfg);
        }
    }

    #[test]
    fn experiment_lists_round_trip() {
        let cfg = RunConfig {
            experiment: Some(ExperimentOpts {
                experiments: Some(dunkl::experiments::preset("acceptance").unwrap()),
                ..Default::default()
            }),
            ..Default::default()
        };
        assert_eq!(RunConfig::parse(&cfg.emit()).unwrap(), cfg);
    }
}
