//! `solvency` command-line front end.
//!
//! Every subcommand prints a single JSON document on stdout:
//! `{"command", "inputs", "result", "certified"}`. Diagnostics go to
//! stderr. Exit codes: 0 success, 1 usage, 2 model error, 3 resource cap,
//! 4 degenerate or unsolvable input.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use solvency::approx::ValueApproxResult;
use solvency::knapsack::{self, KnapsackInstance, Variant};
use solvency::model::{model_to_json, StateId};
use solvency::oracle::{simulate, Policy};
use solvency::par::Exec;
use solvency::unfold::DEFAULT_NODE_CAP;
use solvency::{
    approx_wr, build_unfolded, compute_bounds, compute_params, parse_model, solve_qualitative, value_approx,
    ApproxOptions, Configuration, Error, LayeredStrategy, Model, Rational, ReachMode, SolvencyMdp,
};

#[derive(Parser)]
#[command(name = "solvency", version, about = "Solvers for solvency MDPs with interest")]
struct Cli {
    /// Report wall-clock time on stderr.
    #[arg(long, global = true)]
    timing: bool,

    /// Run the data-parallel kernels on one thread, in order.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a model document.
    Validate { model: PathBuf },
    /// Safe and doomed wealth bounds per state.
    Bounds { model: PathBuf },
    /// Minimal wealth for almost-sure solvency and an oblivious strategy.
    Qualitative { model: PathBuf },
    /// Approximate WR(s,p) by bisection.
    Wr {
        model: PathBuf,
        #[command(flatten)]
        target: Target,
        #[command(flatten)]
        solver: SolverArgs,
        /// Write the final strategy here.
        #[arg(long)]
        strategy_out: Option<PathBuf>,
    },
    /// Approximate the value at one configuration.
    Value {
        model: PathBuf,
        #[arg(long)]
        state: String,
        #[arg(long, allow_hyphen_values = true)]
        wealth: Rational,
        #[arg(long)]
        eps: Rational,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        strategy_out: Option<PathBuf>,
    },
    /// Value-at-risk of a discounted model.
    Var {
        model: PathBuf,
        #[command(flatten)]
        target: Target,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Build the unfolded MDP and report its shape.
    Unfold {
        model: PathBuf,
        #[arg(long)]
        state: String,
        #[arg(long, allow_hyphen_values = true)]
        wealth: Rational,
        /// Derive grid and horizon from this accuracy.
        #[arg(long, conflicts_with_all = ["grid", "horizon"])]
        eps: Option<Rational>,
        #[arg(long, requires = "horizon")]
        grid: Option<Rational>,
        #[arg(long, requires = "grid")]
        horizon: Option<usize>,
        /// Include every node and edge.
        #[arg(long)]
        dump: bool,
        #[arg(long, default_value_t = DEFAULT_NODE_CAP)]
        max_nodes: usize,
    },
    /// Monte Carlo estimate of the probability of reaching a safe wealth.
    Simulate {
        model: PathBuf,
        #[arg(long)]
        state: String,
        #[arg(long, allow_hyphen_values = true)]
        wealth: Rational,
        /// Layered strategy file; the qualitative strategy is used otherwise.
        #[arg(long)]
        strategy: Option<PathBuf>,
        #[arg(long, default_value_t = 50)]
        steps: usize,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Encode a knapsack instance as a solvency MDP.
    GenKnapsack {
        instance: PathBuf,
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = GadgetVariant::Weights)]
        variant: GadgetVariant,
        /// Also run the solver on the gadget and report the decision.
        #[arg(long)]
        decide: bool,
    },
}

#[derive(Args)]
struct Target {
    #[arg(long)]
    state: String,
    #[arg(long)]
    prob: Rational,
    #[arg(long)]
    delta: Rational,
}

#[derive(Args)]
struct SolverArgs {
    /// Exact rational backward induction.
    #[arg(long, conflicts_with = "float")]
    exact: bool,
    /// Double-precision backward induction; results are not certified.
    #[arg(long)]
    float: bool,
    #[arg(long, default_value_t = DEFAULT_NODE_CAP)]
    max_nodes: usize,
    /// Stop once a quarter of the bracket is within delta.
    #[arg(long)]
    legacy_guard: bool,
    /// Raise the lower end when the value equals p.
    #[arg(long)]
    literal_branch: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum GadgetVariant {
    Weights,
    Normalized,
}

impl SolverArgs {
    fn options(&self, exec: Exec) -> ApproxOptions {
        let mode = if self.exact {
            ReachMode::Exact
        } else if self.float {
            ReachMode::Float
        } else {
            ReachMode::Auto
        };
        ApproxOptions {
            node_cap: self.max_nodes,
            mode,
            legacy_guard: self.legacy_guard,
            literal_branch: self.literal_branch,
            exec,
        }
    }
}

enum Failure {
    Usage(String),
    Model(String),
    Cap(String),
    Signal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Model(_) => 2,
            Failure::Cap(_) => 3,
            Failure::Signal(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Model(m) | Failure::Cap(m) | Failure::Signal(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::InvalidArgument(_) => Failure::Usage(msg),
            Error::NodeCap { .. } | Error::HorizonCap { .. } => Failure::Cap(msg),
            Error::ZeroProbability | Error::Degenerate(_) | Error::Unsolvable(_) => Failure::Signal(msg),
            Error::Malformed(_) | Error::InvalidModel(_) | Error::UnknownState(_) | Error::StrategyUndefined { .. } => {
                Failure::Model(msg)
            }
        }
    }
}

type Outcome = Result<(Value, bool), Failure>;

/// Input files in the order they were read, hashed together with argv.
struct Inputs {
    hasher: Sha256,
}

impl Inputs {
    fn new(args: &[String]) -> Self {
        let mut hasher = Sha256::new();
        for a in args.iter().skip(1) {
            hasher.update(a.as_bytes());
            hasher.update([0]);
        }
        Inputs { hasher }
    }

    fn read(&mut self, path: &Path) -> Result<String, Failure> {
        let text = fs::read_to_string(path).map_err(|e| Failure::Model(format!("{}: {e}", path.display())))?;
        self.hasher.update(text.as_bytes());
        self.hasher.update([0]);
        Ok(text)
    }

    fn model(&mut self, path: &Path) -> Result<Model, Failure> {
        let text = self.read(path)?;
        Ok(parse_model(&text)?)
    }

    fn solvency(&mut self, path: &Path) -> Result<SolvencyMdp, Failure> {
        Ok(self.model(path)?.into_solvency())
    }

    fn digest(self) -> String {
        hex::encode(self.hasher.finalize())
    }
}

fn write_json(path: &Path, v: &Value) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(v).expect("json renders");
    fs::write(path, text + "\n").map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn state(m: &SolvencyMdp, name: &str) -> Result<StateId, Failure> {
    Ok(m.state_id(name)?)
}

fn run(cmd: &Command, inputs: &mut Inputs, exec: Exec) -> Outcome {
    match cmd {
        Command::Validate { model } => {
            let model = inputs.model(model)?;
            let st = model.structure();
            let (kind, factor) = match &model {
                Model::Solvency(m) => ("solvency", json!({ "rho": m.rho() })),
                Model::Discounted(d) => ("discounted", json!({ "beta": d.beta() })),
            };
            let mut r = json!({
                "kind": kind,
                "states": st.num_states(),
                "actions": st.num_actions(),
                "markov_chain": st.is_markov_chain(),
            });
            r.as_object_mut().unwrap().extend(factor.as_object().unwrap().clone());
            Ok((r, true))
        }
        Command::Bounds { model } => {
            let m = inputs.solvency(model)?;
            let b = compute_bounds(&m);
            let mut r = Map::new();
            for s in m.states() {
                r.insert(m.state_name(s).into(), json!({ "L": b.lower[s], "U": b.upper[s] }));
            }
            Ok((Value::Object(r), true))
        }
        Command::Qualitative { model } => {
            let m = inputs.solvency(model)?;
            let q = solve_qualitative(&m);
            let mut r = Map::new();
            for s in m.states() {
                r.insert(
                    m.state_name(s).into(),
                    json!({ "wr1": q.wr_one[s], "action": m.action_name(q.strategy.action(s)) }),
                );
            }
            Ok((Value::Object(r), true))
        }
        Command::Wr {
            model,
            target,
            solver,
            strategy_out,
        } => {
            let m = inputs.solvency(model)?;
            let s = state(&m, &target.state)?;
            let r = approx_wr(&m, s, &target.prob, &target.delta, &solver.options(exec))?;
            if let (Some(path), Some(sigma)) = (strategy_out, &r.strategy) {
                write_json(path, &sigma.to_json(&m))?;
            }
            let res = json!({
                "a": r.a,
                "b": r.b,
                "iterations": r.iterations,
                "trace": r.trace,
            });
            Ok((res, r.certified))
        }
        Command::Value {
            model,
            state: name,
            wealth,
            eps,
            solver,
            strategy_out,
        } => {
            let m = inputs.solvency(model)?;
            let s = state(&m, name)?;
            let b = compute_bounds(&m);
            let r: ValueApproxResult = value_approx(&m, &b, s, wealth, eps, &solver.options(exec))?;
            if let Some(path) = strategy_out {
                write_json(path, &r.strategy.to_json(&m))?;
            }
            let res = json!({
                "v": r.v.to_json(),
                "params": r.params,
                "nodes": r.nodes,
                "strategy_origin": { "state": name, "wealth": wealth + eps },
            });
            Ok((res, r.exact))
        }
        Command::Var { model, target, solver } => {
            let d = inputs.model(model)?.into_discounted();
            let m = d.to_solvency();
            let s = state(&m, &target.state)?;
            let r = approx_wr(&m, s, &target.prob, &target.delta, &solver.options(exec))?;
            let res = json!({
                "var": -r.a.clone(),
                "interval": [-r.b, -r.a],
                "iterations": r.iterations,
            });
            Ok((res, r.certified))
        }
        Command::Unfold {
            model,
            state: name,
            wealth,
            eps,
            grid,
            horizon,
            dump,
            max_nodes,
        } => {
            let m = inputs.solvency(model)?;
            let s = state(&m, name)?;
            let b = compute_bounds(&m);
            let (grid, horizon) = match (eps, grid, horizon) {
                (Some(eps), _, _) => {
                    let p = compute_params(&m, &b, eps)?;
                    (p.grid, p.horizon)
                }
                (None, Some(g), Some(h)) => (g.clone(), *h),
                _ => {
                    return Err(Failure::Usage(
                        "either --eps or both --grid and --horizon are required".into(),
                    ))
                }
            };
            let u = build_unfolded(
                &m,
                &b,
                &grid,
                horizon,
                &Configuration::new(s, wealth.clone()),
                *max_nodes,
            )?;
            let mut res = serde_json::to_value(u.summary()).expect("summary renders");
            if *dump {
                let nodes: Vec<Value> = u
                    .nodes
                    .iter()
                    .enumerate()
                    .map(|(id, n)| {
                        let edges: Vec<Value> = n
                            .edges
                            .iter()
                            .map(|e| {
                                json!({
                                    "action": m.action_name(e.action),
                                    "dist": e.dist.iter().map(|(c, p)| json!([c, p])).collect::<Vec<_>>(),
                                })
                            })
                            .collect();
                        json!({
                            "id": id,
                            "layer": n.layer,
                            "state": m.state_name(n.class.state),
                            "class": n.class.kind.to_string(),
                            "edges": edges,
                        })
                    })
                    .collect();
                res["nodes"] = Value::Array(nodes);
            }
            Ok((res, true))
        }
        Command::Simulate {
            model,
            state: name,
            wealth,
            strategy,
            steps,
            trials,
            seed,
        } => {
            let m = inputs.solvency(model)?;
            let s = state(&m, name)?;
            let b = compute_bounds(&m);
            let start = Configuration::new(s, wealth.clone());
            let out = match strategy {
                Some(path) => {
                    let text = inputs.read(path)?;
                    let v: Value = serde_json::from_str(&text).map_err(|e| Failure::Model(e.to_string()))?;
                    let sigma = LayeredStrategy::from_json(&m, &v)?;
                    simulate(&m, &b, Policy::Layered(&sigma), &start, *steps, *trials, *seed, exec)?
                }
                None => {
                    let q = solve_qualitative(&m);
                    simulate(
                        &m,
                        &b,
                        Policy::Oblivious(&q.strategy),
                        &start,
                        *steps,
                        *trials,
                        *seed,
                        exec,
                    )?
                }
            };
            let res = json!({
                "hits": out.hits,
                "trials": out.trials,
                "frequency": out.frequency(),
            });
            Ok((res, false))
        }
        Command::GenKnapsack {
            instance,
            output,
            variant,
            decide,
        } => {
            let text = inputs.read(instance)?;
            let k = KnapsackInstance::parse(&text)?;
            let variant = match variant {
                GadgetVariant::Weights => Variant::Weights,
                GadgetVariant::Normalized => Variant::Normalized,
            };
            let g = knapsack::gen_gadget(&k, variant)?;
            let doc = model_to_json(&Model::Solvency(g.mdp.clone()));
            let mut res = json!({
                "p": g.p,
                "state": g.mdp.state_name(g.start),
                "rho": g.mdp.rho(),
                "gap": knapsack::decision_gap(&k, variant),
            });
            match output {
                Some(path) => write_json(path, &doc)?,
                None => res["model"] = doc,
            }
            let mut certified = true;
            if *decide {
                let r = knapsack::solve_gadget(
                    &g,
                    &ApproxOptions {
                        exec,
                        ..Default::default()
                    },
                )?;
                certified = r.certified;
                res["solvable"] = json!(r.b < knapsack::decision_gap(&k, variant));
                res["wr"] = json!({ "a": r.a, "b": r.b, "iterations": r.iterations });
            }
            Ok((res, certified))
        }
    }
}

fn name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Validate { .. } => "validate",
        Command::Bounds { .. } => "bounds",
        Command::Qualitative { .. } => "qualitative",
        Command::Wr { .. } => "wr",
        Command::Value { .. } => "value",
        Command::Var { .. } => "var",
        Command::Unfold { .. } => "unfold",
        Command::Simulate { .. } => "simulate",
        Command::GenKnapsack { .. } => "gen-knapsack",
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let exec = if cli.sequential {
        Exec::Sequential
    } else {
        Exec::default()
    };
    let started = Instant::now();
    let mut inputs = Inputs::new(&args);
    let outcome = run(&cli.command, &mut inputs, exec);
    if cli.timing {
        eprintln!("elapsed: {:.3}s", started.elapsed().as_secs_f64());
    }
    match outcome {
        Ok((result, certified)) => {
            let out = json!({
                "command": name(&cli.command),
                "inputs": inputs.digest(),
                "result": result,
                "certified": certified,
            });
            let text = serde_json::to_string_pretty(&out).expect("json renders");
            match writeln!(std::io::stdout().lock(), "{text}") {
                Ok(()) => ExitCode::SUCCESS,
                // a closed pipe is the reader's choice, not a failure
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
