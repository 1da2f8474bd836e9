//! The `hs` command line. Exit codes: 0 committed or verified, 1 rejected or violation, 2 error.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Value};

use hubspoke_core::dots::{action, apply_template, Menu, WiringTemplate};
use hubspoke_core::geometry::{LatticeSpace, LinearConstraint};
use hubspoke_core::laws::{coherence_suite, metric_suite};
use hubspoke_core::optimize::{build_metric_reimpl, lipschitz_probe};
use hubspoke_core::stochastic::{
    safety_radius, sample_kernel, three_way_compare, wasserstein_cure, KernelShape, KernelSpec, Scenario, ScenarioKind,
    BANANA_CURVATURE, BANANA_SIGMA, BIMODAL_OFFSET, DEFAULT_SIGMA,
};
use hubspoke_core::transport::{
    closure_fix_demo, render_closure_fix, verify_adjunction, verify_frobenius, verify_functoriality, verify_lax_bc,
    verify_strict_bc, ClosureFix, CommutingSquare, LawReport,
};

use crate::acceptance::{run_all, run_criterion, DEFAULT_SEED};
use crate::defs::{parse_step, parse_weights, NamedRelation, ObjectiveDef, RelationDef, RelationSpec, SpaceDef};
use crate::error::{invalid, PlatformError, Result};
use crate::ledger::{Ledger, LedgerEntry, LedgerVerdict, SystemClock};
use crate::registry::{demo_registry, Registry, Resolver};
use crate::workflow::{workflow_a, workflow_b, workflow_c, RelationChange};

#[derive(Debug, Parser)]
#[command(name = "hs", version, about = "Hub-and-spoke portfolio calculus on simplex lattices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, Default, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct SeedArg {
    /// RNG seed; `HS_SEED` overrides the default.
    #[arg(long, env = "HS_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the lattice points of a constrained simplex.
    Enumerate {
        #[arg(long)]
        dim: usize,
        /// Grid step `1/N`.
        #[arg(long)]
        step: String,
        /// Linear constraint such as `x1<=0.6`; repeatable.
        #[arg(long)]
        constraint: Vec<String>,
        /// Print only the count.
        #[arg(long)]
        count: bool,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Check one transport law on a fixture; exit 1 on a counterexample.
    Verify {
        #[arg(long, value_enum, required_unless_present = "suite")]
        law: Option<LawArg>,
        #[arg(long, required_unless_present = "suite")]
        fixture: Option<PathBuf>,
        /// Run a generated suite instead of a fixture.
        #[arg(long, value_enum, conflicts_with_all = ["law", "fixture"])]
        suite: Option<SuiteArg>,
        #[arg(long, default_value_t = 500)]
        instances: usize,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Reproduce a worked counterexample.
    Demo {
        #[command(subcommand)]
        demo: DemoCommand,
    },
    /// Tabulate the metric re-implementation `argmin_y F(x, y)`.
    BuildMap {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        hub: PathBuf,
        #[arg(long)]
        spoke: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute a menu `K ⊙ R1 ⊙ R2 ⊙ …` or a wiring template.
    Menu {
        #[arg(long)]
        hub: PathBuf,
        /// Spoke space; the unconstrained simplex on the hub grid when absent.
        #[arg(long)]
        spoke: Option<PathBuf>,
        /// `track:ε`, `fee_cap:τ`, `turnover:κ` or `liquidity_cap:α`; applied in order.
        #[arg(long)]
        apply: Vec<String>,
        /// Fee schedule for `fee_cap`.
        #[arg(long, default_value = "10,5,0")]
        fee: String,
        #[arg(long, value_enum)]
        template: Option<TemplateArg>,
        /// Core weight for the core-satellite template.
        #[arg(long, default_value_t = 0.6)]
        w: f64,
        /// Satellite space for the core-satellite template; the hub when absent.
        #[arg(long)]
        sat: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Safety radius of a sampled kernel.
    Kernel {
        #[arg(long, value_enum, default_value = "gaussian")]
        shape: ShapeArg,
        /// Noise scale; 0.03, or 0.015 for the banana.
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long, default_value_t = BIMODAL_OFFSET)]
        offset: f64,
        #[arg(long, default_value_t = BANANA_CURVATURE)]
        curvature: f64,
        #[arg(long, default_value = "0.45,0.30,0.25")]
        hub: String,
        #[arg(long, default_value_t = 4000)]
        n: usize,
        #[arg(long, default_value_t = 0.05)]
        epsilon: f64,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Monte Carlo cure budget into a half-space.
    Cure {
        #[arg(long, default_value = "x1<=0.5")]
        constraint: String,
        #[arg(long, default_value = "0.45,0.30,0.25")]
        hub: String,
        #[arg(long, default_value_t = DEFAULT_SIGMA)]
        sigma: f64,
        #[arg(long, default_value_t = 4000)]
        n: usize,
        #[arg(long, default_value_t = 50)]
        resolution: u32,
        /// Per-asset weights `τ`.
        #[arg(long)]
        weights: Option<String>,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Radius, HDR and cure verdicts on one preset scenario.
    Compare {
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        constraint: Option<String>,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Run a platform workflow against a registry and ledger.
    Workflow {
        #[command(subcommand)]
        which: WorkflowCommand,
    },
    /// Write the demonstration registry.
    Init {
        #[arg(long, default_value = "reg.json")]
        registry: PathBuf,
        #[arg(long)]
        force: bool,
    },
    /// Run the acceptance criteria; exit 1 if any fails.
    Accept {
        #[command(flatten)]
        seed: SeedArg,
        /// Run a single criterion.
        #[arg(long)]
        only: Option<u8>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LawArg {
    Adjunction,
    Frobenius,
    Functoriality,
    LaxBc,
    StrictBc,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SuiteArg {
    Coherence,
    Metric,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ShapeArg {
    Gaussian,
    #[value(alias = "split-peak")]
    Bimodal,
    Banana,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TemplateArg {
    CoreSatellite,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum WhichArg {
    Frobenius,
    Bc,
}

#[derive(Debug, Subcommand)]
pub enum DemoCommand {
    /// The half-open hub on which the closure-patched pushforward breaks a law.
    ClosureFix {
        #[arg(long, value_enum)]
        which: WhichArg,
        /// Use the closed hub; the law then holds.
        #[arg(long)]
        closed: bool,
        #[arg(long, default_value_t = 10)]
        n: u32,
    },
}

#[derive(Debug, Clone, Args)]
pub struct Store {
    #[arg(long, default_value = "reg.json")]
    pub registry: PathBuf,
    #[arg(long, default_value = "ledger.jsonl")]
    pub ledger: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum WorkflowCommand {
    /// Propagate a hub change: `y′ = f(x′)`, commit iff `(x′, y′) ∈ R`.
    A {
        #[command(flatten)]
        store: Store,
        #[arg(long)]
        map: String,
        #[arg(long)]
        relation: String,
        #[arg(long)]
        hub: String,
    },
    /// Introduce a relation: recompute the menu and re-verify committed hubs.
    B {
        #[command(flatten)]
        store: Store,
        #[arg(long)]
        relation_def: PathBuf,
        /// Relation whose menu the new relation acts on.
        #[arg(long)]
        base: Option<String>,
        /// Also sweep every domain point of the affected maps.
        #[arg(long)]
        full_sweep: bool,
    },
    /// Build and register a constrained re-implementation and its image.
    C {
        #[command(flatten)]
        store: Store,
        #[arg(long)]
        relation: String,
        #[arg(long)]
        objective: PathBuf,
        #[arg(long)]
        map_id: Option<String>,
    },
}

/// Objects, maps and relations for `verify`, plus which ids play which role.
#[derive(Debug, Deserialize)]
pub struct Fixture {
    pub registry: Registry,
    pub f: Option<String>,
    pub g: Option<String>,
    pub r: Option<String>,
    pub s: Option<String>,
    pub square: Option<SquareIds>,
}

#[derive(Debug, Deserialize)]
pub struct SquareIds {
    pub g: String,
    pub f_prime: String,
    pub f: String,
    pub h: String,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| PlatformError::Format { path: path.into(), line: e.line(), msg: e.to_string() })
}

fn emit(out: &mut dyn Write, v: &Value) -> Result<()> {
    writeln!(out, "{}", serde_json::to_string_pretty(v).expect("json value serializes"))?;
    Ok(())
}

fn csv_row(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(",")
}

fn emit_points(out: &mut dyn Write, format: Format, count_only: bool, header: Value, points: &[Vec<f64>]) -> Result<()> {
    match format {
        Format::Csv => {
            if count_only {
                writeln!(out, "count\n{}", points.len())?;
            } else {
                let n = points.first().map_or(0, Vec::len);
                writeln!(out, "{}", (1..=n).map(|i| format!("x{i}")).collect::<Vec<_>>().join(","))?;
                for p in points {
                    writeln!(out, "{}", csv_row(p))?;
                }
            }
            Ok(())
        }
        Format::Json => {
            let mut v = header;
            v["count"] = json!(points.len());
            if !count_only {
                v["points"] = json!(points);
            }
            emit(out, &v)
        }
    }
}

fn req<'a>(id: &'a Option<String>, role: &str) -> Result<&'a str> {
    id.as_deref().ok_or_else(|| invalid(format!("fixture needs '{role}'")))
}

fn report_json(rep: &LawReport) -> Value {
    json!({
        "law": rep.law.name(),
        "holds": rep.holds,
        "lhs_count": rep.lhs_count,
        "rhs_count": rep.rhs_count,
        "witnesses": rep.witnesses,
    })
}

fn verify_fixture(law: LawArg, fx: &Fixture) -> Result<(bool, Value)> {
    fx.registry.check_integrity()?;
    let res = Resolver::new(&fx.registry);
    let rep = match law {
        LawArg::Adjunction => verify_adjunction(
            &res.map(req(&fx.f, "f")?)?,
            &res.relation(req(&fx.r, "r")?)?,
            &res.relation(req(&fx.s, "s")?)?,
        )?,
        LawArg::Frobenius => verify_frobenius(
            &res.map(req(&fx.f, "f")?)?,
            &res.relation(req(&fx.r, "r")?)?,
            &res.relation(req(&fx.s, "s")?)?,
        )?,
        LawArg::Functoriality => verify_functoriality(
            &res.map(req(&fx.f, "f")?)?,
            &res.map(req(&fx.g, "g")?)?,
            &res.relation(req(&fx.r, "r")?)?,
            &res.relation(req(&fx.s, "s")?)?,
        )?,
        LawArg::LaxBc | LawArg::StrictBc => {
            let ids = fx.square.as_ref().ok_or_else(|| invalid("fixture needs 'square'"))?;
            let square = CommutingSquare::new(res.map(&ids.g)?, res.map(&ids.f_prime)?, res.map(&ids.f)?, res.map(&ids.h)?)?;
            let r = res.relation(req(&fx.r, "r")?)?;
            if let LawArg::LaxBc = law {
                verify_lax_bc(&square, &r)?
            } else {
                let strict = verify_strict_bc(&square, &r)?;
                let ok = strict.equality.holds;
                let v = json!({
                    "law": strict.equality.law.name(),
                    "holds": ok,
                    "cartesian": report_json(&strict.cartesian),
                    "equality": report_json(&strict.equality),
                });
                return Ok((ok, v));
            }
        }
    };
    Ok((rep.holds, report_json(&rep)))
}

fn space_from(path: &Path) -> Result<Arc<LatticeSpace>> {
    Ok(Arc::new(read_json::<SpaceDef>(path)?.build()?))
}

fn shape(arg: ShapeArg, sigma: f64, offset: f64, curvature: f64) -> KernelShape {
    match arg {
        ShapeArg::Gaussian => KernelShape::Gaussian { sigma },
        ShapeArg::Bimodal => KernelShape::Bimodal { sigma, offset },
        ShapeArg::Banana => KernelShape::Banana { sigma, curvature },
    }
}

fn ledger_exit(e: &LedgerEntry) -> i32 {
    match e.verdict {
        LedgerVerdict::Committed => 0,
        LedgerVerdict::Rejected | LedgerVerdict::Violation => 1,
    }
}

fn entry_json(e: &LedgerEntry) -> Value {
    serde_json::to_value(e).expect("ledger entry serializes")
}

fn run_workflow(which: WorkflowCommand, out: &mut dyn Write) -> Result<i32> {
    let open = |s: &Store| -> Result<(Registry, Ledger)> {
        Ok((Registry::load(&s.registry)?, Ledger::open(&s.ledger, Box::new(SystemClock))?))
    };
    match which {
        WorkflowCommand::A { store, map, relation, hub } => {
            let (reg, mut ledger) = open(&store)?;
            let e = workflow_a(&reg, &mut ledger, &map, &relation, &parse_weights(&hub)?)?;
            emit(out, &entry_json(&e))?;
            Ok(ledger_exit(&e))
        }
        WorkflowCommand::B { store, relation_def, base, full_sweep } => {
            let (mut reg, mut ledger) = open(&store)?;
            let new: NamedRelation = read_json(&relation_def)?;
            let e = workflow_b(&mut reg, &mut ledger, &new, &RelationChange { base, full_sweep })?;
            if e.verdict == LedgerVerdict::Committed {
                reg.save(&store.registry)?;
            }
            emit(out, &entry_json(&e))?;
            Ok(ledger_exit(&e))
        }
        WorkflowCommand::C { store, relation, objective, map_id } => {
            let (mut reg, mut ledger) = open(&store)?;
            let obj: ObjectiveDef = read_json(&objective)?;
            let (e, ids) = workflow_c(&mut reg, &mut ledger, &relation, &obj, map_id.as_deref())?;
            reg.save(&store.registry)?;
            let mut v = entry_json(&e);
            v["registered"] = json!({ "map": ids.map_id, "domain": ids.domain_id, "spoke": ids.spoke_id });
            emit(out, &v)?;
            Ok(ledger_exit(&e))
        }
    }
}

fn menu_points(menu: &Menu) -> Vec<Vec<f64>> {
    menu.points().iter().map(|p| p.weights().to_vec()).collect()
}

/// Runs a parsed command, writing results to `out`; returns the exit code.
pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    match cli.command {
        Command::Enumerate { dim, step, constraint, count, format } => {
            let n = parse_step(&step)?;
            let cs = constraint.iter().map(|c| LinearConstraint::parse(c, dim + 1)).collect::<std::result::Result<Vec<_>, _>>()?;
            let space = LatticeSpace::with_constraints(dim, n, cs)?;
            let pts: Vec<Vec<f64>> = space.cells().iter().map(|p| p.weights().to_vec()).collect();
            let header = json!({ "dim": dim, "N": n, "constraints": constraint });
            emit_points(out, format, count, header, &pts)?;
            Ok(0)
        }
        Command::Verify { law, fixture, suite, instances, seed } => {
            let (ok, v) = match (suite, law, fixture) {
                (Some(s), _, _) => {
                    let rep = match s {
                        SuiteArg::Coherence => coherence_suite(seed.seed, instances)?,
                        SuiteArg::Metric => metric_suite(seed.seed, instances)?,
                    };
                    let tallies: Vec<Value> = rep
                        .tallies
                        .iter()
                        .map(|t| json!({ "law": t.law.name(), "checked": t.checked, "violations": t.violations }))
                        .collect();
                    (rep.all_hold(), json!({ "seed": rep.seed, "instances": rep.instances, "tallies": tallies }))
                }
                (None, Some(law), Some(path)) => verify_fixture(law, &read_json(&path)?)?,
                _ => return Err(invalid("verify needs --law with --fixture, or --suite")),
            };
            emit(out, &v)?;
            Ok(if ok { 0 } else { 1 })
        }
        Command::Demo { demo: DemoCommand::ClosureFix { which, closed, n } } => {
            let which = match which {
                WhichArg::Frobenius => ClosureFix::Frobenius,
                WhichArg::Bc => ClosureFix::BeckChevalley,
            };
            writeln!(out, "{}", render_closure_fix(&closure_fix_demo(which, closed, n)?))?;
            Ok(0)
        }
        Command::BuildMap { spec, hub, spoke, out: path } => {
            let obj: ObjectiveDef = read_json(&spec)?;
            let (k1, k2) = (space_from(&hub)?, space_from(&spoke)?);
            let f = build_metric_reimpl(k1.clone(), k2.clone(), &obj.build(k1.assets(), k2.assets())?)?;
            let table: Vec<(Vec<f64>, Vec<f64>)> =
                k1.cells().iter().map(|x| (x.weights().to_vec(), f.apply(x.weights()))).collect();
            let doc = json!({ "objective": obj, "hub": read_json::<Value>(&hub)?, "spoke": read_json::<Value>(&spoke)?, "table": table });
            std::fs::write(&path, serde_json::to_string_pretty(&doc).expect("json value serializes") + "\n")?;
            emit(out, &json!({ "out": path, "points": table.len(), "lipschitz_probe": lipschitz_probe(&f) }))?;
            Ok(0)
        }
        Command::Menu { hub, spoke, apply, fee, template, w, sat, format } => {
            let k = space_from(&hub)?;
            let spoke = match spoke {
                Some(p) => space_from(&p)?,
                None => Arc::new(k.ambient()?),
            };
            let mut menu = match template {
                Some(TemplateArg::CoreSatellite) => {
                    let s = match sat {
                        Some(p) => space_from(&p)?,
                        None => k.clone(),
                    };
                    apply_template(&WiringTemplate::CoreSatellite { w, global: None }, &[k.clone(), s])?
                }
                None => Menu::from_space(k.clone()),
            };
            let fee = parse_weights(&fee)?;
            for (i, text) in apply.iter().enumerate() {
                let def = RelationDef {
                    domain: "menu".into(),
                    codomain: "spoke".into(),
                    spec: RelationSpec::parse_shorthand(text, &fee)?,
                };
                let kind = def.spec.kind()?.ok_or_else(|| invalid(format!("'{text}' is not a parametric relation")))?;
                let r = hubspoke_core::relations::build_relation(menu.space().clone(), spoke.clone(), kind)?;
                menu = action(&menu, &r).map_err(|e| invalid(format!("step {}: {e}", i + 1)))?;
            }
            let header = json!({ "applied": apply, "provenance": menu.provenance() });
            emit_points(out, format, false, header, &menu_points(&menu))?;
            Ok(0)
        }
        Command::Kernel { shape: s, sigma, offset, curvature, hub, n, epsilon, seed, format } => {
            let x = parse_weights(&hub)?;
            let sigma = sigma.unwrap_or(if matches!(s, ShapeArg::Banana) { BANANA_SIGMA } else { DEFAULT_SIGMA });
            let spec = KernelSpec::new(shape(s, sigma, offset, curvature), n, seed.seed);
            let cloud = sample_kernel(&spec, &x)?;
            let r = safety_radius(&cloud, &cloud.center, epsilon)?;
            match format {
                Format::Csv => writeln!(out, "shape,sigma,samples,seed,epsilon,radius\n{},{sigma},{n},{},{epsilon},{}", spec.shape.name(), seed.seed, r.r)?,
                Format::Json => emit(
                    out,
                    &json!({ "shape": spec.shape.name(), "sigma": sigma, "samples": n, "seed": seed.seed, "epsilon": epsilon, "center": r.center, "radius": r.r }),
                )?,
            }
            Ok(0)
        }
        Command::Cure { constraint, hub, sigma, n, resolution, weights, seed, format } => {
            let x = parse_weights(&hub)?;
            let c = LinearConstraint::parse(&constraint, x.len())?;
            let slice = LatticeSpace::with_constraints(x.len() - 1, resolution, vec![c])?;
            let spec = KernelSpec::new(KernelShape::Gaussian { sigma }, n, seed.seed);
            let cloud = sample_kernel(&spec, &x)?;
            let tau = weights.as_deref().map(parse_weights).transpose()?;
            let cure = wasserstein_cure(&cloud, &slice, tau.as_deref())?;
            match format {
                Format::Csv => writeln!(
                    out,
                    "constraint,samples,seed,violation_rate,mean_cost,lattice_w1\n{constraint},{n},{},{},{},{}",
                    seed.seed, cure.violation_rate, cure.mean_cost, cure.lattice_w1
                )?,
                Format::Json => emit(
                    out,
                    &json!({ "constraint": constraint, "samples": n, "seed": seed.seed, "violation_rate": cure.violation_rate, "mean_cost": cure.mean_cost, "lattice_w1": cure.lattice_w1 }),
                )?,
            }
            Ok(0)
        }
        Command::Compare { scenario, constraint, seed, format } => {
            let kind = ScenarioKind::parse(&scenario).ok_or_else(|| invalid(format!("unknown scenario '{scenario}'")))?;
            let mut s = Scenario::preset(kind, seed.seed);
            if let Some(c) = constraint {
                let c = LinearConstraint::parse(&c, s.hub.len())?;
                s = s.with_constraint(c);
            }
            let row = three_way_compare(&s)?;
            match format {
                Format::Csv => writeln!(
                    out,
                    "scenario,constraint,radius,radius_verdict,eroded,hdr_verdict,hdr_mass,hdr_region,cure_verdict,cure_cost,violation_rate\n{},{},{},{},{},{},{},{},{},{},{}",
                    kind.name(), row.constraint, row.radius, row.radius_verdict, row.eroded, row.hdr_verdict,
                    row.hdr_mass, row.hdr_region, row.cure_verdict, row.cure_cost, row.violation_rate
                )?,
                Format::Json => emit(
                    out,
                    &json!({
                        "scenario": kind.name(), "constraint": row.constraint, "seed": seed.seed,
                        "radius": { "r": row.radius, "eroded": row.eroded, "verdict": row.radius_verdict.to_string() },
                        "hdr": { "mass": row.hdr_mass, "region": row.hdr_region, "verdict": row.hdr_verdict.to_string() },
                        "wasserstein": { "cost": row.cure_cost, "violation_rate": row.violation_rate, "verdict": row.cure_verdict.to_string() },
                    }),
                )?,
            }
            Ok(0)
        }
        Command::Workflow { which } => run_workflow(which, out),
        Command::Init { registry, force } => {
            if registry.exists() && !force {
                return Err(invalid(format!("{} exists; pass --force to overwrite", registry.display())));
            }
            demo_registry().save(&registry)?;
            writeln!(out, "wrote {}", registry.display())?;
            Ok(0)
        }
        Command::Accept { seed, only } => {
            let results = match only {
                Some(id) => {
                    let c = run_criterion(id, seed.seed, std::time::Duration::ZERO);
                    writeln!(out, "{c}")?;
                    vec![c]
                }
                None => run_all(seed.seed, |c| {
                    let _ = writeln!(out, "{c}");
                    let _ = out.flush();
                }),
            };
            let passed = results.iter().filter(|c| c.passed).count();
            writeln!(out, "{passed}/{} criteria passed (seed {})", results.len(), seed.seed)?;
            Ok(if passed == results.len() { 0 } else { 1 })
        }
    }
}

/// Parses `args` and runs; errors print to stderr with exit code 2.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match execute(cli, &mut lock) {
        Ok(code) => code,
        // A closed downstream pipe is not a failure of the command.
        Err(PlatformError::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => 0,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
