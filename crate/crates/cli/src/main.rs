//! `linmod1`: exact symbolic dynamics of linear mod 1 interval maps from the
//! command line. Emits a deterministic JSON report per invocation; CSV and
//! DOT are projections of the same data.

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use serde::Serialize;
use serde_json::{json, Value};

use linmod1::dynamics::{branch_structure, itinerary, kneading_data, MapSpec};
use linmod1::numeric::{parse_scalar_with_epsilon, render_decimal};
use linmod1::operators::{
    commutant_certificate, covered_points, equivalence_report, mk_convergence, verify_relations,
    RelationKind,
};
use linmod1::orbit::{export_orbit_graph, generalized_orbit, EquivVerdict, OrbitBasis};
use linmod1::symbolic::{
    admissible_words, alpha_from_periodic, cylinder, markov_analysis, word_to_string,
    MarkovVerdict, PartitionCtx,
};
use linmod1::{Error, Scalar};

#[derive(Parser)]
#[command(name = "linmod1", version, about)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct Common {
    /// slope, in the scalar grammar (e.g. 2, 3/2, (1+1*sqrt(2))/1)
    #[arg(long)]
    beta: String,
    /// intercept, in the scalar grammar
    #[arg(long, default_value = "0")]
    alpha: String,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// bits of fixed-point precision for decimal renderings
    #[arg(long, default_value_t = 320)]
    precision: u64,
    /// enclosure half-width assigned to decimal-literal inputs
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Args)]
struct OrbitArgs {
    /// orbit seed, in the scalar grammar
    #[arg(long)]
    x: String,
    /// forward iterations of the seed
    #[arg(long, default_value_t = 6)]
    forward: usize,
    /// preimage tree depth
    #[arg(long, default_value_t = 4)]
    depth: usize,
    /// truncation cap on the basis size
    #[arg(long, default_value_t = 5000)]
    max_points: usize,
}

#[derive(Subcommand)]
enum Verb {
    /// Monotonicity partition: breakpoints, branches, offsets, images
    Partition {
        #[command(flatten)]
        common: Common,
    },
    /// Symbol sequence of a point under the branch partition
    Itinerary {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        x: String,
        #[arg(long, default_value_t = 12)]
        len: usize,
    },
    /// One-sided itineraries at 0+, 1- and the breakpoints
    Kneading {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 12)]
        horizon: usize,
    },
    /// Admissible words of a given length
    Words {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        k: usize,
    },
    /// Cylinder interval and forward image of a word (symbols joined by '.')
    Cylinder {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        word: String,
    },
    /// Markov property detection with exact boundary-orbit recurrence
    Markov {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 12)]
        horizon: usize,
    },
    /// Reconstruct alpha from a periodic digit string (digits joined by ',')
    AlphaFromDigits {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        digits: String,
    },
    /// Truncated generalized orbit of a point
    Orbit {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        orbit: OrbitArgs,
        /// write the orbit graph as DOT to this path
        #[arg(long)]
        dot: Option<String>,
    },
    /// Orbit equivalence of two points with witness replay
    Equiv {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        #[arg(long, default_value_t = 16)]
        budget: usize,
        #[arg(long, default_value_t = 3)]
        forward: usize,
        #[arg(long, default_value_t = 2)]
        depth: usize,
        #[arg(long, default_value_t = 5000)]
        max_points: usize,
    },
    /// Verify operator relations on a truncated orbit basis
    RepVerify {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        orbit: OrbitArgs,
        #[arg(long, default_value_t = 2)]
        word_depth: usize,
        /// relation family: sum, isometry, subshift or cuntz-krieger
        /// (the latter derives its matrix from Markov analysis)
        #[arg(long, default_value = "subshift")]
        relation: String,
    },
    /// Strong-convergence residual table for M_k against U
    RepMk {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        orbit: OrbitArgs,
        #[arg(long, default_value_t = 5)]
        k: usize,
        /// number of covered basis vectors used as test vectors
        #[arg(long, default_value_t = 5)]
        vectors: usize,
    },
    /// Finite commutant certificate of a truncated orbit basis
    RepCertificate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        orbit: OrbitArgs,
    },
}

#[derive(Serialize, Clone, Copy, PartialEq)]
#[serde(rename_all = "lowercase")]
enum Status {
    Pass,
    Fail,
    Indeterminate,
}

#[derive(Serialize)]
struct Report {
    command: Vec<String>,
    version: &'static str,
    mode: &'static str,
    payload: Value,
    status: Status,
}

struct Ctx {
    spec: MapSpec,
    precision: u64,
    exact_inputs: bool,
    epsilon: BigRational,
}

fn rational_from_f64(x: f64) -> Option<BigRational> {
    BigRational::from_float(x)
}

impl Ctx {
    fn new(common: &Common) -> Result<Ctx, String> {
        let epsilon = match common.epsilon {
            Some(e) if e > 0.0 => {
                rational_from_f64(e).ok_or_else(|| "epsilon must be finite".to_string())?
            }
            Some(_) => return Err("epsilon must be positive".into()),
            None => linmod1::numeric::default_epsilon(),
        };
        let beta = parse_scalar_with_epsilon(&common.beta, &epsilon)
            .map_err(|e| format!("--beta: {e}"))?;
        let alpha = parse_scalar_with_epsilon(&common.alpha, &epsilon)
            .map_err(|e| format!("--alpha: {e}"))?;
        let exact_inputs = beta.is_exact() && alpha.is_exact();
        let spec = MapSpec::new(beta, alpha).map_err(|e| format!("invalid map: {e}"))?;
        Ok(Ctx {
            spec,
            precision: common.precision.clamp(64, 4096),
            exact_inputs,
            epsilon,
        })
    }

    fn decimal(&self, s: &Scalar) -> String {
        let (value, _) = s.to_rational_enclosure(self.precision);
        render_decimal(&value, 30)
    }

    fn orbit(&self, args: &OrbitArgs) -> Result<(Scalar, OrbitBasis), Error> {
        let x = parse_scalar_with_epsilon(&args.x, &self.epsilon)?;
        let basis = generalized_orbit(&self.spec, &x, args.forward, args.depth, args.max_points)?;
        Ok((x, basis))
    }

    fn partition_ctx(&self) -> Result<PartitionCtx, Error> {
        Ok(PartitionCtx::from_branches(&branch_structure(&self.spec)?))
    }
}

fn parse_word(text: &str) -> Result<Vec<usize>, String> {
    text.split('.')
        .map(|s| s.trim().parse::<usize>().map_err(|e| format!("--word: {e}")))
        .collect()
}

fn parse_digits(text: &str) -> Result<Vec<BigInt>, String> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<BigInt>()
                .map_err(|e| format!("--digits: {e}"))
        })
        .collect()
}

/// Error-to-status mapping: undecidable-in-approx errors are indeterminate,
/// everything else is a failed run.
fn error_payload(e: &Error) -> (Value, Status) {
    let status = match e {
        Error::ApproxIndeterminate(_) | Error::IndeterminateFloor => Status::Indeterminate,
        _ => Status::Fail,
    };
    (json!({ "error": e.to_string() }), status)
}

fn run_verb(verb: &Verb, ctx: &Ctx) -> Result<(Value, Status, Vec<(String, String)>), Error> {
    // third slot: CSV rows as (header, line) pairs when the verb is tabular
    match verb {
        Verb::Partition { .. } => {
            let bs = branch_structure(&ctx.spec)?;
            let approx: Vec<String> = bs.breakpoints.iter().map(|b| ctx.decimal(b)).collect();
            Ok((
                json!({
                    "beta": ctx.spec.beta,
                    "alpha": ctx.spec.alpha,
                    "branches": bs.n,
                    "breakpoints": bs.breakpoints,
                    "breakpoints_decimal": approx,
                    "intervals": bs.branches.iter().map(|b| &b.interval).collect::<Vec<_>>(),
                    "offsets": bs.branches.iter().map(|b| b.offset.to_string()).collect::<Vec<_>>(),
                    "images": bs.branches.iter().map(|b| &b.image).collect::<Vec<_>>(),
                    "textbook_branch_rule_agrees": bs.textbook_rule_agrees,
                }),
                Status::Pass,
                Vec::new(),
            ))
        }
        Verb::Itinerary { x, len, .. } => {
            let x = parse_scalar_with_epsilon(x, &ctx.epsilon)?;
            let bs = branch_structure(&ctx.spec)?;
            let it = itinerary(&ctx.spec, &bs.intervals(), &x, *len)?;
            let rows = it
                .symbols
                .iter()
                .enumerate()
                .map(|(j, s)| ("step,symbol".to_string(), format!("{j},{s}")))
                .collect();
            Ok((
                json!({ "x": x, "itinerary": it }),
                Status::Pass,
                rows,
            ))
        }
        Verb::Kneading { horizon, .. } => {
            let kd = kneading_data(&ctx.spec, *horizon)?;
            Ok((json!(kd), Status::Pass, Vec::new()))
        }
        Verb::Words { k, .. } => {
            let pctx = ctx.partition_ctx()?;
            let words = admissible_words(&pctx, *k, 1 << 20)?;
            let rendered: Vec<String> = words.iter().map(|w| word_to_string(w)).collect();
            let rows = rendered
                .iter()
                .map(|w| ("word".to_string(), w.clone()))
                .collect();
            Ok((
                json!({ "k": k, "count": rendered.len(), "words": rendered }),
                Status::Pass,
                rows,
            ))
        }
        Verb::Cylinder { word, .. } => {
            let w = parse_word(word).map_err(Error::Domain)?;
            let pctx = ctx.partition_ctx()?;
            match cylinder(&pctx, &w)? {
                Some(c) => Ok((
                    json!({
                        "word": word_to_string(&c.word),
                        "admissible": true,
                        "interval": c.interval,
                        "image": c.image,
                        "diameter_decimal": ctx.decimal(&c.interval.diameter()),
                    }),
                    Status::Pass,
                    Vec::new(),
                )),
                None => Ok((
                    json!({ "word": word, "admissible": false }),
                    Status::Pass,
                    Vec::new(),
                )),
            }
        }
        Verb::Markov { horizon, .. } => {
            let rep = markov_analysis(&ctx.spec, *horizon)?;
            let status = match rep.verdict {
                MarkovVerdict::Yes | MarkovVerdict::No => Status::Pass,
                MarkovVerdict::NoWithinHorizon | MarkovVerdict::Indeterminate => {
                    Status::Indeterminate
                }
            };
            Ok((json!(rep), status, Vec::new()))
        }
        Verb::AlphaFromDigits { digits, .. } => {
            let d = parse_digits(digits).map_err(Error::Domain)?;
            let alpha = alpha_from_periodic(&ctx.spec.beta, &d)?;
            Ok((
                json!({
                    "digits": d.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
                    "alpha": alpha,
                    "alpha_decimal": ctx.decimal(&alpha),
                }),
                Status::Pass,
                Vec::new(),
            ))
        }
        Verb::Orbit { orbit, dot, .. } => {
            let (_, basis) = ctx.orbit(orbit)?;
            if let Some(path) = dot {
                std::fs::write(path, export_orbit_graph(&basis))
                    .map_err(|e| Error::Domain(format!("writing {path}: {e}")))?;
            }
            let rows = basis
                .points
                .iter()
                .enumerate()
                .map(|(j, p)| {
                    (
                        "index,point,decimal".to_string(),
                        format!("{j},{},{}", p.render(), ctx.decimal(p)),
                    )
                })
                .collect();
            Ok((json!(basis), Status::Pass, rows))
        }
        Verb::Equiv {
            x,
            y,
            budget,
            forward,
            depth,
            max_points,
            ..
        } => {
            let xs = parse_scalar_with_epsilon(x, &ctx.epsilon)?;
            let ys = parse_scalar_with_epsilon(y, &ctx.epsilon)?;
            let rep =
                equivalence_report(&ctx.spec, &xs, &ys, *budget, *forward, *depth, *max_points)?;
            let status = match rep.verdict {
                EquivVerdict::Unknown { .. } => Status::Indeterminate,
                _ if rep.witness_valid == Some(false) => Status::Fail,
                _ => Status::Pass,
            };
            Ok((json!(rep), status, Vec::new()))
        }
        Verb::RepVerify {
            orbit,
            word_depth,
            relation,
            ..
        } => {
            let kind = match relation.as_str() {
                "sum" => RelationKind::SumToIdentity,
                "isometry" => RelationKind::PartialIsometry,
                "subshift" => RelationKind::Subshift,
                "cuntz-krieger" => {
                    let rep = markov_analysis(&ctx.spec, 12)?;
                    match rep.transition_matrix {
                        Some(m) => RelationKind::CuntzKrieger(m),
                        None => {
                            return Err(Error::Domain(
                                "cuntz-krieger requires a Markov map (no transition matrix found)"
                                    .into(),
                            ))
                        }
                    }
                }
                other => {
                    return Err(Error::Domain(format!("unknown relation family '{other}'")))
                }
            };
            let (_, basis) = ctx.orbit(orbit)?;
            let pctx = ctx.partition_ctx()?;
            let rep = verify_relations(&pctx, &basis, &kind, *word_depth)?;
            let status = if rep.passed { Status::Pass } else { Status::Fail };
            Ok((json!(rep), status, Vec::new()))
        }
        Verb::RepMk {
            orbit, k, vectors, ..
        } => {
            let (_, basis) = ctx.orbit(orbit)?;
            let pctx = ctx.partition_ctx()?;
            let covered = covered_points(&pctx, &basis, *k)?;
            let test_vectors: Vec<Vec<(usize, BigRational)>> = covered
                .iter()
                .take(*vectors)
                .map(|&j| vec![(j, BigRational::one())])
                .collect();
            let table = mk_convergence(&pctx, &basis, *k, &test_vectors)?;
            let all_within = table
                .rows
                .iter()
                .all(|r| r.residuals.iter().all(|x| x.within_bound));
            let rows = table
                .rows
                .iter()
                .flat_map(|r| {
                    r.residuals.iter().map(move |x| {
                        (
                            "k,vector,residual,bound,within_bound".to_string(),
                            format!(
                                "{},{},{},{},{}",
                                r.k, x.vector, x.residual_f64, x.bound_f64, x.within_bound
                            ),
                        )
                    })
                })
                .collect();
            let status = if all_within { Status::Pass } else { Status::Fail };
            Ok((json!(table), status, rows))
        }
        Verb::RepCertificate { orbit, .. } => {
            let (_, basis) = ctx.orbit(orbit)?;
            let cert = commutant_certificate(&basis);
            let status = if cert.certified { Status::Pass } else { Status::Fail };
            Ok((json!(cert), status, Vec::new()))
        }
    }
}

fn common_of(verb: &Verb) -> &Common {
    match verb {
        Verb::Partition { common }
        | Verb::Itinerary { common, .. }
        | Verb::Kneading { common, .. }
        | Verb::Words { common, .. }
        | Verb::Cylinder { common, .. }
        | Verb::Markov { common, .. }
        | Verb::AlphaFromDigits { common, .. }
        | Verb::Orbit { common, .. }
        | Verb::Equiv { common, .. }
        | Verb::RepVerify { common, .. }
        | Verb::RepMk { common, .. }
        | Verb::RepCertificate { common, .. } => common,
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    let common = common_of(&cli.verb);
    let ctx = match Ctx::new(common) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let (payload, status, csv_rows) = match run_verb(&cli.verb, &ctx) {
        Ok(out) => out,
        Err(Error::Syntax { pos, expected }) => {
            eprintln!("error: expected {expected} at offset {pos}");
            return ExitCode::from(2);
        }
        Err(Error::Range(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
        Err(e) => {
            let (payload, status) = error_payload(&e);
            (payload, status, Vec::new())
        }
    };
    if common.format == Format::Csv {
        if csv_rows.is_empty() {
            eprintln!("error: this verb has no CSV projection");
            return ExitCode::from(2);
        }
        println!("{}", csv_rows[0].0);
        for (_, line) in &csv_rows {
            println!("{line}");
        }
    } else {
        let report = Report {
            command: argv[1..].to_vec(),
            version: env!("CARGO_PKG_VERSION"),
            mode: if ctx.exact_inputs { "exact" } else { "approx" },
            payload,
            status,
        };
        println!("{}", serde_json::to_string_pretty(&report).unwrap());
    }
    match status {
        Status::Pass => ExitCode::SUCCESS,
        Status::Fail => ExitCode::from(1),
        Status::Indeterminate => ExitCode::from(3),
    }
}
