//! Command-line interface over the subproduct-system library.
//!
//! All inputs and outputs are JSON. A system is described by a spec file
//! (see `SpecFile`); representations and CP maps use the interchange types
//! of `subprod_core::json`.
//!
//! Exit codes: 0 = pass, 1 = a check failed, 2 = input error, 3 = numerical
//! error, 4 = internal cross-check disagreement.

use std::fs;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use subprod_core::fock::FockOperators;
use subprod_core::json::{CpMapJson, MatrixJson, RepTupleJson};
use subprod_core::kernel::{Subspace, CHECK_TOL, RANK_TOL};
use subprod_core::ncpoly::{parse_poly, HomogeneousIdeal, Word};
use subprod_core::reps::{is_representation, maximal_piece, vn_inequality_check};
use subprod_core::sps::{classify_a, iso_q, SubproductSystem};
use subprod_core::Error;

const EXIT_PASS: u8 = 0;
const EXIT_FAIL: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_DISAGREE: u8 = 4;

#[derive(Parser)]
#[command(
    name = "subprod",
    about = "Construct, validate, and classify finite-dimensional standard subproduct systems"
)]
struct Cli {
    /// Seed for randomized suites (accepted for interface stability; the
    /// current subcommands are deterministic).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SpecArgs {
    /// Path to a system spec JSON file.
    #[arg(long)]
    spec: String,
    /// Override the truncation degree N of the spec.
    #[arg(long = "N")]
    n: Option<usize>,
    /// Override the rank tolerance of the spec.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the fiber dimensions dim X(0..N).
    Dims {
        #[command(flatten)]
        spec: SpecArgs,
    },
    /// Run a named check against the system.
    Check {
        #[command(flatten)]
        spec: SpecArgs,
        /// One of: standard, cuntz, subshift, representation, vn.
        #[arg(long)]
        check: String,
        /// Relation order for cuntz/subshift checks.
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Representation tuple JSON file (representation/vn checks).
        #[arg(long)]
        rep: Option<String>,
        /// Polynomial p (vn check).
        #[arg(long)]
        p: Option<String>,
        /// Polynomial q (vn check).
        #[arg(long)]
        q: Option<String>,
    },
    /// Decide ideal membership by both the shift route and linear algebra.
    Membership {
        #[command(flatten)]
        spec: SpecArgs,
        /// Homogeneous polynomial, e.g. "x1 x2 - x2 x1".
        #[arg(long)]
        poly: String,
    },
    /// Emit the truncated shift matrix S_i on the Fock space.
    Shift {
        #[command(flatten)]
        spec: SpecArgs,
        /// Letter i in 1..=d.
        #[arg(long)]
        letter: usize,
    },
    /// Search for a basis-permutation isomorphism between two q-systems.
    IsoQ {
        #[command(flatten)]
        spec: SpecArgs,
        /// Spec file of the second q-commuting system.
        #[arg(long)]
        other: String,
    },
    /// Classify a 2x2 coefficient matrix up to scaling and congruence.
    ClassifyA {
        #[command(flatten)]
        spec: SpecArgs,
    },
    /// Fibers of the CP-map subproduct system and the coisometry residuals.
    Cp {
        /// CP map JSON file ({"k":2,"choi":...} or {"k":2,"kraus":[...]}).
        #[arg(long)]
        map: String,
        /// Largest total degree m+n to test.
        #[arg(long, default_value_t = 4)]
        max_degree: usize,
    },
    /// N-truncated maximal X-piece of a representation of Y.
    Piece {
        #[command(flatten)]
        spec: SpecArgs,
        /// Spec file of the ambient system Y.
        #[arg(long)]
        other: String,
        /// Representation tuple JSON file.
        #[arg(long)]
        rep: String,
        /// Include the frame matrix of the resulting subspace.
        #[arg(long)]
        frames: bool,
    },
}

/// On-disk description of a subproduct system.
#[derive(Deserialize)]
struct SpecFile {
    /// One of: ideal, forbidden, symmetric, q, matrixA, fibers.
    kind: String,
    d: Option<usize>,
    generators: Option<Vec<String>>,
    /// Forbidden words as letter lists, letters in 1..=d.
    words: Option<Vec<Vec<u8>>>,
    prune: Option<bool>,
    q: Option<MatrixJson>,
    a: Option<MatrixJson>,
    fibers: Option<Vec<MatrixJson>>,
    #[serde(rename = "N")]
    n: Option<usize>,
    tol: Option<f64>,
}

struct LoadedSystem {
    system: SubproductSystem,
    ideal: Option<HomogeneousIdeal>,
    forbidden: Option<Vec<Word>>,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Lapack(_) | Error::NonFinite { .. } => EXIT_NUMERICAL,
        _ => EXIT_INPUT,
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &str) -> Result<T, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {}", path, e))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {}", path, e))
}

fn field<'a, T>(opt: &'a Option<T>, name: &str, kind: &str) -> Result<&'a T, String> {
    opt.as_ref()
        .ok_or_else(|| format!("spec kind \"{}\" requires field \"{}\"", kind, name))
}

fn build_system(
    spec: &SpecFile,
    n_override: Option<usize>,
    tol_override: Option<f64>,
) -> Result<LoadedSystem, (u8, String)> {
    let n_max = n_override
        .or(spec.n)
        .ok_or((EXIT_INPUT, "truncation degree N missing".to_string()))?;
    let tol = tol_override.or(spec.tol).unwrap_or(RANK_TOL);
    let input = |m: String| (EXIT_INPUT, m);
    let core = |e: Error| (exit_code_for(&e), e.to_string());
    match spec.kind.as_str() {
        "ideal" => {
            let d = *field(&spec.d, "d", "ideal").map_err(input)?;
            let gens = field(&spec.generators, "generators", "ideal").map_err(input)?;
            let polys = gens
                .iter()
                .map(|g| parse_poly(g, d))
                .collect::<Result<Vec<_>, _>>()
                .map_err(core)?;
            let ideal = HomogeneousIdeal::new(d, polys).map_err(core)?;
            let system = SubproductSystem::from_ideal(&ideal, n_max, tol).map_err(core)?;
            Ok(LoadedSystem {
                system,
                ideal: Some(ideal),
                forbidden: None,
            })
        }
        "forbidden" => {
            let d = *field(&spec.d, "d", "forbidden").map_err(input)?;
            let lists = field(&spec.words, "words", "forbidden").map_err(input)?;
            let words = lists
                .iter()
                .map(|ls| Word::new(ls.clone(), d))
                .collect::<Result<Vec<_>, _>>()
                .map_err(core)?;
            let prune = spec.prune.unwrap_or(true);
            let system = SubproductSystem::from_forbidden_words(d, &words, n_max, prune, tol)
                .map_err(core)?;
            Ok(LoadedSystem {
                system,
                ideal: None,
                forbidden: Some(words),
            })
        }
        "symmetric" => {
            let d = *field(&spec.d, "d", "symmetric").map_err(input)?;
            Ok(LoadedSystem {
                system: SubproductSystem::symmetric(d, n_max, tol),
                ideal: None,
                forbidden: None,
            })
        }
        "q" => {
            let q = field(&spec.q, "q", "q")
                .map_err(input)?
                .to_matrix()
                .map_err(core)?;
            let system = SubproductSystem::q_commuting(&q, n_max, tol).map_err(core)?;
            Ok(LoadedSystem {
                system,
                ideal: None,
                forbidden: None,
            })
        }
        "matrixA" => {
            let a = field(&spec.a, "a", "matrixA")
                .map_err(input)?
                .to_matrix()
                .map_err(core)?;
            let system = SubproductSystem::from_matrix_a(&a, n_max, tol).map_err(core)?;
            Ok(LoadedSystem {
                system,
                ideal: None,
                forbidden: None,
            })
        }
        "fibers" => {
            let d = *field(&spec.d, "d", "fibers").map_err(input)?;
            let frames = field(&spec.fibers, "fibers", "fibers").map_err(input)?;
            let spaces = frames
                .iter()
                .map(|m| Ok(Subspace::from_frame(m.to_matrix()?, tol)))
                .collect::<Result<Vec<_>, Error>>()
                .map_err(core)?;
            let system = SubproductSystem::from_fibers(d, spaces, tol).map_err(core)?;
            Ok(LoadedSystem {
                system,
                ideal: None,
                forbidden: None,
            })
        }
        other => Err((EXIT_INPUT, format!("unknown spec kind \"{}\"", other))),
    }
}

fn load_spec(args: &SpecArgs) -> Result<LoadedSystem, (u8, String)> {
    let file: SpecFile = read_json(&args.spec).map_err(|m| (EXIT_INPUT, m))?;
    build_system(&file, args.n, args.tol)
}

fn emit<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

#[derive(Serialize)]
struct CheckLine {
    check: String,
    window: (usize, usize),
    residual: f64,
    pass: bool,
}

#[derive(Serialize)]
struct CheckReport {
    lines: Vec<CheckLine>,
    pass: bool,
}

fn run_check(
    loaded: &LoadedSystem,
    name: &str,
    k: usize,
    rep: &Option<String>,
    p: &Option<String>,
    q: &Option<String>,
) -> Result<CheckReport, (u8, String)> {
    let x = &loaded.system;
    let core = |e: Error| (exit_code_for(&e), e.to_string());
    let lines = match name {
        "standard" => {
            let report = x.validate_standard();
            vec![CheckLine {
                check: "standard".into(),
                window: (0, x.n_max()),
                residual: report.max_residual,
                pass: report.pass,
            }]
        }
        "cuntz" => {
            let fock = FockOperators::build(x);
            let check = fock.check_cuntz_defect(k).map_err(core)?;
            vec![CheckLine {
                check: check.name,
                window: check.window,
                residual: check.residual,
                pass: check.pass,
            }]
        }
        "subshift" => {
            let words = loaded
                .forbidden
                .as_ref()
                .ok_or((
                    EXIT_INPUT,
                    "subshift check needs a spec of kind \"forbidden\"".to_string(),
                ))?
                .clone();
            let fock = FockOperators::build(x);
            let report = fock.subshift_relations_check(&words, k).map_err(core)?;
            report
                .checks
                .into_iter()
                .map(|c| CheckLine {
                    check: c.name,
                    window: c.window,
                    residual: c.residual,
                    pass: c.pass,
                })
                .collect()
        }
        "representation" => {
            let path = rep
                .as_ref()
                .ok_or((EXIT_INPUT, "--rep FILE is required".to_string()))?;
            let tuple: RepTupleJson = read_json(path).map_err(|m| (EXIT_INPUT, m))?;
            let tuple = tuple.to_tuple().map_err(core)?;
            let report = is_representation(x, &tuple, CHECK_TOL).map_err(core)?;
            vec![CheckLine {
                check: "representation".into(),
                window: (1, x.n_max()),
                residual: report.max_residual,
                pass: report.pass,
            }]
        }
        "vn" => {
            let path = rep
                .as_ref()
                .ok_or((EXIT_INPUT, "--rep FILE is required".to_string()))?;
            let tuple: RepTupleJson = read_json(path).map_err(|m| (EXIT_INPUT, m))?;
            let tuple = tuple.to_tuple().map_err(core)?;
            let p_text = p
                .as_ref()
                .ok_or((EXIT_INPUT, "--p POLY is required".to_string()))?;
            let q_text = q
                .as_ref()
                .ok_or((EXIT_INPUT, "--q POLY is required".to_string()))?;
            let p_poly = parse_poly(p_text, x.d()).map_err(core)?;
            let q_poly = parse_poly(q_text, x.d()).map_err(core)?;
            let report = vn_inequality_check(x, &tuple, &p_poly, &q_poly).map_err(core)?;
            vec![CheckLine {
                check: "vn_inequality".into(),
                window: (0, x.n_max()),
                residual: (report.lhs - report.rhs).max(0.0),
                pass: report.pass,
            }]
        }
        other => {
            return Err((EXIT_INPUT, format!("unknown check \"{}\"", other)));
        }
    };
    let pass = lines.iter().all(|l| l.pass);
    Ok(CheckReport { lines, pass })
}

fn run() -> Result<u8, (u8, String)> {
    let cli = Cli::parse();
    let core = |e: Error| (exit_code_for(&e), e.to_string());
    match &cli.command {
        Command::Dims { spec } => {
            let loaded = load_spec(spec)?;
            #[derive(Serialize)]
            struct Out {
                dims: Vec<usize>,
            }
            emit(&Out {
                dims: loaded.system.dims(),
            });
            Ok(EXIT_PASS)
        }
        Command::Check {
            spec,
            check,
            k,
            rep,
            p,
            q,
        } => {
            let loaded = load_spec(spec)?;
            let report = run_check(&loaded, check, *k, rep, p, q)?;
            let pass = report.pass;
            emit(&report);
            Ok(if pass { EXIT_PASS } else { EXIT_FAIL })
        }
        Command::Membership { spec, poly } => {
            let loaded = load_spec(spec)?;
            let ideal = loaded.ideal.as_ref().ok_or((
                EXIT_INPUT,
                "membership needs a spec of kind \"ideal\"".to_string(),
            ))?;
            let p = parse_poly(poly, loaded.system.d()).map_err(core)?;
            let fock = FockOperators::build(&loaded.system);
            let via_shift = fock.membership_via_shift(&p, CHECK_TOL).map_err(core)?;
            let via_linear = ideal.contains(&p, CHECK_TOL).map_err(core)?;
            let residual_shift = fock.vacuum_residual(&p).map_err(core)?;
            let residual_linear = ideal.membership_residual(&p).map_err(core)?;
            #[derive(Serialize)]
            struct Out {
                in_ideal: bool,
                via_shift: bool,
                via_linear: bool,
                residual_shift: f64,
                residual_linear: f64,
            }
            emit(&Out {
                in_ideal: via_shift && via_linear,
                via_shift,
                via_linear,
                residual_shift,
                residual_linear,
            });
            if via_shift != via_linear
                || (residual_shift - residual_linear).abs() > 1e-7 * p.coeff_norm().max(1.0)
            {
                return Ok(EXIT_DISAGREE);
            }
            Ok(EXIT_PASS)
        }
        Command::Shift { spec, letter } => {
            let loaded = load_spec(spec)?;
            let d = loaded.system.d();
            if *letter < 1 || *letter > d {
                return Err((EXIT_INPUT, format!("letter {} outside 1..={}", letter, d)));
            }
            let fock = FockOperators::build(&loaded.system);
            #[derive(Serialize)]
            struct Out {
                letter: usize,
                total_dim: usize,
                matrix: MatrixJson,
            }
            emit(&Out {
                letter: *letter,
                total_dim: fock.total_dim(),
                matrix: MatrixJson::from_matrix(&fock.shift_matrix(letter - 1)),
            });
            Ok(EXIT_PASS)
        }
        Command::IsoQ { spec, other } => {
            let first: SpecFile = read_json(&spec.spec).map_err(|m| (EXIT_INPUT, m))?;
            let second: SpecFile = read_json(other).map_err(|m| (EXIT_INPUT, m))?;
            let n_max = spec
                .n
                .or(first.n)
                .ok_or((EXIT_INPUT, "truncation degree N missing".to_string()))?;
            let tol = spec.tol.or(first.tol).unwrap_or(RANK_TOL);
            let get_q = |f: &SpecFile| -> Result<_, (u8, String)> {
                if f.kind != "q" {
                    return Err((EXIT_INPUT, "iso-q needs specs of kind \"q\"".to_string()));
                }
                field(&f.q, "q", "q")
                    .map_err(|m| (EXIT_INPUT, m))?
                    .to_matrix()
                    .map_err(core)
            };
            let qm = get_q(&first)?;
            let rm = get_q(&second)?;
            let result = iso_q(&qm, &rm, n_max, tol).map_err(core)?;
            #[derive(Serialize)]
            struct Out {
                isomorphic: bool,
                #[serde(skip_serializing_if = "Option::is_none")]
                sigma: Option<Vec<usize>>,
                #[serde(skip_serializing_if = "Option::is_none")]
                max_fiber_residual: Option<f64>,
            }
            match result {
                Some(iso) => {
                    emit(&Out {
                        isomorphic: true,
                        sigma: Some(iso.sigma),
                        max_fiber_residual: Some(iso.max_fiber_residual),
                    });
                    Ok(EXIT_PASS)
                }
                None => {
                    emit(&Out {
                        isomorphic: false,
                        sigma: None,
                        max_fiber_residual: None,
                    });
                    Ok(EXIT_FAIL)
                }
            }
        }
        Command::ClassifyA { spec } => {
            let file: SpecFile = read_json(&spec.spec).map_err(|m| (EXIT_INPUT, m))?;
            if file.kind != "matrixA" {
                return Err((
                    EXIT_INPUT,
                    "classify-a needs a spec of kind \"matrixA\"".to_string(),
                ));
            }
            let a = field(&file.a, "a", "matrixA")
                .map_err(|m| (EXIT_INPUT, m))?
                .to_matrix()
                .map_err(core)?;
            let cls = classify_a(&a).map_err(core)?;
            #[derive(Serialize)]
            struct Out {
                rank_sym: usize,
                rank_antisym: usize,
                triple: [f64; 3],
            }
            emit(&Out {
                rank_sym: cls.rank_sym,
                rank_antisym: cls.rank_antisym,
                triple: cls.triple,
            });
            Ok(EXIT_PASS)
        }
        Command::Cp { map, max_degree } => {
            let map_json: CpMapJson = read_json(map).map_err(|m| (EXIT_INPUT, m))?;
            let theta = map_json.to_cp_map().map_err(core)?;
            let mut fiber_dims = Vec::new();
            for n in 1..=*max_degree {
                let fiber = subprod_core::cpsg::arveson_fiber(&theta, n).map_err(core)?;
                fiber_dims.push(fiber.dim);
            }
            #[derive(Serialize)]
            struct Pair {
                m: usize,
                n: usize,
                residual: f64,
                pass: bool,
            }
            let mut coisometry = Vec::new();
            let mut pass = true;
            for m in 1..*max_degree {
                for n in 1..*max_degree {
                    if m + n <= *max_degree {
                        let residual =
                            subprod_core::cpsg::coisometry_check(&theta, m, n).map_err(core)?;
                        let ok = residual <= CHECK_TOL;
                        pass = pass && ok;
                        coisometry.push(Pair {
                            m,
                            n,
                            residual,
                            pass: ok,
                        });
                    }
                }
            }
            #[derive(Serialize)]
            struct Out {
                kraus_rank: usize,
                unital: bool,
                fiber_dims: Vec<usize>,
                coisometry: Vec<Pair>,
                pass: bool,
            }
            emit(&Out {
                kraus_rank: theta.rank(),
                unital: theta.is_unital(CHECK_TOL),
                fiber_dims,
                coisometry,
                pass,
            });
            Ok(if pass { EXIT_PASS } else { EXIT_FAIL })
        }
        Command::Piece {
            spec,
            other,
            rep,
            frames,
        } => {
            let x = load_spec(spec)?;
            let other_args = SpecArgs {
                spec: other.clone(),
                n: spec.n,
                tol: spec.tol,
            };
            let y = load_spec(&other_args)?;
            let tuple: RepTupleJson = read_json(rep).map_err(|m| (EXIT_INPUT, m))?;
            let tuple = tuple.to_tuple().map_err(core)?;
            let piece = maximal_piece(&x.system, &y.system, &tuple, CHECK_TOL).map_err(core)?;
            #[derive(Serialize)]
            struct Out {
                dim: usize,
                ambient_dim: usize,
                #[serde(skip_serializing_if = "Option::is_none")]
                frame: Option<MatrixJson>,
            }
            emit(&Out {
                dim: piece.dim(),
                ambient_dim: piece.ambient_dim(),
                frame: if *frames {
                    Some(MatrixJson::from_matrix(piece.frame()))
                } else {
                    None
                },
            });
            Ok(EXIT_PASS)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err((code, message)) => {
            eprintln!("error: {}", message);
            ExitCode::from(code)
        }
    }
}
