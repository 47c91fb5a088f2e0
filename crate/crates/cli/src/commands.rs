use std::time::Instant;

use lebesgue::ell1::{diag_decompose, theorem_b_instance};
use lebesgue::engine::{ac_part_iterative, certify, decompose as engine_decompose, IterationTrace};
use lebesgue::formats::{iterations_json, parse_functional, DecompositionJson};
use lebesgue::functional::functional_uniqueness;
use lebesgue::psd::op_norm;
use lebesgue::{panel, Error, NormalFunctional, Rep, ToleranceConfig};
use serde::Serialize;

use crate::io::{read_input, write_atomic, CliError, CliResult};
use crate::report::{Counterexample, FunctionalCheck, InputEcho, Payload, RunReport};
use crate::Flags;

const CHECK_PANEL: usize = 50;

fn config(flags: &Flags) -> CliResult<ToleranceConfig> {
    let cfg = flags.config();
    cfg.validate()?;
    if flags.truncate == Some(0) {
        return Err(CliError::invalid("--truncate must be at least 1"));
    }
    Ok(cfg)
}

fn load(path: &str, role: &str, flags: &Flags, cfg: &ToleranceConfig) -> CliResult<(NormalFunctional, InputEcho)> {
    let input = read_input(path)?;
    let f = parse_functional(&input.text, cfg).map_err(|e| CliError::from(e).prefixed(path))?;
    let f = match (f.rep(), flags.truncate) {
        (Rep::Sequence(x), Some(n)) => {
            let label = f.label().map(str::to_string);
            NormalFunctional::new(Rep::Matrix(x.truncate_to_matrix(n)?), label)
        }
        _ => f,
    };
    let echo = InputEcho {
        role: role.to_string(),
        kind: f.kind().to_string(),
        dim: match f.rep() {
            Rep::Matrix(t) => Some(t.dim()),
            Rep::Sequence(_) => None,
        },
        sha256: input.sha256,
    };
    Ok((f, echo))
}

fn load_pair(
    paths: [&str; 2],
    roles: [&str; 2],
    flags: &Flags,
    cfg: &ToleranceConfig,
) -> CliResult<(NormalFunctional, NormalFunctional, Vec<InputEcho>)> {
    let (a, ea) = load(paths[0], roles[0], flags, cfg)?;
    let (b, eb) = load(paths[1], roles[1], flags, cfg)?;
    match (a.rep(), b.rep()) {
        (Rep::Matrix(x), Rep::Matrix(y)) if x.dim() != y.dim() => {
            return Err(Error::DimensionMismatch {
                left: x.dim(),
                right: y.dim(),
            }
            .into())
        }
        (Rep::Matrix(_), Rep::Sequence(_)) | (Rep::Sequence(_), Rep::Matrix(_)) => {
            return Err(CliError::invalid(format!(
                "{} is a {} but {} is a {}; pass --truncate N to compare a sequence with a matrix",
                roles[0],
                a.kind(),
                roles[1],
                b.kind()
            )))
        }
        _ => {}
    }
    Ok((a, b, vec![ea, eb]))
}

fn functional_check(
    g: &NormalFunctional,
    regular: &NormalFunctional,
    singular: &NormalFunctional,
    dim: usize,
    seed: u64,
) -> CliResult<FunctionalCheck> {
    let mut rng = panel::rng(seed);
    let scale = g.rep_matrix(dim)?.trace().max(f64::MIN_POSITIVE);
    let mut worst: f64 = 0.0;
    for _ in 0..CHECK_PANEL {
        let a = panel::random_hermitian(dim, &mut rng);
        let defect = g.evaluate(&a)? - regular.evaluate(&a)? - singular.evaluate(&a)?;
        worst = worst.max(defect.abs() / (op_norm(&a) * scale));
    }
    Ok(FunctionalCheck {
        seed,
        panel_size: CHECK_PANEL,
        dim,
        max_rel_defect: worst,
    })
}

fn write_report(out: &str, payload: Payload, started: Instant) -> CliResult<()> {
    let report = RunReport::new(payload, started.elapsed().as_secs_f64() * 1e3);
    write_atomic(out, report.to_json().as_bytes())
}

pub fn decompose(s_path: &str, t_path: &str, out: &str, flags: &Flags) -> CliResult<()> {
    let started = Instant::now();
    let cfg = config(flags)?;
    let (g, f, inputs) = load_pair([s_path, t_path], ["S", "T"], flags, &cfg)?;
    let mut payload = Payload {
        command: "decompose".into(),
        inputs,
        tolerances: cfg,
        truncate: flags.truncate,
        decomposition: None,
        uniqueness: None,
        functional_check: None,
        error: None,
        trace: None,
    };
    let (decomposition, regular, singular, check_dim) = match (g.rep(), f.rep()) {
        (Rep::Matrix(s), Rep::Matrix(t)) => match engine_decompose(s, t, &cfg) {
            Ok(dec) => {
                let cert = certify(&dec, t, &cfg)?;
                payload.uniqueness = Some(cert.clone());
                (
                    DecompositionJson::from_matrices(&dec, &cert),
                    NormalFunctional::from_matrix(dec.ac),
                    NormalFunctional::from_matrix(dec.sing),
                    s.dim(),
                )
            }
            Err(err @ Error::NoConvergence { .. }) => {
                payload.error = Some(err.to_string());
                if let Error::NoConvergence { trace, .. } = &err {
                    payload.trace = Some(iterations_json(trace));
                }
                write_report(out, payload, started)?;
                return Err(err.into());
            }
            Err(e) => return Err(e.into()),
        },
        (Rep::Sequence(s), Rep::Sequence(t)) => {
            let (ac, sing) = diag_decompose(s, t);
            let cert = functional_uniqueness(&g, &f, &cfg)?;
            payload.uniqueness = Some(cert.clone());
            let dim = s.prefix().len().max(t.prefix().len()) + 8;
            (
                DecompositionJson::from_sequences(&ac, &sing, &cert),
                NormalFunctional::from_sequence(ac),
                NormalFunctional::from_sequence(sing),
                dim,
            )
        }
        _ => unreachable!("kinds checked when loading"),
    };
    payload.functional_check = Some(functional_check(&g, &regular, &singular, check_dim, flags.seed)?);
    let unique = decomposition.unique;
    payload.decomposition = Some(decomposition);
    write_report(out, payload, started)?;
    flags.info(format!("wrote {out} (unique: {unique})"));
    Ok(())
}

pub fn check_unique(g_path: &str, f_path: &str, flags: &Flags) -> CliResult<()> {
    let cfg = config(flags)?;
    let (g, f, _) = load_pair([g_path, f_path], ["G", "F"], flags, &cfg)?;
    let cert = functional_uniqueness(&g, &f, &cfg)?;
    #[derive(Serialize)]
    struct Answer {
        unique: bool,
        c: Option<f64>,
    }
    let answer = Answer {
        unique: cert.unique,
        c: cert.c,
    };
    println!("{}", serde_json::to_string(&answer).expect("plain data serialises"));
    Ok(())
}

pub fn counterexample(lambda_path: &str, out: &str, flags: &Flags) -> CliResult<()> {
    let cfg = config(flags)?;
    let input = read_input(lambda_path)?;
    let f = parse_functional(&input.text, &cfg).map_err(|e| CliError::from(e).prefixed(lambda_path))?;
    let Rep::Sequence(lambda) = f.rep() else {
        return Err(Error::FiniteRank(
            "a matrix has finite rank, and finite-rank operators always decompose uniquely".into(),
        )
        .into());
    };
    let (t, s, certificate) = theorem_b_instance(lambda)?;
    let doc = Counterexample {
        sum_s: s.sum(),
        t,
        s,
        certificate,
        input_sha256: input.sha256,
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("plain data serialises");
    text.push('\n');
    write_atomic(out, text.as_bytes())?;
    flags.info(format!("wrote {out}"));
    Ok(())
}

fn csv(trace: &IterationTrace) -> String {
    let mut out = String::from("k,n,gap_trace,c_bound\n");
    for step in &trace.steps {
        let c = step.c_bound.map_or_else(|| "inf".to_string(), |c| format!("{c:e}"));
        out.push_str(&format!("{},{},{:e},{}\n", step.k, step.n, step.gap, c));
    }
    out
}

pub fn converge_report(s_path: &str, t_path: &str, csv_path: &str, flags: &Flags) -> CliResult<()> {
    let cfg = config(flags)?;
    let (g, f, _) = load_pair([s_path, t_path], ["S", "T"], flags, &cfg)?;
    let (Rep::Matrix(s), Rep::Matrix(t)) = (g.rep(), f.rep()) else {
        return Err(CliError::invalid(
            "convergence traces need matrices; pass --truncate N for sequence inputs",
        ));
    };
    match ac_part_iterative(s, t, &cfg) {
        Ok((_, trace)) => {
            write_atomic(csv_path, csv(&trace).as_bytes())?;
            flags.info(format!("wrote {csv_path} ({} steps)", trace.steps.len()));
            Ok(())
        }
        Err(err @ Error::NoConvergence { .. }) => {
            if let Error::NoConvergence { trace, .. } = &err {
                write_atomic(csv_path, csv(trace).as_bytes())?;
            }
            Err(err.into())
        }
        Err(e) => Err(e.into()),
    }
}
