use std::fmt::Write as _;
use std::sync::Arc;

use anyhow::Context;
use serde::Serialize;

use monadic_core::engine::{build_multiway_from, rule_letters, RewriteRule};
use monadic_core::io::{
    dense_to_json, ensemble_csv, graph_from_json, graph_to_dot, graph_to_json, path_to_json,
    scan_csv, ComplexJson, GraphJson, PathJson, RationalJson, SMatrixJson,
};
use monadic_core::paths::{enumerate_physical_paths, maximal_variety_paths, Path};
use monadic_core::smatrix::solver::extend_for_unitarity;
use monadic_core::smatrix::{
    build_smatrix, gate_catalog, layer_system, normalize_columns, recognize_gate,
    solve_unitary_weights, Coupling, SolveOutcome, SolverOptions,
};
use monadic_core::stats::{ensemble_report, entropy_variety_scan, sample_leibnizian, EnsembleSpec};
use monadic_core::strcore::{
    conditional_entropy, fractal_word, indifference_profile, is_leibnizian, ratio_to_f64,
    shannon_entropy, variety, Alphabet, CyclicString, PairMode,
};
use monadic_core::{MultiwayGraph, MultiwayOptions};

use crate::{CliError, Command, Format, SessionConfig, TOOL, VERSION};

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: &'a SessionConfig,
    result: T,
}

/// Artifact text and whether the result is infeasible or truncated.
type Rendered = (String, bool);

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn json<T: Serialize>(
    command: &'static str,
    config: &SessionConfig,
    result: T,
) -> Result<String, CliError> {
    let env = Envelope {
        tool: TOOL,
        version: VERSION,
        command,
        config,
        result,
    };
    let mut out = serde_json::to_string_pretty(&env).context("serializing artifact")?;
    out.push('\n');
    Ok(out)
}

/// One-line provenance header for non-JSON artifacts.
fn header(comment: &str, command: &str, config: &SessionConfig) -> Result<String, CliError> {
    let cfg = serde_json::to_string(config).context("serializing config")?;
    Ok(format!("{comment} {TOOL} {VERSION} {command} {cfg}\n"))
}

fn alphabet_for<'a>(
    config: &SessionConfig,
    inputs: impl IntoIterator<Item = &'a str>,
) -> Result<Arc<Alphabet>, CliError> {
    let a = match &config.alphabet {
        Some(letters) => Alphabet::new(letters.chars()),
        None => {
            let mut texts: Vec<&str> = inputs.into_iter().collect();
            let rules = rule_letters(&config.rules);
            texts.push(&rules);
            Alphabet::derive(texts)
        }
    };
    a.map(Arc::new).map_err(usage)
}

fn default_alphabet(config: &SessionConfig) -> Result<Arc<Alphabet>, CliError> {
    if config.alphabet.is_some() {
        alphabet_for(config, [])
    } else {
        Ok(Arc::new(Alphabet::new("AB".chars()).expect("two letters")))
    }
}

fn parse_word(alphabet: &Arc<Alphabet>, text: &str) -> Result<CyclicString, CliError> {
    CyclicString::parse(alphabet.clone(), text).map_err(usage)
}

fn load_graph(path: &std::path::Path) -> Result<MultiwayGraph, CliError> {
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    // accept a bare graph or a multiway artifact
    let graph = value
        .get("result")
        .and_then(|r| r.get("graph"))
        .cloned()
        .unwrap_or(value);
    let gj: GraphJson =
        serde_json::from_value(graph).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    graph_from_json(&gj).map_err(|e| usage(format!("{}: {e}", path.display())))
}

pub(crate) fn dispatch(command: &Command, config: &SessionConfig) -> Result<Rendered, CliError> {
    match command {
        Command::Analyze { string } => analyze(string, config),
        Command::Multiway {
            init,
            depth,
            max_nodes,
            max_width,
        } => multiway(init, *depth, *max_nodes, *max_width, config),
        Command::Paths { graph, depth, all } => paths(graph, *depth, *all, config),
        Command::Smatrix {
            graph,
            from,
            to,
            all_nodes,
            lambda,
            restarts,
            recognize,
            extend,
        } => {
            let opts = SolverOptions {
                restarts: *restarts,
                feasibility: config.tolerances.feasibility,
                seed: config.seed,
                lambda: *lambda,
                ..SolverOptions::default()
            };
            let graph = load_graph(graph)?;
            smatrix(
                &graph, *from, *to, !all_nodes, &opts, *recognize, *extend, config,
            )
        }
        Command::Stats { length, cap } => stats(*length, *cap, config),
        Command::Corr {
            samples,
            min_len,
            max_len,
        } => corr(*samples, *min_len, *max_len, config),
        Command::Fractal { n } => fractal(*n, config),
    }
}

#[derive(Serialize)]
struct AnalyzeJson {
    string: String,
    alphabet: String,
    length: usize,
    leibnizian: bool,
    a_vector: Vec<usize>,
    variety: RationalJson,
    variety_f64: f64,
    shannon_entropy: f64,
    conditional_entropy: Option<f64>,
}

fn analyze(text: &str, config: &SessionConfig) -> Result<Rendered, CliError> {
    if text.is_empty() {
        return Err(usage("string is empty"));
    }
    let alphabet = alphabet_for(config, [text])?;
    let s = parse_word(&alphabet, text)?;
    let profile = indifference_profile(&s).ok();
    let v = variety(&s);
    let report = AnalyzeJson {
        string: s.render(),
        alphabet: alphabet.to_string(),
        length: s.len(),
        leibnizian: profile.as_ref().is_some_and(|p| p.is_leibnizian()),
        a_vector: profile.map(|p| p.a).unwrap_or_default(),
        variety: v.value().into(),
        variety_f64: v.to_f64(),
        shannon_entropy: shannon_entropy(&s),
        conditional_entropy: conditional_entropy(&s, PairMode::Cyclic).ok(),
    };
    let out = match config.format {
        Format::Json => json("analyze", config, &report)?,
        _ => {
            let mut out = header("#", "analyze", config)?;
            writeln!(out, "string: {}", report.string).unwrap();
            writeln!(out, "leibnizian: {}", report.leibnizian).unwrap();
            writeln!(out, "a_vector: {:?}", report.a_vector).unwrap();
            writeln!(
                out,
                "variety: {}/{}",
                report.variety.num, report.variety.den
            )
            .unwrap();
            writeln!(out, "shannon_entropy: {:.6}", report.shannon_entropy).unwrap();
            match report.conditional_entropy {
                Some(h) => writeln!(out, "conditional_entropy: {h:.6}").unwrap(),
                None => writeln!(out, "conditional_entropy: n/a").unwrap(),
            }
            out
        }
    };
    Ok((out, false))
}

#[derive(Serialize)]
struct MultiwayJson {
    graph: GraphJson,
    physical_nodes: Vec<usize>,
    maximal_depth: usize,
    maximal_paths: Vec<PathJson>,
}

fn paths_json(g: &MultiwayGraph, paths: &[Path]) -> Result<Vec<PathJson>, CliError> {
    paths
        .iter()
        .map(|p| {
            path_to_json(g, p)
                .context("rendering path")
                .map_err(CliError::from)
        })
        .collect()
}

fn multiway(
    init: &[String],
    depth: usize,
    max_nodes: usize,
    max_width: usize,
    config: &SessionConfig,
) -> Result<Rendered, CliError> {
    if config.rules.is_empty() {
        return Err(usage("multiway needs at least one --rule"));
    }
    if init.iter().any(String::is_empty) {
        return Err(usage("initial string is empty"));
    }
    let alphabet = alphabet_for(config, init.iter().map(String::as_str))?;
    let rules = config
        .rules
        .iter()
        .map(|r| RewriteRule::parse(&alphabet, r))
        .collect::<Result<Vec<_>, _>>()
        .map_err(usage)?;
    let roots = init
        .iter()
        .map(|t| parse_word(&alphabet, t))
        .collect::<Result<Vec<_>, _>>()?;
    let options = MultiwayOptions {
        match_mode: config.match_mode,
        canon_mode: config.canon_mode,
        max_depth: Some(depth),
        max_layer_width: max_width,
        max_nodes,
    };
    let g = build_multiway_from(&roots, &rules, options).map_err(usage)?;
    let best = maximal_variety_paths(&g, g.depth()).context("maximal paths")?;
    let flagged = g.truncated();
    let out = match config.format {
        Format::Dot => header("//", "multiway", config)? + &graph_to_dot(&g, &best),
        Format::Text => {
            let mut out = header("#", "multiway", config)?;
            for (d, layer) in g.layers().iter().enumerate() {
                let cells: Vec<String> = layer
                    .iter()
                    .map(|n| {
                        format!(
                            "{}:{}:{}{}",
                            n.id,
                            n.string,
                            n.variety,
                            if n.leibnizian { "" } else { "*" }
                        )
                    })
                    .collect();
                writeln!(out, "layer {d}: {}", cells.join(" ")).unwrap();
            }
            for p in &best {
                writeln!(out, "maximal: {}", p.render(&g)).unwrap();
            }
            writeln!(
                out,
                "terminated: {} truncated: {}",
                g.terminated(),
                g.truncated()
            )
            .unwrap();
            out
        }
        _ => json(
            "multiway",
            config,
            MultiwayJson {
                graph: graph_to_json(&g),
                physical_nodes: g.nodes().filter(|n| n.leibnizian).map(|n| n.id).collect(),
                maximal_depth: g.depth(),
                maximal_paths: paths_json(&g, &best)?,
            },
        )?,
    };
    Ok((out, flagged))
}

#[derive(Serialize)]
struct PathsJson {
    depth: usize,
    maximal_paths: Vec<PathJson>,
    physical_paths: Option<Vec<PathJson>>,
}

fn paths(
    file: &std::path::Path,
    depth: Option<usize>,
    all: bool,
    config: &SessionConfig,
) -> Result<Rendered, CliError> {
    let g = load_graph(file)?;
    let depth = depth.unwrap_or(g.depth());
    let best = maximal_variety_paths(&g, depth).map_err(usage)?;
    let physical = if all {
        Some(enumerate_physical_paths(&g, 0, depth).map_err(usage)?)
    } else {
        None
    };
    let out = match config.format {
        Format::Json => json(
            "paths",
            config,
            PathsJson {
                depth,
                maximal_paths: paths_json(&g, &best)?,
                physical_paths: physical
                    .as_deref()
                    .map(|ps| paths_json(&g, ps))
                    .transpose()?,
            },
        )?,
        _ => {
            let mut out = header("#", "paths", config)?;
            for p in &best {
                writeln!(out, "maximal: {}", p.render(&g)).unwrap();
            }
            for p in physical.iter().flatten() {
                writeln!(out, "physical: {}", p.render(&g)).unwrap();
            }
            out
        }
    };
    Ok((out, false))
}

#[derive(Serialize)]
struct ExtensionJson {
    rows_added: usize,
    rows_needed: usize,
    feasible: bool,
    residual: f64,
    dense: Vec<Vec<ComplexJson>>,
}

#[derive(Serialize)]
struct SMatrixResultJson {
    layer_in: usize,
    layer_out: usize,
    restrict_physical: bool,
    in_strings: Vec<String>,
    out_strings: Vec<String>,
    unreached_out: Vec<usize>,
    feasible: bool,
    method: Option<String>,
    residual: f64,
    smatrix: SMatrixJson,
    /// Dense matrix with every nonzero column scaled to unit norm.
    dense_normalized: Vec<Vec<ComplexJson>>,
    extension: Option<ExtensionJson>,
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn smatrix(
    g: &MultiwayGraph,
    from: usize,
    to: usize,
    restrict_physical: bool,
    opts: &SolverOptions,
    recognize: bool,
    extend: Option<usize>,
    config: &SessionConfig,
) -> Result<Rendered, CliError> {
    let ls = layer_system(g, from, to, restrict_physical).map_err(usage)?;
    let coupling = Coupling::new(config.k, config.gamma).map_err(usage)?;
    let outcome = solve_unitary_weights(&ls.connected, opts);
    let method = match &outcome {
        SolveOutcome::Feasible { method, .. } => Some(format!("{method:?}").to_lowercase()),
        SolveOutcome::Infeasible { .. } => None,
    };
    let spec =
        build_smatrix(&ls, outcome.weights(), coupling).context("assembling the S-matrix")?;
    let matches = if recognize && outcome.is_feasible() {
        recognize_gate(&spec.dense(), &gate_catalog(), config.tolerances.match_tol)
    } else {
        Vec::new()
    };
    let extension = extend.map(|dm| {
        let ext = extend_for_unitarity(&spec, dm);
        ExtensionJson {
            rows_added: dm,
            rows_needed: ext.rows_needed,
            feasible: ext.feasible,
            residual: ext.residual,
            dense: dense_to_json(&ext.composite.dense()),
        }
    });
    let name = |id: &usize| g.node(*id).map(|n| n.string.render()).unwrap_or_default();
    let result = SMatrixResultJson {
        layer_in: from,
        layer_out: to,
        restrict_physical,
        in_strings: ls.in_words.iter().map(name).collect(),
        out_strings: ls.out_words.iter().map(name).collect(),
        unreached_out: ls.unreached_out.clone(),
        feasible: outcome.is_feasible(),
        method,
        residual: outcome.residual(),
        smatrix: monadic_core::io::smatrix_to_json(&ls, &spec, &matches),
        dense_normalized: dense_to_json(&normalize_columns(&spec.dense())),
        extension,
    };
    let flagged = !result.feasible || result.extension.as_ref().is_some_and(|e| !e.feasible);
    let out = match config.format {
        Format::Json => json("smatrix", config, &result)?,
        _ => {
            let mut out = header("#", "smatrix", config)?;
            writeln!(out, "in: {}", result.in_strings.join(" ")).unwrap();
            writeln!(out, "out: {}", result.out_strings.join(" ")).unwrap();
            let status = if result.feasible {
                "feasible"
            } else {
                "infeasible"
            };
            writeln!(out, "{status}, residual {:.3e}", result.residual).unwrap();
            for row in &result.smatrix.dense {
                let cells: Vec<String> = row
                    .iter()
                    .map(|z| format!("{:+.6}{:+.6}i", z.re, z.im))
                    .collect();
                writeln!(out, "  {}", cells.join("  ")).unwrap();
            }
            for m in &result.smatrix.matches {
                writeln!(out, "match: {} residual {:.2e}", m.gate, m.residual).unwrap();
            }
            if let Some(e) = &result.extension {
                writeln!(
                    out,
                    "extension +{}: feasible {} residual {:.3e}",
                    e.rows_added, e.feasible, e.residual
                )
                .unwrap();
            }
            out
        }
    };
    Ok((out, flagged))
}

#[derive(Serialize)]
struct ViewJson<'a> {
    view: &'a str,
    radius: usize,
    n_expected: f64,
    fd_predicted: f64,
    abs_dev: f64,
}

#[derive(Serialize)]
struct StatsJson<'a> {
    length: usize,
    ensemble_size: usize,
    z_n: f64,
    z_n_minus_1: f64,
    mu: f64,
    occupation_sum: f64,
    max_abs_dev: f64,
    rows: Vec<ViewJson<'a>>,
}

fn stats(length: usize, cap: u64, config: &SessionConfig) -> Result<Rendered, CliError> {
    let spec = EnsembleSpec {
        alphabet: default_alphabet(config)?,
        length,
        beta: config.beta,
        gamma: config.gamma,
        canon_mode: config.canon_mode,
    };
    let report = ensemble_report(&spec, cap).map_err(usage)?;
    let out = match config.format {
        Format::Csv => {
            header("#", "stats", config)? + &ensemble_csv(&report).context("writing csv")?
        }
        Format::Json => json(
            "stats",
            config,
            StatsJson {
                length: report.length,
                ensemble_size: report.ensemble_size,
                z_n: report.z_n,
                z_n_minus_1: report.z_n_minus_1,
                mu: report.mu,
                occupation_sum: report.occupation_sum(),
                max_abs_dev: report.max_abs_dev(),
                rows: report
                    .rows
                    .iter()
                    .map(|r| ViewJson {
                        view: &r.view,
                        radius: r.radius,
                        n_expected: r.n_expected,
                        fd_predicted: r.fd_predicted,
                        abs_dev: r.abs_dev,
                    })
                    .collect(),
            },
        )?,
        _ => {
            let mut out = header("#", "stats", config)?;
            writeln!(
                out,
                "length {} ensemble {} mu {:.6}",
                report.length, report.ensemble_size, report.mu
            )
            .unwrap();
            writeln!(out, "occupation sum {:.12}", report.occupation_sum()).unwrap();
            writeln!(out, "max |n - fd| {:.6}", report.max_abs_dev()).unwrap();
            out
        }
    };
    Ok((out, false))
}

#[derive(Serialize)]
struct ScanJson<'a> {
    string: &'a str,
    cond_entropy: f64,
    variety: RationalJson,
}

#[derive(Serialize)]
struct CorrJson<'a> {
    samples: usize,
    pearson: Option<f64>,
    rows: Vec<ScanJson<'a>>,
}

fn corr(
    samples: usize,
    min_len: usize,
    max_len: usize,
    config: &SessionConfig,
) -> Result<Rendered, CliError> {
    let alphabet = default_alphabet(config)?;
    let strings =
        sample_leibnizian(&alphabet, min_len, max_len, samples, config.seed).map_err(usage)?;
    let report = entropy_variety_scan(&strings).map_err(usage)?;
    let out = match config.format {
        Format::Csv => header("#", "corr", config)? + &scan_csv(&report).context("writing csv")?,
        Format::Json => json(
            "corr",
            config,
            CorrJson {
                samples: report.rows.len(),
                pearson: report.pearson,
                rows: report
                    .rows
                    .iter()
                    .map(|r| ScanJson {
                        string: &r.string,
                        cond_entropy: r.cond_entropy,
                        variety: r.variety.into(),
                    })
                    .collect(),
            },
        )?,
        _ => {
            let mut out = header("#", "corr", config)?;
            writeln!(out, "samples {}", report.rows.len()).unwrap();
            match report.pearson {
                Some(r) => writeln!(out, "pearson {r:.6}").unwrap(),
                None => writeln!(out, "pearson undefined").unwrap(),
            }
            out
        }
    };
    Ok((out, false))
}

#[derive(Serialize)]
struct FractalJson {
    n: usize,
    word: String,
    length: usize,
    leibnizian: bool,
    variety: RationalJson,
    variety_f64: f64,
}

fn fractal(n: usize, config: &SessionConfig) -> Result<Rendered, CliError> {
    let alphabet = default_alphabet(config)?;
    let w = fractal_word(alphabet, n).map_err(usage)?;
    let v = variety(&w);
    let out = match config.format {
        Format::Json => json(
            "fractal",
            config,
            FractalJson {
                n,
                word: w.render(),
                length: w.len(),
                leibnizian: is_leibnizian(&w),
                variety: v.value().into(),
                variety_f64: ratio_to_f64(&v.value()),
            },
        )?,
        _ => header("#", "fractal", config)? + &w.render() + "\n",
    };
    Ok((out, false))
}
