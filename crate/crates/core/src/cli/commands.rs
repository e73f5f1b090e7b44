use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::align::{align_graphs, Alignment};
use crate::baselines::{gold_entity_select, pagerank_select, summary_induced_graph, topk_freq_select};
use crate::build::{build_full_graph_with_provenance, calibrate_tau, document_target, TauSplit};
use crate::error::{Error, Result};
use crate::gat::{
    grad_check, labels_from_alignment, positive_ordinals, predict, train, BackwardFault, DevGraph, GatConfig, GatModel,
    GraphInputs, ModelFile, TrainGraph,
};
use crate::ingest::jsonl::{parse_json, read_jsonl, read_lines, to_jsonl, to_pretty_json, write_atomic};
use crate::ingest::{
    compute_corpus_stats, filter_pair, load_embedding_table, parse_document_record, parse_graph, DocumentRecord,
    EmbeddingTable, FilterDecision,
};
use crate::kg::KnowledgeGraph;
use crate::metrics::{aggregate, aggregate_micro, score_document, Average, MetricsReport, TypeMatch};
use crate::synthetic::random_graph;

use super::config::{ReportHeader, RunConfig};
use super::*;

pub(super) fn dispatch(cli: Cli) -> Result<i32> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(&existing(p.clone())?)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("cannot start {:?} worker threads: {e}", cli.jobs)))?;
    pool.install(|| match cli.command {
        Command::Build(a) => build(a, cfg),
        Command::Align(a) => align(a, cfg),
        Command::Eval(a) => eval(a, cfg),
        Command::Baseline(a) => baseline(a, cfg),
        Command::Train(a) => train_cmd(a, cfg),
        Command::Predict(a) => predict_cmd(a, cfg),
        Command::Gradcheck(a) => gradcheck(a, cfg),
        Command::CalibrateTau(a) => calibrate(a, cfg),
    })
}

fn existing(p: PathBuf) -> Result<PathBuf> {
    if p.is_file() {
        Ok(p)
    } else {
        Err(Error::Config(format!("input file {} does not exist", p.display())))
    }
}

/// Flag value, else the config's path, else a usage error.
fn pick(flag: Option<PathBuf>, from_config: &Option<PathBuf>, name: &str) -> Result<PathBuf> {
    flag.or_else(|| from_config.clone())
        .ok_or_else(|| Error::Config(format!("--{name} is required")))
}

fn input(flag: Option<PathBuf>, from_config: &Option<PathBuf>, name: &str) -> Result<PathBuf> {
    existing(pick(flag, from_config, name)?)
}

fn read_docs(path: &Path) -> Result<Vec<DocumentRecord>> {
    read_lines(path, parse_document_record)
}

fn read_graphs(path: &Path) -> Result<Vec<KnowledgeGraph>> {
    read_lines(path, parse_graph)
}

fn write_lines<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    write_atomic(path, to_jsonl(items).as_bytes())
}

fn emit<T: Serialize>(out: Option<&Path>, report: &T) -> Result<()> {
    let text = to_pretty_json(report);
    match out {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn by_doc<'a>(graphs: &'a [KnowledgeGraph], what: &str) -> Result<HashMap<&'a str, &'a KnowledgeGraph>> {
    let mut map = HashMap::new();
    for g in graphs {
        if map.insert(g.doc_id.as_str(), g).is_some() {
            return Err(Error::InvalidRecord(format!(
                "duplicate doc_id `{}` in {what}",
                g.doc_id
            )));
        }
    }
    Ok(map)
}

/// Pairs every graph with the target of the same document, in `graphs`
/// order. Both files must cover exactly the same documents.
fn pair<'a>(
    graphs: &'a [KnowledgeGraph],
    targets: &'a [KnowledgeGraph],
) -> Result<Vec<(&'a KnowledgeGraph, &'a KnowledgeGraph)>> {
    let t = by_doc(targets, "targets")?;
    let g = by_doc(graphs, "predictions")?;
    if let Some(extra) = targets.iter().find(|x| !g.contains_key(x.doc_id.as_str())) {
        return Err(Error::InvalidRecord(format!(
            "no prediction for target `{}`",
            extra.doc_id
        )));
    }
    graphs
        .iter()
        .map(|p| {
            t.get(p.doc_id.as_str())
                .map(|&t| (p, t))
                .ok_or_else(|| Error::InvalidRecord(format!("no target for `{}`", p.doc_id)))
        })
        .collect()
}

fn embeddings(flag: Option<PathBuf>, cfg: &RunConfig, gat: &GatConfig) -> Result<EmbeddingTable> {
    let table = match flag.or_else(|| cfg.paths.embeddings.clone()) {
        Some(p) => load_embedding_table(&existing(p)?, cfg.embedding_fallback)?,
        None => EmbeddingTable::hashed(gat.embed_dim),
    };
    if table.dimension != gat.embed_dim {
        return Err(Error::Config(format!(
            "embedding table has dimension {}, model expects embed_dim = {}",
            table.dimension, gat.embed_dim
        )));
    }
    Ok(table)
}

#[derive(Serialize)]
struct BuildSummary {
    header: ReportHeader,
    documents: usize,
    kept: usize,
    dropped_too_few_relations: usize,
    dropped_abstract_too_long: usize,
    dropped_no_target: usize,
}

fn build(a: BuildArgs, mut cfg: RunConfig) -> Result<i32> {
    if let Some(t) = a.tau {
        cfg.tau = t;
    }
    if let Some(m) = &a.merge_policy {
        cfg.merge_policy = m.parse()?;
    }
    cfg.validate()?;
    let docs_path = input(a.docs, &cfg.paths.docs, "docs")?;
    let out = pick(a.out, &cfg.paths.out, "out")?;
    let docs = read_docs(&docs_path)?;
    let stats = compute_corpus_stats(&docs, cfg.tau)?;
    let built = docs
        .par_iter()
        .map(|d| {
            Ok((
                build_full_graph_with_provenance(d, &stats, cfg.merge_policy)?.graph,
                document_target(d)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut summary = BuildSummary {
        header: ReportHeader::new("build", &cfg),
        documents: docs.len(),
        kept: 0,
        dropped_too_few_relations: 0,
        dropped_abstract_too_long: 0,
        dropped_no_target: 0,
    };
    let mut fulls = Vec::new();
    let mut targets = Vec::new();
    for (full, target) in built {
        if a.filter {
            match &target {
                None => {
                    summary.dropped_no_target += 1;
                    continue;
                }
                Some((t, tokens)) => match filter_pair(t, *tokens) {
                    FilterDecision::Keep => {}
                    FilterDecision::Drop(crate::ingest::DropReason::TooFewRelations) => {
                        summary.dropped_too_few_relations += 1;
                        continue;
                    }
                    FilterDecision::Drop(crate::ingest::DropReason::AbstractTooLong) => {
                        summary.dropped_abstract_too_long += 1;
                        continue;
                    }
                },
            }
        }
        fulls.push(full);
        targets.extend(target.map(|(t, _)| t));
    }
    summary.kept = fulls.len();
    write_lines(&out, &fulls)?;
    if let Some(t) = a.targets_out {
        write_lines(&t, &targets)?;
    }
    log::info!("{}", serde_json::to_string(&summary).expect("serializable"));
    Ok(0)
}

fn align(a: AlignArgs, mut cfg: RunConfig) -> Result<i32> {
    if let Some(l) = a.lambda {
        cfg.lambda = l;
    }
    cfg.validate()?;
    let pred = input(a.pred, &cfg.paths.pred, "pred")?;
    let targets = input(a.targets, &cfg.paths.targets, "targets")?;
    let out = pick(a.out, &cfg.paths.out, "out")?;
    let (pred, targets) = (read_graphs(&pred)?, read_graphs(&targets)?);
    let alignments: Vec<Alignment> = pair(&pred, &targets)?
        .par_iter()
        .map(|(p, t)| align_graphs(p, t, cfg.lambda))
        .collect();
    write_lines(&out, &alignments)?;
    Ok(0)
}

#[derive(Serialize)]
struct DocumentReport {
    doc_id: String,
    #[serde(flatten)]
    scores: MetricsReport,
}

#[derive(Serialize)]
struct EvalReport {
    header: ReportHeader,
    documents: usize,
    aggregate: MetricsReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    per_document: Option<Vec<DocumentReport>>,
}

fn eval(a: EvalArgs, mut cfg: RunConfig) -> Result<i32> {
    if let Some(l) = a.lambda {
        cfg.lambda = l;
    }
    if let Some(avg) = a.average {
        cfg.average = match avg {
            AverageArg::Macro => Average::Macro,
            AverageArg::Micro => Average::Micro,
        };
    }
    if let Some(tm) = a.type_match {
        cfg.type_match = match tm {
            TypeMatchArg::Any => TypeMatch::Any,
            TypeMatchArg::All => TypeMatch::All,
        };
    }
    cfg.validate()?;
    let pred = input(a.pred, &cfg.paths.pred, "pred")?;
    let targets = input(a.targets, &cfg.paths.targets, "targets")?;
    let given = match a.alignments.or_else(|| cfg.paths.alignments.clone()) {
        Some(p) => Some(read_jsonl::<Alignment>(&existing(p)?)?),
        None => None,
    };
    let out = a.out.or_else(|| cfg.paths.out.clone());
    let (pred, targets) = (read_graphs(&pred)?, read_graphs(&targets)?);
    let pairs = pair(&pred, &targets)?;
    let alignments: Vec<Alignment> = match given {
        Some(list) => {
            let mut map: HashMap<String, Alignment> = HashMap::new();
            for al in list {
                let id = al.doc_id.clone();
                if map.insert(id.clone(), al).is_some() {
                    return Err(Error::InvalidRecord(format!("duplicate alignment for `{id}`")));
                }
            }
            pairs
                .iter()
                .map(|(p, _)| {
                    map.remove(&p.doc_id)
                        .ok_or_else(|| Error::InvalidRecord(format!("no alignment for `{}`", p.doc_id)))
                })
                .collect::<Result<_>>()?
        }
        None => pairs.par_iter().map(|(p, t)| align_graphs(p, t, cfg.lambda)).collect(),
    };
    let scores: Vec<_> = pairs
        .par_iter()
        .zip(&alignments)
        .map(|((p, t), al)| score_document(al, p, t, cfg.type_match))
        .collect();
    let reports: Vec<MetricsReport> = scores.iter().map(|s| s.report()).collect();
    let total = match cfg.average {
        Average::Macro => aggregate(&reports)?,
        Average::Micro => aggregate_micro(&scores)?,
    };
    let report = EvalReport {
        header: ReportHeader::new("eval", &cfg),
        documents: reports.len(),
        aggregate: total,
        per_document: a.per_doc.then(|| {
            scores
                .iter()
                .zip(&reports)
                .map(|(s, r)| DocumentReport {
                    doc_id: s.doc_id.clone(),
                    scores: *r,
                })
                .collect()
        }),
    };
    emit(out.as_deref(), &report)?;
    Ok(0)
}

/// One line of a selections file.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Selection {
    doc_id: String,
    sentences: Vec<(usize, usize)>,
}

fn baseline(a: BaselineArgs, mut cfg: RunConfig) -> Result<i32> {
    if let Some(k) = a.k {
        cfg.baseline.k = k;
    }
    if let Some(d) = a.damping {
        cfg.baseline.pagerank_damping = d;
    }
    if a.directed {
        cfg.baseline.pagerank_directed = true;
    }
    if let Some(t) = a.ge_threshold {
        cfg.baseline.ge_threshold = t;
    }
    cfg.validate()?;
    let out = pick(a.out, &cfg.paths.out, "out")?;
    let b = cfg.baseline;
    let predictions: Vec<KnowledgeGraph> = match a.method {
        Method::SummaryInduced => {
            let docs_path = input(a.docs, &cfg.paths.docs, "docs")?;
            let sel_path = input(a.selections, &cfg.paths.selections, "selections")?;
            let docs = read_docs(&docs_path)?;
            let mut selections: HashMap<String, BTreeSet<(usize, usize)>> = HashMap::new();
            for s in read_jsonl::<Selection>(&sel_path)? {
                if selections
                    .insert(s.doc_id.clone(), s.sentences.into_iter().collect())
                    .is_some()
                {
                    return Err(Error::InvalidRecord(format!("duplicate selection for `{}`", s.doc_id)));
                }
            }
            let stats = compute_corpus_stats(&docs, cfg.tau)?;
            docs.par_iter()
                .map(|d| {
                    let sel = selections
                        .get(&d.doc_id)
                        .ok_or_else(|| Error::InvalidRecord(format!("no selection for `{}`", d.doc_id)))?;
                    let built = build_full_graph_with_provenance(d, &stats, cfg.merge_policy)?;
                    summary_induced_graph(d, &built, sel)
                })
                .collect::<Result<_>>()?
        }
        Method::Goldentity => {
            let graphs = read_graphs(&input(a.graphs, &cfg.paths.graphs, "graphs")?)?;
            let targets = read_graphs(&input(a.targets, &cfg.paths.targets, "targets")?)?;
            pair(&graphs, &targets)?
                .par_iter()
                .map(|(g, t)| gold_entity_select(g, t, &b))
                .collect()
        }
        Method::Pagerank | Method::Topkfreq => {
            let graphs = read_graphs(&input(a.graphs, &cfg.paths.graphs, "graphs")?)?;
            graphs
                .par_iter()
                .map(|g| {
                    let select = if a.method == Method::Pagerank {
                        pagerank_select
                    } else {
                        topk_freq_select
                    };
                    select(g, &b).map_err(|e| Error::InvalidRecord(format!("{}: {e}", g.doc_id)))
                })
                .collect::<Result<_>>()?
        }
    };
    write_lines(&out, &predictions)?;
    Ok(0)
}

fn training_pairs(
    docs: Option<PathBuf>,
    graphs: Option<PathBuf>,
    targets: Option<PathBuf>,
    cfg: &RunConfig,
) -> Result<Vec<(KnowledgeGraph, KnowledgeGraph)>> {
    if let Some(d) = docs {
        let docs = read_docs(&existing(d)?)?;
        let stats = compute_corpus_stats(&docs, cfg.tau)?;
        let built = docs
            .par_iter()
            .map(|d| {
                let full = build_full_graph_with_provenance(d, &stats, cfg.merge_policy)?.graph;
                Ok(document_target(d)?.map(|(t, _)| (full, t)))
            })
            .collect::<Result<Vec<_>>>()?;
        let skipped = built.iter().filter(|b| b.is_none()).count();
        if skipped > 0 {
            log::warn!("{skipped} document(s) without a target graph are not used for training");
        }
        return Ok(built.into_iter().flatten().collect());
    }
    let graphs = read_graphs(&input(graphs, &cfg.paths.graphs, "graphs")?)?;
    let targets = read_graphs(&input(targets, &cfg.paths.targets, "targets")?)?;
    Ok(pair(&graphs, &targets)?
        .into_iter()
        .map(|(g, t)| (g.clone(), t.clone()))
        .collect())
}

fn train_cmd(a: TrainArgs, mut cfg: RunConfig) -> Result<i32> {
    if let Some(s) = a.max_steps {
        cfg.gat.max_steps = s;
    }
    if let Some(lr) = a.lr {
        cfg.gat.lr = lr;
    }
    cfg.gat.directed_attention |= a.directed_attention;
    cfg.gat.log_count |= a.log_count;
    cfg.gat.seed = cfg.seed;
    cfg.validate()?;
    let out = pick(a.out, &cfg.paths.out, "out")?;
    let docs = a.docs.or_else(|| cfg.paths.docs.clone());
    let (graphs, targets) = if docs.is_some() {
        (None, None)
    } else {
        (
            Some(input(a.graphs, &cfg.paths.graphs, "graphs")?),
            Some(input(a.targets, &cfg.paths.targets, "targets")?),
        )
    };
    let dev_paths = match (a.dev_graphs, a.dev_targets) {
        (Some(g), Some(t)) => Some((existing(g)?, existing(t)?)),
        _ => None,
    };
    let table = embeddings(a.embeddings, &cfg, &cfg.gat)?;

    let corpus = training_pairs(docs, graphs, targets, &cfg)?
        .into_par_iter()
        .map(|(g, t)| {
            let labels = labels_from_alignment(&g, &t, cfg.lambda);
            let positives = positive_ordinals(&g, &labels)?;
            let inputs = GraphInputs::new(&g, &table, &cfg.gat)?;
            Ok(TrainGraph {
                graph: g,
                inputs,
                positives,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let dev = match dev_paths {
        Some((g, t)) => {
            let (g, t) = (read_graphs(&g)?, read_graphs(&t)?);
            Some(
                pair(&g, &t)?
                    .into_par_iter()
                    .map(|(g, t)| {
                        Ok(DevGraph {
                            inputs: GraphInputs::new(g, &table, &cfg.gat)?,
                            graph: g.clone(),
                            target: t.clone(),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?,
            )
        }
        None => None,
    };
    let outcome = train(&corpus, dev.as_deref(), &cfg.gat, cfg.lambda)?;
    log::info!(
        "trained {} steps on {} graphs; kept step {}",
        cfg.gat.max_steps,
        corpus.len(),
        outcome.selected_step
    );
    let mut json = serde_json::to_string(&outcome.model.to_file()).expect("serializable");
    json.push('\n');
    write_atomic(&out, json.as_bytes())?;
    if let Some(log_path) = a.log {
        write_lines(&log_path, &outcome.log)?;
    }
    Ok(0)
}

fn load_model(path: &Path) -> Result<GatModel> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let file: ModelFile = parse_json(&bytes).map_err(|e| Error::AtPath {
        path: path.display().to_string(),
        source: Box::new(e),
    })?;
    GatModel::from_file(file)
}

fn predict_cmd(a: PredictArgs, cfg: RunConfig) -> Result<i32> {
    cfg.validate()?;
    let model_path = input(a.model, &cfg.paths.model, "model")?;
    let graphs = input(a.graphs, &cfg.paths.graphs, "graphs")?;
    let out = pick(a.out, &cfg.paths.out, "out")?;
    let mut model = load_model(&model_path)?;
    if let Some(t) = a.threshold {
        model.config.threshold = t;
    }
    let table = embeddings(a.embeddings, &cfg, &model.config)?;
    let predictions = read_graphs(&graphs)?
        .par_iter()
        .map(|g| predict(&model, g, &GraphInputs::new(g, &table, &model.config)?))
        .collect::<Result<Vec<_>>>()?;
    write_lines(&out, &predictions)?;
    Ok(0)
}

#[derive(Serialize)]
struct GraphCheck {
    doc_id: String,
    max_rel_error: f64,
    checked: usize,
    skipped_kinks: usize,
    worst_tensor: Option<String>,
}

#[derive(Serialize)]
struct GradcheckReport {
    header: ReportHeader,
    samples: usize,
    tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    fault: Option<(usize, f64)>,
    graphs: Vec<GraphCheck>,
    max_rel_error: f64,
    passed: bool,
}

fn gradcheck(a: GradcheckArgs, cfg: RunConfig) -> Result<i32> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let model = match a.model.or_else(|| cfg.paths.model.clone()) {
        Some(p) => load_model(&existing(p)?)?,
        None => GatModel::init(&cfg.gat, &mut rng),
    };
    let table = EmbeddingTable::hashed(model.config.embed_dim);
    let labelled: Vec<(KnowledgeGraph, Vec<usize>)> = match a.graphs.or_else(|| cfg.paths.graphs.clone()) {
        Some(p) => {
            let graphs = read_graphs(&existing(p)?)?;
            match a.targets.or_else(|| cfg.paths.targets.clone()) {
                Some(t) => {
                    let targets = read_graphs(&existing(t)?)?;
                    pair(&graphs, &targets)?
                        .into_iter()
                        .map(|(g, t)| {
                            let pos = positive_ordinals(g, &labels_from_alignment(g, t, cfg.lambda))?;
                            Ok((g.clone(), pos))
                        })
                        .collect::<Result<_>>()?
                }
                None => graphs
                    .into_iter()
                    .map(|g| {
                        let pos = random_labels(&mut rng, g.nodes.len());
                        (g, pos)
                    })
                    .collect(),
            }
        }
        None => (0..a.random_graphs)
            .map(|k| {
                let g = random_graph(&mut rng, &format!("random{k}"), 6, 0.3);
                let pos = random_labels(&mut rng, 6);
                (g, pos)
            })
            .collect(),
    };
    let fault = a.fault_param.zip(a.fault_delta);
    let checks = labelled
        .iter()
        .enumerate()
        .filter(|(_, (g, _))| !g.nodes.is_empty())
        .map(|(k, (g, pos))| {
            let inputs = GraphInputs::new(g, &table, &model.config)?;
            let neg: Vec<usize> = (0..g.nodes.len()).filter(|i| !pos.contains(i)).collect();
            let r = grad_check(
                &model,
                &inputs,
                pos,
                &neg,
                a.samples,
                cfg.seed.wrapping_add(k as u64),
                fault.map(|(param, delta)| BackwardFault { param, delta }),
            )?;
            Ok(GraphCheck {
                doc_id: g.doc_id.clone(),
                max_rel_error: r.max_rel_error,
                checked: r.checked,
                skipped_kinks: r.skipped_kinks,
                worst_tensor: r.worst_tensor,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let worst = checks.iter().map(|c| c.max_rel_error).fold(0.0, f64::max);
    let report = GradcheckReport {
        header: ReportHeader::new("gradcheck", &cfg),
        samples: a.samples,
        tolerance: a.tolerance,
        fault,
        graphs: checks,
        max_rel_error: worst,
        passed: worst <= a.tolerance,
    };
    emit(a.out.as_deref(), &report)?;
    if report.passed {
        Ok(0)
    } else {
        eprintln!(
            "error: gradient check failed, max relative error {worst:e} > {:e}",
            a.tolerance
        );
        Ok(2)
    }
}

/// Each node salient with probability one half, at least one positive.
fn random_labels(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut pos: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.5)).collect();
    if pos.is_empty() && n > 0 {
        pos.push(rng.random_range(0..n));
    }
    pos
}

#[derive(Serialize)]
struct CalibrationReport {
    header: ReportHeader,
    documents: usize,
    splits: Vec<TauSplit>,
}

fn calibrate(a: CalibrateArgs, cfg: RunConfig) -> Result<i32> {
    cfg.validate()?;
    let docs = read_docs(&input(a.docs, &cfg.paths.docs, "docs")?)?;
    let stats = compute_corpus_stats(&docs, cfg.tau)?;
    let report = CalibrationReport {
        header: ReportHeader::new("calibrate-tau", &cfg),
        documents: docs.len(),
        splits: calibrate_tau(&docs, &stats, &a.taus),
    };
    emit(a.out.as_deref().or(cfg.paths.out.as_deref()), &report)?;
    Ok(0)
}
