use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use acs_core::connet::{train as fit, LossWeights, TrainConfig};
use acs_core::eval::{parse_communities, parse_queries, LabeledQuery};
use acs_core::extraction::{extract as run_extraction, ExtractionConfig};
use acs_core::persist::ModelFile;
use acs_core::pipeline::{
    build_example, build_examples, evaluate as score, make_query_sets, predict_community, Dataset, ModelSettings,
    QueryCounts,
};
use acs_core::search::ThresholdPolicy;
use acs_core::synth::{planted_partition, PlantedConfig};
use acs_core::{AttrMode, AttributedGraph, Error, ModularityParams, Query};
use log::{info, warn};

use crate::settings::Settings;
use crate::{EvaluateArgs, ExtractArgs, ExtractionFlags, GenArgs, GraphArgs, QueryArgs, QueryInput, TrainArgs};

type Result<T> = std::result::Result<T, crate::CliError>;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| crate::CliError::File { path: path.to_owned(), source })
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|source| crate::CliError::File { path: path.to_owned(), source })
}

fn load_graph(flags: GraphArgs, s: &mut Settings) -> Result<AttributedGraph> {
    let edges: PathBuf = s.required("edges", flags.edges)?;
    let attrs: Option<PathBuf> = s.opt("attrs", flags.attrs)?;
    let edge_text = read(&edges)?;
    let attr_text = match attrs {
        Some(p) => read(&p)?,
        None => String::new(),
    };
    Ok(AttributedGraph::ingest(edge_text.lines(), attr_text.lines())?)
}

fn load_communities(g: &AttributedGraph, path: Option<PathBuf>, s: &mut Settings) -> Result<Vec<Vec<usize>>> {
    let path: PathBuf = s.required("communities", path)?;
    let communities = parse_communities(g, read(&path)?.lines())?;
    if communities.is_empty() {
        return Err(Error::InvalidArgument(format!("{}: no communities", path.display())).into());
    }
    Ok(communities)
}

/// Cap flag where 0 means uncapped.
fn cap(value: Option<usize>) -> Option<usize> {
    value.filter(|&k| k > 0)
}

/// Hop caps and τ; `stored` supplies defaults recorded in a model file.
fn extraction_config(
    flags: ExtractionFlags,
    s: &mut Settings,
    stored: Option<&BTreeMap<String, String>>,
) -> Result<ExtractionConfig> {
    let stored_num = |key: &str| -> Result<Option<usize>> {
        match stored.and_then(|m| m.get(key)) {
            Some(v) => v.parse().map(Some).map_err(|_| Error::Integrity(format!("model key {key} holds {v:?}")).into()),
            None => Ok(None),
        }
    };
    let stored_tau = match stored.and_then(|m| m.get("tau")) {
        Some(v) => v.parse().map_err(|_| Error::Integrity(format!("model key tau holds {v:?}")))?,
        None => ModularityParams::DEFAULT_TAU,
    };
    let tau = s.get("tau", flags.tau, stored_tau)?;
    let max_hops = s.get("max_hops", flags.max_hops, stored_num("max_hops")?.unwrap_or(0))?;
    let attr_max_hops = s.get(
        "attr_max_hops",
        flags.attr_max_hops,
        stored_num("attr_max_hops")?.unwrap_or(ExtractionConfig::DEFAULT_ATTR_MAX_HOPS),
    )?;
    let cfg = ExtractionConfig {
        params: ModularityParams::new(tau)?,
        max_hops: cap(Some(max_hops)),
        attr_max_hops: cap(Some(attr_max_hops)),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn record_extraction(extras: &mut BTreeMap<String, String>, cfg: &ExtractionConfig) {
    extras.insert("tau".into(), format!("{:?}", cfg.params.tau()));
    extras.insert("max_hops".into(), cfg.max_hops.unwrap_or(0).to_string());
    extras.insert("attr_max_hops".into(), cfg.attr_max_hops.unwrap_or(0).to_string());
}

fn split_tokens(raw: &str) -> impl Iterator<Item = &str> {
    raw.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty())
}

/// The single query named by a file or by node/attribute flags.
fn read_query(g: &AttributedGraph, input: QueryInput, s: &mut Settings) -> Result<Query> {
    let file: Option<PathBuf> = s.opt("query_file", input.query_file)?;
    let nodes: Option<String> = s.opt("query_nodes", input.query_nodes)?;
    let attrs: Option<String> = s.opt("query_attrs", input.query_attrs)?;
    if let Some(path) = file {
        if nodes.is_some() || attrs.is_some() {
            return Err(crate::CliError::Usage("give either a query file or query flags, not both".into()));
        }
        let mut queries = parse_queries(g, read(&path)?.lines())?;
        if queries.len() > 1 {
            warn!("{}: {} queries found, using the first", path.display(), queries.len());
        }
        return match queries.drain(..).next() {
            Some(q) => Ok(q.query),
            None => Err(Error::InvalidArgument("query nodes required".into()).into()),
        };
    }
    let node_ids = g.node_ids(split_tokens(nodes.as_deref().unwrap_or("")))?;
    if node_ids.is_empty() {
        return Err(Error::InvalidArgument("query nodes required".into()).into());
    }
    let mut attr_ids = Vec::new();
    for token in split_tokens(attrs.as_deref().unwrap_or("")) {
        match g.attr_id(token) {
            Some(a) => attr_ids.push(a),
            None => warn!("query attribute {token:?} is not in the vocabulary; skipped"),
        }
    }
    Ok(Query::new(node_ids, attr_ids))
}

pub fn gen(args: GenArgs, s: &mut Settings) -> Result<()> {
    let d = PlantedConfig::default();
    let cfg = PlantedConfig {
        nodes: s.get("nodes", args.nodes, d.nodes)?,
        communities: s.get("communities", args.communities, d.communities)?,
        p_in: s.get("p_in", args.p_in, d.p_in)?,
        p_out: s.get("p_out", args.p_out, d.p_out)?,
        signature_attrs: s.get("signature_attrs", args.signature_attrs, d.signature_attrs)?,
        signature_rate: s.get("signature_rate", args.signature_rate, d.signature_rate)?,
        noise_vocab: s.get("noise_vocab", args.noise_vocab, d.noise_vocab)?,
        noise_per_node: s.get("noise_per_node", args.noise_per_node, d.noise_per_node)?,
        seed: s.get("seed", args.seed, d.seed)?,
    };
    let out: PathBuf = s.required("out_dir", args.out_dir)?;
    let data = planted_partition(&cfg)?;
    fs::create_dir_all(&out).map_err(|source| crate::CliError::File { path: out.clone(), source })?;
    write(&out.join("edges.txt"), &data.edges)?;
    write(&out.join("attrs.txt"), &data.attrs)?;
    write(&out.join("communities.txt"), &data.communities)?;
    info!("wrote {} nodes in {} communities to {}", cfg.nodes, cfg.communities, out.display());
    Ok(())
}

pub fn extract(args: ExtractArgs, s: &mut Settings) -> Result<()> {
    let g = load_graph(args.graph, s)?;
    let cfg = extraction_config(args.extraction, s, None)?;
    let query = read_query(&g, args.query, s)?;
    let bg = acs_core::build_bipartite(&g);
    let res = run_extraction(&g, &bg, &query, &cfg)?;
    let mut nodes = String::new();
    for &v in res.candidate.global_ids() {
        writeln!(nodes, "{}", g.node_token(v)).expect("string write");
    }
    match s.opt::<PathBuf>("out", args.out)? {
        Some(p) => write(&p, nodes)?,
        None => print!("{nodes}"),
    }
    if let Some(p) = s.opt::<PathBuf>("trace", args.trace)? {
        let mut csv = String::from("branch,hop,modularity\n");
        for t in &res.trace {
            writeln!(csv, "{},{},{}", t.branch.as_str(), t.hop, t.modularity).expect("string write");
        }
        write(&p, csv)?;
    }
    Ok(())
}

fn threshold_policy(raw: Option<String>) -> Result<ThresholdPolicy> {
    match raw {
        None => Ok(ThresholdPolicy::default()),
        Some(raw) => {
            let grid = split_tokens(&raw)
                .map(|t| {
                    t.parse::<f64>().map_err(|e| crate::CliError::Usage(format!("threshold grid entry {t:?}: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ThresholdPolicy::new(grid)?)
        }
    }
}

fn read_labeled(g: &AttributedGraph, path: &Path) -> Result<Vec<LabeledQuery>> {
    let queries = parse_queries(g, read(path)?.lines())?;
    if let Some(i) = queries.iter().position(|q| q.truth.is_empty()) {
        return Err(Error::InvalidArgument(format!("{}: query {} has no truth column", path.display(), i + 1)).into());
    }
    Ok(queries)
}

pub fn train(args: TrainArgs, s: &mut Settings) -> Result<()> {
    let g = load_graph(args.graph, s)?;
    let communities = load_communities(&g, args.communities, s)?;
    let ds = Dataset::new(g, communities);
    let ext = extraction_config(args.extraction, s, None)?;
    let h = args.hyper;

    let seed = s.get("seed", h.seed, 0u64)?;
    let mode: AttrMode = s.get("mode", h.mode.map(|m| m.parse()).transpose()?, AttrMode::FromNodes)?;
    let counts = QueryCounts {
        train: s.get("train_count", h.train_count, QueryCounts::default().train)?,
        val: s.get("val_count", h.val_count, QueryCounts::default().val)?,
        test: 0,
    };
    let ms = ModelSettings::default();
    let settings = ModelSettings {
        latent_dim: s.get("latent_dim", h.latent_dim, ms.latent_dim)?,
        layers: s.get("layers", h.layers, ms.layers)?,
        dropout: s.get("dropout", h.dropout, ms.dropout)?,
        struct_width: s.opt("struct_width", h.struct_width)?,
    };
    let td = TrainConfig::default();
    let weights = LossWeights {
        alpha: s.get("alpha", h.alpha, td.weights.alpha)?,
        beta: s.get("beta", h.beta, td.weights.beta)?,
        clip: s.get("clip", h.clip, td.weights.clip)?,
    };
    weights.validate()?;
    let patience = s.get("patience", h.patience, td.patience.unwrap_or(0))?;
    let tc = TrainConfig {
        epochs: s.get("epochs", h.epochs, td.epochs)?,
        patience: cap(Some(patience)),
        weights,
        lr: s.get("lr", h.lr, td.lr)?,
        lr_decay: s.get("lr_decay", h.lr_decay, td.lr_decay)?,
        decay_epochs: s.get("decay_epochs", h.decay_epochs, td.decay_epochs)?,
        critic_lr: s.get("critic_lr", h.critic_lr, td.critic_lr)?,
        seed,
        policy: threshold_policy(s.opt("threshold_grid", h.threshold_grid)?)?,
    };
    let model_path: PathBuf = s.required("model", args.model)?;
    let loss_path: PathBuf = s.get("loss_csv", args.loss_csv, {
        let mut p = model_path.clone().into_os_string();
        p.push(".loss.csv");
        PathBuf::from(p)
    })?;
    let train_file: Option<PathBuf> = s.opt("queries", args.queries)?;
    let val_file: Option<PathBuf> = s.opt("val_queries", args.val_queries)?;

    let generated = make_query_sets(&ds, counts, mode, seed)?;
    let train_q = match &train_file {
        Some(p) => read_labeled(&ds.graph, p)?,
        None => generated.train,
    };
    let val_q = match &val_file {
        Some(p) => read_labeled(&ds.graph, p)?,
        None => generated.val,
    };
    let model_cfg = settings.model_config(&ds, seed);
    let train_ex = build_examples(&ds, &train_q, &ext, &model_cfg)?;
    let val_ex = build_examples(&ds, &val_q, &ext, &model_cfg)?;
    let mut model = acs_core::connet::ConNet::new(model_cfg)?;
    let report = fit(&mut model, &train_ex, &val_ex, &tc)?;
    info!(
        "kept epoch {} of {}, threshold {}, validation F1 {:?}",
        report.best_epoch,
        report.trace.len(),
        report.threshold,
        report.val_f1
    );

    let mut file = ModelFile::new(model);
    record_extraction(&mut file.extras, &ext);
    for (k, v) in [
        ("mode", mode.as_str().to_owned()),
        ("train_count", counts.train.to_string()),
        ("val_count", counts.val.to_string()),
        ("alpha", format!("{:?}", tc.weights.alpha)),
        ("beta", format!("{:?}", tc.weights.beta)),
        ("clip", format!("{:?}", tc.weights.clip)),
        ("epochs", tc.epochs.to_string()),
        ("patience", patience.to_string()),
        ("lr", format!("{:?}", tc.lr)),
        ("lr_decay", format!("{:?}", tc.lr_decay)),
        ("decay_epochs", tc.decay_epochs.to_string()),
        ("critic_lr", format!("{:?}", tc.critic_lr)),
    ] {
        file.extras.insert(k.into(), v);
    }
    file.save(&model_path)?;

    let mut csv = String::from("epoch,loss,val_f1\n");
    for r in &report.trace {
        let f1 = r.val_f1.map(|f| f.to_string()).unwrap_or_default();
        writeln!(csv, "{},{},{}", r.epoch, r.loss, f1).expect("string write");
    }
    write(&loss_path, csv)?;
    Ok(())
}

fn load_model(path: Option<PathBuf>, s: &mut Settings) -> Result<ModelFile> {
    let path: PathBuf = s.required("model", path)?;
    let bytes = fs::read(&path).map_err(|source| crate::CliError::File { path: path.clone(), source })?;
    Ok(ModelFile::from_bytes(&bytes)?)
}

/// Model and graph must agree on the attribute vocabulary size.
fn check_widths(file: &ModelFile, ds: &Dataset) -> Result<()> {
    let c = file.model.config();
    if c.attr_width != ds.attr_width() {
        return Err(Error::InvalidArgument(format!(
            "model expects {} attributes, graph has {}",
            c.attr_width,
            ds.attr_width()
        ))
        .into());
    }
    Ok(())
}

pub fn query(args: QueryArgs, s: &mut Settings) -> Result<()> {
    let file = load_model(args.model, s)?;
    let g = load_graph(args.graph, s)?;
    let ext = extraction_config(args.extraction, s, Some(&file.extras))?;
    let q = read_query(&g, args.query, s)?;
    let ds = Dataset::new(g, Vec::new());
    check_widths(&file, &ds)?;
    let cfg = file.model.config();
    let labeled = LabeledQuery { query: q, truth: Vec::new() };
    let ex = build_example(&ds, &labeled, &ext, cfg)?;
    let (nodes, scores) = predict_community(&file.model, &ex)?;

    let tokens: Vec<&str> = nodes.iter().map(|&v| ds.graph.node_token(v)).collect();
    let score_map: serde_json::Map<String, serde_json::Value> = scores
        .iter()
        .enumerate()
        .map(|(local, &p)| (ds.graph.node_token(ex.sub.to_global(local)).to_owned(), p.into()))
        .collect();
    let json = serde_json::json!({
        "nodes": tokens,
        "scores": score_map,
        "threshold": file.model.threshold(),
    });
    let text = serde_json::to_string_pretty(&json).expect("json encodes") + "\n";
    match s.opt::<PathBuf>("out", args.out)? {
        Some(p) => write(&p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn stored<T: std::str::FromStr>(file: &ModelFile, key: &str, default: T) -> Result<T> {
    match file.extras.get(key) {
        Some(v) => v.parse().map_err(|_| Error::Integrity(format!("model key {key} holds {v:?}")).into()),
        None => Ok(default),
    }
}

pub fn evaluate(args: EvaluateArgs, s: &mut Settings) -> Result<()> {
    let file = load_model(args.model, s)?;
    let g = load_graph(args.graph, s)?;
    let communities = load_communities(&g, args.communities, s)?;
    let ds = Dataset::new(g, communities);
    check_widths(&file, &ds)?;
    let ext = extraction_config(args.extraction, s, Some(&file.extras))?;
    let out: PathBuf = s.required("out_dir", args.out_dir)?;
    let test_file: Option<PathBuf> = s.opt("test_queries", args.test_queries)?;
    let test_count = s.get("test_count", args.test_count, QueryCounts::default().test)?;

    let test_q = match test_file {
        Some(p) => read_labeled(&ds.graph, &p)?,
        None => {
            // Same seed and counts as training, so the split and the
            // generator stream line up with the ones training saw.
            let counts = QueryCounts {
                train: stored(&file, "train_count", QueryCounts::default().train)?,
                val: stored(&file, "val_count", QueryCounts::default().val)?,
                test: test_count,
            };
            let mode: AttrMode = stored(&file, "mode", AttrMode::FromNodes)?;
            make_query_sets(&ds, counts, mode, file.model.config().seed)?.test
        }
    };
    let examples = build_examples(&ds, &test_q, &ext, file.model.config())?;
    let report = score(&file.model, &ds.graph, &examples)?;

    fs::create_dir_all(&out).map_err(|source| crate::CliError::File { path: out.clone(), source })?;
    let metrics = report.metrics();
    let mut csv = String::from("metric,value\n");
    for (k, v) in &metrics {
        writeln!(csv, "{k},{v}").expect("string write");
    }
    write(&out.join("metrics.csv"), csv)?;
    let json: serde_json::Map<String, serde_json::Value> =
        metrics.iter().map(|(k, &v)| ((*k).to_owned(), v.into())).collect();
    write(&out.join("metrics.json"), serde_json::to_string_pretty(&json).expect("json encodes") + "\n")?;

    let g = &ds.graph;
    let join = |ids: &[usize]| ids.iter().map(|&v| g.node_token(v)).collect::<Vec<_>>().join(" ");
    let mut per = String::from("query,nodes,attrs,mode,precision,recall,f1,candidate_size,coverage,predicted\n");
    for (i, q) in report.per_query.iter().enumerate() {
        let attrs: Vec<&str> = q.query.attrs.iter().map(|&a| g.attr_token(a)).collect();
        writeln!(
            per,
            "{},{},{},{},{},{},{},{},{},{}",
            i,
            join(&q.query.nodes),
            attrs.join(" "),
            q.query.mode,
            q.scores.precision,
            q.scores.recall,
            q.scores.f1,
            q.candidate_size,
            q.coverage,
            join(&q.predicted),
        )
        .expect("string write");
    }
    write(&out.join("per_query.csv"), per)?;
    for (k, v) in &metrics {
        println!("{k}\t{v:.4}");
    }
    Ok(())
}
