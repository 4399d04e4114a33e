//! Subcommand implementations: dataset and config resolution plus the seven
//! run types, each ending in a sealed artifact directory.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use arga_core::eval::{evaluate_clustering, evaluate_link_prediction, pca_2d, EvalSide};
use arga_core::graph::{load_citation_dataset, split_edges, EdgeSplit, Graph, SplitManifest};
use arga_core::model::{encode, load_checkpoint, save_checkpoint, Variant};
use arga_core::train::{train, Hyperparams, HyperparamsPatch, PreparedInputs};
use arga_core::{Error, Result, RngStream, SpMat};

use crate::artifacts::{
    embedding_tsv, io_err, mean_std, read_bytes, read_embedding_tsv, to_json_bytes, DatasetEcho,
    MetricsReport, RunWriter,
};
use crate::{Cli, Command, Side};

/// Stream ids under the run seed: 0 is the edge split (and everything the
/// trainer derives internally); 6 is K-means, disjoint from the trainer's 0-5.
const SPLIT_STREAM: u64 = 0;
const KMEANS_STREAM: u64 = 6;

pub struct Globals {
    pub config: Option<String>,
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub dataset: Option<String>,
    pub variant: Option<Variant>,
}

pub fn run(cli: Cli) -> Result<()> {
    let Cli {
        command,
        config,
        seed,
        out,
        dataset,
        variant,
    } = cli;
    let g = Globals {
        config,
        seed,
        out,
        dataset,
        variant,
    };
    match command {
        Command::Prepare {
            val_frac,
            test_frac,
        } => cmd_prepare(&g, val_frac, test_frac),
        Command::Train {
            seeds,
            split,
            val_frac,
            test_frac,
        } => cmd_train(&g, seeds, split.as_deref(), val_frac, test_frac),
        Command::EvalLink {
            embedding,
            split,
            side,
        } => cmd_eval_link(&g, embedding, split, side),
        Command::EvalCluster {
            embedding,
            k,
            restarts,
        } => cmd_eval_cluster(&g, embedding, k, restarts),
        Command::Embed { checkpoint } => cmd_embed(&g, checkpoint),
        Command::Project { embedding } => cmd_project(&g, embedding),
        Command::SweepDim {
            dims,
            runs,
            val_frac,
            test_frac,
        } => cmd_sweep_dim(&g, &dims, runs, val_frac, test_frac),
    }
}

struct Dataset {
    echo: DatasetEcho,
    graph: Graph,
}

impl Dataset {
    fn name(&self) -> &str {
        &self.echo.name
    }
}

/// Resolves `--dataset` to concrete file paths: a `nodes,edges` pair, a
/// directory, or a name under the data root (env ARGA_DATA_ROOT, default
/// `data`).
fn resolve_dataset(g: &Globals) -> Result<Dataset> {
    let spec = g
        .dataset
        .as_deref()
        .ok_or_else(|| Error::Config("this command needs --dataset".into()))?;
    let (name, nodes, edges) = if let Some((n, e)) = spec.split_once(',') {
        let nodes = PathBuf::from(n.trim());
        let name = nodes
            .parent()
            .and_then(|p| p.file_name())
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into());
        (name, nodes, PathBuf::from(e.trim()))
    } else if spec.contains(std::path::MAIN_SEPARATOR) || Path::new(spec).is_dir() {
        let dir = PathBuf::from(spec);
        let name = dir
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into());
        (name, dir.join("nodes.tsv"), dir.join("edges.tsv"))
    } else {
        let root = std::env::var("ARGA_DATA_ROOT").unwrap_or_else(|_| "data".into());
        let dir = PathBuf::from(root).join(spec);
        (
            spec.to_string(),
            dir.join("nodes.tsv"),
            dir.join("edges.tsv"),
        )
    };
    for p in [&nodes, &edges] {
        if !p.is_file() {
            return Err(Error::Config(format!(
                "dataset file {} does not exist",
                p.display()
            )));
        }
    }
    let graph = load_citation_dataset(&nodes, &edges)?;
    Ok(Dataset {
        echo: DatasetEcho {
            name,
            nodes: nodes.display().to_string(),
            edges: edges.display().to_string(),
        },
        graph,
    })
}

/// Defaults for the dataset and variant, overlaid with the config JSON, then
/// with the explicit flags.
fn resolve_hp(g: &Globals, dataset: &str) -> Result<Hyperparams> {
    let patch: HyperparamsPatch = match g.config.as_deref() {
        Some(raw) => {
            let (text, origin) = if raw.trim_start().starts_with('{') {
                (raw.to_string(), "--config".to_string())
            } else {
                let path = PathBuf::from(raw);
                let bytes = read_bytes(&path)?;
                let text = String::from_utf8(bytes)
                    .map_err(|e| Error::Config(format!("{} is not UTF-8: {e}", path.display())))?;
                (text, path.display().to_string())
            };
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{origin}: {e}")))?
        }
        None => HyperparamsPatch::default(),
    };
    let variant = g.variant.or(patch.variant).unwrap_or(Variant::Arga);
    let mut hp = Hyperparams::for_dataset(dataset, variant);
    hp.apply(&patch);
    if let Some(v) = g.variant {
        hp.variant = v;
    }
    if let Some(s) = g.seed {
        hp.seed = s;
    }
    hp.validate()?;
    Ok(hp)
}

fn read_split(path: &Path) -> Result<SplitManifest> {
    serde_json::from_slice(&read_bytes(path)?)
        .map_err(|e| Error::Config(format!("split {}: {e}", path.display())))
}

fn cmd_prepare(g: &Globals, val_frac: f64, test_frac: f64) -> Result<()> {
    let ds = resolve_dataset(g)?;
    let hp = resolve_hp(g, ds.name())?;
    let mut rng = RngStream::new(hp.seed).substream(SPLIT_STREAM);
    let split = split_edges(&ds.graph, val_frac, test_frac, &mut rng)?;
    let mut writer = RunWriter::new(&g.out)?;
    writer.write(
        "split.json",
        &to_json_bytes(&split.manifest(val_frac, test_frac))?,
    )?;
    println!(
        "prepare dataset={} n={} edges={} val_pos={} test_pos={} seed={}",
        ds.name(),
        ds.graph.n,
        ds.graph.adjacency.nnz() / 2,
        split.val_pos.len(),
        split.test_pos.len(),
        hp.seed
    );
    writer.finish("prepare", Some(&ds.echo), None, &[hp.seed])
}

#[derive(serde::Serialize)]
struct Aggregate<'a> {
    dataset: &'a str,
    variant: String,
    seeds: &'a [u64],
    mean_auc: f64,
    std_auc: f64,
    mean_ap: f64,
    std_ap: f64,
}

fn cmd_train(
    g: &Globals,
    seeds: u64,
    split_path: Option<&Path>,
    val_frac: f64,
    test_frac: f64,
) -> Result<()> {
    if seeds == 0 {
        return Err(Error::Config("--seeds must be at least 1".into()));
    }
    let ds = resolve_dataset(g)?;
    let base_hp = resolve_hp(g, ds.name())?;
    let fixed_split = split_path.map(read_split).transpose()?;
    let mut writer = RunWriter::new(&g.out)?;
    let mut seed_list = Vec::new();
    let mut aucs = Vec::new();
    let mut aps = Vec::new();

    for k in 0..seeds {
        let mut hp = base_hp;
        hp.seed = base_hp.seed + k;
        seed_list.push(hp.seed);
        let prefix = if seeds == 1 {
            String::new()
        } else {
            format!("seed-{}/", hp.seed)
        };

        let (split, vf, tf) = match &fixed_split {
            Some(m) => (
                EdgeSplit::from_manifest(&ds.graph, m)?,
                m.val_frac,
                m.test_frac,
            ),
            None => {
                let mut rng = RngStream::new(hp.seed).substream(SPLIT_STREAM);
                (
                    split_edges(&ds.graph, val_frac, test_frac, &mut rng)?,
                    val_frac,
                    test_frac,
                )
            }
        };

        let seed = hp.seed;
        let mut log = String::new();
        let (z, state) = train(&ds.graph, Some(&split), &hp, |r| {
            log.push_str(&serde_json::to_string(r).expect("loss record serializes"));
            log.push('\n');
            if r.iter % 50 == 0 {
                eprintln!(
                    "seed {seed} iter {:4}  recon {:.4}  disc {:.4}  gen {:.4}  val_auc {}",
                    r.iter,
                    r.recon,
                    r.disc,
                    r.gen,
                    r.val_auc.map_or_else(|| "-".into(), |v| format!("{v:.4}"))
                );
            }
        })?;
        let test = evaluate_link_prediction(&z, &split, EvalSide::Test)?;

        let ckpt_name = format!("{prefix}checkpoint.bin");
        let ckpt_path = writer.dir().join(&ckpt_name);
        if let Some(parent) = ckpt_path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| io_err("create directory", parent, e))?;
        }
        let tmp = ckpt_path.with_extension("bin.tmp");
        save_checkpoint(
            &tmp,
            hp.variant,
            hp.seed,
            &state.encoder,
            &state.discriminator,
        )?;
        std::fs::rename(&tmp, &ckpt_path).map_err(|e| io_err("rename into", &ckpt_path, e))?;
        writer.record(&ckpt_name)?;

        writer.write(
            &format!("{prefix}embedding.tsv"),
            embedding_tsv(&ds.graph.node_ids, &z).as_bytes(),
        )?;
        writer.write(&format!("{prefix}train_log.jsonl"), log.as_bytes())?;
        writer.write(
            &format!("{prefix}split.json"),
            &to_json_bytes(&split.manifest(vf, tf))?,
        )?;
        let report = MetricsReport {
            auc: Some(test.auc),
            ap: Some(test.ap),
            config_echo: Some(&hp),
            ..MetricsReport::empty(ds.name(), hp.variant.to_string(), hp.seed)
        };
        writer.write(&format!("{prefix}metrics.json"), &to_json_bytes(&report)?)?;

        println!(
            "train dataset={} variant={} seed={} test_auc={:.4} test_ap={:.4}",
            ds.name(),
            hp.variant,
            hp.seed,
            test.auc,
            test.ap
        );
        aucs.push(test.auc);
        aps.push(test.ap);
    }

    if seeds > 1 {
        let (mean_auc, std_auc) = mean_std(&aucs);
        let (mean_ap, std_ap) = mean_std(&aps);
        let agg = Aggregate {
            dataset: ds.name(),
            variant: base_hp.variant.to_string(),
            seeds: &seed_list,
            mean_auc,
            std_auc,
            mean_ap,
            std_ap,
        };
        writer.write("aggregate.json", &to_json_bytes(&agg)?)?;
        println!(
            "aggregate dataset={} variant={} seeds={} mean_auc={:.4} std_auc={:.4} mean_ap={:.4} std_ap={:.4}",
            ds.name(),
            base_hp.variant,
            seeds,
            mean_auc,
            std_auc,
            mean_ap,
            std_ap
        );
    }
    writer.finish("train", Some(&ds.echo), Some(&base_hp), &seed_list)
}

fn cmd_eval_link(
    g: &Globals,
    embedding: Option<PathBuf>,
    split: Option<PathBuf>,
    side: Side,
) -> Result<()> {
    let emb_path = embedding.unwrap_or_else(|| g.out.join("embedding.tsv"));
    let split_path = split.unwrap_or_else(|| g.out.join("split.json"));
    let (ids, z) = read_embedding_tsv(&emb_path)?;
    let m = read_split(&split_path)?;
    // Only the held-out pair lists matter for scoring; the training adjacency
    // slot is never read.
    let edge_split = EdgeSplit {
        train_adjacency: SpMat::empty(ids.len(), ids.len()),
        val_pos: m.val_pos,
        val_neg: m.val_neg,
        test_pos: m.test_pos,
        test_neg: m.test_neg,
        seed: m.seed,
    };
    let res = evaluate_link_prediction(&z, &edge_split, side.into())?;

    let dataset = g.dataset.clone().unwrap_or_else(|| "-".into());
    let variant = g.variant.map_or_else(|| "-".into(), |v| v.to_string());
    let mut writer = RunWriter::new(&g.out)?;
    let report = MetricsReport {
        auc: Some(res.auc),
        ap: Some(res.ap),
        ..MetricsReport::empty(&dataset, variant, g.seed.unwrap_or(m.seed))
    };
    writer.write("metrics.json", &to_json_bytes(&report)?)?;
    let side_name = match side {
        Side::Val => "val",
        Side::Test => "test",
    };
    println!(
        "eval-link side={side_name} auc={:.4} ap={:.4} pos={} neg={}",
        res.auc, res.ap, res.n_pos, res.n_neg
    );
    writer.finish("eval-link", None, None, &[])
}

fn cmd_eval_cluster(
    g: &Globals,
    embedding: Option<PathBuf>,
    k: Option<usize>,
    restarts: usize,
) -> Result<()> {
    let ds = resolve_dataset(g).map_err(|e| match e {
        Error::Config(msg) if msg.contains("needs --dataset") => {
            Error::Config("eval-cluster needs --dataset for the ground-truth labels".into())
        }
        other => other,
    })?;
    let labels = ds
        .graph
        .labels
        .as_ref()
        .ok_or_else(|| Error::Config(format!("dataset {} carries no labels", ds.name())))?;
    let by_id: HashMap<&str, usize> = ds
        .graph
        .node_ids
        .iter()
        .map(String::as_str)
        .zip(labels.iter().copied())
        .collect();

    let emb_path = embedding.unwrap_or_else(|| g.out.join("embedding.tsv"));
    let (ids, z) = read_embedding_tsv(&emb_path)?;
    let truth: Vec<usize> = ids
        .iter()
        .map(|id| {
            by_id.get(id.as_str()).copied().ok_or_else(|| {
                Error::Config(format!(
                    "node {id:?} from {} is not in dataset {}",
                    emb_path.display(),
                    ds.name()
                ))
            })
        })
        .collect::<Result<_>>()?;
    let k = match k.or(ds.graph.num_classes) {
        Some(k) => k,
        None => return Err(Error::Config("no class count available; pass --k".into())),
    };

    let seed = g.seed.unwrap_or_else(|| Hyperparams::default().seed);
    let rng = RngStream::new(seed).substream(KMEANS_STREAM);
    let res = evaluate_clustering(&z, &truth, k, &rng, restarts)?;

    let variant = g.variant.map_or_else(|| "-".into(), |v| v.to_string());
    let mut writer = RunWriter::new(&g.out)?;
    let report = MetricsReport {
        acc: Some(res.acc),
        nmi: Some(res.nmi),
        f1: Some(res.f1),
        precision: Some(res.precision),
        ari: Some(res.ari),
        ..MetricsReport::empty(ds.name(), variant, seed)
    };
    writer.write("metrics.json", &to_json_bytes(&report)?)?;
    println!(
        "eval-cluster dataset={} k={k} acc={:.4} nmi={:.4} ari={:.4} f1={:.4} precision={:.4}",
        ds.name(),
        res.acc,
        res.nmi,
        res.ari,
        res.f1,
        res.precision
    );
    writer.finish("eval-cluster", Some(&ds.echo), None, &[seed])
}

fn cmd_embed(g: &Globals, checkpoint: Option<PathBuf>) -> Result<()> {
    let ds = resolve_dataset(g)?;
    let ckpt_path = checkpoint.unwrap_or_else(|| g.out.join("checkpoint.bin"));
    if !ckpt_path.is_file() {
        return Err(Error::Config(format!(
            "checkpoint {} does not exist",
            ckpt_path.display()
        )));
    }
    let (meta, enc, _disc) = load_checkpoint(&ckpt_path)?;
    if meta.in_dim != ds.graph.features.cols() {
        return Err(Error::Config(format!(
            "checkpoint expects {} input features but dataset {} has {}",
            meta.in_dim,
            ds.name(),
            ds.graph.features.cols()
        )));
    }
    // The checkpoint fixes the architecture; the resolved config only decides
    // feature preprocessing. Echo the checkpoint's shape in the manifest.
    let mut hp = resolve_hp(g, ds.name())?;
    hp.variant = meta.variant;
    hp.hidden_dim = meta.hidden_dim;
    hp.embed_dim = meta.embed_dim;

    let prepared = PreparedInputs::build(&ds.graph, &ds.graph.adjacency, &hp);
    let z = encode(prepared.features(), &prepared.norm_adj, &enc)?.z;

    let mut writer = RunWriter::new(&g.out)?;
    writer.write(
        "embedding.tsv",
        embedding_tsv(&ds.graph.node_ids, &z).as_bytes(),
    )?;
    println!(
        "embed dataset={} variant={} rows={} dim={}",
        ds.name(),
        meta.variant,
        z.rows(),
        z.cols()
    );
    writer.finish("embed", Some(&ds.echo), Some(&hp), &[meta.seed])
}

fn cmd_project(g: &Globals, embedding: Option<PathBuf>) -> Result<()> {
    let emb_path = embedding.unwrap_or_else(|| g.out.join("embedding.tsv"));
    let (ids, z) = read_embedding_tsv(&emb_path)?;

    // Labels are cosmetic here; without a dataset the column is "-".
    let mut label_of: HashMap<&str, String> = HashMap::new();
    let mut echo = None;
    let ds_store;
    if g.dataset.is_some() {
        ds_store = resolve_dataset(g)?;
        if let Some(labels) = &ds_store.graph.labels {
            for (id, &l) in ds_store.graph.node_ids.iter().zip(labels) {
                let text = match &ds_store.graph.label_names {
                    Some(names) => names[l].clone(),
                    None => l.to_string(),
                };
                label_of.insert(id.as_str(), text);
            }
        }
        echo = Some(&ds_store.echo);
    }

    let (coords, degenerate) = pca_2d(&z)?;
    if degenerate {
        eprintln!("warning: embedding variance is zero; projection collapsed to the origin");
    }
    let mut out = String::new();
    for (i, id) in ids.iter().enumerate() {
        let row = coords.row(i);
        let label = label_of.get(id.as_str()).map_or("-", String::as_str);
        writeln!(out, "{id}\t{:.16e}\t{:.16e}\t{label}", row[0], row[1]).expect("string write");
    }

    let mut writer = RunWriter::new(&g.out)?;
    writer.write("projection.tsv", out.as_bytes())?;
    println!("project rows={} from {}", ids.len(), emb_path.display());
    writer.finish("project", echo, None, &[])
}

fn cmd_sweep_dim(
    g: &Globals,
    dims: &[usize],
    runs: u64,
    val_frac: f64,
    test_frac: f64,
) -> Result<()> {
    if dims.is_empty() {
        return Err(Error::Config(
            "sweep-dim needs at least one dimension".into(),
        ));
    }
    if runs == 0 {
        return Err(Error::Config("--runs must be at least 1".into()));
    }
    let ds = resolve_dataset(g)?;
    let base_hp = resolve_hp(g, ds.name())?;
    let mut writer = RunWriter::new(&g.out)?;
    let mut csv = String::from("dim,mean_auc,std_auc,mean_ap,std_ap\n");
    let mut seed_list = Vec::new();

    for &dim in dims {
        let mut aucs = Vec::new();
        let mut aps = Vec::new();
        for k in 0..runs {
            let mut hp = base_hp;
            hp.embed_dim = dim;
            hp.seed = base_hp.seed + k;
            hp.validate()?;
            if !seed_list.contains(&hp.seed) {
                seed_list.push(hp.seed);
            }
            let mut rng = RngStream::new(hp.seed).substream(SPLIT_STREAM);
            let split = split_edges(&ds.graph, val_frac, test_frac, &mut rng)?;
            let (z, _) = train(&ds.graph, Some(&split), &hp, |_| {})?;
            let res = evaluate_link_prediction(&z, &split, EvalSide::Test)?;
            eprintln!(
                "sweep dim={dim} seed={} auc={:.4} ap={:.4}",
                hp.seed, res.auc, res.ap
            );
            aucs.push(res.auc);
            aps.push(res.ap);
        }
        let (mean_auc, std_auc) = mean_std(&aucs);
        let (mean_ap, std_ap) = mean_std(&aps);
        writeln!(
            csv,
            "{dim},{mean_auc:.6},{std_auc:.6},{mean_ap:.6},{std_ap:.6}"
        )
        .expect("string write");
        println!("sweep-dim dim={dim} runs={runs} mean_auc={mean_auc:.4} mean_ap={mean_ap:.4}");
    }

    writer.write("sweep.csv", csv.as_bytes())?;
    writer.finish("sweep-dim", Some(&ds.echo), Some(&base_hp), &seed_list)
}
