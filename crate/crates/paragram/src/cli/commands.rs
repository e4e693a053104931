//! One function per subcommand.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use paragram::composition::{parse_tree_text, CompositionParams, ParseTree};
use paragram::embeddings::{load_embeddings, save_embeddings, EmbeddingSet, Vocabulary};
use paragram::evaluation::{
    binned_error_analysis, collapse_rating_scale, load_lemma_map, map_to_rating_scale,
    map_to_rating_scale_minmax, predict_dataset, score_dataset, spearman_rho, steiger_test,
    tuning_criterion, AnalysisBins, AnalysisTable, DatasetKind, PairedWords, ScoredDataset,
    ScoredItem, ScoringModel,
};
use paragram::pipeline::{
    bin_and_sample, chunked_sample, extract_bigram_pairs, filter_pairs, load_records,
    save_records, BigramKind, FilterConfig,
};
use paragram::training::{
    self, build_constraints, grid_search as run_grid, GridSpace, Hyperparameters, NegativePool,
    PhraseFormat, Sampler, Similarity, TrainingPair,
};

use super::config::{
    self, parse_bins, parse_f64_list, parse_neg_pool, parse_sampler, parse_similarity,
    parse_usize_list, ConfigFile,
};
use super::{
    AnalyzeArgs, CliError, EvaluateArgs, FilterArgs, GridSearchArgs, HyperFlags, ScoreArgs,
    TrainPhrasesArgs, TrainWordsArgs,
};

fn reader(path: &Path) -> Result<BufReader<fs::File>, CliError> {
    fs::File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn load_cfg(path: &Option<PathBuf>) -> Result<ConfigFile, CliError> {
    match path {
        Some(p) => ConfigFile::from_path(p),
        None => Ok(ConfigFile::default()),
    }
}

fn require_path(
    flag: Option<PathBuf>,
    cfg: &ConfigFile,
    key: &str,
) -> Result<PathBuf, CliError> {
    flag.or_else(|| cfg.string(key).map(PathBuf::from))
        .ok_or_else(|| CliError::Usage(format!("missing required flag `--{}`", key.replace('_', "-"))))
}

fn optional_path(flag: Option<PathBuf>, cfg: &ConfigFile, key: &str) -> Option<PathBuf> {
    flag.or_else(|| cfg.string(key).map(PathBuf::from))
}

fn require_seed(flag: Option<u64>, cfg: &ConfigFile) -> Result<u64, CliError> {
    flag.or(cfg.u64("seed")?).ok_or_else(|| {
        CliError::Usage("this run is stochastic: `--seed` is required".to_string())
    })
}

fn resolve_threads(flag: Option<usize>, cfg: &ConfigFile) -> Result<usize, CliError> {
    let env = match std::env::var("PARAGRAM_THREADS") {
        Ok(v) => Some(v.parse::<usize>().map_err(|_| {
            CliError::Usage("PARAGRAM_THREADS must be a positive integer".to_string())
        })?),
        Err(_) => None,
    };
    let threads = flag.or(cfg.usize("threads")?).or(env).unwrap_or(1);
    if threads == 0 {
        return Err(CliError::Usage("--threads must be positive".to_string()));
    }
    Ok(threads)
}

fn similarity_name(s: Similarity) -> &'static str {
    match s {
        Similarity::Dot => "dot",
        Similarity::Cosine => "cosine",
    }
}

fn sampler_name(s: Sampler) -> &'static str {
    match s {
        Sampler::Max => "max",
        Sampler::Rand => "rand",
        Sampler::Mix => "mix",
        Sampler::Least => "least",
    }
}

fn pool_name(p: NegativePool) -> &'static str {
    match p {
        NegativePool::First => "first",
        NegativePool::Both => "both",
    }
}

fn resolve_hyper(
    flags: &HyperFlags,
    lambda_w: Option<f64>,
    lr_comp: Option<f64>,
    cfg: &ConfigFile,
    defaults: Hyperparameters,
) -> Result<Hyperparameters, CliError> {
    let seed = require_seed(flags.seed, cfg)?;
    let similarity = match flags.similarity.clone().or_else(|| cfg.string("similarity")) {
        Some(s) => parse_similarity(&s)?,
        None => defaults.similarity,
    };
    let sampler = match flags.sampler.clone().or_else(|| cfg.string("sampler")) {
        Some(s) => parse_sampler(&s)?,
        None => defaults.sampler,
    };
    let neg_pool = match flags.neg_pool.clone().or_else(|| cfg.string("neg_pool")) {
        Some(s) => parse_neg_pool(&s)?,
        None => defaults.neg_pool,
    };
    let hp = Hyperparameters {
        delta: flags.delta.or(cfg.f64("delta")?).unwrap_or(defaults.delta),
        lambda_ww: flags
            .lambda_ww
            .or(cfg.f64("lambda_ww")?)
            .unwrap_or(defaults.lambda_ww),
        lambda_w: lambda_w.or(cfg.f64("lambda_w")?).unwrap_or(defaults.lambda_w),
        lr_words: flags
            .lr_words
            .or(cfg.f64("lr_words")?)
            .unwrap_or(defaults.lr_words),
        lr_comp: lr_comp.or(cfg.f64("lr_comp")?).unwrap_or(defaults.lr_comp),
        batch_size: flags
            .batch_size
            .or(cfg.usize("batch_size")?)
            .unwrap_or(defaults.batch_size),
        epochs: flags.epochs.or(cfg.usize("epochs")?).unwrap_or(defaults.epochs),
        similarity,
        sampler,
        neg_pool,
        seed,
    };
    hp.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(hp)
}

fn hyper_entries(hp: &Hyperparameters, threads: usize) -> BTreeMap<String, String> {
    let mut map = BTreeMap::new();
    map.insert("delta".into(), hp.delta.to_string());
    map.insert("lambda_ww".into(), hp.lambda_ww.to_string());
    map.insert("lambda_w".into(), hp.lambda_w.to_string());
    map.insert("lr_words".into(), hp.lr_words.to_string());
    map.insert("lr_comp".into(), hp.lr_comp.to_string());
    map.insert("batch_size".into(), hp.batch_size.to_string());
    map.insert("epochs".into(), hp.epochs.to_string());
    map.insert("similarity".into(), similarity_name(hp.similarity).into());
    map.insert("sampler".into(), sampler_name(hp.sampler).into());
    map.insert("neg_pool".into(), pool_name(hp.neg_pool).into());
    map.insert("seed".into(), hp.seed.to_string());
    map.insert("threads".into(), threads.to_string());
    map
}

fn path_entry(map: &mut BTreeMap<String, String>, key: &str, path: &Path) {
    map.insert(key.to_string(), path.display().to_string());
}

fn load_vocab(path: &Path) -> Result<Vocabulary, CliError> {
    let mut words = Vec::new();
    let mut seen = HashSet::new();
    for line in reader(path)?.lines() {
        let line = line.map_err(|e| CliError::Data(e.to_string()))?;
        let token = line.trim();
        if !token.is_empty() && seen.insert(token.to_string()) {
            words.push(token.to_string());
        }
    }
    Vocabulary::new(words).map_err(Into::into)
}

fn load_constraints(
    pairs: &[TrainingPair<String>],
    lemmas_path: &Option<PathBuf>,
) -> Result<training::ConstraintIndex, CliError> {
    let lemmas = match lemmas_path {
        Some(p) => load_lemma_map(reader(p)?)?,
        None => HashMap::new(),
    };
    let raw: Vec<(String, String)> = pairs
        .iter()
        .map(|p| (p.x1.clone(), p.x2.clone()))
        .collect();
    Ok(build_constraints(&raw, &lemmas))
}

pub(super) fn train_words(args: TrainWordsArgs) -> Result<(), CliError> {
    let cfg = load_cfg(&args.hyper.config)?;
    let hp = resolve_hyper(&args.hyper, None, None, &cfg, Hyperparameters::for_words(0))?;
    let threads = resolve_threads(args.hyper.threads, &cfg)?;
    let pairs_path = require_path(args.pairs, &cfg, "pairs")?;
    let init_path = require_path(args.init, &cfg, "init")?;
    let out_dir = require_path(args.out, &cfg, "out")?;
    let use_constraints = args.use_constraints || cfg.bool("use_constraints")?.unwrap_or(false);
    let lemmas_path = optional_path(args.lemmas, &cfg, "lemmas");

    let pairs = training::load_word_pairs(reader(&pairs_path)?)?;
    let init_set = load_embeddings(reader(&init_path)?)?;
    let constraints = if use_constraints {
        Some(load_constraints(&pairs, &lemmas_path)?)
    } else {
        None
    };

    let trained = training::train_words(&pairs, &init_set, &hp, constraints.as_ref())?;

    fs::create_dir_all(&out_dir).map_err(|e| CliError::Data(e.to_string()))?;
    let out_path = out_dir.join("embeddings.txt");
    let mut file = fs::File::create(&out_path).map_err(|e| CliError::Data(e.to_string()))?;
    save_embeddings(&trained, &mut file)?;

    let mut entries = hyper_entries(&hp, threads);
    path_entry(&mut entries, "pairs", &pairs_path);
    path_entry(&mut entries, "init", &init_path);
    path_entry(&mut entries, "out", &out_dir);
    entries.insert("use_constraints".into(), use_constraints.to_string());
    if let Some(p) = &lemmas_path {
        path_entry(&mut entries, "lemmas", p);
    }
    entries.insert("mode".into(), "words".into());
    config::write_resolved(&out_dir, &entries)?;
    println!("wrote {}", out_path.display());
    Ok(())
}

fn parse_phrase_format(s: Option<String>, cfg: &ConfigFile) -> Result<PhraseFormat, CliError> {
    match s.or_else(|| cfg.string("input_format")).as_deref() {
        None | Some("tokens") => Ok(PhraseFormat::Tokens),
        Some("trees") => Ok(PhraseFormat::Trees),
        Some(other) => Err(CliError::Usage(format!(
            "input-format must be tokens|trees, found `{other}`"
        ))),
    }
}

pub(super) fn train_phrases(args: TrainPhrasesArgs) -> Result<(), CliError> {
    let cfg = load_cfg(&args.hyper.config)?;
    let hp = resolve_hyper(
        &args.hyper,
        args.lambda_w,
        args.lr_comp,
        &cfg,
        Hyperparameters::for_phrases(0),
    )?;
    let threads = resolve_threads(args.hyper.threads, &cfg)?;
    let pairs_path = require_path(args.pairs, &cfg, "pairs")?;
    let init_path = require_path(args.init, &cfg, "init")?;
    let out_dir = require_path(args.out, &cfg, "out")?;
    let format = parse_phrase_format(args.input_format, &cfg)?;
    let init_params_path = optional_path(args.init_params, &cfg, "init_params");
    let use_constraints = args.use_constraints || cfg.bool("use_constraints")?.unwrap_or(false);
    let lemmas_path = optional_path(args.lemmas, &cfg, "lemmas");

    let pairs = training::load_phrase_pairs(reader(&pairs_path)?, format)?;
    let init_set = load_embeddings(reader(&init_path)?)?;
    let init_params = match &init_params_path {
        Some(p) => Some(CompositionParams::load(reader(p)?)?),
        None => None,
    };
    let constraints = if use_constraints {
        let word_pairs: Vec<TrainingPair<String>> = pairs
            .iter()
            .map(|p| TrainingPair {
                x1: p.x1.surface(),
                x2: p.x2.surface(),
            })
            .collect();
        Some(load_constraints(&word_pairs, &lemmas_path)?)
    } else {
        None
    };

    let (set, params) =
        training::train_phrases(&pairs, &init_set, init_params, &hp, constraints.as_ref())?;

    fs::create_dir_all(&out_dir).map_err(|e| CliError::Data(e.to_string()))?;
    let emb_path = out_dir.join("embeddings.txt");
    let mut file = fs::File::create(&emb_path).map_err(|e| CliError::Data(e.to_string()))?;
    save_embeddings(&set, &mut file)?;
    let params_path = out_dir.join("composition.txt");
    let mut file = fs::File::create(&params_path).map_err(|e| CliError::Data(e.to_string()))?;
    params.save(&mut file)?;

    let mut entries = hyper_entries(&hp, threads);
    path_entry(&mut entries, "pairs", &pairs_path);
    path_entry(&mut entries, "init", &init_path);
    path_entry(&mut entries, "out", &out_dir);
    if let Some(p) = &init_params_path {
        path_entry(&mut entries, "init_params", p);
    }
    entries.insert(
        "input_format".into(),
        match format {
            PhraseFormat::Tokens => "tokens".into(),
            PhraseFormat::Trees => "trees".into(),
        },
    );
    entries.insert("use_constraints".into(), use_constraints.to_string());
    entries.insert("mode".into(), "phrases".into());
    config::write_resolved(&out_dir, &entries)?;
    println!("wrote {} and {}", emb_path.display(), params_path.display());
    Ok(())
}

fn parse_bigram_kind(s: &str) -> Result<BigramKind, CliError> {
    match s {
        "jn" => Ok(BigramKind::AdjNoun),
        "nn" => Ok(BigramKind::NounNoun),
        "vn" => Ok(BigramKind::VerbNoun),
        _ => Err(CliError::Usage(format!(
            "extract-bigrams must be jn|nn|vn, found `{s}`"
        ))),
    }
}

pub(super) fn filter(args: FilterArgs) -> Result<(), CliError> {
    let cfg = load_cfg(&args.config)?;
    let input = require_path(args.input, &cfg, "in")?;
    let out = require_path(args.out, &cfg, "out")?;
    let vocab = match optional_path(args.vocab, &cfg, "vocab") {
        Some(p) => Some(load_vocab(&p)?),
        None => None,
    };
    let bins = match args.bins.or_else(|| cfg.string("bins")) {
        Some(s) => parse_bins(&s)?,
        None => FilterConfig::default().size_bins,
    };
    let extract = args
        .extract_bigrams
        .or_else(|| cfg.string("extract_bigrams"));
    let bin_sample_n = args.bin_sample.or(cfg.usize("bin_sample")?);
    let chunk_size = args.chunk_size.or(cfg.usize("chunk_size")?);
    let chunk_sample_n = args.chunk_sample.or(cfg.usize("chunk_sample")?);
    if chunk_size.is_some() != chunk_sample_n.is_some() {
        return Err(CliError::Usage(
            "--chunk-size and --chunk-sample go together".to_string(),
        ));
    }
    let stochastic = bin_sample_n.is_some() || chunk_size.is_some();
    let seed = if stochastic {
        Some(require_seed(args.seed, &cfg)?)
    } else {
        None
    };

    let records = load_records(reader(&input)?)?;
    let max_overlap = if args.no_overlap_filter {
        None
    } else {
        Some(args.max_overlap.or(cfg.f64("max_overlap")?).unwrap_or(0.5))
    };
    let drop_digits = !args.keep_digits && cfg.bool("drop_digits")?.unwrap_or(true);
    let drop_levenshtein = args.lev1_filter || cfg.bool("lev1_filter")?.unwrap_or(false);

    let (mut kept, report) = match &extract {
        Some(kind) => extract_bigram_pairs(&records, parse_bigram_kind(kind)?, vocab.as_ref())?,
        None => {
            let fcfg = FilterConfig {
                vocab,
                max_overlap,
                drop_digits,
                drop_levenshtein,
                size_bins: bins.clone(),
                per_bin: bin_sample_n.unwrap_or(500),
            };
            filter_pairs(records, &fcfg)?
        }
    };
    println!("{report}");

    if let (Some(size), Some(per_chunk)) = (chunk_size, chunk_sample_n) {
        kept = chunked_sample(&kept, size, per_chunk, seed.expect("seed resolved"))?;
        println!("chunk_sampled\t{}", kept.len());
    }
    if let Some(per_bin) = bin_sample_n {
        let fcfg = FilterConfig {
            per_bin,
            size_bins: bins.clone(),
            ..FilterConfig::default()
        };
        kept = bin_and_sample(&kept, &fcfg, seed.expect("seed resolved"))?;
        println!("bin_sampled\t{}", kept.len());
    }

    let mut file = fs::File::create(&out).map_err(|e| CliError::Data(e.to_string()))?;
    save_records(&kept, &mut file)?;

    if stochastic {
        let mut entries = BTreeMap::new();
        path_entry(&mut entries, "in", &input);
        path_entry(&mut entries, "out", &out);
        if let Some(s) = seed {
            entries.insert("seed".into(), s.to_string());
        }
        if let Some(n) = bin_sample_n {
            entries.insert("bin_sample".into(), n.to_string());
        }
        if let (Some(cs), Some(cn)) = (chunk_size, chunk_sample_n) {
            entries.insert("chunk_size".into(), cs.to_string());
            entries.insert("chunk_sample".into(), cn.to_string());
        }
        entries.insert(
            "bins".into(),
            bins.iter()
                .map(|b| b.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        if let Some(m) = max_overlap {
            entries.insert("max_overlap".into(), m.to_string());
        }
        if let Some(kind) = &extract {
            entries.insert("extract_bigrams".into(), kind.clone());
        }
        let cfg_path = PathBuf::from(format!("{}.cfg", out.display()));
        config::write_resolved_file(&cfg_path, &entries)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ModelSpec {
    Additive,
    Rnn,
    OverlapStrict,
    OverlapLemma,
}

fn parse_model(s: &str) -> Result<ModelSpec, CliError> {
    match s {
        "additive" => Ok(ModelSpec::Additive),
        "rnn" => Ok(ModelSpec::Rnn),
        "overlap-strict" => Ok(ModelSpec::OverlapStrict),
        "overlap-lemma" => Ok(ModelSpec::OverlapLemma),
        _ => Err(CliError::Usage(format!(
            "model must be additive|rnn|overlap-strict|overlap-lemma, found `{s}`"
        ))),
    }
}

struct Artifacts {
    set: Option<EmbeddingSet>,
    params: Option<CompositionParams>,
    lemmas: Option<HashMap<String, String>>,
}

fn load_artifacts(
    specs: &[ModelSpec],
    embeddings: Option<PathBuf>,
    params: Option<PathBuf>,
    lemmas: Option<PathBuf>,
) -> Result<Artifacts, CliError> {
    let needs_set = specs
        .iter()
        .any(|s| matches!(s, ModelSpec::Additive | ModelSpec::Rnn));
    let needs_params = specs.contains(&ModelSpec::Rnn);
    let needs_lemmas = specs.contains(&ModelSpec::OverlapLemma);
    let set = if needs_set {
        let p = embeddings
            .ok_or_else(|| CliError::Usage("vector models need `--embeddings`".to_string()))?;
        Some(load_embeddings(reader(&p)?)?)
    } else {
        None
    };
    let params = if needs_params {
        let p = params
            .ok_or_else(|| CliError::Usage("the rnn model needs `--params`".to_string()))?;
        Some(CompositionParams::load(reader(&p)?)?)
    } else {
        None
    };
    let lemmas = if needs_lemmas {
        let p = lemmas
            .ok_or_else(|| CliError::Usage("overlap-lemma needs `--lemmas`".to_string()))?;
        Some(load_lemma_map(reader(&p)?)?)
    } else {
        None
    };
    Ok(Artifacts { set, params, lemmas })
}

fn model_of<'a>(spec: ModelSpec, artifacts: &'a Artifacts) -> ScoringModel<'a> {
    match spec {
        ModelSpec::Additive => ScoringModel::Additive {
            set: artifacts.set.as_ref().expect("artifacts loaded"),
        },
        ModelSpec::Rnn => ScoringModel::Rnn {
            set: artifacts.set.as_ref().expect("artifacts loaded"),
            params: artifacts.params.as_ref().expect("artifacts loaded"),
        },
        ModelSpec::OverlapStrict => ScoringModel::OverlapStrict,
        ModelSpec::OverlapLemma => ScoringModel::OverlapLemma {
            lemmas: artifacts.lemmas.as_ref().expect("artifacts loaded"),
        },
    }
}

pub(super) fn score(args: ScoreArgs) -> Result<(), CliError> {
    let cfg = load_cfg(&args.config)?;
    let spec = parse_model(
        &args
            .model
            .or_else(|| cfg.string("model"))
            .ok_or_else(|| CliError::Usage("missing required flag `--model`".to_string()))?,
    )?;
    let input = require_path(args.input, &cfg, "in")?;
    let format = parse_phrase_format(args.input_format, &cfg)?;
    let artifacts = load_artifacts(
        &[spec],
        optional_path(args.embeddings, &cfg, "embeddings"),
        optional_path(args.params, &cfg, "params"),
        optional_path(args.lemmas, &cfg, "lemmas"),
    )?;
    let model = model_of(spec, &artifacts);

    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for (i, line) in reader(&input)?.lines().enumerate() {
        let line = line.map_err(|e| CliError::Data(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 2 {
            return Err(CliError::Data(format!(
                "line {}: expected `text1 TAB text2`",
                i + 1
            )));
        }
        let (item, trees) = item_from_texts(cols[0], cols[1], format)?;
        let sim = model.predict(&item, trees.as_ref())?;
        writeln!(out, "{sim}").map_err(|e| CliError::Data(e.to_string()))?;
    }
    Ok(())
}

fn item_from_texts(
    text1: &str,
    text2: &str,
    format: PhraseFormat,
) -> Result<(ScoredItem, Option<(ParseTree, ParseTree)>), CliError> {
    match format {
        PhraseFormat::Tokens => Ok((
            ScoredItem {
                text1: text1.split_whitespace().map(String::from).collect(),
                text2: text2.split_whitespace().map(String::from).collect(),
                gold: 0.0,
            },
            None,
        )),
        PhraseFormat::Trees => {
            let t1 = parse_tree_text(text1)?;
            let t2 = parse_tree_text(text2)?;
            let item = ScoredItem {
                text1: t1.leaves().iter().map(|s| s.to_string()).collect(),
                text2: t2.leaves().iter().map(|s| s.to_string()).collect(),
                gold: 0.0,
            };
            Ok((item, Some((t1, t2))))
        }
    }
}

fn parse_kind(s: Option<String>, cfg: &ConfigFile) -> Result<DatasetKind, CliError> {
    match s.or_else(|| cfg.string("kind")).as_deref() {
        None | Some("phrase") => Ok(DatasetKind::Phrase),
        Some("word") => Ok(DatasetKind::Word),
        Some("bigram") => Ok(DatasetKind::Bigram),
        Some(other) => Err(CliError::Usage(format!(
            "kind must be word|bigram|phrase, found `{other}`"
        ))),
    }
}

fn load_dataset(
    dataset: PathBuf,
    kind: DatasetKind,
    trees: Option<PathBuf>,
) -> Result<ScoredDataset, CliError> {
    let mut ds = ScoredDataset::from_tsv(reader(&dataset)?, kind)?;
    if let Some(trees_path) = trees {
        ds.attach_trees(reader(&trees_path)?)?;
    }
    Ok(ds)
}

pub(super) fn evaluate(args: EvaluateArgs) -> Result<(), CliError> {
    let cfg = load_cfg(&args.config)?;
    let spec = parse_model(
        &args
            .model
            .or_else(|| cfg.string("model"))
            .ok_or_else(|| CliError::Usage("missing required flag `--model`".to_string()))?,
    )?;
    let dataset_path = require_path(args.dataset, &cfg, "dataset")?;
    let kind = parse_kind(args.kind, &cfg)?;
    let mut ds = load_dataset(
        dataset_path,
        kind,
        optional_path(args.trees, &cfg, "trees"),
    )?;
    if args.collapse_scale {
        collapse_rating_scale(&mut ds);
    }
    let artifacts = load_artifacts(
        &[spec],
        optional_path(args.embeddings, &cfg, "embeddings"),
        optional_path(args.params, &cfg, "params"),
        optional_path(args.lemmas, &cfg, "lemmas"),
    )?;
    let report = score_dataset(&ds, &model_of(spec, &artifacts))?;
    println!("rho={} n={}", report.rho, report.n);
    Ok(())
}

fn rating_scale(
    similarities: &[f64],
    scale: &str,
) -> Result<Vec<f64>, CliError> {
    match scale {
        "affine" => similarities
            .iter()
            .map(|s| map_to_rating_scale(*s).map_err(Into::into))
            .collect(),
        "minmax" => Ok(map_to_rating_scale_minmax(similarities)),
        _ => Err(CliError::Usage(format!(
            "scale must be affine|minmax, found `{scale}`"
        ))),
    }
}

pub(super) fn analyze(args: AnalyzeArgs) -> Result<(), CliError> {
    let cfg = load_cfg(&args.config)?;
    let spec_a = parse_model(
        &args
            .model_a
            .or_else(|| cfg.string("model_a"))
            .ok_or_else(|| CliError::Usage("missing required flag `--model-a`".to_string()))?,
    )?;
    let spec_b = parse_model(
        &args
            .model_b
            .or_else(|| cfg.string("model_b"))
            .ok_or_else(|| CliError::Usage("missing required flag `--model-b`".to_string()))?,
    )?;
    let dataset_path = require_path(args.dataset, &cfg, "dataset")?;
    let out_dir = require_path(args.out, &cfg, "out")?;
    let mode = args
        .mode
        .or_else(|| cfg.string("mode"))
        .unwrap_or_else(|| "gold".to_string());
    let bins = match mode.as_str() {
        "gold" => AnalysisBins::Gold,
        "length" => AnalysisBins::LengthRatio,
        "overlap" => AnalysisBins::OverlapRatio,
        other => {
            return Err(CliError::Usage(format!(
                "mode must be gold|length|overlap, found `{other}`"
            )))
        }
    };
    let scale = args
        .scale
        .or_else(|| cfg.string("scale"))
        .unwrap_or_else(|| "affine".to_string());
    let paired = match optional_path(args.paired_words, &cfg, "paired_words") {
        Some(p) => Some(PairedWords::from_tsv(reader(&p)?)?),
        None => None,
    };

    let ds = load_dataset(
        dataset_path.clone(),
        DatasetKind::Phrase,
        optional_path(args.trees, &cfg, "trees"),
    )?;
    let artifacts = load_artifacts(
        &[spec_a, spec_b],
        optional_path(args.embeddings, &cfg, "embeddings"),
        optional_path(args.params, &cfg, "params"),
        optional_path(args.lemmas, &cfg, "lemmas"),
    )?;
    let sims_a = predict_dataset(&ds, &model_of(spec_a, &artifacts))?;
    let sims_b = predict_dataset(&ds, &model_of(spec_b, &artifacts))?;
    let preds_a = rating_scale(&sims_a, &scale)?;
    let preds_b = rating_scale(&sims_b, &scale)?;

    let table = binned_error_analysis(&ds, &preds_a, &preds_b, bins, paired.as_ref())?;

    fs::create_dir_all(&out_dir).map_err(|e| CliError::Data(e.to_string()))?;
    let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"));
    let (table_name, tsv, dat) = match &table {
        AnalysisTable::Gold(rows) => {
            let mut tsv = String::from("bin\tcount\tmae_a\tmae_b\n");
            let mut dat = String::from("# bin count mae_a mae_b\n");
            for (i, r) in rows.iter().enumerate() {
                tsv.push_str(&format!(
                    "{}\t{}\t{:.4}\t{:.4}\n",
                    r.label, r.count, r.mae_a, r.mae_b
                ));
                dat.push_str(&format!("{} {} {:.4} {:.4}\n", i + 1, r.count, r.mae_a, r.mae_b));
            }
            ("gold_error.tsv", tsv, dat)
        }
        AnalysisTable::RatioChange(rows) => {
            let mut tsv = String::from("bin\tpositive\tnegative\tboth\n");
            let mut dat = String::from("# bin positive negative both\n");
            for (i, r) in rows.iter().enumerate() {
                tsv.push_str(&format!(
                    "{}\t{}\t{}\t{}\n",
                    r.label,
                    fmt(r.positive),
                    fmt(r.negative),
                    fmt(r.both)
                ));
                dat.push_str(&format!(
                    "{} {} {} {}\n",
                    i + 1,
                    fmt(r.positive),
                    fmt(r.negative),
                    fmt(r.both)
                ));
            }
            ("ratio_change.tsv", tsv, dat)
        }
    };
    fs::write(out_dir.join(table_name), &tsv).map_err(|e| CliError::Data(e.to_string()))?;
    fs::write(out_dir.join("figure.dat"), &dat).map_err(|e| CliError::Data(e.to_string()))?;

    let gold: Vec<f64> = ds.items.iter().map(|i| i.gold).collect();
    let mut summary = String::new();
    summary.push_str(&format!(
        "dataset: {} (n={})\n",
        dataset_path.display(),
        ds.items.len()
    ));
    let rho_a = spearman_rho(&sims_a, &gold);
    let rho_b = spearman_rho(&sims_b, &gold);
    match (&rho_a, &rho_b) {
        (Ok(ra), Ok(rb)) => {
            summary.push_str(&format!("rho_a={ra}\nrho_b={rb}\n"));
            if let Ok(r_ab) = spearman_rho(&sims_a, &sims_b) {
                match steiger_test(*rb, *ra, r_ab, ds.items.len()) {
                    Ok((t, p)) => summary.push_str(&format!(
                        "dependent-correlation test (b over a): t={t} one-tailed p={p}\n"
                    )),
                    Err(e) => summary.push_str(&format!("dependent-correlation test: {e}\n")),
                }
            }
        }
        _ => summary.push_str("rank correlations undefined (constant predictions)\n"),
    }
    summary.push_str(&format!("table: {table_name}\nscale: {scale}\nmode: {mode}\n"));
    fs::write(out_dir.join("summary.txt"), &summary).map_err(|e| CliError::Data(e.to_string()))?;

    let mut entries = BTreeMap::new();
    path_entry(&mut entries, "dataset", &dataset_path);
    path_entry(&mut entries, "out", &out_dir);
    entries.insert("mode".into(), mode);
    entries.insert("scale".into(), scale);
    config::write_resolved(&out_dir, &entries)?;
    print!("{summary}");
    Ok(())
}

pub(super) fn grid_search(args: GridSearchArgs) -> Result<(), CliError> {
    let cfg = load_cfg(&args.hyper.config)?;
    let mode = args
        .mode
        .or_else(|| cfg.string("mode"))
        .ok_or_else(|| CliError::Usage("missing required flag `--mode` (words|phrases)".into()))?;
    let defaults = match mode.as_str() {
        "words" => Hyperparameters::for_words(0),
        "phrases" => Hyperparameters::for_phrases(0),
        other => {
            return Err(CliError::Usage(format!(
                "mode must be words|phrases, found `{other}`"
            )))
        }
    };
    let base = resolve_hyper(&args.hyper, args.lambda_w, args.lr_comp, &cfg, defaults)?;
    let threads = resolve_threads(args.hyper.threads, &cfg)?;
    let pairs_path = require_path(args.pairs, &cfg, "pairs")?;
    let init_path = require_path(args.init, &cfg, "init")?;
    let out_dir = require_path(args.out, &cfg, "out")?;

    let mut space = match args
        .grid
        .or_else(|| cfg.string("grid"))
        .as_deref()
        .unwrap_or(if mode == "words" { "word" } else { "phrase" })
    {
        "word" => GridSpace::word_grid(),
        "phrase" => GridSpace::phrase_grid(),
        "phrase-shifted" => GridSpace::phrase_grid_shifted(),
        other => {
            return Err(CliError::Usage(format!(
                "grid must be word|phrase|phrase-shifted, found `{other}`"
            )))
        }
    };
    if let Some(s) = args.lambda_ww_grid.or_else(|| cfg.string("lambda_ww_grid")) {
        space.lambda_ww = parse_f64_list(&s)?;
    }
    if let Some(s) = args.lambda_w_grid.or_else(|| cfg.string("lambda_w_grid")) {
        space.lambda_w = parse_f64_list(&s)?;
    }
    if let Some(s) = args.batch_grid.or_else(|| cfg.string("batch_grid")) {
        space.batch_size = parse_usize_list(&s)?;
    }

    let tune = optional_path(args.tune, &cfg, "tune");
    let tune_s = optional_path(args.tune_s, &cfg, "tune_s");
    let tune_r = optional_path(args.tune_r, &cfg, "tune_r");
    let criterion = match (&tune, &tune_s, &tune_r) {
        (Some(t), None, None) => TuneCriterion::Single(load_dataset(t.clone(), DatasetKind::Word, None)?),
        (None, Some(s), Some(r)) => TuneCriterion::SimMinusRel(
            load_dataset(s.clone(), DatasetKind::Word, None)?,
            load_dataset(r.clone(), DatasetKind::Word, None)?,
        ),
        _ => {
            return Err(CliError::Usage(
                "give either `--tune DATASET` or both `--tune-s` and `--tune-r`".to_string(),
            ))
        }
    };

    let init_set = load_embeddings(reader(&init_path)?)?;
    let (best, table) = match mode.as_str() {
        "words" => {
            let pairs = training::load_word_pairs(reader(&pairs_path)?)?;
            run_grid(&base, &space, |hp| {
                let trained = training::train_words(&pairs, &init_set, hp, None)?;
                criterion.score(&ScoringModel::Additive { set: &trained })
            })?
        }
        _ => {
            let format = parse_phrase_format(args.input_format, &cfg)?;
            let pairs = training::load_phrase_pairs(reader(&pairs_path)?, format)?;
            let init_params = match optional_path(args.init_params, &cfg, "init_params") {
                Some(p) => Some(CompositionParams::load(reader(&p)?)?),
                None => None,
            };
            run_grid(&base, &space, |hp| {
                let (set, params) =
                    training::train_phrases(&pairs, &init_set, init_params.clone(), hp, None)?;
                criterion.score(&ScoringModel::Rnn {
                    set: &set,
                    params: &params,
                })
            })?
        }
    };

    fs::create_dir_all(&out_dir).map_err(|e| CliError::Data(e.to_string()))?;
    let mut tsv = String::from("lambda_ww\tlambda_w\tbatch_size\tscore\n");
    for point in &table {
        tsv.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            point.hp.lambda_ww, point.hp.lambda_w, point.hp.batch_size, point.score
        ));
    }
    fs::write(out_dir.join("table.tsv"), &tsv).map_err(|e| CliError::Data(e.to_string()))?;
    config::write_resolved_file(&out_dir.join("best.cfg"), &hyper_entries(&best, threads))?;

    let mut entries = hyper_entries(&base, threads);
    path_entry(&mut entries, "pairs", &pairs_path);
    path_entry(&mut entries, "init", &init_path);
    path_entry(&mut entries, "out", &out_dir);
    entries.insert("mode".into(), mode);
    config::write_resolved(&out_dir, &entries)?;

    let best_score = table
        .iter()
        .map(|p| p.score)
        .fold(f64::NEG_INFINITY, f64::max);
    println!(
        "best lambda_ww={} lambda_w={} batch_size={} score={}",
        best.lambda_ww, best.lambda_w, best.batch_size, best_score
    );
    Ok(())
}

enum TuneCriterion {
    Single(ScoredDataset),
    SimMinusRel(ScoredDataset, ScoredDataset),
}

impl TuneCriterion {
    fn score(&self, model: &ScoringModel<'_>) -> paragram::Result<f64> {
        match self {
            TuneCriterion::Single(ds) => Ok(score_dataset(ds, model)?.rho),
            TuneCriterion::SimMinusRel(sim, rel) => {
                let rho_s = score_dataset(sim, model)?.rho;
                let rho_r = score_dataset(rel, model)?.rho;
                Ok(tuning_criterion(rho_s, rho_r))
            }
        }
    }
}
