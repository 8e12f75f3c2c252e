use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crossalign::diagnostics::HubnessReport;
use crossalign::transforms::apply_to_space;
use crossalign::{
    build_training_matrices, compute_idf, evaluate_dataset, fit_cca, fit_least_squares,
    fit_orthogonal, fit_orthogonal_ranking, fit_ranking, hubness_counts, load_vectors,
    AlignmentMatrix, BilingualDictionary, HubnessMode, IdfWeights, Method, RankingConfig,
    SemanticSpace, Sentence, StsConfig, StsPipeline, Weighting,
};
use log::{info, warn};
use serde_json::json;

use crate::args::{ridge_label, AlignArgs, Command, EvalArgs, HubnessArgs, StsArgs};
use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;

/// Runs one subcommand. `argv` is echoed into the manifest.
pub fn run(command: Command, argv: &[String]) -> CliResult<()> {
    match command {
        Command::Align(a) => align(&a, argv),
        Command::Sts(a) => sts(&a, argv),
        Command::Eval(a) => eval(&a, argv),
        Command::Hubness(a) => hubness(&a, argv),
        Command::Rerun(a) => rerun(&a.manifest),
    }
}

fn rerun(path: &Path) -> CliResult<()> {
    use clap::Parser;

    let manifest = RunManifest::read(path)?;
    let cli = crate::args::Cli::try_parse_from(
        std::iter::once("crossalign".to_string()).chain(manifest.argv.iter().cloned()),
    )
    .map_err(|e| CliError::usage(format!("manifest arguments no longer parse: {e}")).in_file(path))?;
    if matches!(cli.command, Command::Rerun(_)) || cli.command.name() != manifest.subcommand {
        return Err(CliError::usage("manifest does not describe a rerunnable command").in_file(path));
    }
    info!("repeating `{}` from {}", manifest.subcommand, path.display());
    run(cli.command, &manifest.argv)
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::io(e.to_string()).in_file(path))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(e.to_string()).in_file(path))
}

fn write_failed(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::io(e.to_string()).in_file(path)
}

/// Loads and preprocesses (center, then normalize) a vector file.
fn load_space(path: &Path, max_vocab: Option<usize>, manifest: &mut RunManifest, name: &str) -> CliResult<SemanticSpace> {
    let (space, stats) = load_vectors(open(path)?, max_vocab).map_err(|e| CliError::from(e).in_file(path))?;
    manifest
        .input(name, path)
        .count(&format!("{name}_words"), stats.loaded)
        .count(&format!("{name}_duplicates"), stats.duplicates);
    info!("{}: {} words, dimension {}", path.display(), space.len(), space.dim());
    Ok(space.preprocess()?)
}

fn load_transform(path: &Path) -> CliResult<AlignmentMatrix> {
    AlignmentMatrix::read_from(open(path)?).map_err(|e| CliError::from(e).in_file(path))
}

fn align(a: &AlignArgs, argv: &[String]) -> CliResult<()> {
    let mut manifest = RunManifest::new("align", argv);
    let src = load_space(&a.src_vectors, a.max_vocab, &mut manifest, "src_vectors")?;
    let tgt = load_space(&a.tgt_vectors, a.max_vocab, &mut manifest, "tgt_vectors")?;
    let dict = BilingualDictionary::parse(open(&a.dict)?).map_err(|e| CliError::from(e).in_file(&a.dict))?;
    manifest.input("dict", &a.dict).count("dict_pairs", dict.len());

    let data = build_training_matrices(&dict, &src, &tgt)?;
    if data.dropped > 0 {
        warn!("{} of {} dictionary pairs dropped (out of vocabulary)", data.dropped, dict.len());
    }
    manifest
        .count("training_pairs", data.x.nrows())
        .count("oov_dropped", data.dropped)
        .config("method", a.method.as_str());

    let ranking = RankingConfig {
        margin: a.margin,
        negatives: a.negatives,
        epochs: a.epochs,
        learning_rate: a.lr,
        distance: a.distance,
        seed: a.seed,
    };
    let t = match a.method {
        Method::LeastSquares | Method::Cca => {
            manifest.config("ridge", ridge_label(a.ridge));
            if a.method == Method::LeastSquares {
                fit_least_squares(&data.x, &data.y, a.ridge)?
            } else {
                fit_cca(&data.x, &data.y, a.ridge)?
            }
        }
        Method::Orthogonal => fit_orthogonal(&data.x, &data.y)?,
        Method::Ranking | Method::OrthogonalRanking => {
            manifest
                .config("epochs", ranking.epochs)
                .config("negatives", ranking.negatives)
                .config("margin", ranking.margin)
                .config("learning_rate", ranking.learning_rate)
                .config("distance", ranking.distance.as_str())
                .seeded(ranking.seed);
            if a.method == Method::Ranking {
                fit_ranking(&data.x, &data.y, &ranking)?
            } else {
                fit_orthogonal_ranking(&data.x, &data.y, &ranking)?
            }
        }
    };

    let mut out = create(&a.out)?;
    t.write_to(&mut out).map_err(write_failed(&a.out))?;

    let report = t.report();
    manifest
        .result("orthogonality_defect_fro", report.orthogonality_defect)
        .result("orthogonality_defect_inf", t.orthogonality_defect_inf());
    if let Some(r) = report.residual {
        manifest.result("residual", r);
    }
    if matches!(a.method, Method::LeastSquares | Method::Cca) {
        manifest.result("ridge_applied", report.ridge);
    }
    if !report.canonical_correlations.is_empty() {
        manifest.result("canonical_correlations", json!(report.canonical_correlations));
    }
    if let Some(l) = report.initial_loss {
        manifest
            .result("initial_loss", l)
            .result("epoch_losses", json!(report.epoch_losses));
    }
    manifest.write_beside(&a.out)?;
    info!("{} map written to {}", a.method, a.out.display());
    Ok(())
}

/// One entry per line of the pairs file; `None` marks a malformed line.
fn read_pairs(path: &Path) -> CliResult<Vec<Option<(Sentence, Sentence)>>> {
    let mut pairs = Vec::new();
    for (n, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| CliError::io(e.to_string()).in_file(path))?;
        let parsed = line.split_once('\t').and_then(|(x, y)| {
            if y.contains('\t') {
                return None;
            }
            Some((Sentence::parse(x).ok()?, Sentence::parse(y).ok()?))
        });
        if parsed.is_none() {
            warn!("{}:{}: expected two non-empty tab-separated sentences; scored NA", path.display(), n + 1);
        }
        pairs.push(parsed);
    }
    Ok(pairs)
}

fn load_idf(path: &Path, manifest: &mut RunManifest, name: &str) -> CliResult<IdfWeights> {
    let idf = compute_idf(open(path)?).map_err(|e| CliError::from(e).in_file(path))?;
    manifest.input(name, path).count(&format!("{name}_documents"), idf.doc_count());
    Ok(idf)
}

/// Spaces, transform and IDF weights behind an `sts`/`eval` run.
struct StsInputs {
    src: SemanticSpace,
    tgt: Option<SemanticSpace>,
    transform: Option<AlignmentMatrix>,
    src_idf: Option<IdfWeights>,
    tgt_idf: Option<IdfWeights>,
    config: StsConfig,
}

impl StsInputs {
    fn load(a: &StsArgs, manifest: &mut RunManifest) -> CliResult<Self> {
        let config = StsConfig {
            method: a.method,
            rank: a.rank_r,
            weighting: a.weighting,
        };
        manifest
            .config("sts", config.method.as_str())
            .config("weighting", config.weighting.as_str())
            .config("rank_r", config.rank)
            .config("monolingual", a.tgt_vectors.is_none());

        let src = load_space(&a.src_vectors, a.max_vocab, manifest, "src_vectors")?;
        let tgt = match &a.tgt_vectors {
            Some(p) => Some(load_space(p, a.max_vocab, manifest, "tgt_vectors")?),
            None => None,
        };
        let transform = match &a.transform {
            Some(p) => {
                manifest.input("transform", p);
                Some(load_transform(p)?)
            }
            None => None,
        };

        let (mut src_idf, mut tgt_idf) = (None, None);
        if config.weighting == Weighting::Idf {
            let src_corpus = a
                .idf_corpus_src
                .as_deref()
                .ok_or_else(|| CliError::usage("--weighting idf needs --idf-corpus-src"))?;
            let tgt_corpus = match (&a.idf_corpus_tgt, &a.tgt_vectors) {
                (Some(p), _) => p.as_path(),
                (None, None) => src_corpus,
                (None, Some(_)) => {
                    return Err(CliError::usage("--weighting idf with --tgt-vectors needs --idf-corpus-tgt"))
                }
            };
            src_idf = Some(load_idf(src_corpus, manifest, "idf_corpus_src")?);
            tgt_idf = Some(load_idf(tgt_corpus, manifest, "idf_corpus_tgt")?);
        } else if a.idf_corpus_src.is_some() || a.idf_corpus_tgt.is_some() {
            warn!("IDF corpora are ignored with --weighting uniform");
        }

        Ok(StsInputs { src, tgt, transform, src_idf, tgt_idf, config })
    }

    fn pipeline(&self) -> StsPipeline<'_> {
        StsPipeline {
            src: &self.src,
            tgt: self.tgt.as_ref().unwrap_or(&self.src),
            transform: self.transform.as_ref(),
            src_idf: self.src_idf.as_ref(),
            tgt_idf: self.tgt_idf.as_ref(),
            config: self.config,
        }
    }
}

fn write_scores(path: &Path, scores: &[Option<f64>]) -> CliResult<()> {
    let mut out = create(path)?;
    for s in scores {
        match s {
            Some(v) => writeln!(out, "{v:.6}"),
            None => writeln!(out, "NA"),
        }
        .map_err(write_failed(path))?;
    }
    out.flush().map_err(write_failed(path))
}

fn record_pairs(manifest: &mut RunManifest, pairs: &[Option<(Sentence, Sentence)>]) {
    let malformed = pairs.iter().filter(|p| p.is_none()).count();
    manifest.count("pairs_read", pairs.len()).count("pairs_malformed", malformed);
}

fn sts(a: &StsArgs, argv: &[String]) -> CliResult<()> {
    let mut manifest = RunManifest::new("sts", argv);
    let inputs = StsInputs::load(a, &mut manifest)?;
    let pipeline = inputs.pipeline();
    pipeline.validate()?;
    let pairs = read_pairs(&a.pairs)?;
    manifest.input("pairs", &a.pairs);
    record_pairs(&mut manifest, &pairs);

    let (mut oov_x, mut oov_y, mut undefined) = (0, 0, 0);
    let mut scores = Vec::with_capacity(pairs.len());
    for pair in &pairs {
        let score = match pair {
            Some((x, y)) => {
                let s = pipeline.score(x, y)?;
                oov_x += s.oov_x;
                oov_y += s.oov_y;
                undefined += usize::from(s.undefined);
                Some(s.value)
            }
            None => None,
        };
        scores.push(score);
    }
    write_scores(&a.out, &scores)?;
    manifest
        .count("oov_tokens_src", oov_x)
        .count("oov_tokens_tgt", oov_y)
        .count("undefined_scores", undefined)
        .write_beside(&a.out)?;
    Ok(())
}

fn read_gold(path: &Path) -> CliResult<Vec<f64>> {
    let mut gold = Vec::new();
    for (n, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| CliError::io(e.to_string()).in_file(path))?;
        let v: f64 = line
            .trim()
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| CliError::io(format!("line {}: expected a finite number, got {line:?}", n + 1)).in_file(path))?;
        gold.push(v);
    }
    Ok(gold)
}

fn eval(a: &EvalArgs, argv: &[String]) -> CliResult<()> {
    let mut manifest = RunManifest::new("eval", argv);
    let inputs = StsInputs::load(&a.sts, &mut manifest)?;
    let pipeline = inputs.pipeline();
    pipeline.validate()?;
    let pairs = read_pairs(&a.sts.pairs)?;
    let gold = read_gold(&a.gold)?;
    manifest.input("pairs", &a.sts.pairs).input("gold", &a.gold);
    record_pairs(&mut manifest, &pairs);
    if pairs.len() != gold.len() {
        return Err(CliError::numeric(format!(
            "{} pairs but {} gold scores",
            pairs.len(),
            gold.len()
        )));
    }

    // malformed lines are reported as NA and left out of the correlation
    let (kept, kept_gold): (Vec<_>, Vec<f64>) = pairs
        .iter()
        .zip(&gold)
        .filter_map(|(p, g)| p.clone().map(|p| (p, *g)))
        .unzip();
    let evaluation = evaluate_dataset(&kept, &kept_gold, &pipeline)?;
    let mut values = evaluation.values().into_iter();
    let scores: Vec<Option<f64>> = pairs.iter().map(|p| p.as_ref().and_then(|_| values.next())).collect();
    write_scores(&a.sts.out, &scores)?;

    println!("{:.4}", evaluation.pearson);
    manifest
        .count("pairs_scored", kept.len())
        .count("both_oov", evaluation.both_oov)
        .result("pearson", evaluation.pearson)
        .write_beside(&a.sts.out)?;
    Ok(())
}

fn hubness(a: &HubnessArgs, argv: &[String]) -> CliResult<()> {
    let mut manifest = RunManifest::new("hubness", argv);
    let transform = match &a.transform {
        Some(p) => {
            manifest.input("transform", p);
            Some(load_transform(p)?)
        }
        None => None,
    };
    let mapped = |space: SemanticSpace| -> CliResult<SemanticSpace> {
        match &transform {
            Some(t) => Ok(apply_to_space(t, &space)?),
            None => Ok(space),
        }
    };

    let report: HubnessReport = match (&a.vectors, &a.src_vectors, &a.tgt_vectors) {
        (Some(v), None, None) => {
            let space = mapped(load_space(v, a.max_vocab, &mut manifest, "vectors")?)?;
            manifest.config("mode", HubnessMode::WithinSpace.to_string());
            hubness_counts(&space, &space, a.k, HubnessMode::WithinSpace, a.query_limit)?
        }
        (None, Some(s), Some(t)) => {
            let queries = mapped(load_space(s, a.max_vocab, &mut manifest, "src_vectors")?)?;
            let targets = load_space(t, a.max_vocab, &mut manifest, "tgt_vectors")?;
            manifest.config("mode", HubnessMode::CrossLingual.to_string());
            hubness_counts(&queries, &targets, a.k, HubnessMode::CrossLingual, a.query_limit)?
        }
        _ => {
            return Err(CliError::usage(
                "give either --vectors or both --src-vectors and --tgt-vectors",
            ))
        }
    };

    let mut out = create(&a.out)?;
    report.write_tsv(&mut out).map_err(write_failed(&a.out))?;
    println!("{:.6}", report.skewness);

    manifest.config("k", a.k);
    if let Some(limit) = a.query_limit {
        manifest.config("query_limit", limit);
    }
    manifest
        .count("queries", report.queries)
        .count("targets", report.words.len())
        .result("skewness", report.skewness)
        .result("max_count", report.counts.iter().copied().max().unwrap_or(0))
        .write_beside(&a.out)?;
    Ok(())
}
