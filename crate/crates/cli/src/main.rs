//! `zw`: frequency-weighted embedding post-processing and evaluation from
//! the command line.
//!
//! Exit codes: 0 on success, 1 on runtime/data errors, 2 on usage errors.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;

use zipfian_whitening::analysis::{
    norm_info_report, partition_probe, DEFAULT_NUM_CONTEXTS, DEFAULT_TOP_K,
};
use zipfian_whitening::corpus::{
    intersect_and_normalize, load_embeddings_text, load_frequency_list, load_sts_tsv,
    save_embeddings_text, EmbeddingSet, FrequencyTable, HeaderMode, Prior, StsDataset,
};

/// Decimal digits written per component. Deliberately higher than the
/// library writer's default of 6: whitening followed by a reload must keep
/// the weighted moments good to 1e-9, which needs ~12 digits.
const OUTPUT_PRECISION: usize = 12;
use zipfian_whitening::eval::{
    estimate_testset_frequency, eval_sts, CcrMode, CompositionKind, CompositionScheme,
};
use zipfian_whitening::symmetry::symmetry_report;
use zipfian_whitening::transforms::{
    abtt, common_component_removal, sif_weights, token_center_whiten, CenteringModel,
    TokenTransform, TokenWeighting, WhiteningModel, DEFAULT_ABTT_COMPONENTS,
    DEFAULT_CCR_COMPONENTS, DEFAULT_SIF_A, DEFAULT_SV_FLOOR_RATIO,
};

#[derive(Parser)]
#[command(
    name = "zw",
    version,
    about = "Zipfian (frequency-weighted) centering/whitening of word embeddings, \
             symmetry metrics, STS evaluation, and diagnostic probes"
)]
struct Cli {
    /// Seed for all randomized operations.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Cap on worker threads (0 = automatic). Output does not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Post-process embeddings and write them in the text format.
    Transform(TransformArgs),
    /// Print the symmetry report of an embedding set as JSON.
    Symmetry(SymmetryArgs),
    /// Evaluate sentence similarity and print one TSV result line.
    EvalSts(EvalArgs),
    /// Write the norm vs. information-content table as CSV.
    AnalyzeNorms(NormArgs),
    /// Print the partition-function spread report as JSON.
    AnalyzePartition(PartitionArgs),
    /// Center or whiten a token multiset read from a TSV file.
    TokenWhiten(TokenArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum HeaderArg {
    Auto,
    Yes,
    No,
}

impl From<HeaderArg> for HeaderMode {
    fn from(h: HeaderArg) -> Self {
        match h {
            HeaderArg::Auto => HeaderMode::Auto,
            HeaderArg::Yes => HeaderMode::Yes,
            HeaderArg::No => HeaderMode::No,
        }
    }
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum PriorArg {
    Uniform,
    Zipfian,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum FreqSource {
    /// `word count` lines; the embedding vocabulary is intersected with it.
    File,
    /// Estimate frequencies from the evaluation dataset itself.
    Testset,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Method {
    Center,
    Whiten,
    Abtt,
    SifCcr,
}

#[derive(Clone, Copy, ValueEnum)]
enum ComposeArg {
    Mean,
    Sum,
    Sif,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum CcrArg {
    None,
    Sentence,
    Word,
}

#[derive(Clone, Copy, ValueEnum)]
enum TokenMode {
    TokenUniform,
    PseudoUniform,
}

#[derive(Clone, Copy, ValueEnum)]
enum TokenStage {
    Center,
    Whiten,
}

/// Flags shared by every subcommand that reads embeddings and a prior.
#[derive(Args)]
struct InputArgs {
    /// Embedding file: optional `count dim` header, then `word v1 ... vd`.
    #[arg(long)]
    emb: PathBuf,

    /// Header handling for the embedding file.
    #[arg(long, value_enum, default_value_t = HeaderArg::Auto)]
    header: HeaderArg,

    /// Word-frequency prior for expectations.
    #[arg(long, value_enum, default_value_t = PriorArg::Uniform)]
    prior: PriorArg,

    /// Where frequencies come from when needed.
    #[arg(long, value_enum, default_value_t = FreqSource::File)]
    freq_source: FreqSource,

    /// Frequency list (`word count` lines). When given, the embedding
    /// vocabulary is restricted to the intersection with this list.
    #[arg(long)]
    freq: Option<PathBuf>,

    /// Sentence-pair TSV, required with `--freq-source testset`.
    #[arg(long)]
    sts: Option<PathBuf>,
}

#[derive(Args)]
struct TransformArgs {
    #[command(flatten)]
    input: InputArgs,

    /// Which correction to apply.
    #[arg(long, value_enum)]
    method: Method,

    /// Output path for the transformed embeddings.
    #[arg(long)]
    out: PathBuf,

    /// Optional path for the fitted whitening model JSON (method = whiten).
    #[arg(long)]
    model_out: Option<PathBuf>,

    /// Number of principal components removed by abtt.
    #[arg(long, default_value_t = DEFAULT_ABTT_COMPONENTS)]
    abtt_d: usize,

    /// SIF weighting parameter.
    #[arg(long, default_value_t = DEFAULT_SIF_A)]
    a: f64,

    /// Components removed by common component removal (method = sif-ccr).
    #[arg(long, default_value_t = DEFAULT_CCR_COMPONENTS)]
    ccr_components: usize,

    /// Singular values at or below this fraction of the largest are dropped.
    #[arg(long, default_value_t = DEFAULT_SV_FLOOR_RATIO)]
    sv_floor: f64,

    /// Decimal digits per written component.
    #[arg(long, default_value_t = OUTPUT_PRECISION)]
    precision: usize,
}

#[derive(Args)]
struct SymmetryArgs {
    #[command(flatten)]
    input: InputArgs,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    input: InputArgs,

    /// Sentence composition scheme.
    #[arg(long, value_enum, default_value_t = ComposeArg::Mean)]
    compose: ComposeArg,

    /// Common component removal placement.
    #[arg(long, value_enum, default_value_t = CcrArg::None)]
    ccr: CcrArg,

    /// Components removed when --ccr is active.
    #[arg(long, default_value_t = DEFAULT_CCR_COMPONENTS)]
    ccr_components: usize,

    /// SIF weighting parameter (compose = sif).
    #[arg(long, default_value_t = DEFAULT_SIF_A)]
    a: f64,
}

#[derive(Args)]
struct NormArgs {
    #[command(flatten)]
    input: InputArgs,

    /// Number of most frequent words tabulated.
    #[arg(long, default_value_t = DEFAULT_TOP_K)]
    top_k: usize,

    /// CSV output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PartitionArgs {
    #[command(flatten)]
    input: InputArgs,

    /// Number of probed contexts.
    #[arg(long, default_value_t = DEFAULT_NUM_CONTEXTS)]
    num_contexts: usize,

    /// Norm of every sampled context vector.
    #[arg(long, default_value_t = 1.0)]
    context_norm: f64,

    /// JSON output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TokenArgs {
    /// Token records: `type TAB v1 ... vd` per line.
    #[arg(long)]
    tokens: PathBuf,

    /// Token weighting.
    #[arg(long, value_enum)]
    mode: TokenMode,

    /// Transform stage.
    #[arg(long, value_enum)]
    stage: TokenStage,

    /// Singular values at or below this fraction of the largest are dropped.
    #[arg(long, default_value_t = DEFAULT_SV_FLOOR_RATIO)]
    sv_floor: f64,

    /// Decimal digits per written component.
    #[arg(long, default_value_t = OUTPUT_PRECISION)]
    precision: usize,

    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum CliError {
    /// Inconsistent or missing flags: exit 2.
    Usage(String),
    /// Data or computation failure: exit 1.
    Runtime(String),
}

impl From<zipfian_whitening::Error> for CliError {
    fn from(e: zipfian_whitening::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        // build_global fails only if a pool already exists; nothing to do then
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    let result = match &cli.command {
        Command::Transform(args) => cmd_transform(args),
        Command::Symmetry(args) => cmd_symmetry(args),
        Command::EvalSts(args) => cmd_eval_sts(args),
        Command::AnalyzeNorms(args) => cmd_analyze_norms(args),
        Command::AnalyzePartition(args) => cmd_analyze_partition(&cli, args),
        Command::TokenWhiten(args) => cmd_token_whiten(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

/// Loaded embeddings plus the frequency table implied by the flags, with
/// the vocabulary already intersected when a frequency file is used.
struct Inputs {
    emb: EmbeddingSet,
    freq: Option<FrequencyTable>,
    dataset: Option<StsDataset>,
}

impl Inputs {
    fn prior(&self, arg: PriorArg) -> Result<Prior<'_>, CliError> {
        match arg {
            PriorArg::Uniform => Ok(Prior::Uniform),
            PriorArg::Zipfian => {
                let freq = self.freq.as_ref().ok_or_else(|| {
                    usage("--prior zipfian requires --freq (or --freq-source testset with --sts)")
                })?;
                Ok(Prior::Zipfian(freq))
            }
        }
    }

    /// Frequency table for operations that always need probabilities;
    /// the uniform prior synthesizes 1/|V|.
    fn freq_table(&self, arg: PriorArg) -> Result<FrequencyTable, CliError> {
        match arg {
            PriorArg::Uniform => Ok(FrequencyTable::uniform(self.emb.vocab_arc())),
            PriorArg::Zipfian => self
                .freq
                .clone()
                .ok_or_else(|| usage("--prior zipfian requires --freq or --freq-source testset")),
        }
    }
}

fn load_inputs(input: &InputArgs) -> Result<Inputs, CliError> {
    if input.prior == PriorArg::Zipfian {
        match input.freq_source {
            FreqSource::File if input.freq.is_none() => {
                return Err(usage("--prior zipfian with --freq-source file requires --freq"));
            }
            FreqSource::Testset if input.sts.is_none() => {
                return Err(usage("--freq-source testset requires --sts"));
            }
            _ => {}
        }
    }
    let (mut emb, duplicates) = load_embeddings_text(&input.emb, input.header.into())?;
    if duplicates > 0 {
        eprintln!(
            "warning: {} duplicate word(s) in {}, first occurrence kept",
            duplicates,
            input.emb.display()
        );
    }
    let mut freq = None;
    if let Some(freq_path) = &input.freq {
        let counts = load_frequency_list(freq_path)?;
        let before = emb.len();
        let (intersected, table) = intersect_and_normalize(&emb, &counts)?;
        if intersected.len() < before {
            eprintln!(
                "note: vocabulary restricted to the {} of {} words shared with {}",
                intersected.len(),
                before,
                freq_path.display()
            );
        }
        emb = intersected;
        freq = Some(table);
    }
    let mut dataset = None;
    if let Some(sts_path) = &input.sts {
        dataset = Some(load_sts_tsv(sts_path)?);
    }
    if input.freq_source == FreqSource::Testset {
        let ds = dataset
            .as_ref()
            .ok_or_else(|| usage("--freq-source testset requires --sts"))?;
        freq = Some(estimate_testset_frequency(ds, emb.vocab_arc())?);
    }
    Ok(Inputs { emb, freq, dataset })
}

fn cmd_transform(args: &TransformArgs) -> Result<(), CliError> {
    if args.model_out.is_some() && args.method != Method::Whiten {
        return Err(usage("--model-out only applies to --method whiten"));
    }
    if args.method == Method::Abtt && args.input.prior == PriorArg::Zipfian {
        return Err(usage(
            "abtt is defined under the uniform prior; drop --prior zipfian",
        ));
    }
    let inputs = load_inputs(&args.input)?;
    let transformed = match args.method {
        Method::Center => {
            let model = CenteringModel::fit(&inputs.emb, inputs.prior(args.input.prior)?)?;
            model.apply(&inputs.emb)?
        }
        Method::Whiten => {
            let model = WhiteningModel::fit(
                &inputs.emb,
                inputs.prior(args.input.prior)?,
                args.sv_floor,
            )?;
            if let Some(model_path) = &args.model_out {
                write_text_file(model_path, &model.to_json()?)?;
            }
            model.apply(&inputs.emb)?
        }
        Method::Abtt => abtt(&inputs.emb, args.abtt_d)?,
        Method::SifCcr => {
            let freq = inputs.freq_table(args.input.prior)?;
            let weights = sif_weights(&freq, args.a)?;
            let mut weighted = inputs.emb.matrix().clone();
            for i in 0..weighted.nrows() {
                weighted.row_mut(i).scale_mut(weights[i]);
            }
            let deflated = common_component_removal(&weighted, args.ccr_components)?;
            EmbeddingSet::new(inputs.emb.vocab_arc(), deflated)?
        }
    };
    save_embeddings_text(&transformed, &args.out, args.precision)?;
    eprintln!(
        "wrote {} vectors of dimension {} to {}",
        transformed.len(),
        transformed.dim(),
        args.out.display()
    );
    Ok(())
}

fn cmd_symmetry(args: &SymmetryArgs) -> Result<(), CliError> {
    let inputs = load_inputs(&args.input)?;
    let report = symmetry_report(&inputs.emb, inputs.prior(args.input.prior)?)?;
    println!("{}", report.to_json()?);
    Ok(())
}

fn cmd_eval_sts(args: &EvalArgs) -> Result<(), CliError> {
    if args.input.sts.is_none() {
        return Err(usage("eval-sts requires --sts"));
    }
    let inputs = load_inputs(&args.input)?;
    let dataset = inputs.dataset.as_ref().expect("dataset loaded above");
    let kind = match args.compose {
        ComposeArg::Mean => CompositionKind::Mean,
        ComposeArg::Sum => CompositionKind::Sum,
        ComposeArg::Sif => CompositionKind::SifWeightedMean { a: args.a },
    };
    let ccr = match args.ccr {
        CcrArg::None => CcrMode::None,
        CcrArg::Sentence => CcrMode::SentenceLevel(args.ccr_components),
        CcrArg::Word => CcrMode::WordLevel(args.ccr_components),
    };
    let scheme = CompositionScheme { kind, ccr };
    let freq = inputs.freq_table(args.input.prior)?;
    let result = eval_sts(dataset, &inputs.emb, &scheme, &freq)?;

    let method = match (args.compose, args.ccr) {
        (ComposeArg::Mean, CcrArg::None) => "mean".to_string(),
        (ComposeArg::Sum, CcrArg::None) => "sum".to_string(),
        (ComposeArg::Sif, CcrArg::None) => "sif".to_string(),
        (c, ccr) => {
            let base = match c {
                ComposeArg::Mean => "mean",
                ComposeArg::Sum => "sum",
                ComposeArg::Sif => "sif",
            };
            let suffix = match ccr {
                CcrArg::Sentence => "+ccr",
                CcrArg::Word => "+ccr-word",
                CcrArg::None => "",
            };
            format!("{base}{suffix}")
        }
    };
    let prior = match args.input.prior {
        PriorArg::Uniform => "uniform",
        PriorArg::Zipfian => "zipfian",
    };
    println!(
        "{}\t{}\t{}\t{:.2}\t{}",
        result.dataset_name, method, prior, result.spearman_x100, result.pairs_skipped
    );
    Ok(())
}

fn cmd_analyze_norms(args: &NormArgs) -> Result<(), CliError> {
    let inputs = load_inputs(&args.input)?;
    let freq = inputs.freq_table(args.input.prior)?;
    let report = norm_info_report(&inputs.emb, &freq, args.top_k)?;
    if report.degenerate {
        eprintln!("warning: correlation undefined (constant column); reporting 0");
    }
    match &args.out {
        Some(path) => {
            let file = File::create(path)
                .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
            let mut writer = BufWriter::new(file);
            report.write_csv(&mut writer)?;
            writer
                .flush()
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            println!("{}", report.summary_json()?);
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            report.write_csv(&mut stdout)?;
        }
    }
    Ok(())
}

fn cmd_analyze_partition(cli: &Cli, args: &PartitionArgs) -> Result<(), CliError> {
    let inputs = load_inputs(&args.input)?;
    let report = partition_probe(
        &inputs.emb,
        inputs.prior(args.input.prior)?,
        args.num_contexts,
        cli.seed,
        args.context_norm,
    )?;
    let json = report.to_json()?;
    match &args.out {
        Some(path) => write_text_file(path, &format!("{json}\n"))?,
        None => println!("{json}"),
    }
    Ok(())
}

fn cmd_token_whiten(args: &TokenArgs) -> Result<(), CliError> {
    let (types, matrix) = load_token_tsv(&args.tokens)?;
    let mut id_of = std::collections::HashMap::new();
    let mut ids = Vec::with_capacity(types.len());
    for t in &types {
        let next = id_of.len();
        ids.push(*id_of.entry(t.clone()).or_insert(next));
    }
    let weighting = match args.mode {
        TokenMode::TokenUniform => TokenWeighting::TokenUniform,
        TokenMode::PseudoUniform => TokenWeighting::PseudoUniform,
    };
    let stage = match args.stage {
        TokenStage::Center => TokenTransform::Center,
        TokenStage::Whiten => TokenTransform::Whiten,
    };
    let out = token_center_whiten(&ids, &matrix, weighting, stage, args.sv_floor)?;

    let mut text = String::new();
    for (i, t) in types.iter().enumerate() {
        text.push_str(t);
        for j in 0..out.ncols() {
            text.push('\t');
            text.push_str(&format!("{:.*}", args.precision, out[(i, j)]));
        }
        text.push('\n');
    }
    match &args.out {
        Some(path) => write_text_file(path, &text)?,
        None => print!("{text}"),
    }
    Ok(())
}

/// Reads `type TAB v1 ... vd` token records. Components may be separated by
/// tabs or spaces after the first tab.
fn load_token_tsv(path: &Path) -> Result<(Vec<String>, DMatrix<f64>), CliError> {
    let file =
        File::open(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    let mut types = Vec::new();
    let mut data: Vec<f64> = Vec::new();
    let mut dim: Option<usize> = None;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| CliError::Runtime(e.to_string()))?;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.is_empty() {
            continue;
        }
        let (ty, rest) = trimmed.split_once('\t').ok_or_else(|| {
            CliError::Runtime(format!("line {lineno}: expected `type TAB components`"))
        })?;
        let components: Vec<f64> = rest
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>().map_err(|_| {
                    CliError::Runtime(format!("line {lineno}: invalid float {t:?}"))
                })
            })
            .collect::<Result<_, _>>()?;
        if components.is_empty() {
            return Err(CliError::Runtime(format!(
                "line {lineno}: missing vector components"
            )));
        }
        match dim {
            None => dim = Some(components.len()),
            Some(d) if d != components.len() => {
                return Err(CliError::Runtime(format!(
                    "line {lineno}: expected {d} components, found {}",
                    components.len()
                )));
            }
            _ => {}
        }
        types.push(ty.to_string());
        data.extend(components);
    }
    let dim = dim.ok_or_else(|| CliError::Runtime("empty token file".to_string()))?;
    let n = types.len();
    Ok((types, DMatrix::from_row_iterator(n, dim, data)))
}

fn write_text_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}
