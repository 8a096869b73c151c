use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use synattn::attention::{
    attention_dump, masked_attention, read_checkpoint, sparse_masked_attention, write_checkpoint,
};
use synattn::probe::{evaluate_probe, train_probe, ProbeSentence};
use synattn::rng::{self, streams, Rng};
use synattn::toytask::{make_dataset, run_ablation, MaskSource, ToyTask};
use synattn::{
    block_forward, build_mask_set, AttnOptions, BlockParams, Mask, MaskGroup, MaskMode, MaskSet, MaskSpec, Matrix,
    SentencePair, SyntaxTree, TreeKind,
};

use crate::config::RunConfig;
use crate::error::{exit, CliError, CliResult};
use crate::input::{read_embeddings, read_sentences, read_trees};
use crate::{AttendArgs, BenchArgs, Command, MasksArgs, ParseArgs, ProbeArgs, ToytrainArgs, TreeSelection};

pub fn dispatch(command: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult<()> {
    match command {
        Command::Parse(a) => parse(a, stdout),
        Command::Masks(a) => masks(a, stdout, stderr),
        Command::Attend(a) => attend(a, stdout),
        Command::Probe(a) => probe(a, stdout),
        Command::Toytrain(a) => toytrain(a, stdout),
        Command::Bench(a) => bench(a, stdout),
    }
}

fn emit(output: Option<&Path>, body: &str, stdout: &mut dyn Write) -> CliResult<()> {
    let written = match output {
        Some(path) => std::fs::write(path, body),
        None => stdout.write_all(body.as_bytes()),
    };
    written.map_err(|e| CliError::usage(format!("cannot write output: {e}")))
}

fn output_path<'a>(flag: &'a Option<PathBuf>, cfg: &'a RunConfig) -> Option<&'a Path> {
    flag.as_deref().or(cfg.output.as_deref())
}

fn parse(args: ParseArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let trees = read_trees(&args.input, Some(args.format))?;
    let body = synattn::treebank::trees_to_json(&trees) + "\n";
    emit(args.output.as_deref(), &body, stdout)
}

fn apply_tree_flags(cfg: &mut RunConfig, t: &TreeSelection) -> CliResult<()> {
    if let Some(d) = t.max_dist {
        cfg.max_dist = d;
    }
    if let Some(kinds) = &t.kinds {
        cfg.tree_kinds = kinds
            .iter()
            .map(|k| k.parse::<TreeKind>())
            .collect::<synattn::Result<_>>()?;
    }
    if t.no_self_loops {
        cfg.self_loops = false;
    }
    if t.strict_sibling {
        cfg.literal_sibling = false;
    }
    if t.prune_empty {
        cfg.prune_empty = true;
    }
    if !t.inputs.is_empty() {
        cfg.inputs = t.inputs.clone();
    }
    Ok(())
}

/// The selected sentence (or pair) and its mask set.
fn selected_masks(cfg: &RunConfig, t: &TreeSelection) -> CliResult<(Vec<usize>, MaskSet)> {
    let sentences = read_sentences(&cfg.inputs, t.format)?;
    let needed = if t.pair { 2 } else { 1 };
    if t.sentence == 0 || t.sentence - 1 + needed > sentences.len() {
        return Err(CliError::usage(format!(
            "sentence {} is out of range: the input has {} sentences",
            t.sentence,
            sentences.len()
        )));
    }
    let k = t.sentence - 1;
    let group: Vec<&[SyntaxTree]> = (k..k + needed).map(|i| sentences[i].as_slice()).collect();
    let mask_config = cfg.mask_config();
    let set = if t.pair {
        let pair = SentencePair::new(group[0].to_vec(), group[1].to_vec())?;
        build_mask_set(MaskGroup::Pair(&pair), &mask_config)?
    } else {
        build_mask_set(MaskGroup::Single(group[0]), &mask_config)?
    };
    Ok(((k..k + needed).collect(), set))
}

fn masks(args: MasksArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult<()> {
    let mut cfg = RunConfig::load(args.common.config.as_deref())?;
    apply_tree_flags(&mut cfg, &args.trees)?;
    cfg.check()?;
    let (_, set) = selected_masks(&cfg, &args.trees)?;
    let body = set.to_json() + "\n";
    let _ = writeln!(stderr, "{} masks", set.len());
    emit(output_path(&args.common.output, &cfg), &body, stdout)
}

fn random_matrix(rows: usize, cols: usize, seed: u64, stream: u64) -> Matrix {
    let mut r = rng::stream(seed, stream);
    Matrix::from_fn(rows, cols, |_, _| r.random_range(-1.0..1.0))
}

fn attend(args: AttendArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let mut cfg = RunConfig::load(args.common.config.as_deref())?;
    apply_tree_flags(&mut cfg, &args.trees)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(m) = &args.masking {
        cfg.masking = m.parse::<MaskMode>()?;
    }
    if args.params.is_some() {
        cfg.params = args.params.clone();
    }
    if args.embeddings.is_some() {
        cfg.embeddings = args.embeddings.clone();
    }
    cfg.check()?;

    let params = match &cfg.params {
        Some(path) => {
            let file = std::fs::File::open(path)
                .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
            read_checkpoint(file)
                .map_err(|e| CliError::from(e).in_file(&path.display().to_string()))?
                .1
        }
        None => BlockParams::init(cfg.dims, cfg.seed)?,
    };
    let dims = params.dims();
    if let Some(h) = args.head {
        if h >= dims.heads {
            return Err(CliError::usage(format!(
                "head {h} out of range: the block has {} heads",
                dims.heads
            )));
        }
    }
    let (sentences, set) = selected_masks(&cfg, &args.trees)?;
    let input = match &cfg.embeddings {
        Some(path) => {
            let all = read_embeddings(path)?;
            let parts: Vec<&Matrix> = sentences
                .iter()
                .map(|&k| {
                    all.get(k).ok_or_else(|| CliError {
                        code: exit::STRUCTURE,
                        message: format!("{} has no embeddings for sentence {}", path.display(), k + 1),
                    })
                })
                .collect::<CliResult<_>>()?;
            let rows: Vec<Vec<f64>> = parts.iter().flat_map(|m| m.to_rows()).collect();
            Matrix::from_rows(&rows)?
        }
        None => random_matrix(set.n(), dims.d_model, cfg.seed, streams::INPUT_EMBEDDINGS),
    };
    let opts = AttnOptions {
        mode: cfg.masking,
        kernel: cfg.kernel,
    };
    let (_, cache) = block_forward(&input, &set, &params, opts)?;
    let body = attention_dump(&cache, args.head).to_json() + "\n";
    let saved = match &args.save_params {
        Some(path) => {
            let mut buf = Vec::new();
            write_checkpoint(&mut buf, &params, Some(cfg.seed), cfg.masking)?;
            Some((path, buf))
        }
        None => None,
    };
    emit(output_path(&args.common.output, &cfg), &body, stdout)?;
    if let Some((path, buf)) = saved {
        std::fs::write(path, buf).map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn probe(args: ProbeArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let mut cfg = RunConfig::load(args.common.config.as_deref())?;
    if args.embeddings.is_some() {
        cfg.embeddings = args.embeddings.clone();
    }
    if args.trees.is_some() {
        cfg.trees = args.trees.clone();
    }
    if args.rank.is_some() {
        cfg.probe.rank = args.rank;
    }
    if let Some(e) = args.epochs {
        cfg.probe.epochs = e;
    }
    if let Some(lr) = args.learning_rate {
        cfg.probe.learning_rate = lr;
    }
    if let Some(s) = args.seed {
        cfg.probe.seed = s;
    }
    cfg.check()?;
    let emb_path = cfg
        .embeddings
        .clone()
        .ok_or_else(|| CliError::usage("probe needs --embeddings"))?;
    let tree_path = cfg
        .trees
        .clone()
        .ok_or_else(|| CliError::usage("probe needs --trees"))?;
    let embeddings = read_embeddings(&emb_path)?;
    let trees = read_trees(&tree_path, args.format)?;
    if embeddings.len() != trees.len() {
        return Err(CliError {
            code: exit::STRUCTURE,
            message: format!("{} embedding matrices for {} trees", embeddings.len(), trees.len()),
        });
    }
    let sentences = embeddings
        .into_iter()
        .zip(trees)
        .enumerate()
        .map(|(k, (h, t))| {
            ProbeSentence::new(h, t).map_err(|e| CliError::from(e).in_file(&format!("sentence {}", k + 1)))
        })
        .collect::<CliResult<Vec<_>>>()?;
    if sentences.is_empty() {
        return Err(CliError::usage("no sentences to probe"));
    }
    let d_model = sentences[0].embeddings.cols();
    cfg.probe.check(d_model)?;
    let n_train = ((cfg.probe_train_fraction * sentences.len() as f64).round() as usize).clamp(1, sentences.len());
    let (train, held_out) = sentences.split_at(n_train);
    let eval = if held_out.is_empty() { train } else { held_out };
    let b = train_probe(train, &cfg.probe)?;
    let report = evaluate_probe(&b, eval, &cfg.probe.exclude)?;
    emit(output_path(&args.common.output, &cfg), &report.to_tsv(), stdout)
}

fn toytrain(args: ToytrainArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let mut cfg = RunConfig::load(args.common.config.as_deref())?;
    let toy = &mut cfg.toy;
    if let Some(t) = &args.task {
        toy.task = t.parse::<ToyTask>()?;
    }
    if let Some(modes) = &args.modes {
        toy.modes = modes
            .iter()
            .map(|m| m.parse::<MaskSource>())
            .collect::<synattn::Result<_>>()?;
    }
    if let Some(seeds) = &args.seeds {
        toy.training.seeds = seeds.clone();
    }
    if let Some(e) = args.epochs {
        toy.training.epochs = e;
    }
    if let Some(s) = args.dataset_seed {
        toy.dataset_seed = s;
    }
    toy.training.check()?;
    if toy.modes.is_empty() {
        return Err(CliError::usage("at least one mask mode is required"));
    }
    let dataset = make_dataset(toy.task, toy.dataset, toy.dataset_seed)?;
    let metrics = run_ablation(&toy.training, &dataset, &toy.modes)?;
    emit(output_path(&args.common.output, &cfg), &metrics.to_tsv(), stdout)
}

fn bench(args: BenchArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let mut cfg = RunConfig::load(args.common.config.as_deref())?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    cfg.check()?;
    if args.n == 0 || !(args.density > 0.0 && args.density <= 1.0) || args.repeats == 0 {
        return Err(CliError::usage(
            "bench needs n >= 1, density in (0, 1] and repeats >= 1",
        ));
    }
    let n = args.n;
    let d = cfg.dims.d_head;
    let q = random_matrix(n, d, cfg.seed, streams::BENCH);
    let k = random_matrix(n, d, cfg.seed + 1, streams::BENCH);
    let v = random_matrix(n, d, cfg.seed + 2, streams::BENCH);
    let mut r = rng::stream(cfg.seed, streams::RANDOM_MASKS);
    let mask = Mask::from_fn(n, MaskSpec::full(TreeKind::Dependency), |i, j| {
        i == j || r.random_bool(args.density)
    });

    let mut dense_best = f64::INFINITY;
    let mut sparse_best = f64::INFINITY;
    let mut visited = 0;
    for _ in 0..args.repeats {
        let start = Instant::now();
        let dense = masked_attention(&q, &k, &v, &mask, MaskMode::Additive)?;
        dense_best = dense_best.min(start.elapsed().as_secs_f64());
        let start = Instant::now();
        let sparse = sparse_masked_attention(&q, &k, &v, &mask)?;
        sparse_best = sparse_best.min(start.elapsed().as_secs_f64());
        visited = sparse.visited_pairs;
        std::hint::black_box((dense, sparse));
    }
    if visited != mask.ones() as u64 {
        return Err(CliError {
            code: exit::NUMERICAL,
            message: format!("sparse kernel visited {visited} pairs for {} mask ones", mask.ones()),
        });
    }
    let ones = mask.ones();
    let body = format!(
        "path\tn\tones\tvisited_pairs\tseconds\ndense\t{n}\t{ones}\t{}\t{dense_best:.9}\nsparse\t{n}\t{ones}\t{visited}\t{sparse_best:.9}\n",
        n * n
    );
    emit(output_path(&args.common.output, &cfg), &body, stdout)
}
