//! Subcommand implementations. Stable, machine-readable TSV goes to
//! standard output; progress and setting echoes go to standard error.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use mwe::conllu::parse_conllu;
use mwe::corpus::{encode_corpus, extract_tuples, merge_counts, read_tuple_file, write_tuple_file};
use mwe::eval::{eval_sp, eval_ws, Combiner, SpDataset, SpRow, VectorSource, WsDataset};
use mwe::model::{multi_prototype_count, param_count};
use mwe::oracle::{run_grad_suite, run_projection_suite, synth_corpus, SynthSpec};
use mwe::persistence::{export_text, load_checkpoint, save_checkpoint, Checkpoint};
use mwe::trainer::{train, TrainConfig, TrainReport};
use mwe::vocab::{build_vocab, RelationRegistry, Vocabulary};

use crate::config::{echo, resolve};
use crate::{
    BuildVocabArgs, Command, EvalSpArgs, EvalWsArgs, ExportArgs, ExtractArgs, InfoArgs, SweepArgs,
    SynthArgs, TrainArgs, VerifyArgs,
};

pub fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Extract(args) => extract(args),
        Command::BuildVocab(args) => build_vocab_cmd(args),
        Command::Train(args) => train_cmd(args),
        Command::EvalSp(args) => eval_sp_cmd(args),
        Command::EvalWs(args) => eval_ws_cmd(args),
        Command::Export(args) => export(args),
        Command::Info(args) => info(args),
        Command::Verify(args) => verify(args),
        Command::Sweep(args) => sweep(args),
        Command::Synth(args) => synth(args),
    }
}

fn extract(args: ExtractArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let sentences = parse_conllu(&text)?;
    let relation_set: BTreeSet<String> = args
        .relations
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    if relation_set.is_empty() {
        bail!("--relations produced an empty set");
    }
    let edges = extract_tuples(&sentences, &relation_set, args.lowercase);
    let edge_count = edges.len();
    let merged = merge_counts(edges);
    write_tuple_file(&args.output, &merged)?;
    println!("sentences\t{}", sentences.len());
    println!("edges\t{edge_count}");
    println!("tuples\t{}", merged.len());
    println!("written\t{}", args.output.display());
    Ok(())
}

fn build_vocab_cmd(args: BuildVocabArgs) -> Result<()> {
    let tf = read_tuple_file(&args.input)?;
    let (vocab, rels) = build_vocab(&tf.tuples, args.min_count);
    vocab.save(&args.output)?;
    rels.save(&args.relations_output)?;
    println!("words\t{}", vocab.n());
    println!("relations\t{}", rels.m());
    println!("malformed\t{}", tf.malformed);
    println!("written\t{}", args.output.display());
    println!("written\t{}", args.relations_output.display());
    Ok(())
}

fn load_or_build_vocab(
    args: &TrainArgs,
    tuples: &[mwe::corpus::RawTuple],
    min_count: u64,
) -> Result<(Vocabulary, RelationRegistry)> {
    match (&args.vocab, &args.rels) {
        (Some(vpath), Some(rpath)) => Ok((Vocabulary::load(vpath)?, RelationRegistry::load(rpath)?)),
        _ => Ok(build_vocab(tuples, min_count)),
    }
}

fn print_epoch_table(report: &TrainReport) {
    println!("epoch\tlambda\teta\tmean_loss\tclamps\tprojections");
    for e in &report.epochs {
        println!(
            "{}\t{}\t{:.6}\t{:.6}\t{}\t{}",
            e.epoch,
            e.lambda,
            e.eta_start,
            e.mean_loss,
            e.clamp_events,
            e.projections + e.sweep_projections
        );
    }
}

fn train_cmd(args: TrainArgs) -> Result<()> {
    let resolved = resolve(&args.flags)?;
    echo(&resolved.effective);
    let cfg = resolved.train;

    let tf = read_tuple_file(&args.input)?;
    if tf.malformed > 0 {
        eprintln!("# skipped {} malformed tuple lines", tf.malformed);
    }
    let (vocab, rels) = load_or_build_vocab(&args, &tf.tuples, resolved.min_count)?;
    let corpus = encode_corpus(&tf.tuples, &vocab, &rels)?;
    if corpus.dropped_oov() > 0 {
        eprintln!("# dropped {} out-of-vocabulary tuples", corpus.dropped_oov());
    }

    let (params, report) = train::<f64>(&corpus, &rels, &cfg)?;
    save_checkpoint(&params, &vocab, &rels, cfg.epochs as u64, cfg.seed, &args.output)?;

    print_epoch_table(&report);
    println!("checkpoint\t{}", args.output.display());
    if let Some(json_path) = &args.json {
        let settings: serde_json::Map<String, serde_json::Value> = resolved
            .effective
            .iter()
            .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
            .collect();
        write_json(json_path, &serde_json::json!({ "settings": settings, "report": report }))?;
    }
    Ok(())
}

fn load_sp_dataset(path: &Path, format: &str) -> Result<SpDataset> {
    let jsonl = match format {
        "tsv" => false,
        "jsonl" => true,
        "auto" => matches!(
            path.extension().and_then(|e| e.to_str()),
            Some("jsonl") | Some("json") | Some("ndjson")
        ),
        other => bail!("unknown dataset format `{other}` (tsv, jsonl, auto)"),
    };
    Ok(if jsonl {
        SpDataset::from_jsonl(path)?
    } else {
        SpDataset::from_tsv(path)?
    })
}

fn eval_sp_cmd(args: EvalSpArgs) -> Result<()> {
    let ck = load_checkpoint(&args.model)?;
    let ds = load_sp_dataset(&args.data, &args.format)?;
    let report = eval_sp(&ck.params, &ck.vocab, &ck.rels, &ds)?;
    println!("relation\trho\tscorable\tskipped");
    for r in &report.per_relation {
        println!(
            "{}\t{}\t{}\t{}",
            r.relation,
            r.rho.map_or("NA".to_string(), |v| format!("{v:.6}")),
            r.scorable,
            r.skipped
        );
    }
    println!("average\t{:.6}", report.average);
    println!("coverage\t{:.6}", report.coverage);
    if let Some(path) = &args.json {
        write_json(path, &serde_json::json!(report))?;
    }
    Ok(())
}

fn parse_source(spec: &str, rels: &RelationRegistry) -> Result<VectorSource> {
    if spec == "center" {
        return Ok(VectorSource::Center);
    }
    rels.id(spec)
        .map(VectorSource::Relation)
        .ok_or_else(|| anyhow!("relation `{spec}` is absent from the model"))
}

fn parse_combiner(spec: &str) -> Result<Combiner> {
    Combiner::parse(spec).ok_or_else(|| anyhow!("bad combiner `{spec}` (h, t, h+t, concat)"))
}

fn eval_ws_cmd(args: EvalWsArgs) -> Result<()> {
    let ck = load_checkpoint(&args.model)?;
    let ds = WsDataset::from_tsv(&args.data)?;
    let source = parse_source(&args.source, &ck.rels)?;
    let combiner = parse_combiner(&args.combiner)?;
    let report = eval_ws(&ck.params, &ck.vocab, &ds, source, combiner)?;
    println!("pos\trho\tscorable\tskipped");
    for p in &report.per_pos {
        println!(
            "{}\t{}\t{}\t{}",
            p.pos.label(),
            p.rho.map_or("NA".to_string(), |v| format!("{v:.6}")),
            p.scorable,
            p.skipped
        );
    }
    println!("overall\t{:.6}", report.overall);
    println!("coverage\t{:.6}", report.coverage);
    if let Some(path) = &args.json {
        write_json(path, &serde_json::json!(report))?;
    }
    Ok(())
}

fn export(args: ExportArgs) -> Result<()> {
    let ck = load_checkpoint(&args.model)?;
    let source = parse_source(&args.source, &ck.rels)?;
    let combiner = parse_combiner(&args.role)?;
    export_text(&ck.params, &ck.vocab, &ck.rels, source, combiner, &args.output)?;
    let dim = match combiner {
        Combiner::Concat => 2 * ck.params.d(),
        _ => ck.params.d(),
    };
    println!("rows\t{}", ck.vocab.n());
    println!("dim\t{dim}");
    println!("written\t{}", args.output.display());
    Ok(())
}

fn info(args: InfoArgs) -> Result<()> {
    let ck: Checkpoint = load_checkpoint(&args.model)?;
    let bytes = std::fs::metadata(&args.model)
        .with_context(|| format!("stat {}", args.model.display()))?
        .len();
    let (n, m, d, s) = (
        ck.params.n() as u64,
        ck.params.m() as u64,
        ck.params.d() as u64,
        ck.params.s() as u64,
    );
    let values = param_count(n, m, d, s);
    let multi = multi_prototype_count(n, m, d);
    let rows = [
        ("n_words".to_string(), n.to_string()),
        ("m_relations".to_string(), m.to_string()),
        ("dim".to_string(), d.to_string()),
        ("local_dim".to_string(), s.to_string()),
        ("drift".to_string(), ck.params.drift().to_string()),
        ("scale_k".to_string(), ck.params.scale_k().to_string()),
        ("epoch".to_string(), ck.epoch.to_string()),
        ("seed".to_string(), ck.seed.to_string()),
        ("param_count".to_string(), values.to_string()),
        ("checkpoint_bytes".to_string(), bytes.to_string()),
        ("f32_export_bytes".to_string(), (4 * values).to_string()),
        ("multi_prototype_values".to_string(), multi.to_string()),
        (
            "multi_prototype_f32_bytes".to_string(),
            (4 * multi).to_string(),
        ),
        (
            "size_ratio".to_string(),
            format!("{:.6}", values as f64 / multi as f64),
        ),
    ];
    for (k, v) in &rows {
        println!("{k}\t{v}");
    }
    if let Some(path) = &args.json {
        let map: serde_json::Map<String, serde_json::Value> = rows
            .iter()
            .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
            .collect();
        write_json(path, &serde_json::Value::Object(map))?;
    }
    Ok(())
}

fn verify(args: VerifyArgs) -> Result<()> {
    let grad = run_grad_suite(args.trials, args.eps)?;
    let grad_ok = grad.max_err < 1e-4;
    let proj = run_projection_suite(500, 31337)?;
    let proj_ok = proj.max_residual <= 1e-9 && proj.projected > 100;

    println!("check\tstatus\tvalue");
    println!(
        "gradient-oracle\t{}\tmax_rel_err={:.3e} trials={} eps={:.0e}",
        if grad_ok { "PASS" } else { "FAIL" },
        grad.max_err,
        grad.trials,
        grad.eps
    );
    println!(
        "projection-exactness\t{}\tmax_residual={:.3e} projected={}/{}",
        if proj_ok { "PASS" } else { "FAIL" },
        proj.max_residual,
        proj.projected,
        proj.cases
    );
    if !(grad_ok && proj_ok) {
        bail!("verification failed");
    }
    Ok(())
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs[xs.len() / 2]
}

fn sweep(args: SweepArgs) -> Result<()> {
    let resolved = resolve(&args.flags)?;
    echo(&resolved.effective);
    if args.param != "s" && args.param != "a" {
        bail!("--param must be `s` or `a`, got `{}`", args.param);
    }
    let values: Vec<f64> = args
        .values
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| anyhow!("bad value `{v}`")))
        .collect::<Result<_>>()?;
    if values.is_empty() {
        bail!("--values is empty");
    }
    let seeds: Vec<u64> = args
        .seeds
        .split(',')
        .map(|v| v.trim().parse::<u64>().map_err(|_| anyhow!("bad seed `{v}`")))
        .collect::<Result<_>>()?;

    let tf = read_tuple_file(&args.input)?;
    let (vocab, rels) = build_vocab(&tf.tuples, resolved.min_count);
    let corpus = encode_corpus(&tf.tuples, &vocab, &rels)?;
    let gold = SpDataset::from_tsv(&args.gold)?;

    let mut lines = vec![format!("param\tvalue\tmedian_rho\tseeds")];
    for &value in &values {
        let mut rhos = Vec::new();
        for &seed in &seeds {
            let mut cfg = TrainConfig {
                seed,
                ..resolved.train.clone()
            };
            match args.param.as_str() {
                "s" => {
                    if value.fract() != 0.0 || value < 1.0 {
                        bail!("`s` values must be positive integers, got {value}");
                    }
                    cfg.local_dim = value as usize;
                }
                _ => cfg.drift = value,
            }
            let (params, _) = train::<f64>(&corpus, &rels, &cfg)?;
            let report = eval_sp(&params, &vocab, &rels, &gold)?;
            rhos.push(report.average);
            eprintln!("# sweep {}={value} seed {seed}: rho {:.4}", args.param, report.average);
        }
        lines.push(format!(
            "{}\t{}\t{:.6}\t{}",
            args.param,
            value,
            median(rhos),
            seeds.len()
        ));
    }
    for line in &lines {
        println!("{line}");
    }
    if let Some(path) = &args.output {
        let mut w = BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        );
        for line in &lines {
            writeln!(w, "{line}")?;
        }
        w.flush()?;
    }
    Ok(())
}

fn write_sp_tsv(path: &PathBuf, rows: &[SpRow]) -> Result<()> {
    let mut w =
        BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    for row in rows {
        writeln!(w, "{}\t{}\t{}\t{}", row.head, row.relation, row.tail, row.gold)?;
    }
    w.flush()?;
    Ok(())
}

fn synth(args: SynthArgs) -> Result<()> {
    let spec = SynthSpec::graded(
        args.groups,
        args.words_per_group,
        args.relations,
        args.tuples_per_relation,
        args.seed,
    );
    let corpus = synth_corpus(&spec)?;
    let merged = merge_counts(corpus.tuples);
    write_tuple_file(&args.output, &merged)?;
    write_sp_tsv(&args.gold, &corpus.gold)?;
    println!("tuples\t{}", merged.len());
    println!("gold_rows\t{}", corpus.gold.len());
    println!("written\t{}", args.output.display());
    println!("written\t{}", args.gold.display());
    Ok(())
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    serde_json::to_writer_pretty(BufWriter::new(file), value)?;
    Ok(())
}
