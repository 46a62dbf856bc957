use std::fs;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use gafed::eval::{evaluate, RunData, RunReport};
use gafed::fed::{run_client, run_server, simulate as run_simulation, FederationConfig, LocalHyper, RunAbort, ServerRun};
use gafed::gaf::{read_fgim, write_fgim, EncodeConfig, Encoder, GafImage};
use gafed::ingest::{
    parse_class_list, partition_clients, read_data_dir, read_fgds, split_train_test, synth_dataset, write_fgds,
    BeatLabel, IngestOptions, SynthOptions,
};
use gafed::nn::load_checkpoint;
use gafed::transport::{accept_clients, connect, CommStats};
use gafed::{Error, Result};

use crate::{
    ClientArgs, EncodeArgs, EvalArgs, IngestArgs, PartitionArgs, ReportArgs, ServerArgs, SimulateArgs, SplitArgs, SynthArgs,
};

fn paths(list: &str) -> Vec<PathBuf> {
    list.split(',').map(str::trim).filter(|s| !s.is_empty()).map(PathBuf::from).collect()
}

fn counts_line(counts: [usize; 5]) -> String {
    BeatLabel::ALL.iter().zip(counts).map(|(l, c)| format!("{l}={c}")).collect::<Vec<_>>().join(" ")
}

pub fn ingest(a: IngestArgs) -> Result<()> {
    let opts = IngestOptions { window: a.window, classes: parse_class_list(&a.classes)?, max_per_class: a.max_per_class };
    let (manifest, dropped) = read_data_dir(&a.data_dir, &opts)?;
    write_fgds(&a.out, &manifest)?;
    println!("{} beats ({}), {dropped} dropped -> {}", manifest.len(), counts_line(manifest.class_counts()), a.out.display());
    Ok(())
}

pub fn synth(a: SynthArgs) -> Result<()> {
    let opts = SynthOptions {
        per_class: a.per_class,
        window: a.window,
        seed: a.seed,
        noise: a.noise,
        phase_jitter: a.phase_jitter,
        cycle_jitter: a.cycle_jitter,
        ..Default::default()
    };
    let manifest = synth_dataset(5, &opts)?;
    write_fgds(&a.out, &manifest)?;
    println!("{} beats -> {}", manifest.len(), a.out.display());
    Ok(())
}

pub fn split(a: SplitArgs) -> Result<()> {
    let manifest = read_fgds(&a.input)?;
    let (train, test) = split_train_test(&manifest, a.train_fraction, a.seed)?;
    write_fgds(&a.out_train, &train)?;
    write_fgds(&a.out_test, &test)?;
    println!("train {} ({}) -> {}", train.len(), counts_line(train.class_counts()), a.out_train.display());
    println!("test {} ({}) -> {}", test.len(), counts_line(test.class_counts()), a.out_test.display());
    Ok(())
}

pub fn partition(a: PartitionArgs) -> Result<()> {
    let (shares, names): (Vec<f64>, Vec<String>) = match (&a.shares, &a.config) {
        (Some(list), None) => {
            let shares = list
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Config(format!("share {s:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            let names = (0..shares.len()).map(|i| i.to_string()).collect();
            (shares, names)
        }
        (None, Some(path)) => {
            let cfg = FederationConfig::load(path)?;
            (cfg.shares(), cfg.clients.iter().map(|c| c.id.clone()).collect())
        }
        _ => return Err(Error::Config("give exactly one of --shares or --config".into())),
    };
    let manifest = read_fgds(&a.input)?;
    for (shard, name) in partition_clients(&manifest, &shares, a.seed)?.iter().zip(names) {
        let path = PathBuf::from(format!("{}-{name}.fgds", a.out_prefix));
        write_fgds(&path, shard)?;
        println!("shard {name}: {} ({}) -> {}", shard.len(), counts_line(shard.class_counts()), path.display());
    }
    Ok(())
}

pub fn encode(a: EncodeArgs) -> Result<()> {
    let cfg = EncodeConfig { method: a.method, range: a.range.parse()?, resize: a.resize, size: a.size };
    let encoder = Encoder::new(cfg)?;
    let manifest = read_fgds(&a.input)?;
    let images = encoder.encode_all(&manifest.beats)?;
    write_fgim(&a.out, &images)?;
    println!("{} images of {}x{} -> {}", images.len(), a.size, a.size, a.out.display());
    Ok(())
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<FederationConfig> {
    let mut cfg = FederationConfig::load(path)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn read_all(files: &[PathBuf]) -> Result<Vec<Vec<GafImage>>> {
    files.iter().map(|p| read_fgim(p)).collect()
}

/// Writes the run directory for a finished or aborted run and prints the
/// summary table.
fn finish(
    cfg: &FederationConfig,
    outcome: std::result::Result<ServerRun, Box<RunAbort>>,
    comm: gafed::transport::CommSnapshot,
    elapsed: Duration,
    train: Option<&[GafImage]>,
    test: Option<&[GafImage]>,
    out: &Path,
) -> Result<()> {
    let (run, abort) = match outcome {
        Ok(run) => (run, None),
        Err(abort) => {
            let RunAbort { error, partial } = *abort;
            (partial, Some(error))
        }
    };
    let report = RunReport::build(RunData {
        config: cfg,
        run: &run,
        comm,
        elapsed,
        train,
        test,
        abort_reason: abort.as_ref().map(ToString::to_string),
    })?;
    report.write_run_dir(out, &run)?;
    print!("{}", report.to_markdown());
    println!("\nrun directory: {}", out.display());
    match abort {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

pub fn server(a: ServerArgs) -> Result<()> {
    let cfg = load_config(&a.config, a.seed)?;
    let test = read_fgim(&a.test)?;
    let train: Option<Vec<GafImage>> = match &a.train {
        Some(list) => Some(read_all(&paths(list))?.concat()),
        None => None,
    };
    let listener = TcpListener::bind(&a.bind)?;
    log::info!("listening on {} for {} clients", listener.local_addr()?, cfg.clients.len());
    let stats = Arc::new(CommStats::new());
    let channels = accept_clients(&listener, cfg.clients.len(), &stats)?;
    let start = Instant::now();
    let outcome = run_server(&cfg, channels, &stats, Some(&test));
    let elapsed = start.elapsed();
    finish(&cfg, outcome, stats.snapshot(), elapsed, train.as_deref(), Some(&test), &a.out)
}

pub fn client(a: ClientArgs) -> Result<()> {
    let cfg = match &a.config {
        Some(path) => {
            let mut cfg = FederationConfig::load(path)?;
            if let Some(seed) = a.seed {
                cfg.seed = seed;
            }
            cfg
        }
        None => FederationConfig { seed: a.seed.unwrap_or(0), ..Default::default() },
    };
    let shard = read_fgim(&a.shard)?;
    let stats = Arc::new(CommStats::new());
    let patience = Duration::from_secs_f64(a.connect_timeout_sec.max(0.0));
    let mut channel = connect(&a.connect, Arc::clone(&stats), patience)?;
    let sent = run_client(&mut channel, &a.id, &cfg.model, &LocalHyper::from(&cfg), &shard)?;
    let s = stats.snapshot();
    println!("{}: {sent} updates sent, {} bytes sent, {} bytes received", a.id, s.bytes_sent, s.bytes_received);
    Ok(())
}

pub fn simulate(a: SimulateArgs) -> Result<()> {
    let mut cfg = load_config(&a.config, a.seed)?;
    let files = paths(&a.shards);
    if files.len() != cfg.clients.len() {
        return Err(Error::Config(format!("{} shard files for {} configured clients", files.len(), cfg.clients.len())));
    }
    let mut shards = read_all(&files)?;
    if let Some(id) = &a.exclude {
        let idx = cfg.clients.iter().position(|c| &c.id == id).ok_or_else(|| Error::Config(format!("no client named {id:?}")))?;
        cfg = cfg.without_client(id)?;
        shards.remove(idx);
    }
    let test = match &a.test {
        Some(p) => Some(read_fgim(p)?),
        None => None,
    };
    let train = shards.concat();
    let start = Instant::now();
    let (outcome, comm) = match run_simulation(&cfg, &shards, test.as_deref()) {
        Ok(sim) => (Ok(sim.run), sim.server_stats),
        Err(abort) => (Err(abort), Default::default()),
    };
    finish(&cfg, outcome, comm, start.elapsed(), Some(&train), test.as_deref(), &a.out)
}

pub fn eval(a: EvalArgs) -> Result<()> {
    let (spec, params) = load_checkpoint(&a.model)?;
    let test = read_fgim(&a.test)?;
    let (m, acc) = evaluate(&params, &spec, &test)?;
    let per_class = m.per_class_accuracy();
    if a.json {
        let classes: serde_json::Map<String, serde_json::Value> =
            BeatLabel::ALL.iter().zip(per_class).map(|(l, v)| (l.to_string(), serde_json::json!(v))).collect();
        let out = serde_json::json!({ "samples": test.len(), "accuracy": acc, "per_class_accuracy": classes, "confusion": m.counts });
        println!("{}", serde_json::to_string_pretty(&out)?);
    } else {
        println!("samples: {}", test.len());
        println!("accuracy: {:.2}%", 100.0 * acc);
        for (label, v) in BeatLabel::ALL.iter().zip(per_class) {
            match v {
                Some(v) => println!("  {label}: {:.2}% ({} beats)", 100.0 * v, m.row_sum(label.index())),
                None => println!("  {label}: undefined (no beats)"),
            }
        }
    }
    Ok(())
}

pub fn report(a: ReportArgs) -> Result<()> {
    let report = RunReport::from_json(&fs::read_to_string(a.run.join("report.json"))?)?;
    let md = report.to_markdown();
    fs::write(a.run.join("report.md"), &md)?;
    print!("{md}");
    Ok(())
}
