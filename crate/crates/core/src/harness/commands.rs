use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::checkpoint::{load_network, load_state, read_header, save_best, save_state};
use super::config::{to_toml, AblationConfig, ModelKind, TrainConfig};
use crate::data::{build_dataset, Dataset, DatasetConfig, FeatureSequence, Normalizer, Provenance, Split};
use crate::error::{Error, Result};
use crate::net::{Element, Network};
use crate::quat::{hamilton_op_count, qmat_vec, qmat_vec_looped, Quaternion, QuaternionTensor};
use crate::train::gradcheck::run_preset;
use crate::train::{evaluate, train_loop, EpochRecord, Evaluation, GradCheckPreset, GradCheckReport, Sequence, TrainState};

pub const METRICS: &str = "metrics.jsonl";
pub const TIMING: &str = "timing.jsonl";
pub const STATE: &str = "state.ckpt";
pub const BEST: &str = "best.ckpt";
pub const RUN: &str = "run.json";

/// Element types the harness can train.
pub trait ModelElement: Element {
    const KIND: ModelKind;
    fn sequence(fs: &FeatureSequence) -> Sequence<Self>;
}

impl ModelElement for Quaternion {
    const KIND: ModelKind = ModelKind::Qlstm;
    fn sequence(fs: &FeatureSequence) -> Sequence<Self> {
        fs.quaternion_sequence()
    }
}

impl ModelElement for f64 {
    const KIND: ModelKind = ModelKind::Lstm;
    fn sequence(fs: &FeatureSequence) -> Sequence<Self> {
        fs.real_sequence()
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    if let Some(parent) = dir.parent() {
        if !parent.as_os_str().is_empty() && !parent.is_dir() {
            return Err(Error::io(
                parent,
                std::io::Error::new(std::io::ErrorKind::NotFound, "parent directory does not exist"),
            ));
        }
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn json_line<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("plain data serializes")
}

/// Generates a dataset and writes it to `out`. Returns the manifest path.
pub fn cmd_gen_data(cfg: &DatasetConfig, out: &Path) -> Result<PathBuf> {
    cfg.validate()?;
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() && !parent.is_dir() {
            return Err(Error::io(
                parent,
                std::io::Error::new(std::io::ErrorKind::NotFound, "parent directory does not exist"),
            ));
        }
    }
    build_dataset(cfg)?.write(out)?;
    Ok(out.join(crate::data::dataset::MANIFEST))
}

/// Final record of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub model: ModelKind,
    pub provenance: Provenance,
    pub parameters: usize,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub best_val_frame_accuracy: f64,
    pub test: Evaluation,
}

/// Normalized splits for one provenance.
pub struct Prepared<E> {
    pub normalizer: Normalizer,
    pub train: Vec<Sequence<E>>,
    pub valid: Vec<Sequence<E>>,
    pub test: Vec<Sequence<E>>,
    pub input: usize,
}

pub fn prepare<E: ModelElement>(data: &Dataset, provenance: Provenance) -> Result<Prepared<E>> {
    let normalizer = Normalizer::fit(data.get(Split::Train, provenance))?;
    let view = |s: Split| -> Result<Vec<Sequence<E>>> {
        data.get(s, provenance)
            .iter()
            .map(|fs| normalizer.apply(fs).map(|n| E::sequence(&n)))
            .collect()
    };
    Ok(Prepared {
        train: view(Split::Train)?,
        valid: view(Split::Valid)?,
        test: view(Split::Test)?,
        input: E::KIND.input_width(provenance, data.num_features()),
        normalizer,
    })
}

/// Trains on an already loaded dataset. With `out`, writes the metrics log,
/// timing sidecar, checkpoints and final run record; with `resume`, continues
/// from `out/state.ckpt` when present.
pub fn train_on<E: ModelElement>(data: &Dataset, cfg: &TrainConfig, out: Option<&Path>, resume: bool) -> Result<RunMetrics> {
    cfg.validate()?;
    if cfg.model != E::KIND {
        return Err(Error::Config(format!("model {} trained as {}", cfg.model.name(), E::KIND.name())));
    }
    if cfg.network.num_classes != data.num_classes() {
        return Err(Error::Config(format!(
            "network has {} classes, dataset has {}",
            cfg.network.num_classes,
            data.num_classes()
        )));
    }
    let prep = prepare::<E>(data, cfg.provenance)?;
    let opts = cfg.options();

    let mut state = None;
    if let Some(dir) = out {
        ensure_dir(dir)?;
        let path = dir.join(STATE);
        if resume && path.exists() {
            let (h, st) = load_state::<E>(&path)?;
            let saved = h.resume.expect("load_state checks resumability").train_config;
            let comparable = TrainConfig { epochs: cfg.epochs, out: cfg.out.clone(), ..saved };
            if &comparable != cfg {
                return Err(Error::Config("resume config differs from the checkpointed run".into()));
            }
            state = Some(st);
        } else {
            write_text(&dir.join(TIMING), "")?;
        }
        write_text(&dir.join("config.toml"), &to_toml(cfg)?)?;
    }
    let mut state = match state {
        Some(s) => s,
        None => TrainState::new(Network::<E>::init(cfg.network.clone(), prep.input, cfg.seed)?, &opts),
    };

    let mut clock = Instant::now();
    train_loop(&mut state, &prep.train, &prep.valid, &opts, |st, rec| {
        if let Some(dir) = out {
            let metrics: String = st.history.iter().map(|r| json_line(r) + "\n").collect();
            write_text(&dir.join(METRICS), &metrics)?;
            let timing = dir.join(TIMING);
            let mut f = fs::OpenOptions::new()
                .append(true)
                .create(true)
                .open(&timing)
                .map_err(|e| Error::io(&timing, e))?;
            let line = serde_json::json!({ "epoch": rec.epoch, "wall_time_s": clock.elapsed().as_secs_f64() });
            writeln!(f, "{line}").map_err(|e| Error::io(&timing, e))?;
            clock = Instant::now();
            save_state(&dir.join(STATE), cfg, &prep.normalizer, st)?;
            if let Some(b) = st.best.as_ref().filter(|b| b.epoch == rec.epoch) {
                save_best(&dir.join(BEST), cfg.model, cfg.provenance, &prep.normalizer, b)?;
            }
        }
        Ok(())
    })?;

    let best = state.best.as_ref().expect("at least one epoch ran");
    let run = RunMetrics {
        model: cfg.model,
        provenance: cfg.provenance,
        parameters: best.net.flatten().len(),
        history: state.history.clone(),
        best_epoch: best.epoch,
        best_val_loss: best.val_loss,
        best_val_frame_accuracy: best.val_frame_accuracy,
        test: evaluate(&best.net, &prep.test)?,
    };
    if let Some(dir) = out {
        let text = serde_json::to_string_pretty(&run).expect("plain data serializes");
        write_text(&dir.join(RUN), &text)?;
    }
    Ok(run)
}

/// Loads the dataset named by `cfg` and trains.
pub fn cmd_train(cfg: &TrainConfig, out: &Path, resume: bool) -> Result<RunMetrics> {
    cfg.validate()?;
    let data = Dataset::read(&cfg.dataset)?;
    match cfg.model {
        ModelKind::Qlstm => train_on::<Quaternion>(&data, cfg, Some(out), resume),
        ModelKind::Lstm => train_on::<f64>(&data, cfg, Some(out), resume),
    }
}

fn eval_with<E: ModelElement>(path: &Path, data: &Dataset, split: Split) -> Result<Evaluation> {
    let (h, net) = load_network::<E>(path)?;
    let seqs = data
        .get(split, h.provenance)
        .iter()
        .map(|fs| h.normalizer.apply(fs).map(|n| E::sequence(&n)))
        .collect::<Result<Vec<_>>>()?;
    if let Some(s) = seqs.first() {
        if s.frames[0].len() != net.input {
            return Err(Error::shape("eval input width", net.input, s.frames[0].len()));
        }
    }
    evaluate(&net, &seqs)
}

/// Evaluates a checkpoint on one split of a dataset.
pub fn cmd_eval(checkpoint: &Path, dataset: &Path, split: Split) -> Result<Evaluation> {
    let (h, _) = read_header(checkpoint)?;
    let data = Dataset::read(dataset)?;
    match h.model {
        ModelKind::Qlstm => eval_with::<Quaternion>(checkpoint, &data, split),
        ModelKind::Lstm => eval_with::<f64>(checkpoint, &data, split),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationCell {
    pub model: ModelKind,
    pub provenance: Provenance,
    pub hidden: usize,
    pub parameters: usize,
    pub seeds: Vec<u64>,
    pub accuracies: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation (zero for a single run).
    pub std: f64,
}

impl AblationCell {
    fn new(model: ModelKind, provenance: Provenance, hidden: usize, parameters: usize) -> Self {
        AblationCell {
            model,
            provenance,
            hidden,
            parameters,
            seeds: Vec::new(),
            accuracies: Vec::new(),
            mean: 0.0,
            std: 0.0,
        }
    }

    fn finish(&mut self) {
        let n = self.accuracies.len() as f64;
        self.mean = self.accuracies.iter().sum::<f64>() / n;
        self.std = if self.accuracies.len() > 1 {
            (self.accuracies.iter().map(|a| (a - self.mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationSummary {
    pub cells: Vec<AblationCell>,
}

impl AblationSummary {
    pub fn cell(&self, model: ModelKind, provenance: Provenance) -> Option<&AblationCell> {
        self.cells.iter().find(|c| c.model == model && c.provenance == provenance)
    }

    /// Tab-separated, one row per cell.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("model\tprovenance\thidden\tparameters\truns\tmean_acc\tstd_acc\taccuracies\n");
        for c in &self.cells {
            let accs: Vec<String> = c.accuracies.iter().map(|a| format!("{a:.6}")).collect();
            writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{}",
                c.model.name(),
                c.provenance,
                c.hidden,
                c.parameters,
                c.accuracies.len(),
                c.mean,
                c.std,
                accs.join(",")
            )
            .unwrap();
        }
        s
    }

    /// Fixed-width table of mean ± std test frame accuracy in percent.
    pub fn to_table(&self) -> String {
        let mut s = format!("{:<8} {:>20} {:>20} {:>20}\n", "model", "four_mic", "copied_mic", "beamformed");
        for m in ModelKind::ALL {
            write!(s, "{:<8}", m.name()).unwrap();
            for p in Provenance::ALL {
                match self.cell(m, p) {
                    Some(c) => write!(s, " {:>20}", format!("{:.2} ± {:.2}", 100.0 * c.mean, 100.0 * c.std)).unwrap(),
                    None => write!(s, " {:>20}", "-").unwrap(),
                }
            }
            s.push('\n');
        }
        s
    }
}

/// Trains and evaluates every model × provenance cell over every seed on one
/// shared dataset. With `out`, each run's artifacts go to
/// `out/runs/{model}_{provenance}_seed{seed}/` and the summary to
/// `out/ablation.tsv` and `out/ablation.txt`.
pub fn cmd_ablation(cfg: &AblationConfig, out: Option<&Path>) -> Result<AblationSummary> {
    cfg.validate()?;
    let data = Dataset::read(&cfg.dataset)?;
    ablation_on(&data, cfg, out)
}

pub fn ablation_on(data: &Dataset, cfg: &AblationConfig, out: Option<&Path>) -> Result<AblationSummary> {
    cfg.validate()?;
    if let Some(dir) = out {
        ensure_dir(dir)?;
    }
    let features = data.num_features();
    let mut cells = Vec::new();
    for model in ModelKind::ALL {
        for provenance in Provenance::ALL {
            let probe = cfg.cell_config(model, provenance, 0, features);
            let input = model.input_width(provenance, features);
            let mut cell = AblationCell::new(
                model,
                provenance,
                probe.network.hidden,
                model.count_parameters(&probe.network, input),
            );
            for &seed in &cfg.seeds {
                let tc = cfg.cell_config(model, provenance, seed, features);
                let dir = out.map(|d| d.join("runs").join(format!("{}_{}_seed{seed}", model.name(), provenance)));
                if let Some(d) = &dir {
                    ensure_dir(d.parent().expect("runs dir"))?;
                }
                let run = match model {
                    ModelKind::Qlstm => train_on::<Quaternion>(data, &tc, dir.as_deref(), false)?,
                    ModelKind::Lstm => train_on::<f64>(data, &tc, dir.as_deref(), false)?,
                };
                cell.seeds.push(seed);
                cell.accuracies.push(run.test.frame_accuracy);
            }
            cell.finish();
            cells.push(cell);
        }
    }
    let summary = AblationSummary { cells };
    if let Some(dir) = out {
        write_text(&dir.join("ablation.tsv"), &summary.to_tsv())?;
        write_text(&dir.join("ablation.txt"), &summary.to_table())?;
    }
    Ok(summary)
}

pub fn cmd_gradcheck(preset: GradCheckPreset, seed: u64, tolerance: f64, step: f64) -> Result<GradCheckReport> {
    run_preset(preset, seed, tolerance, step)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    /// Layer is `size × size` quaternion weights.
    pub size: usize,
    pub products: usize,
    pub scalar_products_per_s: f64,
    pub matrix_products_per_s: f64,
    pub max_abs_diff: f64,
    pub ops_per_product: u64,
}

fn random_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> QuaternionTensor {
    let n: usize = shape.iter().product();
    let planes = [0, 1, 2, 3].map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect());
    QuaternionTensor::pack_components(shape, planes).expect("consistent shape")
}

fn time_per_call(mut f: impl FnMut(), budget_s: f64) -> f64 {
    let start = Instant::now();
    let mut calls = 0u64;
    while calls == 0 || start.elapsed().as_secs_f64() < budget_s {
        f();
        calls += 1;
    }
    start.elapsed().as_secs_f64() / calls as f64
}

/// Scalar Hamilton loop against the plane-wise matrix form of one dense
/// quaternion layer, per size. Errors if the two paths disagree beyond
/// `1e-12` per accumulated product.
pub fn cmd_bench(sizes: &[usize], seed: u64, budget_s: f64) -> Result<Vec<BenchRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ops = hamilton_op_count().total();
    sizes
        .iter()
        .map(|&n| {
            if n == 0 {
                return Err(Error::invalid("sizes", "must be positive"));
            }
            let w = random_tensor(&mut rng, &[n, n]);
            let x = random_tensor(&mut rng, &[n]);
            let a = qmat_vec_looped(&w, &x)?;
            let b = qmat_vec(&w, &x)?;
            let diff = a.max_abs_diff(&b);
            if diff > 1e-12 * n as f64 {
                return Err(Error::invalid("bench", format!("paths disagree by {diff} at size {n}")));
            }
            let products = n * n;
            let ts = time_per_call(|| drop(std::hint::black_box(qmat_vec_looped(&w, &x))), budget_s);
            let tm = time_per_call(|| drop(std::hint::black_box(qmat_vec(&w, &x))), budget_s);
            Ok(BenchRow {
                size: n,
                products,
                scalar_products_per_s: products as f64 / ts,
                matrix_products_per_s: products as f64 / tm,
                max_abs_diff: diff,
                ops_per_product: ops,
            })
        })
        .collect()
}

pub fn bench_tsv(rows: &[BenchRow]) -> String {
    let mut s = String::from("size\tproducts\tscalar_products_per_s\tmatrix_products_per_s\tmax_abs_diff\tops_per_product\n");
    for r in rows {
        writeln!(
            s,
            "{}\t{}\t{:.3e}\t{:.3e}\t{:.3e}\t{}",
            r.size, r.products, r.scalar_products_per_s, r.matrix_products_per_s, r.max_abs_diff, r.ops_per_product
        )
        .unwrap();
    }
    s
}
