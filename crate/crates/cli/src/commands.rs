use std::path::{Path, PathBuf};

use beamrefine_core::array::{ArrayConfig, Codebook, SteeringVector};
use beamrefine_core::beamsel::brute_force_max;
use beamrefine_core::channel::{
    add_noise, load_dataset_for, random_gaussian_channel, sample_orientations, save_dataset,
    synth_channel, AngleRange, ChannelScenario,
};
use beamrefine_core::eval::{
    compare_hier, emit_cdf, emit_report, synth_holdout_with_obstacles, validate as validate_codebook,
};
use beamrefine_core::hier::build_hier;
use beamrefine_core::io::{read_to_string, write_atomic};
use beamrefine_core::refine::{prune, refine as refine_codebook, TrainingSet};
use beamrefine_core::rng::{stream_rng, Stream};
use beamrefine_core::{ChannelRealization, Error, GapMode, GapReport, ReportFormat};
use serde::{Deserialize, Serialize};

use crate::{
    Failure, FormatArg, HierArgs, OracleArgs, RefineArgs, ReportArgs, SectorArgs, SynthArgs,
    ValidateArgs, EXIT_DATA,
};

type CmdResult = Result<(), Failure>;

fn ensure_dir(dir: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn or_default(path: Option<PathBuf>, out: &Path, name: &str) -> PathBuf {
    path.unwrap_or_else(|| out.join(name))
}

fn sector(args: &SectorArgs) -> Result<AngleRange, Error> {
    AngleRange::from_degrees(args.min_deg, args.max_deg)
}

fn gap_mode(raw: bool) -> GapMode {
    if raw {
        GapMode::Raw
    } else {
        GapMode::Clamped
    }
}

pub fn synth(args: SynthArgs) -> CmdResult {
    let cfg = args.array.config()?;
    let range = sector(&args.sector)?;
    let scenario = match &args.scenario {
        Some(p) => ChannelScenario::read_json(p)?,
        None => ChannelScenario::line_of_sight_with_reflections(
            args.reflections,
            &mut stream_rng(args.seed, Stream::Scenario),
        ),
    };
    scenario.validate()?;
    ensure_dir(&args.out)?;

    let train_thetas =
        sample_orientations(args.train, range, &mut stream_rng(args.seed, Stream::TrainOrientations));
    let mut train: Vec<ChannelRealization> = train_thetas
        .iter()
        .map(|&t| synth_channel(&scenario, t, &cfg))
        .collect();

    let holdout_thetas = sample_orientations(
        args.holdout,
        range,
        &mut stream_rng(args.seed, Stream::HoldoutOrientations),
    );
    let mut holdout: Vec<ChannelRealization> = synth_holdout_with_obstacles(
        &scenario,
        &holdout_thetas,
        args.obstacle_fraction,
        &cfg,
        &mut stream_rng(args.seed, Stream::Obstacles),
    )?;

    if args.noise {
        let db = scenario.noise_power_dbm.unwrap_or(args.noise_db);
        let mut rng = stream_rng(args.seed, Stream::Noise);
        for ch in train.iter_mut().chain(holdout.iter_mut()) {
            add_noise(ch, db, &mut rng);
        }
    }

    let n = cfg.element_count();
    save_dataset(&args.out.join("train.csv"), &train, n)?;
    save_dataset(&args.out.join("holdout.csv"), &holdout, n)?;
    scenario.write_json(&args.out.join("scenario.json"))?;
    log::info!(
        "wrote {} training and {} holdout channels to {}",
        train.len(),
        holdout.len(),
        args.out.display()
    );
    println!("train={} holdout={} elements={n}", train.len(), holdout.len());
    Ok(())
}

pub fn refine(args: RefineArgs) -> CmdResult {
    let cfg = args.array.config()?;
    let train_path = or_default(args.train_file, &args.out, "train.csv");
    let channels = load_dataset_for::<f64>(&train_path, &cfg)?;
    let train = TrainingSet::from_channels(channels, &cfg)?;
    let result = refine_codebook(&train, args.gamma_db, &cfg, args.seed)?;
    let mut manifest = result.manifest(train.len());

    let codebook = if args.prune {
        let pruned = prune(&result.zeta, &train, args.gamma_db, &cfg)?;
        manifest.pruned_size = Some(pruned.len());
        pruned
    } else {
        result.zeta.clone()
    };

    ensure_dir(&args.out)?;
    codebook.write_json(&cfg, &args.out.join("codebook.json"))?;
    manifest.write_json(&args.out.join("manifest.json"))?;
    println!(
        "M={} iterations={} codebook_size={}{}",
        train.len(),
        result.iterations,
        result.zeta.len(),
        manifest
            .pruned_size
            .map_or(String::new(), |p| format!(" pruned_size={p}"))
    );
    Ok(())
}

pub fn validate(args: ValidateArgs) -> CmdResult {
    let cfg = args.array.config()?;
    let cb_path = or_default(args.codebook, &args.out, "codebook.json");
    let holdout_path = or_default(args.holdout_file, &args.out, "holdout.csv");
    let zeta = Codebook::read_json(&cb_path, &cfg)?;
    let holdout = load_dataset_for::<f64>(&holdout_path, &cfg)?;
    let report = validate_codebook(&zeta, &holdout, &cfg, args.gamma_db, gap_mode(args.raw_gaps))?;

    ensure_dir(&args.out)?;
    emit_report(&report, &args.out.join("report.json"), ReportFormat::Json)?;
    emit_report(&report, &args.out.join("report.csv"), ReportFormat::Csv)?;
    emit_cdf(&report, &args.out.join("cdf.csv"))?;
    print_summary("refined", &report);
    Ok(())
}

fn print_summary(label: &str, r: &GapReport) {
    println!(
        "{label}: samples={} skipped={} mean_db={:.4} variance_db2={:.4} satisfied_fraction={:.4} codebook_size={} probes={}",
        r.gaps_db.len(),
        r.skipped.len(),
        r.mean_db,
        r.variance_db2,
        r.satisfied_fraction,
        r.codebook_size,
        r.probes_per_sample
    );
}

pub fn hier(args: HierArgs) -> CmdResult {
    let cfg = args.array.config()?;
    let range = sector(&args.sector)?;
    let hc = build_hier(&cfg, range, args.levels)?;
    ensure_dir(&args.out)?;
    hc.write_json(&cfg, &args.out.join("hier_codebook.json"))?;
    println!(
        "levels={} probes={} leaves={} total_entries={}",
        hc.level_count(),
        2 * hc.level_count(),
        hc.leaves().len(),
        hc.total_entries()
    );

    let holdout_path = or_default(args.holdout_file, &args.out, "holdout.csv");
    if !holdout_path.exists() {
        log::info!("no holdout at {}; built hierarchy only", holdout_path.display());
        return Ok(());
    }
    let holdout = load_dataset_for::<f64>(&holdout_path, &cfg)?;
    let cb_path = match args.codebook {
        Some(p) => Some(p),
        None => Some(args.out.join("codebook.json")).filter(|p| p.exists()),
    };
    let mode = gap_mode(args.raw_gaps);
    let hier_report = match cb_path {
        Some(p) => {
            let zeta = Codebook::read_json(&p, &cfg)?;
            let paired = compare_hier(&zeta, &hc, &holdout, &cfg, args.gamma_db, mode)?;
            write_atomic(
                &args.out.join("comparison.json"),
                paired.to_json_string().as_bytes(),
            )?;
            print_summary("refined", &paired.refined);
            println!("mean_gap_difference_db={:.4}", paired.mean_gap_difference_db);
            paired.hier
        }
        None => {
            // the leaf level stands in for the refined arm so both share one evaluation path
            let leaves = hc.leaves().clone();
            compare_hier(&leaves, &hc, &holdout, &cfg, args.gamma_db, mode)?.hier
        }
    };
    emit_report(&hier_report, &args.out.join("hier_report.json"), ReportFormat::Json)?;
    emit_report(&hier_report, &args.out.join("hier_report.csv"), ReportFormat::Csv)?;
    print_summary("hier", &hier_report);
    Ok(())
}

/// Exhaustive-search result for one seeded random channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRecord {
    pub seed: u64,
    #[serde(rename = "L")]
    pub side: usize,
    #[serde(rename = "N")]
    pub bits: u32,
    #[serde(rename = "K_amp")]
    pub amp_bits: u32,
    /// Channel coefficients as `[re, im]` pairs.
    pub h: Vec<[f64; 2]>,
    pub codeword: SteeringVector,
    pub power_db: f64,
}

const ORACLE_TOLERANCE_DB: f64 = 1e-9;

pub fn oracle(args: OracleArgs) -> CmdResult {
    let cfg = ArrayConfig::new(args.side, args.bits, args.amp_bits, 0.5, 25.1e9)?;
    let channel: ChannelRealization = random_gaussian_channel(
        cfg.element_count(),
        &mut stream_rng(args.seed, Stream::Oracle),
    );
    let (codeword, power) = brute_force_max(&channel, &cfg, args.budget)?;
    let record = OracleRecord {
        seed: args.seed,
        side: args.side,
        bits: args.bits,
        amp_bits: args.amp_bits,
        h: channel.h.iter().map(|c| [c.re, c.im]).collect(),
        codeword,
        power_db: power.0,
    };
    ensure_dir(&args.out)?;
    let text = serde_json::to_string_pretty(&record).expect("oracle record serializes");
    write_atomic(&args.out.join("oracle.json"), text.as_bytes())?;
    println!("power_db={:.12} codeword={:?}", record.power_db, record.codeword.phase_idx);

    if let Some(fixture) = &args.check {
        let expected: OracleRecord =
            serde_json::from_str(&read_to_string(fixture)?).map_err(|source| Error::Json {
                path: fixture.clone(),
                source,
            })?;
        let same = expected.codeword == record.codeword
            && (expected.power_db - record.power_db).abs() <= ORACLE_TOLERANCE_DB;
        if !same {
            return Err(Failure {
                code: EXIT_DATA,
                message: format!(
                    "{}: fixture expects {:?} at {} dB, search found {:?} at {} dB",
                    fixture.display(),
                    expected.codeword.phase_idx,
                    expected.power_db,
                    record.codeword.phase_idx,
                    record.power_db
                ),
            });
        }
        println!("fixture {} matches", fixture.display());
    }
    Ok(())
}

pub fn report(args: ReportArgs) -> CmdResult {
    let report = GapReport::read_json(&args.input)?;
    let format = match args.format {
        FormatArg::Csv => ReportFormat::Csv,
        FormatArg::Json => ReportFormat::Json,
    };
    emit_report(&report, &args.output, format)?;
    if let Some(cdf) = &args.cdf {
        emit_cdf(&report, cdf)?;
    }
    Ok(())
}
