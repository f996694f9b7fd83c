//! Subcommand implementations.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use super::run_manifest::{read_run_manifest, write_run_manifest};
use super::{
    CliError, ClusterArgs, Command, ElbowArgs, EncodeArgs, GenerateArgs, GradcheckArgs,
    RasterizeArgs, ReconstructArgs, RerunArgs, SimilarArgs, SplitArgs, SplitFilter, SynthArgs,
    TrainArgs, TsneArgs,
};
use crate::generate::{generate, sample_prior, reconstruction_grid};
use crate::latent::{
    elbow_curve, encode_corpus, kmeans, nearest_neighbors, read_vectors_csv, tsne,
    write_vectors_csv, TsneConfig,
};
use crate::nn::GradCheckConfig;
use crate::raster::{
    crop_window, load_street_geometry, rasterize, read_manifest, split_dataset, write_manifest,
    ManifestEntry, RasterImage, SplitTag, Window,
};
use crate::synth::{synth_corpus, write_geometry_json, SynthClass};
use crate::vae::{gradcheck_suite, load_checkpoint, train, TrainConfig};

pub fn dispatch(command: Command, seed: u64) -> Result<(), CliError> {
    match command {
        Command::Synth(a) => cmd_synth(&a, seed),
        Command::Rasterize(a) => cmd_rasterize(&a, seed),
        Command::Split(a) => cmd_split(&a, seed),
        Command::Train(a) => cmd_train(&a, seed),
        Command::Encode(a) => cmd_encode(&a, seed),
        Command::Similar(a) => cmd_similar(&a, seed),
        Command::Cluster(a) => cmd_cluster(&a, seed),
        Command::Elbow(a) => cmd_elbow(&a, seed),
        Command::Tsne(a) => cmd_tsne(&a, seed),
        Command::Generate(a) => cmd_generate(&a, seed),
        Command::Reconstruct(a) => cmd_reconstruct(&a, seed),
        Command::Gradcheck(a) => cmd_gradcheck(&a, seed),
        Command::Rerun(a) => cmd_rerun(&a),
    }
}

fn args_value<T: serde::Serialize>(args: &T) -> Value {
    serde_json::to_value(args).expect("argument structs serialize")
}

fn ensure_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Loads the images named by a corpus manifest, optionally filtered by
/// split tag. Paths are relative to the manifest's directory.
fn load_corpus(
    manifest_path: &Path,
    filter: SplitFilter,
) -> Result<(Vec<ManifestEntry>, Vec<RasterImage>), CliError> {
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let entries = read_manifest(manifest_path)?;
    let keep = |entry: &&ManifestEntry| match filter {
        SplitFilter::All => true,
        SplitFilter::Train => entry.split == Some(SplitTag::Train),
        SplitFilter::Test => entry.split == Some(SplitTag::Test),
    };
    let selected: Vec<ManifestEntry> = entries.iter().filter(keep).cloned().collect();
    let mut images = Vec::with_capacity(selected.len());
    for entry in &selected {
        images.push(RasterImage::read_pgm(
            entry.city_id.clone(),
            &base.join(&entry.file),
        )?);
    }
    Ok((selected, images))
}

fn checkpoint_inputs(dir: &Path) -> Vec<PathBuf> {
    vec![dir.join("manifest.json"), dir.join("params.bin")]
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, CliError> {
    csv::Writer::from_path(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn csv_record<W: std::io::Write>(
    w: &mut csv::Writer<W>,
    path: &Path,
    record: &[String],
) -> Result<(), CliError> {
    w.write_record(record)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn csv_finish<W: std::io::Write>(mut w: csv::Writer<W>, path: &Path) -> Result<(), CliError> {
    w.flush()
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn cmd_synth(args: &SynthArgs, seed: u64) -> Result<(), CliError> {
    if args.count == 0 {
        return Err(CliError::Validation("--count must be at least 1".into()));
    }
    let classes: Vec<SynthClass> = args
        .classes
        .iter()
        .map(|s| s.parse().map_err(CliError::Validation))
        .collect::<Result<_, _>>()?;
    if classes.is_empty() {
        return Err(CliError::Validation("--classes must name at least one class".into()));
    }
    ensure_dir(&args.out_dir)?;

    let mut outputs = Vec::new();
    for net in synth_corpus(&classes, args.count, seed) {
        let path = args.out_dir.join(format!("{}.json", net.city_id));
        write_geometry_json(&net, &path)?;
        outputs.push(path);
    }
    write_run_manifest(
        &args.out_dir.join("run_manifest.json"),
        "synth",
        seed,
        args_value(args),
        &[],
        &outputs,
        json!({ "count": args.count }),
    )
}

fn cmd_rasterize(args: &RasterizeArgs, seed: u64) -> Result<(), CliError> {
    use rayon::prelude::*;

    if args.resolution != crate::raster::RESOLUTION {
        return Err(CliError::Validation(format!(
            "only --resolution {} is supported",
            crate::raster::RESOLUTION
        )));
    }
    let mut inputs: Vec<PathBuf> = fs::read_dir(&args.input_dir)
        .map_err(|e| CliError::Io(format!("{}: {e}", args.input_dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
        // tool bookkeeping, not geometry
        .filter(|p| p.file_name().is_some_and(|n| n != "run_manifest.json"))
        .collect();
    inputs.sort();
    if inputs.is_empty() {
        return Err(CliError::Validation(format!(
            "no .json geometry files in {}",
            args.input_dir.display()
        )));
    }
    ensure_dir(&args.out_dir)?;

    let rastered: Vec<Result<(ManifestEntry, RasterImage), CliError>> = inputs
        .par_iter()
        .map(|path| {
            let net = load_street_geometry(path)?;
            let window = Window::new(net.center, args.window_m)?;
            let img = rasterize(&crop_window(&net, &window), &window);
            let entry = ManifestEntry {
                city_id: net.city_id.clone(),
                file: format!("{}.pgm", net.city_id),
                origin_lonlat: net.origin_lonlat,
                split: None,
            };
            Ok((entry, img))
        })
        .collect();

    let mut entries = Vec::with_capacity(rastered.len());
    let mut outputs = Vec::new();
    let mut seen = HashSet::new();
    for result in rastered {
        let (entry, img) = result?;
        if !seen.insert(entry.city_id.clone()) {
            return Err(CliError::Validation(format!(
                "duplicate city id {:?} in input set",
                entry.city_id
            )));
        }
        let path = args.out_dir.join(&entry.file);
        img.write_pgm(&path)?;
        outputs.push(path);
        entries.push(entry);
    }
    entries.sort_by(|a, b| a.city_id.cmp(&b.city_id));
    outputs.sort();
    let manifest_path = args.out_dir.join("manifest.json");
    write_manifest(&manifest_path, &entries)?;
    outputs.push(manifest_path);

    write_run_manifest(
        &args.out_dir.join("run_manifest.json"),
        "rasterize",
        seed,
        args_value(args),
        &inputs,
        &outputs,
        json!({ "cities": entries.len() }),
    )
}

fn cmd_split(args: &SplitArgs, seed: u64) -> Result<(), CliError> {
    if args.manifest == args.out {
        return Err(CliError::Validation(
            "--out must differ from --manifest (inputs are never rewritten)".into(),
        ));
    }
    let mut entries = read_manifest(&args.manifest)?;
    let ids: Vec<String> = entries.iter().map(|e| e.city_id.clone()).collect();
    let split = split_dataset(&ids, args.ratio, seed)?;
    let train_ids: HashSet<&String> = split.train_ids.iter().collect();
    for entry in &mut entries {
        entry.split = Some(if train_ids.contains(&entry.city_id) {
            SplitTag::Train
        } else {
            SplitTag::Test
        });
    }
    write_manifest(&args.out, &entries)?;
    write_run_manifest(
        &PathBuf::from(format!("{}.run.json", args.out.display())),
        "split",
        seed,
        args_value(args),
        &[args.manifest.clone()],
        &[args.out.clone()],
        json!({ "train": split.train_ids.len(), "test": split.test_ids.len() }),
    )
}

fn cmd_train(args: &TrainArgs, seed: u64) -> Result<(), CliError> {
    let config = TrainConfig {
        epochs: args.epochs,
        batch_size: args.batch_size,
        seed,
        learning_rate: args.learning_rate,
        augment: !args.no_augment,
        checkpoint_dir: Some(args.out_dir.join("checkpoint")),
    };
    config.validate()?;
    let (_, train_images) = load_corpus(&args.manifest, SplitFilter::Train)?;
    let (_, test_images) = load_corpus(&args.manifest, SplitFilter::Test)?;
    if train_images.is_empty() {
        return Err(CliError::Validation(format!(
            "{}: no entries tagged \"train\"; run `urbanvae split` first",
            args.manifest.display()
        )));
    }
    ensure_dir(&args.out_dir)?;

    let (_, history) = train(&train_images, &test_images, &config)?;
    let history_path = args.out_dir.join("history.csv");
    history.write_csv(&history_path)?;

    let checkpoint = args.out_dir.join("checkpoint");
    let mut outputs = checkpoint_inputs(&checkpoint);
    outputs.push(history_path);
    let (first, last) = (
        history.epochs.first().expect("epochs >= 1"),
        history.epochs.last().expect("epochs >= 1"),
    );
    write_run_manifest(
        &args.out_dir.join("run_manifest.json"),
        "train",
        seed,
        args_value(args),
        &[args.manifest.clone()],
        &outputs,
        json!({
            "train_images": train_images.len(),
            "test_images": test_images.len(),
            "first_epoch_train_total": first.train_total,
            "final_epoch_train_total": last.train_total,
            "final_epoch_test_total": last.test_total,
        }),
    )
}

fn cmd_encode(args: &EncodeArgs, seed: u64) -> Result<(), CliError> {
    let params = load_checkpoint(&args.checkpoint)?;
    let (entries, images) = load_corpus(&args.manifest, args.split)?;
    if images.is_empty() {
        return Err(CliError::Validation(format!(
            "{}: no images match the {:?} split",
            args.manifest.display(),
            args.split
        )));
    }
    let vectors = encode_corpus(&params, &images)?;
    write_vectors_csv(&args.out, &vectors)?;

    let base = args.manifest.parent().unwrap_or_else(|| Path::new("."));
    let mut inputs = checkpoint_inputs(&args.checkpoint);
    inputs.push(args.manifest.clone());
    inputs.extend(entries.iter().map(|e| base.join(&e.file)));
    write_run_manifest(
        &PathBuf::from(format!("{}.run.json", args.out.display())),
        "encode",
        seed,
        args_value(args),
        &inputs,
        &[args.out.clone()],
        json!({ "vectors": vectors.len() }),
    )
}

fn cmd_similar(args: &SimilarArgs, seed: u64) -> Result<(), CliError> {
    let vectors = read_vectors_csv(&args.vectors)?;
    let ranked = nearest_neighbors(&args.query, args.k, &vectors)?;
    let mut w = csv_writer(&args.out)?;
    csv_record(&mut w, &args.out, &["city_id".into(), "distance".into()])?;
    for (id, d) in &ranked {
        csv_record(&mut w, &args.out, &[id.clone(), d.to_string()])?;
    }
    csv_finish(w, &args.out)?;
    write_run_manifest(
        &PathBuf::from(format!("{}.run.json", args.out.display())),
        "similar",
        seed,
        args_value(args),
        &[args.vectors.clone()],
        &[args.out.clone()],
        json!({ "query": args.query, "k": args.k }),
    )
}

fn cmd_cluster(args: &ClusterArgs, seed: u64) -> Result<(), CliError> {
    if args.map_out.is_some() != args.manifest.is_some() {
        return Err(CliError::Validation(
            "--map-out and --manifest go together".into(),
        ));
    }
    let vectors = read_vectors_csv(&args.vectors)?;
    let model = kmeans(&vectors, args.k, seed, args.restarts)?;

    let mut w = csv_writer(&args.out_csv)?;
    csv_record(&mut w, &args.out_csv, &["city_id".into(), "cluster".into()])?;
    for (id, cluster) in &model.assignments {
        csv_record(&mut w, &args.out_csv, &[id.clone(), cluster.to_string()])?;
    }
    csv_finish(w, &args.out_csv)?;

    let summary = json!({
        "K": model.k,
        "wcss": model.wcss,
        "centroids": model.centroids,
        "seed": model.seed,
        "restarts": model.restarts,
    });
    let mut bytes = serde_json::to_vec_pretty(&summary).expect("summary serializes");
    bytes.push(b'\n');
    write_bytes(&args.out_json, &bytes)?;

    let mut inputs = vec![args.vectors.clone()];
    let mut outputs = vec![args.out_csv.clone(), args.out_json.clone()];
    if let (Some(manifest), Some(map_out)) = (&args.manifest, &args.map_out) {
        let entries = read_manifest(manifest)?;
        let assignment = model.assignment_map();
        let mut w = csv_writer(map_out)?;
        csv_record(
            &mut w,
            map_out,
            &["city_id".into(), "lon".into(), "lat".into(), "cluster".into()],
        )?;
        for entry in &entries {
            let (Some((lon, lat)), Some(cluster)) = (
                entry.origin_lonlat,
                assignment.get(entry.city_id.as_str()),
            ) else {
                continue;
            };
            csv_record(
                &mut w,
                map_out,
                &[
                    entry.city_id.clone(),
                    lon.to_string(),
                    lat.to_string(),
                    cluster.to_string(),
                ],
            )?;
        }
        csv_finish(w, map_out)?;
        inputs.push(manifest.clone());
        outputs.push(map_out.clone());
    }

    write_run_manifest(
        &PathBuf::from(format!("{}.run.json", args.out_csv.display())),
        "cluster",
        seed,
        args_value(args),
        &inputs,
        &outputs,
        json!({ "wcss": model.wcss }),
    )
}

fn cmd_elbow(args: &ElbowArgs, seed: u64) -> Result<(), CliError> {
    let vectors = read_vectors_csv(&args.vectors)?;
    let curve = elbow_curve(&vectors, args.k_max, seed)?;

    let mut w = csv_writer(&args.out_csv)?;
    csv_record(&mut w, &args.out_csv, &["K".into(), "wcss".into()])?;
    for (k, wcss) in &curve.points {
        csv_record(&mut w, &args.out_csv, &[k.to_string(), wcss.to_string()])?;
    }
    csv_finish(w, &args.out_csv)?;

    let suggestion = json!({
        "suggested_K": curve.suggested_k,
        "low_confidence": curve.low_confidence,
        "max_chord_distance": curve.max_chord_distance,
    });
    let mut bytes = serde_json::to_vec_pretty(&suggestion).expect("suggestion serializes");
    bytes.push(b'\n');
    write_bytes(&args.out_json, &bytes)?;

    write_run_manifest(
        &PathBuf::from(format!("{}.run.json", args.out_csv.display())),
        "elbow",
        seed,
        args_value(args),
        &[args.vectors.clone()],
        &[args.out_csv.clone(), args.out_json.clone()],
        suggestion,
    )
}

fn cmd_tsne(args: &TsneArgs, seed: u64) -> Result<(), CliError> {
    let vectors = read_vectors_csv(&args.vectors)?;
    let config = TsneConfig {
        perplexity: args.perplexity,
        iterations: args.iters,
        seed,
        ..TsneConfig::default()
    };
    let run = tsne(&vectors, &config)?;

    let mut w = csv_writer(&args.out)?;
    csv_record(&mut w, &args.out, &["city_id".into(), "x".into(), "y".into()])?;
    for (id, (x, y)) in &run.embedding.points {
        csv_record(&mut w, &args.out, &[id.clone(), x.to_string(), y.to_string()])?;
    }
    csv_finish(w, &args.out)?;

    write_run_manifest(
        &PathBuf::from(format!("{}.run.json", args.out.display())),
        "tsne",
        seed,
        args_value(args),
        &[args.vectors.clone()],
        &[args.out.clone()],
        json!({
            "perplexity": run.embedding.perplexity,
            "iterations": run.embedding.iterations,
            "final_kl": run.embedding.final_kl,
        }),
    )
}

fn cmd_generate(args: &GenerateArgs, seed: u64) -> Result<(), CliError> {
    if args.count == 0 {
        return Err(CliError::Validation("--count must be at least 1".into()));
    }
    let params = load_checkpoint(&args.checkpoint)?;
    ensure_dir(&args.out_dir)?;
    let codes = sample_prior(args.count, seed);
    let batch = generate(&params, codes, seed, args.threshold)?;

    let mut outputs = Vec::new();
    for i in 0..batch.images.len() {
        let path = args.out_dir.join(format!("sample_{i:04}.pgm"));
        batch.export_image(i).write_pgm(&path)?;
        outputs.push(path);
    }
    let sidecar_path = args.out_dir.join("samples.json");
    let mut bytes = serde_json::to_vec_pretty(&batch.sidecar()).expect("sidecar serializes");
    bytes.push(b'\n');
    write_bytes(&sidecar_path, &bytes)?;
    outputs.push(sidecar_path);

    write_run_manifest(
        &args.out_dir.join("run_manifest.json"),
        "generate",
        seed,
        args_value(args),
        &checkpoint_inputs(&args.checkpoint),
        &outputs,
        json!({ "count": args.count }),
    )
}

fn cmd_reconstruct(args: &ReconstructArgs, seed: u64) -> Result<(), CliError> {
    let params = load_checkpoint(&args.checkpoint)?;
    let (entries, images) = load_corpus(&args.manifest, SplitFilter::All)?;

    let chosen: Vec<RasterImage> = match &args.ids {
        Some(ids) => {
            let mut chosen = Vec::with_capacity(ids.len());
            for id in ids {
                let img = images
                    .iter()
                    .find(|img| &img.city_id == id)
                    .ok_or_else(|| CliError::Validation(format!("unknown city id {id:?}")))?;
                chosen.push(img.clone());
            }
            chosen
        }
        None => {
            // Prefer held-out images when the manifest is split-tagged.
            let test: Vec<&RasterImage> = entries
                .iter()
                .zip(&images)
                .filter(|(e, _)| e.split == Some(SplitTag::Test))
                .map(|(_, img)| img)
                .collect();
            let pool: Vec<&RasterImage> = if test.is_empty() {
                images.iter().collect()
            } else {
                test
            };
            pool.into_iter().take(args.count).cloned().collect()
        }
    };

    let grid = reconstruction_grid(&params, &chosen)?;
    grid.write_pgm(&args.out)?;

    let base = args.manifest.parent().unwrap_or_else(|| Path::new("."));
    let mut inputs = checkpoint_inputs(&args.checkpoint);
    inputs.push(args.manifest.clone());
    inputs.extend(
        entries
            .iter()
            .filter(|e| chosen.iter().any(|img| img.city_id == e.city_id))
            .map(|e| base.join(&e.file)),
    );
    write_run_manifest(
        &PathBuf::from(format!("{}.run.json", args.out.display())),
        "reconstruct",
        seed,
        args_value(args),
        &inputs,
        &[args.out.clone()],
        json!({ "ids": chosen.iter().map(|img| img.city_id.clone()).collect::<Vec<_>>() }),
    )
}

fn cmd_gradcheck(args: &GradcheckArgs, seed: u64) -> Result<(), CliError> {
    if args.shapes == 0 {
        return Err(CliError::Validation("--shapes must be at least 1".into()));
    }
    let cases = gradcheck_suite(seed, args.shapes, &GradCheckConfig::default());
    let mut all_passed = true;
    for case in &cases {
        eprintln!(
            "{}: {} ({} elements, max rel err {:.3e})",
            if case.report.passed { "PASS" } else { "FAIL" },
            case.name,
            case.report.checked,
            case.report.max_rel_err
        );
        all_passed &= case.report.passed;
    }

    let report = json!({
        "passed": all_passed,
        "cases": cases
            .iter()
            .map(|c| {
                json!({
                    "name": c.name,
                    "passed": c.report.passed,
                    "checked": c.report.checked,
                    "max_rel_err": c.report.max_rel_err,
                    "failures": c.report.failures.iter().map(|f| {
                        json!({
                            "name": f.name,
                            "index": f.index,
                            "analytic": f.analytic,
                            "numeric": f.numeric,
                            "rel_err": f.rel_err,
                        })
                    }).collect::<Vec<_>>(),
                })
            })
            .collect::<Vec<_>>(),
    });
    let mut bytes = serde_json::to_vec_pretty(&report).expect("report serializes");
    bytes.push(b'\n');
    write_bytes(&args.out, &bytes)?;

    write_run_manifest(
        &PathBuf::from(format!("{}.run.json", args.out.display())),
        "gradcheck",
        seed,
        args_value(args),
        &[],
        &[args.out.clone()],
        json!({ "passed": all_passed }),
    )?;
    if all_passed {
        Ok(())
    } else {
        Err(CliError::Validation(
            "gradient check failed; see the report for the worst offenders".into(),
        ))
    }
}

fn cmd_rerun(args: &RerunArgs) -> Result<(), CliError> {
    let manifest = read_run_manifest(&args.manifest)?;
    let restore = |e: serde_json::Error| {
        CliError::Artifact(format!(
            "{}: cannot restore {} arguments: {e}",
            args.manifest.display(),
            manifest.subcommand
        ))
    };
    let value = manifest.args.clone();
    let command = match manifest.subcommand.as_str() {
        "synth" => Command::Synth(serde_json::from_value(value).map_err(restore)?),
        "rasterize" => Command::Rasterize(serde_json::from_value(value).map_err(restore)?),
        "split" => Command::Split(serde_json::from_value(value).map_err(restore)?),
        "train" => Command::Train(serde_json::from_value(value).map_err(restore)?),
        "encode" => Command::Encode(serde_json::from_value(value).map_err(restore)?),
        "similar" => Command::Similar(serde_json::from_value(value).map_err(restore)?),
        "cluster" => Command::Cluster(serde_json::from_value(value).map_err(restore)?),
        "elbow" => Command::Elbow(serde_json::from_value(value).map_err(restore)?),
        "tsne" => Command::Tsne(serde_json::from_value(value).map_err(restore)?),
        "generate" => Command::Generate(serde_json::from_value(value).map_err(restore)?),
        "reconstruct" => Command::Reconstruct(serde_json::from_value(value).map_err(restore)?),
        "gradcheck" => Command::Gradcheck(serde_json::from_value(value).map_err(restore)?),
        other => {
            return Err(CliError::Artifact(format!(
                "{}: unknown subcommand {other:?}",
                args.manifest.display()
            )))
        }
    };
    dispatch(command, manifest.seed)
}
