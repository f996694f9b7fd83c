//! Drive the full file-based pipeline through the CLI entry point:
//! synth -> rasterize -> split -> train -> encode -> similar -> generate,
//! leaving every artifact (and its run manifest) in a temp directory.
//!
//! ```bash
//! cargo run --release --example cli_pipeline
//! ```

use urbanvae::cli::run;

fn main() {
    let root = std::env::temp_dir().join("urbanvae_cli_pipeline");
    let _ = std::fs::remove_dir_all(&root);
    std::fs::create_dir_all(&root).expect("writable temp dir");
    let p = |tail: &str| root.join(tail).to_string_lossy().into_owned();

    let steps: Vec<Vec<String>> = vec![
        vec!["synth".into(), "--out-dir".into(), p("geo"), "--count".into(), "24".into()],
        vec!["rasterize".into(), "--input-dir".into(), p("geo"), "--out-dir".into(), p("corpus")],
        vec![
            "split".into(),
            "--manifest".into(), p("corpus/manifest.json"),
            "--out".into(), p("corpus/manifest_split.json"),
        ],
        vec![
            "train".into(),
            "--manifest".into(), p("corpus/manifest_split.json"),
            "--out-dir".into(), p("model"),
            "--epochs".into(), "3".into(),
        ],
        vec![
            "encode".into(),
            "--checkpoint".into(), p("model/checkpoint"),
            "--manifest".into(), p("corpus/manifest_split.json"),
            "--out".into(), p("vectors.csv"),
        ],
        vec![
            "similar".into(),
            "--vectors".into(), p("vectors.csv"),
            "--query".into(), "grid_0000".into(),
            "--k".into(), "5".into(),
            "--out".into(), p("similar.csv"),
        ],
        vec![
            "generate".into(),
            "--checkpoint".into(), p("model/checkpoint"),
            "--count".into(), "4".into(),
            "--out-dir".into(), p("samples"),
        ],
    ];

    for step in steps {
        let mut argv = vec!["urbanvae".to_string(), "--seed".into(), "17".into()];
        argv.extend(step.iter().cloned());
        println!("$ {}", argv.join(" "));
        let code = run(argv);
        assert_eq!(code, 0, "step failed: {step:?}");
    }

    println!("\nartifacts under {}:", root.display());
    for name in ["corpus/manifest_split.json", "model/history.csv", "vectors.csv", "similar.csv"] {
        println!("  {}", p(name));
    }
    println!("rerun any step byte-identically, e.g.:");
    println!("  urbanvae rerun --manifest {}", p("model/run_manifest.json"));
}
