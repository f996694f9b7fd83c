//! Train a small VAE on an in-memory synthetic corpus and watch the
//! loss terms move.
//!
//! ```bash
//! cargo run --release --example train_vae
//! ```

use urbanvae::raster::{crop_window, rasterize, split_dataset, RasterImage, Window};
use urbanvae::synth::{synth_corpus, SynthClass};
use urbanvae::vae::{save_checkpoint, train, TrainConfig};

fn main() {
    let window = Window::new((0.0, 0.0), 3000.0).expect("valid window");
    let images: Vec<RasterImage> = synth_corpus(&SynthClass::ALL, 48, 11)
        .iter()
        .map(|net| rasterize(&crop_window(net, &window), &window))
        .collect();

    let ids: Vec<String> = images.iter().map(|img| img.city_id.clone()).collect();
    let split = split_dataset(&ids, 0.8, 11).expect("unique ids");
    let (train_set, test_set): (Vec<_>, Vec<_>) = images
        .into_iter()
        .partition(|img| split.train_ids.contains(&img.city_id));

    let config = TrainConfig {
        epochs: 8,
        batch_size: 16,
        seed: 11,
        ..TrainConfig::default()
    };
    let (params, history) = train(&train_set, &test_set, &config).expect("training succeeds");

    println!("epoch  train_total  recon     kl      test_total");
    for e in &history.epochs {
        println!(
            "{:>5}  {:>11.1}  {:>8.1}  {:>6.2}  {:>10.1}",
            e.epoch, e.train_total, e.train_recon, e.train_kl, e.test_total
        );
    }

    let out = std::env::temp_dir().join("urbanvae_example_checkpoint");
    save_checkpoint(&params, &out).expect("writable temp dir");
    println!("checkpoint written to {}", out.display());
}
