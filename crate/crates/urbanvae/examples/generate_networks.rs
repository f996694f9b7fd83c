//! Sample latent codes from the prior, decode them into synthetic
//! street-network images, and save a reconstruction grid alongside.
//!
//! ```bash
//! cargo run --release --example generate_networks
//! ```

use urbanvae::generate::{generate, reconstruction_grid, sample_prior};
use urbanvae::raster::{crop_window, rasterize, RasterImage, Window};
use urbanvae::synth::{synth_corpus, SynthClass};
use urbanvae::vae::{train, TrainConfig};

fn main() {
    let window = Window::new((0.0, 0.0), 3000.0).expect("valid window");
    let images: Vec<RasterImage> = synth_corpus(&SynthClass::ALL, 64, 59)
        .iter()
        .map(|net| rasterize(&crop_window(net, &window), &window))
        .collect();

    let config = TrainConfig {
        epochs: 10,
        batch_size: 16,
        seed: 59,
        ..TrainConfig::default()
    };
    let (params, _) = train(&images, &[], &config).expect("training succeeds");

    let codes = sample_prior(6, 59);
    let batch = generate(&params, codes, 59, None).expect("decoding succeeds");
    let out_dir = std::env::temp_dir().join("urbanvae_samples");
    std::fs::create_dir_all(&out_dir).expect("writable temp dir");
    for (i, img) in batch.images.iter().enumerate() {
        let path = out_dir.join(format!("{}.pgm", img.city_id));
        batch.export_image(i).write_pgm(&path).expect("writable temp dir");
        println!("sample {i}: mean intensity {:.3} -> {}", img.mean(), path.display());
    }

    let grid = reconstruction_grid(&params, &images[..6]).expect("at most 16 images");
    let grid_path = out_dir.join("reconstructions.pgm");
    grid.write_pgm(&grid_path).expect("writable temp dir");
    println!(
        "originals-over-reconstructions grid ({}x{}) -> {}",
        grid.width,
        grid.height,
        grid_path.display()
    );
}
