//! Project urban network vectors to 2-D with exact t-SNE and print a
//! coarse ASCII scatter of the class layout.
//!
//! ```bash
//! cargo run --release --example tsne_projection
//! ```

use urbanvae::latent::{encode_corpus, tsne, TsneConfig};
use urbanvae::raster::{crop_window, rasterize, RasterImage, Window};
use urbanvae::synth::{synth_corpus, SynthClass};
use urbanvae::vae::{train, TrainConfig};

fn main() {
    let window = Window::new((0.0, 0.0), 3000.0).expect("valid window");
    let images: Vec<RasterImage> = synth_corpus(&SynthClass::ALL, 60, 47)
        .iter()
        .map(|net| rasterize(&crop_window(net, &window), &window))
        .collect();

    let config = TrainConfig {
        epochs: 6,
        batch_size: 16,
        seed: 47,
        ..TrainConfig::default()
    };
    let (params, _) = train(&images, &[], &config).expect("training succeeds");
    let vectors = encode_corpus(&params, &images).expect("encoding succeeds");

    let run = tsne(
        &vectors,
        &TsneConfig {
            perplexity: 12.0,
            iterations: 400,
            seed: 47,
            ..TsneConfig::default()
        },
    )
    .expect("perplexity < n/3");
    println!(
        "t-SNE finished: final KL(P||Q) = {:.4} after {} iterations",
        run.embedding.final_kl, run.embedding.iterations
    );

    // ASCII scatter: g = grid, r = radial, x = random line field
    let points = &run.embedding.points;
    let (mut min_x, mut max_x, mut min_y, mut max_y) =
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (_, (x, y)) in points {
        min_x = min_x.min(*x);
        max_x = max_x.max(*x);
        min_y = min_y.min(*y);
        max_y = max_y.max(*y);
    }
    let (rows, cols) = (22usize, 60usize);
    let mut canvas = vec![vec![' '; cols]; rows];
    for (city, (x, y)) in points {
        let col = ((x - min_x) / (max_x - min_x + 1e-12) * (cols - 1) as f64) as usize;
        let row = ((y - min_y) / (max_y - min_y + 1e-12) * (rows - 1) as f64) as usize;
        canvas[row][col] = match city.split('_').next() {
            Some("grid") => 'g',
            Some("radial") => 'r',
            _ => 'x',
        };
    }
    for row in canvas {
        println!("{}", row.into_iter().collect::<String>());
    }
}
