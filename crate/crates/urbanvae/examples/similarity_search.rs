//! Urban network vectors in action: encode a corpus with a quickly
//! trained model, then retrieve the most similar cities for a query.
//!
//! ```bash
//! cargo run --release --example similarity_search
//! ```

use urbanvae::latent::{encode_corpus, nearest_neighbors};
use urbanvae::raster::{crop_window, rasterize, RasterImage, Window};
use urbanvae::synth::{synth_corpus, SynthClass};
use urbanvae::vae::{train, TrainConfig};

fn main() {
    let window = Window::new((0.0, 0.0), 3000.0).expect("valid window");
    let images: Vec<RasterImage> = synth_corpus(&SynthClass::ALL, 60, 23)
        .iter()
        .map(|net| rasterize(&crop_window(net, &window), &window))
        .collect();

    let config = TrainConfig {
        epochs: 6,
        batch_size: 16,
        seed: 23,
        ..TrainConfig::default()
    };
    let (params, _) = train(&images, &[], &config).expect("training succeeds");

    let vectors = encode_corpus(&params, &images).expect("encoding succeeds");
    let query = &vectors[0].city_id;
    println!("query: {query}");
    println!("rank  city          distance");
    for (rank, (city, distance)) in nearest_neighbors(query, 5, &vectors)
        .expect("query exists")
        .iter()
        .enumerate()
    {
        println!("{:>4}  {city:<12}  {distance:.4}", rank + 1);
    }
}
