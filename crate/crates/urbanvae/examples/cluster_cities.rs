//! Cluster urban network vectors with K-means and pick K by the elbow
//! method; report mean street density per cluster.
//!
//! ```bash
//! cargo run --release --example cluster_cities
//! ```

use std::collections::BTreeMap;

use urbanvae::latent::{density_proxy, elbow_curve, encode_corpus, kmeans};
use urbanvae::raster::{crop_window, rasterize, RasterImage, Window};
use urbanvae::synth::{synth_corpus, SynthClass};
use urbanvae::vae::{train, TrainConfig};

fn main() {
    let window = Window::new((0.0, 0.0), 3000.0).expect("valid window");
    let images: Vec<RasterImage> = synth_corpus(&SynthClass::ALL, 72, 31)
        .iter()
        .map(|net| rasterize(&crop_window(net, &window), &window))
        .collect();

    let config = TrainConfig {
        epochs: 8,
        batch_size: 16,
        seed: 31,
        ..TrainConfig::default()
    };
    let (params, _) = train(&images, &[], &config).expect("training succeeds");
    let vectors = encode_corpus(&params, &images).expect("encoding succeeds");

    let curve = elbow_curve(&vectors, 8, 31).expect("k_max <= corpus size");
    println!("K     WCSS");
    for (k, wcss) in &curve.points {
        println!("{k:<4}  {wcss:.2}");
    }
    println!(
        "elbow suggests K = {}{}\n",
        curve.suggested_k,
        if curve.low_confidence { " (low confidence)" } else { "" }
    );

    let model = kmeans(&vectors, curve.suggested_k, 31, 10).expect("valid K");
    let mut by_cluster: BTreeMap<usize, Vec<&str>> = BTreeMap::new();
    for (city, cluster) in &model.assignments {
        by_cluster.entry(*cluster).or_default().push(city);
    }
    for (cluster, members) in &by_cluster {
        let mean_density: f64 = members
            .iter()
            .map(|city| {
                let img = images.iter().find(|img| &img.city_id == *city).expect("known id");
                density_proxy(img)
            })
            .sum::<f64>()
            / members.len() as f64;
        println!(
            "cluster {cluster}: {:>3} cities, mean density {mean_density:.3}, e.g. {}",
            members.len(),
            &members[..members.len().min(3)].join(", ")
        );
    }
    println!("total WCSS: {:.2}", model.wcss);
}
