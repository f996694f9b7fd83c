//! Geometry to image: build a synthetic radial city, crop the 3 km
//! window, rasterize it to a 64x64 binary image, and write a PGM.
//!
//! ```bash
//! cargo run --example rasterize_city
//! ```

use urbanvae::raster::{crop_window, rasterize, Window};
use urbanvae::synth::{synth_network, SynthClass};

fn main() {
    let net = synth_network(SynthClass::Radial, "radial_demo", 7);
    println!("generated {} segments around the city center", net.segments.len());

    let window = Window::new(net.center, 3000.0).expect("valid window");
    let cropped = crop_window(&net, &window);
    println!("{} segments survive the 3 km window", cropped.segments.len());

    let image = rasterize(&cropped, &window);
    assert!(image.is_binary());
    println!(
        "rasterized 64x64: {} street pixels, density {:.3}",
        image.count_ones(),
        image.mean()
    );

    let out = std::env::temp_dir().join("urbanvae_radial_demo.pgm");
    image.write_pgm(&out).expect("writable temp dir");
    println!("wrote {}", out.display());
}
