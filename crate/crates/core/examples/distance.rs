//! Maps a detector bounding box onto the frame and reads the median depth
//! under it from a depth grid.
//!
//!     cargo run --example distance

use std::path::Path;

use roadside_denm::agents::{estimate_distance, image_dimensions, load_manifest, transform_bbox, NormBox};
use roadside_denm::providers::DepthDirProvider;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sample = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/sample");
    let manifest = load_manifest(sample.join("manifest.jsonl"))?;
    let image = &manifest[0];

    // read from the JPEG header when the manifest has no size
    let (width, height) = image_dimensions(image)?;
    let bbox = NormBox {
        ymin: 410,
        xmin: 230,
        ymax: 840,
        xmax: 520,
    };
    let pixel_box = transform_bbox(bbox, width, height);
    println!("{}: {width}x{height}, box {pixel_box:?}", image.image_id);

    let depth = DepthDirProvider::new(sample.join("depth"));
    let metres = estimate_distance(image, (width, height), pixel_box, &depth)?;
    println!(
        "median depth {metres:.1} m ({} dm on the wire)",
        (metres * 10.0).round()
    );
    Ok(())
}
