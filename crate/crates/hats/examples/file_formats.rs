//! Round-trips an event stream through the supported file formats and
//! shows the feature/label containers used by the pipeline.
//!
//! Formats:
//! - canonical binary (.evt): fixed little-endian header and 13-byte
//!   records, byte-for-byte reproducible;
//! - CSV (.csv): `x,y,t,p` text rows with an optional geometry comment;
//! - N-MNIST (.bin): read-only 5-byte records on a fixed 34x34 array.
//!
//! Run with: cargo run --example file_formats

use hats::io::{
    read_events, read_features, read_labels, write_events, write_features, write_labels,
    FeatureMatrix, Format,
};
use hats::{Event, EventStream, Polarity, SensorGeometry};

fn main() {
    let dir = std::env::temp_dir().join("hats_file_formats_example");
    std::fs::create_dir_all(&dir).expect("create temp dir");

    let geometry = SensorGeometry::new(32, 24);
    let raw = vec![
        Event::new(0, 0, 10, Polarity::On),
        Event::new(5, 7, 250, Polarity::Off),
        Event::new(31, 23, 1_000, Polarity::On),
    ];
    let stream = EventStream::validate(raw, geometry).expect("valid stream");

    for (name, format) in [("sample.evt", Format::CanonicalBinary), ("sample.csv", Format::Csv)] {
        let path = dir.join(name);
        write_events(&stream, &path, format).expect("write events");
        let back = read_events(&path, format).expect("read events");
        assert_eq!(back.events(), stream.events());
        assert_eq!(back.geometry(), stream.geometry());
        let bytes = std::fs::metadata(&path).unwrap().len();
        println!("{name}: {} events round-tripped through {} bytes", back.len(), bytes);
    }

    // Formats are also inferred from the extension.
    assert_eq!(Format::from_path(&dir.join("sample.evt")), Some(Format::CanonicalBinary));
    assert_eq!(Format::from_path(&dir.join("sample.bin")), Some(Format::NMnist));

    // Feature matrices and label vectors have their own compact binary
    // containers with exact f64 round trips.
    let matrix = FeatureMatrix::from_rows(vec![vec![0.5, 1.0, 0.25], vec![0.0, 2.0, -1.5]]);
    let fpath = dir.join("features.hatsftr");
    write_features(&matrix, &fpath).expect("write features");
    let mback = read_features(&fpath).expect("read features");
    assert_eq!(mback.row(1), matrix.row(1));
    println!("features: {} rows x {} dims round-tripped", mback.num_rows(), mback.dim());

    let labels = vec![0u32, 1, 1, 0];
    let lpath = dir.join("features.labels");
    write_labels(&labels, &lpath).expect("write labels");
    assert_eq!(read_labels(&lpath).expect("read labels"), labels);
    println!("labels: {} entries round-tripped", labels.len());

    std::fs::remove_dir_all(&dir).ok();
}
