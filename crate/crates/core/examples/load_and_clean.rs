//! Load a labelled score file, drop unusable rows and summarize.
//!
//! `cargo run --example load_and_clean [-- path.csv]`

use threshcal::dataset::{clean, load_dataset, LoadOptions, UnmappedLabel};
use threshcal::Label;

fn main() -> threshcal::Result<()> {
    let path = match std::env::args().nth(1) {
        Some(p) => std::path::PathBuf::from(p),
        None => {
            // A small file with the usual problems: missing scores, NaN,
            // lower-case labels and one label nobody recognizes.
            let p = std::env::temp_dir().join("threshcal_load_and_clean.csv");
            std::fs::write(
                &p,
                "id,score,label\n1,0.91,PASS\n2,,FAIL\n3,0.12,fail\n4,NaN,PASS\n5,0.66,pass\n6,0.4,UNSURE\n7,0.05,FAIL\n",
            )?;
            p
        }
    };
    let opts = LoadOptions {
        on_unmapped_label: UnmappedLabel::Skip,
        ..LoadOptions::default()
    }
    .with_format(threshcal::dataset::Format::from_path(&path));
    let raw = load_dataset(&path, &opts)?;
    let (ds, report) = clean(&raw)?;
    println!("{report:#?}");
    println!(
        "{} records: {} PASS, {} FAIL",
        ds.len(),
        ds.count(Label::Pass),
        ds.count(Label::Fail)
    );
    for r in &ds.records {
        println!("  {:>3} {:.2} {}", r.id, r.score, r.label.as_str());
    }
    Ok(())
}
