//! Runs every pipeline stage on the toy fixture, then again to show the
//! cache at work.

use expvec::pipeline::{run_pipeline, PipelineConfig};

fn main() -> anyhow::Result<()> {
    let config = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/toy/pipeline.toml");
    let mut cfg = PipelineConfig::load(config)?;
    cfg.out_dir = std::env::temp_dir().join("expvec-full-pipeline");

    for round in ["cold", "warm"] {
        let summary = run_pipeline(&cfg, &[])?;
        let cached = summary.outcomes.iter().filter(|o| o.cached).count();
        println!("{round}: {cached}/{} stages cached", summary.outcomes.len());
    }
    for a in run_pipeline(&cfg, &[])?.manifest.artifacts {
        if let Some(n) = a.context_words {
            println!("{:<11} {n:>4} context words", a.name);
        }
    }
    let report = std::fs::read_to_string(cfg.out_dir.join("comparisons.csv"))?;
    print!("{report}");
    Ok(())
}
