//! Trains and evaluates on the planted-partition benchmark.
//!
//! `cargo run --release -p acs-core --example benchmark -- [epochs] [latent_dim]`

use std::time::Instant;

use acs_core::pipeline::{coverage_by_community, run_benchmark, BenchmarkConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::init();
    let mut args = std::env::args().skip(1);
    let mut cfg = BenchmarkConfig::default();
    if let Some(e) = args.next() {
        cfg.train.epochs = e.parse()?;
    }
    if let Some(d) = args.next() {
        cfg.model.latent_dim = d.parse()?;
    }
    let start = Instant::now();
    let out = run_benchmark(&cfg)?;
    for r in &out.training.trace {
        println!("epoch {:>3} loss {:>10.4} val_f1 {:?}", r.epoch, r.loss, r.val_f1);
    }
    println!("kept epoch {} threshold {}", out.training.best_epoch, out.training.threshold);
    for (k, v) in out.report.metrics() {
        println!("{k} {v:.4}");
    }
    println!("mean per-query f1 {:.4}", out.report.mean_query_f1());
    for c in coverage_by_community(&out.test_examples) {
        println!(
            "community of {}: {} queries, mean coverage {:.3}, min {:.3}, largest candidate {}",
            c.members.len(),
            c.queries,
            c.mean_coverage,
            c.min_coverage,
            c.largest_candidate
        );
    }
    println!("elapsed {:.1}s", start.elapsed().as_secs_f64());
    Ok(())
}
