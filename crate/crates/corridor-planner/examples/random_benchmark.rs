//! Generate a small seeded suite of random environments and run the
//! PMP-vs-baseline benchmark on it.
//!
//! ```bash
//! cargo run --release --example random_benchmark
//! ```

use corridor_planner::bench::{results_csv, run_bench, summary, BenchmarkConfig};

fn main() {
    let cfg = BenchmarkConfig {
        n: 10,
        seed: 7,
        ..BenchmarkConfig::default()
    };
    let results = run_bench(&cfg).expect("suite runs");
    print!("{}", results_csv(&results));
    println!(
        "{}",
        serde_json::to_string_pretty(&summary(&results)).unwrap()
    );
}
