//! Prints the bundled synthetic corpus as `date,close` CSV.
//!
//!     cargo run -p mlpcast --example sine_corpus > crates/cli/data/sine.csv

fn main() {
    print!("{}", mlpcast::synthetic::to_csv(&mlpcast::synthetic::sine_corpus()));
}
