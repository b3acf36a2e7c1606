//! Regenerates the two-GOE reference table:
//!
//! ```text
//! cargo run --release -p born-markov --example gen_two_goe > crates/core/data/two_goe.csv
//! ```

use born_markov::levelstats::generate_two_goe_table;

const SEED: u64 = 20_200_917;
const SAMPLES: usize = 1_000_000;

fn main() {
    println!("# two merged Wigner-surmise sequences, {SAMPLES} spacings, ChaCha8 seed {SEED}");
    print!("{}", generate_two_goe_table(SEED, SAMPLES).to_csv());
}
