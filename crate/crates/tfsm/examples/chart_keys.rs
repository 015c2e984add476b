//! Lists the order in which the machine visits chart keys for a short input.

use tfsm::machine::chart::key_sequence;

fn main() {
    let n = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(3);
    let keys = key_sequence(n);
    for (l, m, r) in &keys {
        println!("[{l},{m}] + [{m},{r}]");
    }
    println!("{} keys for {n} words", keys.len());
}
