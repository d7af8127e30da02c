//! Training the character-level naming model.
//!
//! Generates the synthetic naming-convention corpus (number-ish, string-ish
//! and boolean-ish identifier names), trains the from-scratch LSTM
//! classifier on it, and queries the learned distributions for a few names
//! it has never seen spelled exactly that way.
//!
//! ```bash
//! cargo run --example train_naming
//! ```

use softtype::natural::{synthetic_naming_corpus, train_model, TrainConfig};
use softtype::pipeline::default_universe;

fn main() {
    let universe = default_universe();
    let corpus = synthetic_naming_corpus(1000, 5, &universe).unwrap();
    println!("corpus: {} labelled names, e.g.", corpus.len());
    for (name, label) in corpus.pairs().iter().take(6) {
        println!("  {name}\t{}", universe.name(*label));
    }

    let cfg = TrainConfig {
        seed: 5,
        ..TrainConfig::default()
    };
    println!("\ntraining ({} epochs)...", cfg.epochs);
    let (model, stats) = train_model(&corpus, &cfg).unwrap();
    for (epoch, (train, val)) in stats.train_nll.iter().zip(&stats.val_nll).enumerate() {
        if epoch % 5 == 0 || epoch + 1 == stats.train_nll.len() {
            println!(
                "  epoch {:>2}: train nll {train:.3}  val nll {val:.3}",
                epoch + 1
            );
        }
    }
    println!(
        "best epoch {}, held-out accuracy {:.3}",
        stats.best_epoch + 1,
        stats.val_accuracy
    );

    println!("\nlearned distributions:");
    for name in [
        "count", "start", "end", "addNum", "userName", "hasSpace", "blorp",
    ] {
        let logp = model.forward(name).unwrap();
        let row: Vec<String> = logp
            .iter()
            .zip(universe.names())
            .map(|(lp, ty)| format!("{ty} {:.2}", lp.exp()))
            .collect();
        println!("  {name:<10} {}", row.join("  "));
    }
}
