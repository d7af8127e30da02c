//! Seeded random generators for constraints, environments and matrices.
//! Test and benchmark support; the library itself never calls these.

use super::{Constraint, TypeEnvironment};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The reproducible RNG used throughout the crate for anything seeded.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random formula, uniform over node kinds under a depth budget; atoms are
/// uniform over the `V x T` grid. A budget of 1 always yields an atom.
pub fn random_constraint<R: Rng>(
    rng: &mut R,
    ident_count: usize,
    type_count: usize,
    max_depth: usize,
) -> Constraint {
    if max_depth <= 1 {
        return random_atom(rng, ident_count, type_count);
    }
    match rng.gen_range(0..4) {
        0 => random_atom(rng, ident_count, type_count),
        1 => Constraint::not(random_constraint(
            rng,
            ident_count,
            type_count,
            max_depth - 1,
        )),
        2 => Constraint::and(
            random_constraint(rng, ident_count, type_count, max_depth - 1),
            random_constraint(rng, ident_count, type_count, max_depth - 1),
        ),
        _ => Constraint::or(
            random_constraint(rng, ident_count, type_count, max_depth - 1),
            random_constraint(rng, ident_count, type_count, max_depth - 1),
        ),
    }
}

fn random_atom<R: Rng>(rng: &mut R, ident_count: usize, type_count: usize) -> Constraint {
    Constraint::is(rng.gen_range(0..ident_count), rng.gen_range(0..type_count))
}

/// Uniformly random total assignment.
pub fn random_environment<R: Rng>(
    rng: &mut R,
    ident_count: usize,
    type_count: usize,
) -> TypeEnvironment {
    let assignment = (0..ident_count)
        .map(|_| rng.gen_range(0..type_count))
        .collect();
    TypeEnvironment::new(assignment, type_count).expect("generated assignment is in range")
}
